//! Scenario configuration: a line-oriented, human-diffable text format.
//!
//! Sections in square brackets, `key = value` lines, `#` comments.
//! Matrices are written one `X.row = ...` line per row; signal channels
//! one `*.channel = amplitude omega phase` line per channel. Unknown keys
//! are rejected with the offending line number.
//!
//! ```text
//! [plant]
//! A.row = 0 4
//! A.row = -1 -2
//! B.row = 1 0
//! B.row = 0 1
//! d_bar = 0
//! ...
//! ```

use std::collections::BTreeMap;

use crate::controller::{AdaptiveGains, ConstraintSpec};
use crate::error::{Error, Result};
use crate::feasibility::ed_bar_selection;
use crate::linalg::{max_real_eigenpart, Matrix, Vector};
use crate::model::{PlantModel, ReferenceModel};
use crate::signal::{DisturbanceSignal, ReferenceSignal, SinusoidChannel};
use crate::sim::{ControllerKind, InitialState, IntegratorSettings, SimProblem};
use crate::tol;

/// Reference-signal configuration as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceCfg {
    Zero,
    Constant(Vec<f64>),
    Sinusoid(Vec<SinusoidChannel<f64>>),
}

/// Disturbance configuration; the random-smooth realization is generated
/// from the run seed at build time.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceCfg {
    Zero,
    Sinusoid {
        channels: Vec<SinusoidChannel<f64>>,
        bound: f64,
    },
    RandomSmooth {
        bound: f64,
    },
}

/// A parsed scenario; everything needed to assemble a [`SimProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub a: Matrix<f64>,
    pub b: Matrix<f64>,
    pub d_bar: f64,
    pub ar: Matrix<f64>,
    pub br: Matrix<f64>,
    /// Defaults to the identity.
    pub q: Option<Matrix<f64>>,
    /// Defaults to 0.95 |max Re lambda(Ar)|.
    pub rho: Option<f64>,
    pub x_bar: f64,
    pub u1_bar: f64,
    pub u2_bar: f64,
    pub x_bar_r: f64,
    /// Defaults to the feasibility selection.
    pub ed_bar: Option<f64>,
    pub m: Matrix<f64>,
    pub gamma_x: Matrix<f64>,
    pub gamma_u: Matrix<f64>,
    pub sigma_x: f64,
    pub kx_bar: f64,
    pub kr_bar: f64,
    pub reference: ReferenceCfg,
    pub disturbance: DisturbanceCfg,
    /// Defaults to the origin with K_u(0) = I for the proposed controller.
    pub init: Option<InitialState<f64>>,
    pub dt: f64,
    pub horizon: f64,
    pub decimation: usize,
    pub dt_min: f64,
    pub controller: ControllerKind,
    pub seed: u64,
}

// ---------------------------------------------------------------- parsing

struct RawSection {
    /// key -> (line, values), scalars and one-shot strings
    scalars: BTreeMap<String, (usize, String)>,
    /// key -> rows of numbers, accumulating
    rows: BTreeMap<String, Vec<(usize, Vec<f64>)>>,
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_numbers(line: usize, field: &str, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(line, field, format!("not a number: '{tok}'")))
        })
        .collect()
}

const SECTIONS: &[&str] = &[
    "plant",
    "reference",
    "constraints",
    "gains",
    "signals",
    "init",
    "integrator",
    "run",
];

// keys that accumulate rows, per section
fn is_row_key(section: &str, key: &str) -> bool {
    matches!(
        (section, key),
        ("plant", "A.row" | "B.row")
            | ("reference", "Ar.row" | "Br.row" | "Q.row")
            | ("constraints", "M.row")
            | ("gains", "Gamma_x.row" | "Gamma_u.row")
            | ("signals", "reference.channel" | "disturbance.channel")
            | ("init", "Khat_x.row" | "Ku.row")
    )
}

fn is_scalar_key(section: &str, key: &str) -> bool {
    matches!(
        (section, key),
        ("plant", "d_bar")
            | ("reference", "rho")
            | ("constraints", "x_bar" | "u1_bar" | "u2_bar" | "x_bar_r" | "ed_bar")
            | ("gains", "sigma_x" | "kx_bar" | "kr_bar")
            | ("signals", "reference" | "reference.value" | "disturbance" | "disturbance.bound")
            | ("init", "x" | "xr" | "u" | "udot")
            | ("integrator", "dt" | "horizon" | "decimation" | "dt_min")
            | ("run", "controller" | "seed")
    )
}

/// Parses scenario text into a [`Scenario`], rejecting unknown sections
/// and keys and validating all cross-field dimensions.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "section", "missing closing bracket"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_err(
                    line_no,
                    name,
                    format!("unknown section; expected one of {SECTIONS:?}"),
                ));
            }
            if sections.contains_key(name) {
                return Err(parse_err(line_no, name, "duplicate section"));
            }
            sections.insert(
                name.to_string(),
                RawSection {
                    scalars: BTreeMap::new(),
                    rows: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }
        let section_name = current
            .clone()
            .ok_or_else(|| parse_err(line_no, line, "content before any [section] header"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, line, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim();
        let field = format!("{section_name}.{key}");
        let section = sections.get_mut(&section_name).unwrap();
        if is_row_key(&section_name, key) {
            let nums = parse_numbers(line_no, &field, value)?;
            if nums.is_empty() {
                return Err(parse_err(line_no, &field, "empty row"));
            }
            section
                .rows
                .entry(key.to_string())
                .or_default()
                .push((line_no, nums));
        } else if is_scalar_key(&section_name, key) {
            if section.scalars.contains_key(key) {
                return Err(parse_err(line_no, &field, "duplicate key"));
            }
            section
                .scalars
                .insert(key.to_string(), (line_no, value.to_string()));
        } else {
            return Err(parse_err(line_no, &field, "unknown key"));
        }
    }

    build_scenario(sections)
}

fn take_matrix(section: &mut RawSection, section_name: &str, key: &str) -> Result<Option<Matrix<f64>>> {
    let field = format!("{section_name}.{key}");
    let Some(rows) = section.rows.remove(key) else {
        return Ok(None);
    };
    let width = rows[0].1.len();
    for (line, row) in &rows {
        if row.len() != width {
            return Err(parse_err(
                *line,
                &field,
                format!("row has {} entries, first row has {width}", row.len()),
            ));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(parse_err(*line, &field, "non-finite entry"));
        }
    }
    let data: Vec<f64> = rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    Ok(Some(Matrix::new(rows.len(), width, data)?))
}

fn require_matrix(
    section: &mut RawSection,
    section_name: &str,
    key: &str,
    spec_name: &str,
) -> Result<Matrix<f64>> {
    take_matrix(section, section_name, key)?
        .ok_or_else(|| parse_err(0, spec_name, "required matrix missing"))
}

fn take_scalar<T: std::str::FromStr>(
    section: &mut RawSection,
    section_name: &str,
    key: &str,
) -> Result<Option<T>> {
    let field = format!("{section_name}.{key}");
    match section.scalars.remove(key) {
        None => Ok(None),
        Some((line, text)) => text
            .parse::<T>()
            .map(Some)
            .map_err(|_| parse_err(line, &field, format!("unparseable value '{text}'"))),
    }
}

fn require_scalar<T: std::str::FromStr>(
    section: &mut RawSection,
    section_name: &str,
    key: &str,
) -> Result<T> {
    take_scalar(section, section_name, key)?.ok_or_else(|| {
        parse_err(
            0,
            &format!("{section_name}.{key}"),
            "required value missing",
        )
    })
}

fn channels_from_rows(rows: Vec<(usize, Vec<f64>)>, field: &str) -> Result<Vec<SinusoidChannel<f64>>> {
    rows.into_iter()
        .map(|(line, row)| {
            if row.len() != 3 {
                return Err(parse_err(
                    line,
                    field,
                    "channel needs exactly: amplitude omega phase",
                ));
            }
            Ok(SinusoidChannel {
                amplitude: row[0],
                omega: row[1],
                phase: row[2],
            })
        })
        .collect()
}

fn need(sections: &mut BTreeMap<String, RawSection>, name: &str) -> Result<RawSection> {
    sections
        .remove(name)
        .ok_or_else(|| parse_err(0, name, "required section missing"))
}

fn build_scenario(mut sections: BTreeMap<String, RawSection>) -> Result<Scenario> {
    let mut plant = need(&mut sections, "plant")?;
    let a = require_matrix(&mut plant, "plant", "A.row", "plant.A")?;
    let b = require_matrix(&mut plant, "plant", "B.row", "plant.B")?;
    let d_bar: f64 = require_scalar(&mut plant, "plant", "d_bar")?;

    let mut reference = need(&mut sections, "reference")?;
    let ar = require_matrix(&mut reference, "reference", "Ar.row", "reference.Ar")?;
    let br = require_matrix(&mut reference, "reference", "Br.row", "reference.Br")?;
    let q = take_matrix(&mut reference, "reference", "Q.row")?;
    let rho: Option<f64> = take_scalar(&mut reference, "reference", "rho")?;

    let mut constraints = need(&mut sections, "constraints")?;
    let x_bar: f64 = require_scalar(&mut constraints, "constraints", "x_bar")?;
    let u1_bar: f64 = require_scalar(&mut constraints, "constraints", "u1_bar")?;
    let u2_bar: f64 = require_scalar(&mut constraints, "constraints", "u2_bar")?;
    let x_bar_r: f64 = require_scalar(&mut constraints, "constraints", "x_bar_r")?;
    let ed_bar: Option<f64> = take_scalar(&mut constraints, "constraints", "ed_bar")?;
    let m = require_matrix(&mut constraints, "constraints", "M.row", "constraints.M")?;

    let mut gains = need(&mut sections, "gains")?;
    let gamma_x = require_matrix(&mut gains, "gains", "Gamma_x.row", "gains.Gamma_x")?;
    let gamma_u = require_matrix(&mut gains, "gains", "Gamma_u.row", "gains.Gamma_u")?;
    let sigma_x: f64 = require_scalar(&mut gains, "gains", "sigma_x")?;
    let kx_bar: f64 = require_scalar(&mut gains, "gains", "kx_bar")?;
    let kr_bar: f64 = require_scalar(&mut gains, "gains", "kr_bar")?;

    let mut signals = need(&mut sections, "signals")?;
    let ref_kind: String = require_scalar(&mut signals, "signals", "reference")?;
    let ref_channels = signals.rows.remove("reference.channel");
    let ref_value: Option<String> = take_scalar(&mut signals, "signals", "reference.value")?;
    let reference_cfg = match ref_kind.as_str() {
        "zero" => ReferenceCfg::Zero,
        "constant" => {
            let text = ref_value
                .ok_or_else(|| parse_err(0, "signals.reference.value", "required for constant"))?;
            ReferenceCfg::Constant(parse_numbers(0, "signals.reference.value", &text)?)
        }
        "sinusoid" => {
            let rows = ref_channels.ok_or_else(|| {
                parse_err(0, "signals.reference.channel", "sinusoid needs channels")
            })?;
            ReferenceCfg::Sinusoid(channels_from_rows(rows, "signals.reference.channel")?)
        }
        other => {
            return Err(parse_err(
                0,
                "signals.reference",
                format!("unknown kind '{other}' (zero | constant | sinusoid)"),
            ))
        }
    };
    let dist_kind: String = require_scalar(&mut signals, "signals", "disturbance")?;
    let dist_channels = signals.rows.remove("disturbance.channel");
    let dist_bound: Option<f64> = take_scalar(&mut signals, "signals", "disturbance.bound")?;
    let disturbance_cfg = match dist_kind.as_str() {
        "zero" => DisturbanceCfg::Zero,
        "sinusoid" => {
            let rows = dist_channels.ok_or_else(|| {
                parse_err(0, "signals.disturbance.channel", "sinusoid needs channels")
            })?;
            DisturbanceCfg::Sinusoid {
                channels: channels_from_rows(rows, "signals.disturbance.channel")?,
                bound: dist_bound.ok_or_else(|| {
                    parse_err(0, "signals.disturbance.bound", "required for sinusoid")
                })?,
            }
        }
        "random-smooth" => DisturbanceCfg::RandomSmooth {
            bound: dist_bound.ok_or_else(|| {
                parse_err(0, "signals.disturbance.bound", "required for random-smooth")
            })?,
        },
        other => {
            return Err(parse_err(
                0,
                "signals.disturbance",
                format!("unknown kind '{other}' (zero | sinusoid | random-smooth)"),
            ))
        }
    };

    let init = match sections.remove("init") {
        None => None,
        Some(mut init) => {
            let x_text: String = require_scalar(&mut init, "init", "x")?;
            let xr_text: String = require_scalar(&mut init, "init", "xr")?;
            let u_text: String = require_scalar(&mut init, "init", "u")?;
            let udot_text: String = require_scalar(&mut init, "init", "udot")?;
            let khat = require_matrix(&mut init, "init", "Khat_x.row", "init.Khat_x")?;
            let ku = require_matrix(&mut init, "init", "Ku.row", "init.Ku")?;
            check_section_empty(&init, "init")?;
            Some(InitialState {
                x: Vector::from_vec(parse_numbers(0, "init.x", &x_text)?),
                xr: Vector::from_vec(parse_numbers(0, "init.xr", &xr_text)?),
                u: Vector::from_vec(parse_numbers(0, "init.u", &u_text)?),
                u_dot: Vector::from_vec(parse_numbers(0, "init.udot", &udot_text)?),
                khat_x: khat,
                ku,
            })
        }
    };

    let (dt, horizon, decimation, dt_min) = match sections.remove("integrator") {
        None => (
            tol::DT_DEFAULT,
            60.0,
            tol::DECIMATION_DEFAULT,
            tol::DT_MIN,
        ),
        Some(mut integ) => {
            let dt = take_scalar(&mut integ, "integrator", "dt")?.unwrap_or(tol::DT_DEFAULT);
            let horizon = take_scalar(&mut integ, "integrator", "horizon")?.unwrap_or(60.0);
            let decimation = take_scalar(&mut integ, "integrator", "decimation")?
                .unwrap_or(tol::DECIMATION_DEFAULT);
            let dt_min = take_scalar(&mut integ, "integrator", "dt_min")?.unwrap_or(tol::DT_MIN);
            check_section_empty(&integ, "integrator")?;
            (dt, horizon, decimation, dt_min)
        }
    };

    let mut run = need(&mut sections, "run")?;
    let controller_text: String = require_scalar(&mut run, "run", "controller")?;
    let controller = match controller_text.as_str() {
        "proposed" => ControllerKind::Proposed,
        "robust-mrac" => ControllerKind::RobustMrac,
        other => {
            return Err(parse_err(
                0,
                "run.controller",
                format!("unknown controller '{other}' (proposed | robust-mrac)"),
            ))
        }
    };
    let seed: u64 = take_scalar(&mut run, "run", "seed")?.unwrap_or(0);

    for (name, sec) in [
        ("plant", &plant),
        ("reference", &reference),
        ("constraints", &constraints),
        ("gains", &gains),
        ("signals", &signals),
        ("run", &run),
    ] {
        check_section_empty(sec, name)?;
    }

    let scenario = Scenario {
        a,
        b,
        d_bar,
        ar,
        br,
        q,
        rho,
        x_bar,
        u1_bar,
        u2_bar,
        x_bar_r,
        ed_bar,
        m,
        gamma_x,
        gamma_u,
        sigma_x,
        kx_bar,
        kr_bar,
        reference: reference_cfg,
        disturbance: disturbance_cfg,
        init,
        dt,
        horizon,
        decimation,
        dt_min,
        controller,
        seed,
    };
    scenario.validate_dimensions()?;
    Ok(scenario)
}

fn check_section_empty(section: &RawSection, name: &str) -> Result<()> {
    if let Some((key, (line, _))) = section.scalars.iter().next() {
        return Err(parse_err(*line, &format!("{name}.{key}"), "unknown key"));
    }
    if let Some((key, rows)) = section.rows.iter().next() {
        return Err(parse_err(
            rows[0].0,
            &format!("{name}.{key}"),
            "key not allowed here",
        ));
    }
    Ok(())
}

// ------------------------------------------------------------- validation

impl Scenario {
    /// Cross-field dimension checks, each error naming both fields.
    pub fn validate_dimensions(&self) -> Result<()> {
        let n = self.a.rows();
        let m_dim = self.b.cols();
        let check = |ok: bool, msg: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidScenario {
                    violations: vec![msg],
                })
            }
        };
        check(
            self.a.is_square(),
            format!("plant.A must be square, got {}x{}", self.a.rows(), self.a.cols()),
        )?;
        check(
            self.b.rows() == n,
            format!("plant.B rows ({}) must match plant.A dimension ({n})", self.b.rows()),
        )?;
        check(
            self.ar.rows() == n && self.ar.cols() == n,
            format!(
                "reference.Ar ({}x{}) must match plant.A dimension ({n})",
                self.ar.rows(),
                self.ar.cols()
            ),
        )?;
        check(
            self.br.rows() == n && self.br.cols() == m_dim,
            format!(
                "reference.Br ({}x{}) must be {n}x{m_dim} to match plant.A and plant.B",
                self.br.rows(),
                self.br.cols()
            ),
        )?;
        if let Some(q) = &self.q {
            check(
                q.rows() == n && q.cols() == n,
                format!("reference.Q ({}x{}) must match plant.A dimension ({n})", q.rows(), q.cols()),
            )?;
        }
        check(
            self.m.rows() == m_dim && self.m.cols() == m_dim,
            format!(
                "constraints.M ({}x{}) must match plant.B input dimension ({m_dim})",
                self.m.rows(),
                self.m.cols()
            ),
        )?;
        for (name, g) in [("gains.Gamma_x", &self.gamma_x), ("gains.Gamma_u", &self.gamma_u)] {
            check(
                g.rows() == m_dim && g.cols() == m_dim,
                format!(
                    "{name} ({}x{}) must match plant.B input dimension ({m_dim})",
                    g.rows(),
                    g.cols()
                ),
            )?;
        }
        match &self.reference {
            ReferenceCfg::Constant(v) => check(
                v.len() == m_dim,
                format!(
                    "signals.reference.value has {} entries, plant.B input dimension is {m_dim}",
                    v.len()
                ),
            )?,
            ReferenceCfg::Sinusoid(ch) => check(
                ch.len() == m_dim,
                format!(
                    "signals.reference has {} channels, plant.B input dimension is {m_dim}",
                    ch.len()
                ),
            )?,
            ReferenceCfg::Zero => {}
        }
        if let DisturbanceCfg::Sinusoid { channels, .. } = &self.disturbance {
            check(
                channels.len() == n,
                format!(
                    "signals.disturbance has {} channels, plant.A dimension is {n}",
                    channels.len()
                ),
            )?;
        }
        if let Some(init) = &self.init {
            check(
                init.x.dim() == n && init.xr.dim() == n,
                format!(
                    "init.x/init.xr dimensions ({}, {}) must match plant.A dimension ({n})",
                    init.x.dim(),
                    init.xr.dim()
                ),
            )?;
            check(
                init.u.dim() == m_dim && init.u_dot.dim() == m_dim,
                format!(
                    "init.u/init.udot dimensions ({}, {}) must match plant.B input dimension ({m_dim})",
                    init.u.dim(),
                    init.u_dot.dim()
                ),
            )?;
            check(
                init.khat_x.rows() == m_dim && init.khat_x.cols() == n,
                format!(
                    "init.Khat_x ({}x{}) must be {m_dim}x{n} (plant.B by plant.A)",
                    init.khat_x.rows(),
                    init.khat_x.cols()
                ),
            )?;
            check(
                init.ku.rows() == m_dim && init.ku.cols() == m_dim,
                format!(
                    "init.Ku ({}x{}) must be {m_dim}x{m_dim} (plant.B input dimension)",
                    init.ku.rows(),
                    init.ku.cols()
                ),
            )?;
        }
        Ok(())
    }

    /// Resolved rho: configured, or 0.95 |max Re lambda(Ar)|.
    pub fn resolve_rho(&self) -> Result<f64> {
        match self.rho {
            Some(r) => Ok(r),
            None => {
                let max_re = max_real_eigenpart(&self.ar)?;
                if max_re >= 0.0 {
                    return Err(Error::InfeasibleModel(
                        "reference.Ar is not Hurwitz; cannot derive rho".into(),
                    ));
                }
                Ok(0.95 * max_re.abs())
            }
        }
    }

    /// Assembles the simulation problem and integrator settings.
    pub fn build(&self) -> Result<(SimProblem<f64>, IntegratorSettings<f64>)> {
        let n = self.a.rows();
        let m_dim = self.b.cols();
        let plant = PlantModel::new(self.a.clone(), self.b.clone(), self.d_bar)?;
        let q = self.q.clone().unwrap_or_else(|| Matrix::identity(n));
        let reference = ReferenceModel::new(self.ar.clone(), self.br.clone(), q)?;
        let rho = self.resolve_rho()?;
        let gains = AdaptiveGains::new(
            self.gamma_x.clone(),
            self.gamma_u.clone(),
            self.sigma_x,
            self.kx_bar,
            self.kr_bar,
        )?;
        let reference_signal = match &self.reference {
            ReferenceCfg::Zero => ReferenceSignal::Zero,
            ReferenceCfg::Constant(v) => ReferenceSignal::Constant(Vector::from_slice(v)),
            ReferenceCfg::Sinusoid(ch) => ReferenceSignal::Sinusoid(ch.clone()),
        };
        let disturbance = match &self.disturbance {
            DisturbanceCfg::Zero => DisturbanceSignal::Zero,
            DisturbanceCfg::Sinusoid { channels, bound } => {
                DisturbanceSignal::sinusoid(channels.clone(), *bound)?
            }
            DisturbanceCfg::RandomSmooth { bound } => {
                DisturbanceSignal::random_smooth(n, *bound, self.seed)
            }
        };
        let ed_bar = match self.ed_bar {
            Some(v) => v,
            None => {
                // bootstrap spec with a placeholder ed_bar to compute the
                // feasibility selection, then rebuild with it
                let boot = ConstraintSpec::new(
                    self.x_bar,
                    self.u1_bar,
                    self.u2_bar,
                    self.m.clone(),
                    self.x_bar_r,
                    self.x_bar, // placeholder, not used by the selection
                    &reference.p,
                )?;
                let inputs = crate::feasibility::FeasibilityInputs {
                    rho,
                    kx_bar: self.kx_bar,
                    kr_bar: self.kr_bar,
                    r_bar: reference_signal.r_bar(),
                    x_bar_r: self.x_bar_r,
                    norm_b: crate::linalg::spectral_norm(&self.b)?,
                    d_bar: self.d_bar,
                    p: reference.p.clone(),
                    q: reference.q.clone(),
                    spec: boot,
                };
                ed_bar_selection(&inputs)?
            }
        };
        let spec = ConstraintSpec::new(
            self.x_bar,
            self.u1_bar,
            self.u2_bar,
            self.m.clone(),
            self.x_bar_r,
            ed_bar,
            &reference.p,
        )?;
        let init = self.init.clone().unwrap_or_else(|| match self.controller {
            ControllerKind::Proposed => InitialState::origin_with_unit_ku(n, m_dim),
            ControllerKind::RobustMrac => InitialState::origin(n, m_dim),
        });
        let problem = SimProblem::new(
            plant,
            reference,
            reference_signal,
            disturbance,
            spec,
            gains,
            self.controller,
            init,
            rho,
        )?;
        let integ = IntegratorSettings {
            dt: self.dt,
            horizon: self.horizon,
            decimation: self.decimation,
            dt_min: self.dt_min,
        };
        Ok((problem, integ))
    }
}

// ---------------------------------------------------------- serialization

fn fmt_f(v: f64) -> String {
    // shortest representation that round-trips f64 exactly
    format!("{v:?}")
}

fn write_matrix(out: &mut String, key: &str, m: &Matrix<f64>) {
    for i in 0..m.rows() {
        out.push_str(key);
        out.push_str(" = ");
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_vector(out: &mut String, key: &str, v: &Vector<f64>) {
    out.push_str(key);
    out.push_str(" = ");
    let row: Vec<String> = v.iter().map(|&x| fmt_f(x)).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn write_channels(out: &mut String, key: &str, channels: &[SinusoidChannel<f64>]) {
    for c in channels {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&format!(
            "{} {} {}\n",
            fmt_f(c.amplitude),
            fmt_f(c.omega),
            fmt_f(c.phase)
        ));
    }
}

/// Canonical text form; `parse_scenario(serialize_scenario(s)) == s`.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str("[plant]\n");
    write_matrix(&mut out, "A.row", &s.a);
    write_matrix(&mut out, "B.row", &s.b);
    out.push_str(&format!("d_bar = {}\n", fmt_f(s.d_bar)));

    out.push_str("\n[reference]\n");
    write_matrix(&mut out, "Ar.row", &s.ar);
    write_matrix(&mut out, "Br.row", &s.br);
    if let Some(q) = &s.q {
        write_matrix(&mut out, "Q.row", q);
    }
    if let Some(rho) = s.rho {
        out.push_str(&format!("rho = {}\n", fmt_f(rho)));
    }

    out.push_str("\n[constraints]\n");
    out.push_str(&format!("x_bar = {}\n", fmt_f(s.x_bar)));
    out.push_str(&format!("u1_bar = {}\n", fmt_f(s.u1_bar)));
    out.push_str(&format!("u2_bar = {}\n", fmt_f(s.u2_bar)));
    out.push_str(&format!("x_bar_r = {}\n", fmt_f(s.x_bar_r)));
    if let Some(ed) = s.ed_bar {
        out.push_str(&format!("ed_bar = {}\n", fmt_f(ed)));
    }
    write_matrix(&mut out, "M.row", &s.m);

    out.push_str("\n[gains]\n");
    write_matrix(&mut out, "Gamma_x.row", &s.gamma_x);
    write_matrix(&mut out, "Gamma_u.row", &s.gamma_u);
    out.push_str(&format!("sigma_x = {}\n", fmt_f(s.sigma_x)));
    out.push_str(&format!("kx_bar = {}\n", fmt_f(s.kx_bar)));
    out.push_str(&format!("kr_bar = {}\n", fmt_f(s.kr_bar)));

    out.push_str("\n[signals]\n");
    match &s.reference {
        ReferenceCfg::Zero => out.push_str("reference = zero\n"),
        ReferenceCfg::Constant(v) => {
            out.push_str("reference = constant\n");
            let row: Vec<String> = v.iter().map(|&x| fmt_f(x)).collect();
            out.push_str(&format!("reference.value = {}\n", row.join(" ")));
        }
        ReferenceCfg::Sinusoid(ch) => {
            out.push_str("reference = sinusoid\n");
            write_channels(&mut out, "reference.channel", ch);
        }
    }
    match &s.disturbance {
        DisturbanceCfg::Zero => out.push_str("disturbance = zero\n"),
        DisturbanceCfg::Sinusoid { channels, bound } => {
            out.push_str("disturbance = sinusoid\n");
            write_channels(&mut out, "disturbance.channel", channels);
            out.push_str(&format!("disturbance.bound = {}\n", fmt_f(*bound)));
        }
        DisturbanceCfg::RandomSmooth { bound } => {
            out.push_str("disturbance = random-smooth\n");
            out.push_str(&format!("disturbance.bound = {}\n", fmt_f(*bound)));
        }
    }

    if let Some(init) = &s.init {
        out.push_str("\n[init]\n");
        write_vector(&mut out, "x", &init.x);
        write_vector(&mut out, "xr", &init.xr);
        write_vector(&mut out, "u", &init.u);
        write_vector(&mut out, "udot", &init.u_dot);
        write_matrix(&mut out, "Khat_x.row", &init.khat_x);
        write_matrix(&mut out, "Ku.row", &init.ku);
    }

    out.push_str("\n[integrator]\n");
    out.push_str(&format!("dt = {}\n", fmt_f(s.dt)));
    out.push_str(&format!("horizon = {}\n", fmt_f(s.horizon)));
    out.push_str(&format!("decimation = {}\n", s.decimation));
    out.push_str(&format!("dt_min = {}\n", fmt_f(s.dt_min)));

    out.push_str("\n[run]\n");
    out.push_str(&format!("controller = {}\n", s.controller));
    out.push_str(&format!("seed = {}\n", s.seed));
    out
}

// -------------------------------------------------------------- presets

/// The bundled aircraft scenario under the barrier-protected controller.
pub fn preset_paper_s4() -> Scenario {
    let c = crate::preset::DISTURBANCE_SCALE / crate::preset::DISTURBANCE_WAVEFORM_SUP;
    let half_pi = std::f64::consts::FRAC_PI_2;
    Scenario {
        a: crate::preset::aircraft_plant_a(),
        b: crate::preset::aircraft_input_b(),
        d_bar: 1.0,
        ar: crate::preset::aircraft_reference_ar(),
        br: crate::preset::aircraft_reference_br(),
        q: Some(Matrix::identity(4)),
        rho: Some(2.3),
        x_bar: 6.0,
        u1_bar: 1.0,
        u2_bar: 0.6,
        x_bar_r: 2.0,
        ed_bar: Some(0.9),
        m: Matrix::identity(2),
        gamma_x: Matrix::scaled_identity(2, 5.0),
        gamma_u: Matrix::scaled_identity(2, 2.0),
        sigma_x: 1.0,
        kx_bar: 5.0,
        kr_bar: 10.0,
        reference: ReferenceCfg::Sinusoid(vec![
            SinusoidChannel {
                amplitude: 0.4,
                omega: 0.1,
                phase: 0.0,
            },
            SinusoidChannel {
                amplitude: 0.2,
                omega: 0.05,
                phase: half_pi,
            },
        ]),
        disturbance: DisturbanceCfg::Sinusoid {
            channels: vec![
                SinusoidChannel {
                    amplitude: c,
                    omega: 2.0,
                    phase: 0.0,
                },
                SinusoidChannel {
                    amplitude: c,
                    omega: 3.0,
                    phase: half_pi,
                },
                SinusoidChannel {
                    amplitude: c,
                    omega: 1.0,
                    phase: 0.0,
                },
                SinusoidChannel {
                    amplitude: c,
                    omega: 2.0,
                    phase: half_pi,
                },
            ],
            bound: 1.0,
        },
        init: Some(InitialState::origin_with_unit_ku(4, 2)),
        dt: tol::DT_DEFAULT,
        horizon: 60.0,
        decimation: tol::DECIMATION_DEFAULT,
        dt_min: tol::DT_MIN,
        controller: ControllerKind::Proposed,
        seed: 0,
    }
}

/// Same plant, signals, and initial plant state under the unprotected
/// baseline with hotter adaptation.
pub fn preset_paper_s4_mrac() -> Scenario {
    Scenario {
        gamma_x: Matrix::scaled_identity(2, 15.0),
        controller: ControllerKind::RobustMrac,
        init: Some(InitialState::origin(4, 2)),
        ..preset_paper_s4()
    }
}

/// Look up an embedded preset by CLI name.
pub fn preset_by_name(name: &str) -> Option<Scenario> {
    match name {
        "paper-s4" => Some(preset_paper_s4()),
        "paper-s4-mrac" => Some(preset_paper_s4_mrac()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_exactly() {
        let s = preset_paper_s4();
        let text = serialize_scenario(&s);
        let parsed = parse_scenario(&text).unwrap();
        assert_eq!(parsed, s);
        let s = preset_paper_s4_mrac();
        let parsed = parse_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(parsed, s);
    }

    #[test]
    fn preset_builds_and_matches_problem_builder() {
        let (problem, integ) = preset_paper_s4().build().unwrap();
        let direct = crate::preset::aircraft_problem(ControllerKind::Proposed);
        assert_eq!(problem.plant.a, direct.plant.a);
        assert_eq!(problem.spec, direct.spec);
        assert_eq!(problem.gains, direct.gains);
        assert_eq!(problem.init, direct.init);
        assert!((integ.dt - 1e-3).abs() < 1e-18);
        // disturbance channels agree to round-off
        match (&problem.disturbance, &direct.disturbance) {
            (
                DisturbanceSignal::Sinusoid { channels: a, .. },
                DisturbanceSignal::Sinusoid { channels: b, .. },
            ) => {
                for (x, y) in a.iter().zip(b) {
                    assert!((x.amplitude - y.amplitude).abs() < 1e-15);
                }
            }
            _ => panic!("unexpected disturbance kinds"),
        }
    }

    #[test]
    fn empty_plant_section_names_the_missing_matrix() {
        let text = "[plant]\n[reference]\n";
        match parse_scenario(text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "plant.A"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_matrix_row_reports_line() {
        let text = "[plant]\nA.row = 1 0\nA.row = 0\n";
        match parse_scenario(text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(field, "plant.A.row");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let text = "[plant]\nA.row = 1\nB.row = 1\nd_bar = 0\nbogus = 1\n";
        match parse_scenario(text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(field, "plant.bogus");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_names_both_fields() {
        let mut s = preset_paper_s4();
        s.m = Matrix::identity(3);
        match s.validate_dimensions() {
            Err(Error::InvalidScenario { violations }) => {
                assert!(violations[0].contains("constraints.M"));
                assert!(violations[0].contains("plant.B"));
            }
            other => panic!("expected invalid scenario, got {other:?}"),
        }
    }

    #[test]
    fn default_rho_is_below_the_decay_rate() {
        let mut s = preset_paper_s4();
        s.rho = None;
        let rho = s.resolve_rho().unwrap();
        assert!((rho - 0.95 * 2.4417958908407558).abs() < 1e-6);
    }

    #[test]
    fn default_ed_bar_comes_from_the_selection() {
        let mut s = preset_paper_s4();
        s.ed_bar = None;
        let (problem, _) = s.build().unwrap();
        // gamma * 4 - (kappa + 0.2/2.3) with the preset numbers
        assert!((problem.spec.ed_bar - 0.915466438).abs() < 1e-6);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let s = preset_paper_s4();
        let text = serialize_scenario(&s);
        let commented = format!("# header\n\n{}\n# trailing\n", text.replace("[gains]", "[gains] # inline"));
        let parsed = parse_scenario(&commented).unwrap();
        assert_eq!(parsed, s);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // the serializer prints shortest-round-trip literals, so any
            // finite value must survive a write/parse cycle bit-exactly
            #[test]
            fn float_literals_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
                let text = fmt_f(v);
                let back: f64 = text.parse().unwrap();
                prop_assert_eq!(back.to_bits(), v.to_bits());
            }

            #[test]
            fn perturbed_scenarios_round_trip(
                x_bar in 3.0f64..50.0,
                sigma in 1e-3f64..10.0,
                seed in proptest::num::u64::ANY,
                amp in -5.0f64..5.0,
                dt in 1e-5f64..1e-1,
                baseline in proptest::bool::ANY,
            ) {
                let mut s = preset_paper_s4();
                s.x_bar = x_bar;
                s.sigma_x = sigma;
                s.seed = seed;
                s.dt = dt;
                s.disturbance = DisturbanceCfg::RandomSmooth { bound: 0.5 };
                s.reference = ReferenceCfg::Constant(vec![amp, -amp / 3.0]);
                if baseline {
                    s.controller = ControllerKind::RobustMrac;
                    s.rho = None;
                    s.ed_bar = None;
                }
                let parsed = parse_scenario(&serialize_scenario(&s)).unwrap();
                prop_assert_eq!(parsed, s);
            }
        }
    }
}
