//! File emission: trajectory CSV, monitor/feasibility report text, and the
//! feasibility-map data file.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), which
//! round-trips f64 exactly, so identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::feasibility::{FeasibilityReport, SweepCell};
use crate::sim::{MonitorReport, Trajectory};

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV header for an n-state, m-input trajectory.
pub fn csv_header(n: usize, m: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=n).map(|i| format!("xr{i}")));
    cols.extend((1..=m).map(|i| format!("u{i}")));
    cols.extend((1..=m).map(|i| format!("udot{i}")));
    cols.extend(
        [
            "norm_x",
            "norm_u",
            "norm_udot",
            "norm_e",
            "norm_ed",
            "v_theta",
            "v_phi",
            "alpha",
            "margin_x",
            "margin_u",
            "margin_udot",
            "margin_ed",
        ]
        .map(String::from),
    );
    cols.join(",")
}

/// Renders a trajectory as CSV text.
pub fn trajectory_to_csv(traj: &Trajectory<f64>) -> String {
    let mut out = String::new();
    if traj.samples.is_empty() {
        return out;
    }
    let n = traj.samples[0].state.x.dim();
    let m = traj.samples[0].state.u.dim();
    out.push_str(&csv_header(n, m));
    out.push('\n');
    for sample in &traj.samples {
        let s = &sample.state;
        let d = &sample.derived;
        let mut fields: Vec<String> = vec![f(s.t)];
        fields.extend(s.x.iter().map(|&v| f(v)));
        fields.extend(s.xr.iter().map(|&v| f(v)));
        fields.extend(s.u.iter().map(|&v| f(v)));
        fields.extend(s.u_dot.iter().map(|&v| f(v)));
        for v in [
            d.norm_x,
            d.norm_u,
            d.norm_udot,
            d.norm_e,
            d.norm_ed,
            d.v_theta,
            d.v_phi,
            d.alpha,
            d.margin_x,
            d.margin_u,
            d.margin_udot,
            d.margin_ed,
        ] {
            fields.push(f(v));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parsed CSV: header names and rows of numbers.
pub struct CsvData {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvData {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Reads CSV text produced by [`trajectory_to_csv`].
pub fn parse_csv(text: &str) -> Result<CsvData> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    let columns: Vec<String> = header.split(',').map(String::from).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("CSV row {}: bad number '{tok}'", i + 2))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != columns.len() {
            return Err(Error::InvalidInput(format!(
                "CSV row {}: {} fields, header has {}",
                i + 2,
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvData { columns, rows })
}

/// Human-readable monitor report with one verdict per line.
pub fn monitor_report_text(report: &MonitorReport<f64>) -> String {
    let mut out = String::new();
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    writeln!(out, "controller = {}", report.controller).unwrap();
    writeln!(
        out,
        "[{}] state:      max ||x|| = {:.6} (margin {:.6})",
        verdict(report.state_ok.ok),
        report.max_norm_x,
        report.min_margin_x
    )
    .unwrap();
    writeln!(
        out,
        "[{}] input:      max ||u|| = {:.6} (margin {:.6})",
        verdict(report.input_ok.ok),
        report.max_norm_u,
        report.min_margin_u
    )
    .unwrap();
    writeln!(
        out,
        "[{}] input rate: max ||udot|| = {:.6} (margin {:.6})",
        verdict(report.rate_ok.ok),
        report.max_norm_udot,
        report.min_margin_udot
    )
    .unwrap();
    writeln!(
        out,
        "[{}] diff error: max ||e_d|| = {:.6} (margin {:.6})",
        verdict(report.ed_ok.ok),
        report.max_norm_ed,
        report.min_margin_ed
    )
    .unwrap();
    writeln!(
        out,
        "[{}] tracking:   max ||e|| = {:.6}",
        verdict(report.e_ok.ok),
        report.max_norm_e
    )
    .unwrap();
    writeln!(
        out,
        "[{}] gain bound: max ||Khat_x||_F = {:.9}",
        verdict(report.khat_bound.ok),
        report.max_khat_fro
    )
    .unwrap();
    if let Some(vt) = &report.vtheta_monotone {
        writeln!(
            out,
            "[{}] V_theta monotone: worst allowed-excess {:.3e}",
            verdict(vt.ok),
            vt.worst
        )
        .unwrap();
    }
    if let Some(vp) = &report.vphi_bound {
        writeln!(
            out,
            "[{}] V_phi bound: max {:.6} < {:.6} + {:.6}",
            verdict(vp.ok),
            vp.max_v_phi,
            vp.v_phi_initial,
            vp.c_over_alpha
        )
        .unwrap();
    }
    if let (Some(fu), Some(fud), Some(fed)) = (
        report.min_barrier_frac_u,
        report.min_barrier_frac_udot,
        report.min_barrier_frac_ed,
    ) {
        writeln!(
            out,
            "barrier margins (fraction of bound^2): u {:.4}, udot {:.4}, e_d {:.4}",
            fu, fud, fed
        )
        .unwrap();
    }
    writeln!(out, "udot tail mean = {:.6}", report.udot_tail_mean).unwrap();
    writeln!(out, "overall = {}", verdict(report.all_ok)).unwrap();
    out
}

/// Feasibility report text, one condition per line.
pub fn feasibility_report_text(report: &FeasibilityReport<f64>) -> String {
    let mut out = String::new();
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    writeln!(out, "rho = {:.6}", report.rho).unwrap();
    writeln!(
        out,
        "[{}] C1: kx_bar < rho/||B|| = {:.9}",
        verdict(report.c1_ok),
        report.c1_threshold
    )
    .unwrap();
    writeln!(out, "gamma = {:.9}", report.gamma).unwrap();
    writeln!(out, "kappa = {:.9}", report.kappa).unwrap();
    writeln!(
        out,
        "[{}] C2: x_bar > {:.9} (margin {:.6})",
        verdict(report.c2_ok),
        report.x_bar_min,
        report.c2_margin
    )
    .unwrap();
    writeln!(out, "ed_bar selection = {:.9}", report.ed_bar).unwrap();
    writeln!(
        out,
        "[{}] disturbance margin: ed_bar > {:.9} (margin {:.6})",
        verdict(report.eq_margin_ok),
        report.disturbance_floor,
        report.disturbance_margin
    )
    .unwrap();
    writeln!(out, "overall = {}", verdict(report.feasible)).unwrap();
    out
}

/// Delimited feasibility map: `u1_bar x_bar feasible` per line.
pub fn sweep_to_text(cells: &[SweepCell<f64>]) -> String {
    let mut out = String::from("u1_bar x_bar feasible\n");
    for c in cells {
        writeln!(out, "{} {} {}", f(c.u1_bar), f(c.x_bar), u8::from(c.feasible)).unwrap();
    }
    out
}
