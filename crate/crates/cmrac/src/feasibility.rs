//! Existence checks for a constraint-compliant control policy.
//!
//! Two conditions gate every simulation. C1 bounds the parameter radius by
//! the reference model's decay rate: kx_bar < rho / ||B||. C2 bounds the
//! state constraint from below by the worst-case error budget:
//! x_bar > (kappa + (||B||/rho) u1_bar + 2 lambda_max(P) d_bar / lambda_min(Q)) / gamma + x_bar_r.
//! The admissible difference-error bound and the disturbance-margin floor
//! follow from the same constants.

use crate::controller::ConstraintSpec;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eig_extremes, Matrix};
use crate::scalar::Real;

/// Everything the feasibility conditions consume.
#[derive(Debug, Clone)]
pub struct FeasibilityInputs<T> {
    /// Decay-rate constant, 0 < rho < |max Re lambda(Ar)|.
    pub rho: T,
    pub kx_bar: T,
    pub kr_bar: T,
    /// Bound on the reference input norm.
    pub r_bar: T,
    pub x_bar_r: T,
    /// Spectral norm of the input matrix.
    pub norm_b: T,
    pub d_bar: T,
    pub p: Matrix<T>,
    pub q: Matrix<T>,
    pub spec: ConstraintSpec<T>,
}

/// Verdicts and derived constants of the feasibility analysis.
#[derive(Debug, Clone)]
pub struct FeasibilityReport<T> {
    pub rho: T,
    /// C1 threshold rho / ||B||.
    pub c1_threshold: T,
    pub c1_ok: bool,
    pub gamma: T,
    pub kappa: T,
    /// Max admissible difference-error bound (positive iff C2 holds).
    pub ed_bar: T,
    /// Disturbance floor 2 lambda_max(P) d_bar / lambda_min(Q).
    pub disturbance_floor: T,
    /// C2 right-hand side: minimal admissible x_bar.
    pub x_bar_min: T,
    pub c2_ok: bool,
    /// Effective ed_bar (from the constraint spec) sits strictly between
    /// the disturbance floor and the admissible maximum.
    pub eq_margin_ok: bool,
    /// x_bar - x_bar_min.
    pub c2_margin: T,
    /// ed_bar_effective - disturbance_floor.
    pub disturbance_margin: T,
    pub feasible: bool,
}

/// C1: kx_bar < rho / ||B||.
pub fn check_c1<T: Real>(inputs: &FeasibilityInputs<T>) -> Result<(bool, T)> {
    if inputs.norm_b <= T::zero() {
        return Err(Error::InvalidInput("check_c1: ||B|| must be positive".into()));
    }
    let threshold = inputs.rho / inputs.norm_b;
    Ok((inputs.kx_bar < threshold, threshold))
}

/// gamma = 1 - ||B|| kx_bar / rho and kappa = (||B||/rho)(kx_bar x_bar_r + kr_bar r_bar).
pub fn derived_constants<T: Real>(inputs: &FeasibilityInputs<T>) -> Result<(T, T)> {
    let gamma = T::one() - inputs.norm_b * inputs.kx_bar / inputs.rho;
    if gamma <= T::zero() {
        return Err(Error::InfeasibleC1 {
            gamma: gamma.as_f64(),
        });
    }
    let kappa =
        inputs.norm_b / inputs.rho * (inputs.kx_bar * inputs.x_bar_r + inputs.kr_bar * inputs.r_bar);
    Ok((gamma, kappa))
}

/// C2 right-hand side with the input norm replaced by its bound u1_bar.
pub fn minimal_state_bound<T: Real>(inputs: &FeasibilityInputs<T>) -> Result<T> {
    let (gamma, kappa) = derived_constants(inputs)?;
    let q_eig = symmetric_eig_extremes(&inputs.q)?;
    let p_eig = symmetric_eig_extremes(&inputs.p)?;
    let floor = T::of(2.0) * p_eig.lambda_max * inputs.d_bar / q_eig.lambda_min;
    Ok((kappa + inputs.norm_b / inputs.rho * inputs.spec.u1_bar + floor) / gamma
        + inputs.x_bar_r)
}

/// Max admissible difference-error bound
/// ed_bar = gamma (x_bar - x_bar_r) - (kappa + (||B||/rho) u1_bar),
/// checked against the disturbance floor.
pub fn ed_bar_selection<T: Real>(inputs: &FeasibilityInputs<T>) -> Result<T> {
    let (gamma, kappa) = derived_constants(inputs)?;
    let ed_bar =
        gamma * inputs.spec.e_bar() - (kappa + inputs.norm_b / inputs.rho * inputs.spec.u1_bar);
    if ed_bar <= T::zero() {
        return Err(Error::InfeasibleC2 {
            ed_bar: ed_bar.as_f64(),
        });
    }
    let q_eig = symmetric_eig_extremes(&inputs.q)?;
    let p_eig = symmetric_eig_extremes(&inputs.p)?;
    let floor = T::of(2.0) * p_eig.lambda_max * inputs.d_bar / q_eig.lambda_min;
    if ed_bar <= floor {
        return Err(Error::DisturbanceMargin {
            ed_bar: ed_bar.as_f64(),
            floor: floor.as_f64(),
        });
    }
    Ok(ed_bar)
}

/// Full feasibility analysis; never errors on an infeasible configuration,
/// the report carries the verdicts instead.
pub fn analyze<T: Real>(inputs: &FeasibilityInputs<T>) -> Result<FeasibilityReport<T>> {
    let (c1_ok, c1_threshold) = check_c1(inputs)?;
    let q_eig = symmetric_eig_extremes(&inputs.q)?;
    let p_eig = symmetric_eig_extremes(&inputs.p)?;
    let disturbance_floor = T::of(2.0) * p_eig.lambda_max * inputs.d_bar / q_eig.lambda_min;

    let gamma_raw = T::one() - inputs.norm_b * inputs.kx_bar / inputs.rho;
    if gamma_raw <= T::zero() {
        // C1 failed hard; report the raw constants without derived bounds
        return Ok(FeasibilityReport {
            rho: inputs.rho,
            c1_threshold,
            c1_ok: false,
            gamma: gamma_raw,
            kappa: T::nan(),
            ed_bar: T::nan(),
            disturbance_floor,
            x_bar_min: T::infinity(),
            c2_ok: false,
            eq_margin_ok: false,
            c2_margin: T::neg_infinity(),
            disturbance_margin: T::neg_infinity(),
            feasible: false,
        });
    }
    let (gamma, kappa) = derived_constants(inputs)?;
    let x_bar_min = minimal_state_bound(inputs)?;
    let ed_bar_max = gamma * inputs.spec.e_bar()
        - (kappa + inputs.norm_b / inputs.rho * inputs.spec.u1_bar);
    let c2_ok = inputs.spec.x_bar > x_bar_min;
    let ed_eff = inputs.spec.ed_bar;
    let eq_margin_ok = ed_eff > disturbance_floor && ed_eff <= ed_bar_max;
    Ok(FeasibilityReport {
        rho: inputs.rho,
        c1_threshold,
        c1_ok,
        gamma,
        kappa,
        ed_bar: ed_bar_max,
        disturbance_floor,
        x_bar_min,
        c2_ok,
        eq_margin_ok,
        c2_margin: inputs.spec.x_bar - x_bar_min,
        disturbance_margin: ed_eff - disturbance_floor,
        feasible: c1_ok && c2_ok && eq_margin_ok,
    })
}

/// One cell of the feasibility map.
#[derive(Debug, Clone, Copy)]
pub struct SweepCell<T> {
    pub u1_bar: T,
    pub x_bar: T,
    pub feasible: bool,
}

/// Uniform grid specification for [`region_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub u1_min: f64,
    pub u1_max: f64,
    pub u1_count: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.u1_min > 0.0 && self.u1_max > self.u1_min && self.u1_count >= 2) {
            return Err(Error::InvalidInput(format!(
                "degenerate u1 grid: [{}, {}] x {}",
                self.u1_min, self.u1_max, self.u1_count
            )));
        }
        if !(self.x_min > 0.0 && self.x_max > self.x_min && self.x_count >= 2) {
            return Err(Error::InvalidInput(format!(
                "degenerate x grid: [{}, {}] x {}",
                self.x_min, self.x_max, self.x_count
            )));
        }
        Ok(())
    }
}

/// Feasibility map over a (u1_bar, x_bar) grid with all other inputs fixed.
/// A cell is feasible iff C1 and C2 hold and the Eq.-selected ed_bar clears
/// the disturbance floor there.
pub fn region_sweep<T: Real>(
    inputs: &FeasibilityInputs<T>,
    grid: &GridSpec,
) -> Result<Vec<SweepCell<T>>> {
    grid.validate()?;
    let (c1_ok, _) = check_c1(inputs)?;
    let q_eig = symmetric_eig_extremes(&inputs.q)?;
    let p_eig = symmetric_eig_extremes(&inputs.p)?;
    let floor = T::of(2.0) * p_eig.lambda_max * inputs.d_bar / q_eig.lambda_min;
    let gamma = T::one() - inputs.norm_b * inputs.kx_bar / inputs.rho;
    let kappa =
        inputs.norm_b / inputs.rho * (inputs.kx_bar * inputs.x_bar_r + inputs.kr_bar * inputs.r_bar);

    let mut cells = Vec::with_capacity(grid.u1_count * grid.x_count);
    for iu in 0..grid.u1_count {
        let u1 = T::of(
            grid.u1_min + (grid.u1_max - grid.u1_min) * iu as f64 / (grid.u1_count - 1) as f64,
        );
        for ix in 0..grid.x_count {
            let xb = T::of(
                grid.x_min + (grid.x_max - grid.x_min) * ix as f64 / (grid.x_count - 1) as f64,
            );
            let feasible = if !c1_ok || gamma <= T::zero() || xb <= inputs.x_bar_r {
                false
            } else {
                let ed_bar =
                    gamma * (xb - inputs.x_bar_r) - (kappa + inputs.norm_b / inputs.rho * u1);
                // ed_bar > floor is exactly C2 at this (u1, xb)
                ed_bar > floor
            };
            cells.push(SweepCell {
                u1_bar: u1,
                x_bar: xb,
                feasible,
            });
        }
    }
    Ok(cells)
}
