//! Closed-loop simulation of the full augmented system with fixed-step
//! RK4, barrier-guarded stage evaluation, and trajectory monitors.
//!
//! Augmented state: plant x, reference xr, auxiliary error e1, input
//! filter (u, udot), and the adaptive gains (Khat_x, K_u). The difference
//! error is never integrated separately; e_d = (x - xr) - e1 is derived
//! algebraically at every evaluation, so the decomposition e = e_d + e1
//! holds to round-off by construction.

use crate::controller::{
    alpha_coupling, auxiliary_input, composite_lyapunov_phi, composite_lyapunov_theta,
    controller_accel, khat_x_derivative, ku_derivative, robust_mrac_step, AdaptiveGains,
    ConstraintSpec, ControllerState,
};
use crate::error::{Error, Result};
use crate::feasibility::{analyze, FeasibilityInputs, FeasibilityReport};
use crate::linalg::{spectral_norm, symmetric_eig_extremes, Matrix, Vector};
use crate::model::{
    matched_gains, plant_derivative, reference_derivative, PlantModel, ReferenceModel,
};
use crate::scalar::Real;
use crate::signal::{DisturbanceSignal, ReferenceSignal};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Proposed,
    RobustMrac,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControllerKind::Proposed => write!(f, "proposed"),
            ControllerKind::RobustMrac => write!(f, "robust-mrac"),
        }
    }
}

/// Initial conditions of the augmented system (e1 always starts at zero).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState<T> {
    pub x: Vector<T>,
    pub xr: Vector<T>,
    pub u: Vector<T>,
    pub u_dot: Vector<T>,
    pub khat_x: Matrix<T>,
    pub ku: Matrix<T>,
}

impl<T: Real> InitialState<T> {
    /// Everything zero; note the input filter stays at rest forever under
    /// K_u = 0, so this is only useful for equilibrium tests.
    pub fn origin(n: usize, m: usize) -> Self {
        Self {
            x: Vector::zeros(n),
            xr: Vector::zeros(n),
            u: Vector::zeros(m),
            u_dot: Vector::zeros(m),
            khat_x: Matrix::zeros(m, n),
            ku: Matrix::zeros(m, m),
        }
    }

    /// Zero state with K_u(0) = I, the smallest gain that actually drives
    /// the input filter.
    pub fn origin_with_unit_ku(n: usize, m: usize) -> Self {
        Self {
            ku: Matrix::identity(m),
            ..Self::origin(n, m)
        }
    }
}

/// Integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings<T> {
    pub dt: T,
    pub horizon: T,
    /// Store every k-th step.
    pub decimation: usize,
    /// Retry floor for barrier-triggered step halving.
    pub dt_min: T,
}

impl<T: Real> Default for IntegratorSettings<T> {
    fn default() -> Self {
        Self {
            dt: T::of(tol::DT_DEFAULT),
            horizon: T::of(60.0),
            decimation: tol::DECIMATION_DEFAULT,
            dt_min: T::of(tol::DT_MIN),
        }
    }
}

/// A fully assembled simulation problem. The controller path only ever
/// touches `plant.b`, the reference model, bounds, and gains; the plant
/// matrix A and the true K_x stay on the simulator side.
#[derive(Debug, Clone)]
pub struct SimProblem<T> {
    pub plant: PlantModel<T>,
    pub reference: ReferenceModel<T>,
    pub reference_signal: ReferenceSignal<T>,
    pub disturbance: DisturbanceSignal<T>,
    pub spec: ConstraintSpec<T>,
    pub gains: AdaptiveGains<T>,
    pub controller: ControllerKind,
    pub init: InitialState<T>,
    /// Decay-rate constant for the feasibility layer.
    pub rho: T,
    /// Reference gain K_r = B^+ Br (controller parameter).
    pub kr: Matrix<T>,
    /// True matching gain K_x (simulator-side monitors only).
    pub kx_true: Matrix<T>,
}

impl<T: Real> SimProblem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        plant: PlantModel<T>,
        reference: ReferenceModel<T>,
        reference_signal: ReferenceSignal<T>,
        disturbance: DisturbanceSignal<T>,
        spec: ConstraintSpec<T>,
        gains: AdaptiveGains<T>,
        controller: ControllerKind,
        init: InitialState<T>,
        rho: T,
    ) -> Result<Self> {
        let n = plant.state_dim();
        let m = plant.input_dim();
        if reference.state_dim() != n || reference.input_dim() != m {
            return Err(Error::DimensionMismatch {
                context: "SimProblem",
                expected: format!("reference model {n}x{m}"),
                got: format!(
                    "{}x{}",
                    reference.state_dim(),
                    reference.input_dim()
                ),
            });
        }
        if let Some(dim) = reference_signal.dim() {
            if dim != m {
                return Err(Error::DimensionMismatch {
                    context: "SimProblem reference signal",
                    expected: format!("{m} channels"),
                    got: format!("{dim}"),
                });
            }
        }
        if let Some(dim) = disturbance.dim() {
            if dim != n {
                return Err(Error::DimensionMismatch {
                    context: "SimProblem disturbance",
                    expected: format!("{n} channels"),
                    got: format!("{dim}"),
                });
            }
        }
        if disturbance.bound() > plant.d_bar {
            return Err(Error::InvalidInput(format!(
                "disturbance bound {:e} exceeds plant d_bar {:e}",
                disturbance.bound(),
                plant.d_bar
            )));
        }
        if rho <= T::zero() {
            return Err(Error::InvalidInput("rho must be positive".into()));
        }
        let gm = matched_gains(&plant, &reference)?;
        Ok(Self {
            plant,
            reference,
            reference_signal,
            disturbance,
            spec,
            gains,
            controller,
            init,
            rho,
            kr: gm.kr,
            kx_true: gm.kx,
        })
    }

    pub fn feasibility_inputs(&self) -> Result<FeasibilityInputs<T>> {
        Ok(FeasibilityInputs {
            rho: self.rho,
            kx_bar: self.gains.kx_bar,
            kr_bar: self.gains.kr_bar,
            r_bar: self.reference_signal.r_bar(),
            x_bar_r: self.spec.x_bar_r,
            norm_b: spectral_norm(&self.plant.b)?,
            d_bar: self.plant.d_bar,
            p: self.reference.p.clone(),
            q: self.reference.q.clone(),
            spec: self.spec.clone(),
        })
    }

    fn state_dim(&self) -> usize {
        self.plant.state_dim()
    }

    fn input_dim(&self) -> usize {
        self.plant.input_dim()
    }
}

/// Full augmented state at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState<T> {
    pub t: T,
    pub x: Vector<T>,
    pub xr: Vector<T>,
    pub e1: Vector<T>,
    pub u: Vector<T>,
    pub u_dot: Vector<T>,
    pub khat_x: Matrix<T>,
    pub ku: Matrix<T>,
}

impl<T: Real> AugmentedState<T> {
    pub fn ed(&self) -> Vector<T> {
        self.x.sub(&self.xr).sub(&self.e1)
    }

    pub fn e(&self) -> Vector<T> {
        self.x.sub(&self.xr)
    }

    fn offset(&self, d: &Delta<T>, h: T) -> Self {
        let mut s = self.clone();
        s.t = self.t + h;
        s.x.add_scaled(&d.x, h);
        s.xr.add_scaled(&d.xr, h);
        s.e1.add_scaled(&d.e1, h);
        s.u.add_scaled(&d.u, h);
        s.u_dot.add_scaled(&d.u_dot, h);
        s.khat_x.add_scaled(&d.khat_x, h);
        s.ku.add_scaled(&d.ku, h);
        s
    }

    /// Flattened copy for whole-state norms (step-halving diagnostics).
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        out.extend_from_slice(self.x.as_slice());
        out.extend_from_slice(self.xr.as_slice());
        out.extend_from_slice(self.e1.as_slice());
        out.extend_from_slice(self.u.as_slice());
        out.extend_from_slice(self.u_dot.as_slice());
        out.extend_from_slice(self.khat_x.as_slice());
        out.extend_from_slice(self.ku.as_slice());
        out
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.xr.is_finite()
            && self.e1.is_finite()
            && self.u.is_finite()
            && self.u_dot.is_finite()
            && self.khat_x.is_finite()
            && self.ku.is_finite()
    }
}

/// Time derivative of the augmented state.
#[derive(Debug, Clone)]
pub struct Delta<T> {
    pub x: Vector<T>,
    pub xr: Vector<T>,
    pub e1: Vector<T>,
    pub u: Vector<T>,
    pub u_dot: Vector<T>,
    pub khat_x: Matrix<T>,
    pub ku: Matrix<T>,
}

/// Right-hand side of the full augmented system under the proposed
/// controller. Errors with a barrier breach if the state sits outside a
/// guard; the integrator turns that into step halving.
pub fn augmented_derivative<T: Real>(
    s: &AugmentedState<T>,
    problem: &SimProblem<T>,
) -> Result<Delta<T>> {
    let n = problem.state_dim();
    let m = problem.input_dim();
    let r = problem.reference_signal.eval(s.t, m);
    let d = problem.disturbance.eval(s.t, n);
    let v = auxiliary_input(&s.khat_x, &problem.kr, &s.x, &r)?;
    let cstate = ControllerState {
        u: s.u.clone(),
        u_dot: s.u_dot.clone(),
        khat_x: s.khat_x.clone(),
        ku: s.ku.clone(),
    };
    let u_ddot = controller_accel(&cstate, &v, &problem.spec, s.t)?;
    let ed = s.ed();
    let khat_dot = khat_x_derivative(
        &s.khat_x,
        &ed,
        &s.x,
        &problem.plant.b,
        &problem.reference.p,
        &problem.gains,
        &problem.spec,
        s.t,
    )?;
    let ku_dot = ku_derivative(&s.u_dot, &v, &problem.gains, &problem.spec, s.t)?;
    let delta_u = s.u.sub(&v);
    let mut e1_dot = problem.reference.ar.matvec(&s.e1);
    e1_dot.add_scaled(&problem.plant.b.matvec(&delta_u), T::one());
    Ok(Delta {
        x: plant_derivative(&problem.plant, &s.x, &s.u, &d)?,
        xr: reference_derivative(&problem.reference, &s.xr, &r)?,
        e1: e1_dot,
        u: s.u_dot.clone(),
        u_dot: u_ddot,
        khat_x: khat_dot,
        ku: ku_dot,
    })
}

fn check_admissible<T: Real>(s: &AugmentedState<T>, problem: &SimProblem<T>) -> Result<()> {
    // evaluating alpha and the e_d denominator exercises all three guards
    alpha_coupling(&s.u, &s.u_dot, &problem.spec, s.t)?;
    let ed = s.ed();
    let q = ed.dot(&problem.reference.p.matvec(&ed));
    let bound_sq = problem.spec.ed_bar_primed * problem.spec.ed_bar_primed;
    if bound_sq - q <= T::of(tol::BARRIER_GUARD_FRAC) * bound_sq {
        return Err(Error::BarrierBreach {
            barrier: crate::error::Barrier::DifferenceError,
            t: s.t.as_f64(),
            denominator: (bound_sq - q).as_f64(),
        });
    }
    Ok(())
}

/// One classical RK4 step at fixed dt. All four stage evaluations and the
/// resulting state must be admissible.
pub fn rk4_step<T: Real>(
    s: &AugmentedState<T>,
    dt: T,
    problem: &SimProblem<T>,
) -> Result<AugmentedState<T>> {
    if dt <= T::zero() {
        return Err(Error::InvalidInput("rk4_step: dt must be positive".into()));
    }
    let half = dt * T::of(0.5);
    let k1 = augmented_derivative(s, problem)?;
    let s2 = s.offset(&k1, half);
    let k2 = augmented_derivative(&s2, problem)?;
    let s3 = s.offset(&k2, half);
    let k3 = augmented_derivative(&s3, problem)?;
    let s4 = s.offset(&k3, dt);
    let k4 = augmented_derivative(&s4, problem)?;

    let sixth = dt * T::of(1.0 / 6.0);
    let third = dt * T::of(1.0 / 3.0);
    let mut next = s.clone();
    next.t = s.t + dt;
    for (k, w) in [(&k1, sixth), (&k2, third), (&k3, third), (&k4, sixth)] {
        next.x.add_scaled(&k.x, w);
        next.xr.add_scaled(&k.xr, w);
        next.e1.add_scaled(&k.e1, w);
        next.u.add_scaled(&k.u, w);
        next.u_dot.add_scaled(&k.u_dot, w);
        next.khat_x.add_scaled(&k.khat_x, w);
        next.ku.add_scaled(&k.ku, w);
    }
    if !next.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "non-finite state after step at t = {:.6}",
            s.t.as_f64()
        )));
    }
    check_admissible(&next, problem)?;
    Ok(next)
}

/// RK4 step with barrier-retry: on a guard breach the step is retried at
/// half the size, down to dt_min, then fails naming the barrier.
fn rk4_step_with_retry<T: Real>(
    s: &AugmentedState<T>,
    dt: T,
    dt_min: T,
    problem: &SimProblem<T>,
) -> Result<AugmentedState<T>> {
    let mut h = dt;
    loop {
        match rk4_step(s, h, problem) {
            Ok(next) => return Ok(next),
            Err(Error::BarrierBreach { barrier, .. }) => {
                h = h * T::of(0.5);
                if h < dt_min {
                    return Err(Error::StepFailure {
                        barrier,
                        t: s.t.as_f64(),
                        dt: h.as_f64(),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Derived per-sample scalars.
#[derive(Debug, Clone, Copy)]
pub struct DerivedScalars<T> {
    pub norm_x: T,
    pub norm_u: T,
    pub norm_udot: T,
    pub norm_e: T,
    pub norm_ed: T,
    pub khat_fro: T,
    pub v_theta: T,
    pub v_phi: T,
    pub alpha: T,
    pub margin_x: T,
    pub margin_u: T,
    pub margin_udot: T,
    pub margin_ed: T,
}

/// One stored trajectory sample.
#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub state: AugmentedState<T>,
    pub derived: DerivedScalars<T>,
}

/// Decimated trajectory with strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    pub controller: ControllerKind,
}

/// Outcome of one monitored check.
#[derive(Debug, Clone, Copy)]
pub struct CheckOutcome<T> {
    pub ok: bool,
    /// Worst attained value (meaning depends on the check).
    pub worst: T,
    pub first_violation: Option<usize>,
}

/// V_phi boundedness check data.
#[derive(Debug, Clone, Copy)]
pub struct VphiCheck<T> {
    pub v_phi_initial: T,
    pub c_over_alpha: T,
    pub max_v_phi: T,
    pub ok: bool,
    pub first_violation: Option<usize>,
}

/// Post-run monitor verdicts; `all_ok` covers every check applicable to
/// the controller that produced the trajectory.
#[derive(Debug, Clone)]
pub struct MonitorReport<T> {
    pub controller: ControllerKind,
    pub max_norm_x: T,
    pub max_norm_u: T,
    pub max_norm_udot: T,
    pub max_norm_e: T,
    pub max_norm_ed: T,
    pub max_khat_fro: T,
    pub min_margin_x: T,
    pub min_margin_u: T,
    pub min_margin_udot: T,
    pub min_margin_ed: T,
    /// Min over samples of (bound'^2 - q)/bound'^2 per barrier (proposed only).
    pub min_barrier_frac_u: Option<T>,
    pub min_barrier_frac_udot: Option<T>,
    pub min_barrier_frac_ed: Option<T>,
    pub state_ok: CheckOutcome<T>,
    pub input_ok: CheckOutcome<T>,
    pub rate_ok: CheckOutcome<T>,
    pub ed_ok: CheckOutcome<T>,
    pub e_ok: CheckOutcome<T>,
    /// ||Khat_x||_F <= kx_bar + slack (proposed only; reported untested
    /// for the baseline, which has no projection).
    pub khat_bound: CheckOutcome<T>,
    /// Worst per-sample V_theta increase vs allowance (proposed only).
    pub vtheta_monotone: Option<CheckOutcome<T>>,
    pub vphi_bound: Option<VphiCheck<T>>,
    /// Mean ||udot|| over the trailing 10% of samples; convergence of the
    /// input rate is reported, never asserted.
    pub udot_tail_mean: T,
    pub all_ok: bool,
}

fn sample_from_state<T: Real>(
    s: &AugmentedState<T>,
    problem: &SimProblem<T>,
) -> Result<Sample<T>> {
    let ed = s.ed();
    let e = s.e();
    let cstate = ControllerState {
        u: s.u.clone(),
        u_dot: s.u_dot.clone(),
        khat_x: s.khat_x.clone(),
        ku: s.ku.clone(),
    };
    let (v_theta, v_phi, alpha) = match problem.controller {
        ControllerKind::Proposed => {
            let vt = composite_lyapunov_theta(
                &cstate,
                &problem.reference.p,
                &problem.gains,
                &problem.spec,
                s.t,
            )?;
            let ktilde = s.khat_x.sub(&problem.kx_true);
            let vp = composite_lyapunov_phi(
                &ed,
                &ktilde,
                &problem.reference.p,
                &problem.gains,
                &problem.spec,
                s.t,
            )?;
            let a = alpha_coupling(&s.u, &s.u_dot, &problem.spec, s.t)?;
            (vt, vp, a)
        }
        // the baseline has no input filter or barriers; these monitors do
        // not apply and are stored as zeros to keep the record rectangular
        ControllerKind::RobustMrac => (T::zero(), T::zero(), T::zero()),
    };
    let norm_x = s.x.norm();
    let norm_u = s.u.norm();
    let norm_udot = s.u_dot.norm();
    let norm_ed = ed.norm();
    Ok(Sample {
        derived: DerivedScalars {
            norm_x,
            norm_u,
            norm_udot,
            norm_e: e.norm(),
            norm_ed,
            khat_fro: s.khat_x.frobenius_norm(),
            v_theta,
            v_phi,
            alpha,
            margin_x: problem.spec.x_bar - norm_x,
            margin_u: problem.spec.u1_bar - norm_u,
            margin_udot: problem.spec.u2_bar - norm_udot,
            margin_ed: problem.spec.ed_bar - norm_ed,
        },
        state: s.clone(),
    })
}

fn validate_initial_state<T: Real>(problem: &SimProblem<T>) -> Result<AugmentedState<T>> {
    let init = &problem.init;
    let spec = &problem.spec;
    let mut violations = Vec::new();
    let qu = init.u.dot(&spec.m.matvec(&init.u));
    let u1_sq = spec.u1_bar_primed * spec.u1_bar_primed;
    if qu >= u1_sq {
        violations.push(format!(
            "u(0) outside the input-magnitude set: u'Mu = {:e} >= {:e}",
            qu.as_f64(),
            u1_sq.as_f64()
        ));
    }
    let qud = init.u_dot.dot(&spec.m.matvec(&init.u_dot));
    let u2_sq = spec.u2_bar_primed * spec.u2_bar_primed;
    if qud >= u2_sq {
        violations.push(format!(
            "udot(0) outside the input-rate set: udot'M udot = {:e} >= {:e}",
            qud.as_f64(),
            u2_sq.as_f64()
        ));
    }
    let ed0 = init.x.sub(&init.xr); // e1(0) = 0
    let qed = ed0.dot(&problem.reference.p.matvec(&ed0));
    let ed_sq = spec.ed_bar_primed * spec.ed_bar_primed;
    if qed >= ed_sq {
        violations.push(format!(
            "e_d(0) outside the difference-error set: ed'P ed = {:e} >= {:e}",
            qed.as_f64(),
            ed_sq.as_f64()
        ));
    }
    if init.x.norm() >= spec.x_bar {
        violations.push(format!(
            "||x(0)|| = {:e} >= x_bar = {:e}",
            init.x.norm().as_f64(),
            spec.x_bar.as_f64()
        ));
    }
    if init.khat_x.frobenius_norm() > problem.gains.kx_bar {
        violations.push(format!(
            "||Khat_x(0)||_F = {:e} > kx_bar = {:e}",
            init.khat_x.frobenius_norm().as_f64(),
            problem.gains.kx_bar.as_f64()
        ));
    }
    if !violations.is_empty() {
        return Err(Error::InvalidScenario { violations });
    }
    Ok(AugmentedState {
        t: T::zero(),
        x: init.x.clone(),
        xr: init.xr.clone(),
        e1: Vector::zeros(problem.state_dim()),
        u: init.u.clone(),
        u_dot: init.u_dot.clone(),
        khat_x: init.khat_x.clone(),
        ku: init.ku.clone(),
    })
}

/// Runs the configured controller over the horizon. Unless `force` is set,
/// an infeasible configuration (C1/C2/margins) refuses to run.
pub fn simulate<T: Real>(
    problem: &SimProblem<T>,
    integ: &IntegratorSettings<T>,
    force: bool,
) -> Result<(Trajectory<T>, MonitorReport<T>)> {
    if integ.dt <= T::zero() || integ.horizon <= T::zero() || integ.decimation == 0 {
        return Err(Error::InvalidInput(
            "integrator settings must be positive (dt, horizon, decimation)".into(),
        ));
    }
    if !force && problem.controller == ControllerKind::Proposed {
        let report = analyze(&problem.feasibility_inputs()?)?;
        if !report.feasible {
            return Err(Error::InvalidScenario {
                violations: vec![format!(
                    "feasibility failed (C1 ok: {}, C2 ok: {}, margins ok: {}); use force to run anyway",
                    report.c1_ok, report.c2_ok, report.eq_margin_ok
                )],
            });
        }
    }
    match problem.controller {
        ControllerKind::Proposed => simulate_proposed(problem, integ),
        ControllerKind::RobustMrac => simulate_baseline(problem, integ),
    }
}

fn simulate_proposed<T: Real>(
    problem: &SimProblem<T>,
    integ: &IntegratorSettings<T>,
) -> Result<(Trajectory<T>, MonitorReport<T>)> {
    let mut state = validate_initial_state(problem)?;
    check_admissible(&state, problem)?;
    let mut samples = vec![sample_from_state(&state, problem)?];
    let mut step_index = 0usize;
    while state.t < integ.horizon - integ.dt * T::of(0.5) {
        state = rk4_step_with_retry(&state, integ.dt, integ.dt_min, problem)?;
        step_index += 1;
        if step_index % integ.decimation == 0 || state.t >= integ.horizon - integ.dt * T::of(0.5)
        {
            samples.push(sample_from_state(&state, problem)?);
        }
    }
    let traj = Trajectory {
        samples,
        controller: ControllerKind::Proposed,
    };
    let report = evaluate_monitors(&traj, problem)?;
    Ok((traj, report))
}

/// Baseline: u is algebraic (no input filter), Khat_x adapts without
/// barriers or projection, and nothing is guarded.
fn simulate_baseline<T: Real>(
    problem: &SimProblem<T>,
    integ: &IntegratorSettings<T>,
) -> Result<(Trajectory<T>, MonitorReport<T>)> {
    let n = problem.state_dim();
    let m = problem.input_dim();
    let init = &problem.init;
    let mut x = init.x.clone();
    let mut xr = init.xr.clone();
    let mut khat = init.khat_x.clone();
    let mut t = T::zero();

    // (x, xr, Khat) packed derivative under the baseline law
    let deriv = |t: T,
                 x: &Vector<T>,
                 xr: &Vector<T>,
                 khat: &Matrix<T>|
     -> Result<(Vector<T>, Vector<T>, Matrix<T>)> {
        let r = problem.reference_signal.eval(t, m);
        let d = problem.disturbance.eval(t, n);
        let e = x.sub(xr);
        let (u, khat_dot) = robust_mrac_step(
            khat,
            x,
            &r,
            &e,
            &problem.plant.b,
            &problem.reference.p,
            &problem.kr,
            &problem.gains,
        )?;
        Ok((
            plant_derivative(&problem.plant, x, &u, &d)?,
            reference_derivative(&problem.reference, xr, &r)?,
            khat_dot,
        ))
    };

    // the baseline input rate is algebraic:
    // udot = Khat_dot x + Khat xdot + K_r rdot
    let make_state = |t: T, x: &Vector<T>, xr: &Vector<T>, khat: &Matrix<T>| -> Result<AugmentedState<T>> {
        let r = problem.reference_signal.eval(t, m);
        let u = auxiliary_input(khat, &problem.kr, x, &r)?;
        let (x_dot, _, khat_dot) = deriv(t, x, xr, khat)?;
        let rdot = problem.reference_signal.eval_derivative(t, m);
        let mut u_dot = khat_dot.matvec(x);
        u_dot.add_scaled(&khat.matvec(&x_dot), T::one());
        u_dot.add_scaled(&problem.kr.matvec(&rdot), T::one());
        Ok(AugmentedState {
            t,
            x: x.clone(),
            xr: xr.clone(),
            e1: Vector::zeros(n),
            u,
            u_dot,
            khat_x: khat.clone(),
            ku: Matrix::zeros(m, m),
        })
    };

    let mut samples = vec![sample_from_state(&make_state(t, &x, &xr, &khat)?, problem)?];
    let steps = (integ.horizon / integ.dt).round().as_f64() as usize;
    let half = T::of(0.5);
    for step in 1..=steps {
        let (k1x, k1r, k1k) = deriv(t, &x, &xr, &khat)?;
        let (x2, xr2, kh2) = {
            let mut a = x.clone();
            a.add_scaled(&k1x, integ.dt * half);
            let mut b = xr.clone();
            b.add_scaled(&k1r, integ.dt * half);
            let mut c = khat.clone();
            c.add_scaled(&k1k, integ.dt * half);
            (a, b, c)
        };
        let (k2x, k2r, k2k) = deriv(t + integ.dt * half, &x2, &xr2, &kh2)?;
        let (x3, xr3, kh3) = {
            let mut a = x.clone();
            a.add_scaled(&k2x, integ.dt * half);
            let mut b = xr.clone();
            b.add_scaled(&k2r, integ.dt * half);
            let mut c = khat.clone();
            c.add_scaled(&k2k, integ.dt * half);
            (a, b, c)
        };
        let (k3x, k3r, k3k) = deriv(t + integ.dt * half, &x3, &xr3, &kh3)?;
        let (x4, xr4, kh4) = {
            let mut a = x.clone();
            a.add_scaled(&k3x, integ.dt);
            let mut b = xr.clone();
            b.add_scaled(&k3r, integ.dt);
            let mut c = khat.clone();
            c.add_scaled(&k3k, integ.dt);
            (a, b, c)
        };
        let (k4x, k4r, k4k) = deriv(t + integ.dt, &x4, &xr4, &kh4)?;
        let sixth = integ.dt * T::of(1.0 / 6.0);
        let third = integ.dt * T::of(1.0 / 3.0);
        for (kx, kr_, kk, w) in [
            (&k1x, &k1r, &k1k, sixth),
            (&k2x, &k2r, &k2k, third),
            (&k3x, &k3r, &k3k, third),
            (&k4x, &k4r, &k4k, sixth),
        ] {
            x.add_scaled(kx, w);
            xr.add_scaled(kr_, w);
            khat.add_scaled(kk, w);
        }
        t += integ.dt;
        if !(x.is_finite() && xr.is_finite() && khat.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "baseline diverged at t = {:.6}",
                t.as_f64()
            )));
        }
        if step % integ.decimation == 0 || step == steps {
            samples.push(sample_from_state(&make_state(t, &x, &xr, &khat)?, problem)?);
        }
    }
    let traj = Trajectory {
        samples,
        controller: ControllerKind::RobustMrac,
    };
    let report = evaluate_monitors(&traj, problem)?;
    Ok((traj, report))
}

/// Recomputes every monitor from a stored trajectory.
pub fn evaluate_monitors<T: Real>(
    traj: &Trajectory<T>,
    problem: &SimProblem<T>,
) -> Result<MonitorReport<T>> {
    if traj.samples.is_empty() {
        return Err(Error::InvalidInput("evaluate_monitors: empty trajectory".into()));
    }
    let spec = &problem.spec;
    let proposed = traj.controller == ControllerKind::Proposed;

    let mut max_norm_x = T::neg_infinity();
    let mut max_norm_u = T::neg_infinity();
    let mut max_norm_udot = T::neg_infinity();
    let mut max_norm_e = T::neg_infinity();
    let mut max_norm_ed = T::neg_infinity();
    let mut max_khat = T::neg_infinity();

    let mut state_ok = CheckOutcome {
        ok: true,
        worst: T::neg_infinity(),
        first_violation: None,
    };
    let mut input_ok = state_ok;
    let mut rate_ok = state_ok;
    let mut ed_ok = state_ok;
    let mut e_ok = state_ok;
    let mut khat_bound = state_ok;

    let mut frac_u = T::infinity();
    let mut frac_udot = T::infinity();
    let mut frac_ed = T::infinity();

    let mut vtheta_worst = T::neg_infinity();
    let mut vtheta_first: Option<usize> = None;
    let mut prev_vtheta: Option<T> = None;

    let q_eig = symmetric_eig_extremes(&problem.reference.q)?;
    let alpha_rate = q_eig.lambda_min.min(problem.gains.sigma_x);
    let kx_fro = problem.kx_true.frobenius_norm();
    let c_over_alpha = problem.gains.sigma_x * kx_fro * kx_fro / (T::of(2.0) * alpha_rate);
    let vphi_allow = traj.samples[0].derived.v_phi + c_over_alpha + T::of(tol::VPHI_SLACK);
    let mut vphi_max = T::neg_infinity();
    let mut vphi_first: Option<usize> = None;

    let u1_sq = spec.u1_bar_primed * spec.u1_bar_primed;
    let u2_sq = spec.u2_bar_primed * spec.u2_bar_primed;
    let ed_sq = spec.ed_bar_primed * spec.ed_bar_primed;
    let khat_allow = problem.gains.kx_bar + T::of(tol::KHAT_SLACK);

    for (idx, sample) in traj.samples.iter().enumerate() {
        let d = &sample.derived;
        let s = &sample.state;
        max_norm_x = max_norm_x.max(d.norm_x);
        max_norm_u = max_norm_u.max(d.norm_u);
        max_norm_udot = max_norm_udot.max(d.norm_udot);
        max_norm_e = max_norm_e.max(d.norm_e);
        max_norm_ed = max_norm_ed.max(d.norm_ed);
        max_khat = max_khat.max(d.khat_fro);

        let check = |out: &mut CheckOutcome<T>, value: T, bound: T| {
            out.worst = out.worst.max(value);
            if value >= bound && out.first_violation.is_none() {
                out.ok = false;
                out.first_violation = Some(idx);
            }
        };
        check(&mut state_ok, d.norm_x, spec.x_bar);
        check(&mut input_ok, d.norm_u, spec.u1_bar);
        check(&mut rate_ok, d.norm_udot, spec.u2_bar);
        check(&mut ed_ok, d.norm_ed, spec.ed_bar);
        check(&mut e_ok, d.norm_e, spec.e_bar());
        // strict-at-bound is wrong for the khat check: the projection is
        // allowed to ride the boundary, so compare against bound + slack
        khat_bound.worst = khat_bound.worst.max(d.khat_fro);
        if d.khat_fro > khat_allow && khat_bound.first_violation.is_none() {
            khat_bound.ok = false;
            khat_bound.first_violation = Some(idx);
        }

        if proposed {
            let qu = s.u.dot(&spec.m.matvec(&s.u));
            let qud = s.u_dot.dot(&spec.m.matvec(&s.u_dot));
            let ed = s.ed();
            let qed = ed.dot(&problem.reference.p.matvec(&ed));
            frac_u = frac_u.min((u1_sq - qu) / u1_sq);
            frac_udot = frac_udot.min((u2_sq - qud) / u2_sq);
            frac_ed = frac_ed.min((ed_sq - qed) / ed_sq);

            if let Some(prev) = prev_vtheta {
                let increase = d.v_theta - prev;
                let allow = T::of(tol::VTHETA_STEP_REL) * (T::one() + d.v_theta.abs());
                vtheta_worst = vtheta_worst.max(increase - allow);
                if increase > allow && vtheta_first.is_none() {
                    vtheta_first = Some(idx);
                }
            }
            prev_vtheta = Some(d.v_theta);

            vphi_max = vphi_max.max(d.v_phi);
            if d.v_phi >= vphi_allow && vphi_first.is_none() {
                vphi_first = Some(idx);
            }
        }
    }

    let tail_start = traj.samples.len().saturating_sub(traj.samples.len() / 10).max(1) - 1;
    let tail = &traj.samples[tail_start..];
    let udot_tail_mean = tail
        .iter()
        .map(|s| s.derived.norm_udot)
        .fold(T::zero(), |a, b| a + b)
        / T::of(tail.len() as f64);

    let vtheta_monotone = proposed.then_some(CheckOutcome {
        ok: vtheta_first.is_none(),
        worst: vtheta_worst,
        first_violation: vtheta_first,
    });
    let vphi_bound = proposed.then_some(VphiCheck {
        v_phi_initial: traj.samples[0].derived.v_phi,
        c_over_alpha,
        max_v_phi: vphi_max,
        ok: vphi_first.is_none(),
        first_violation: vphi_first,
    });

    let mut all_ok = state_ok.ok && input_ok.ok && rate_ok.ok;
    if proposed {
        all_ok = all_ok
            && ed_ok.ok
            && e_ok.ok
            && khat_bound.ok
            && vtheta_monotone.as_ref().map_or(true, |c| c.ok)
            && vphi_bound.as_ref().map_or(true, |c| c.ok)
            && frac_u > T::zero()
            && frac_udot > T::zero()
            && frac_ed > T::zero();
    }

    Ok(MonitorReport {
        controller: traj.controller,
        max_norm_x,
        max_norm_u,
        max_norm_udot,
        max_norm_e,
        max_norm_ed,
        max_khat_fro: max_khat,
        min_margin_x: spec.x_bar - max_norm_x,
        min_margin_u: spec.u1_bar - max_norm_u,
        min_margin_udot: spec.u2_bar - max_norm_udot,
        min_margin_ed: spec.ed_bar - max_norm_ed,
        min_barrier_frac_u: proposed.then_some(frac_u),
        min_barrier_frac_udot: proposed.then_some(frac_udot),
        min_barrier_frac_ed: proposed.then_some(frac_ed),
        state_ok,
        input_ok,
        rate_ok,
        ed_ok,
        e_ok,
        khat_bound,
        vtheta_monotone,
        vphi_bound,
        udot_tail_mean,
        all_ok,
    })
}

/// Feasibility report for a problem, as the pre-run gate uses it.
pub fn feasibility_report<T: Real>(problem: &SimProblem<T>) -> Result<FeasibilityReport<T>> {
    analyze(&problem.feasibility_inputs()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;

    fn zero_problem() -> SimProblem<f64> {
        let (plant, reference) = preset::aircraft_models();
        let spec = ConstraintSpec::new(
            6.0,
            1.0,
            0.6,
            Matrix::identity(2),
            2.0,
            0.9,
            &reference.p,
        )
        .unwrap();
        let gains = AdaptiveGains::new(
            Matrix::scaled_identity(2, 5.0),
            Matrix::scaled_identity(2, 2.0),
            1.0,
            5.0,
            10.0,
        )
        .unwrap();
        SimProblem::new(
            plant,
            reference,
            ReferenceSignal::Zero,
            DisturbanceSignal::Zero,
            spec,
            gains,
            ControllerKind::Proposed,
            InitialState::origin(4, 2),
            2.3,
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_derivative_is_zero() {
        let problem = zero_problem();
        let s = AugmentedState {
            t: 0.0,
            x: Vector::zeros(4),
            xr: Vector::zeros(4),
            e1: Vector::zeros(4),
            u: Vector::zeros(2),
            u_dot: Vector::zeros(2),
            khat_x: Matrix::zeros(2, 4),
            ku: Matrix::zeros(2, 2),
        };
        let d = augmented_derivative(&s, &problem).unwrap();
        assert_eq!(d.x.norm(), 0.0);
        assert_eq!(d.xr.norm(), 0.0);
        assert_eq!(d.e1.norm(), 0.0);
        assert_eq!(d.u.norm(), 0.0);
        assert_eq!(d.u_dot.norm(), 0.0);
        assert_eq!(d.khat_x.max_abs(), 0.0);
        assert_eq!(d.ku.max_abs(), 0.0);
    }

    #[test]
    fn equilibrium_step_unchanged() {
        let problem = zero_problem();
        let s = AugmentedState {
            t: 0.0,
            x: Vector::zeros(4),
            xr: Vector::zeros(4),
            e1: Vector::zeros(4),
            u: Vector::zeros(2),
            u_dot: Vector::zeros(2),
            khat_x: Matrix::zeros(2, 4),
            ku: Matrix::zeros(2, 2),
        };
        let next = rk4_step(&s, 0.1, &problem).unwrap();
        assert_eq!(next.x.norm(), 0.0);
        assert_eq!(next.u.norm(), 0.0);
        assert!((next.t - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_scenario_stays_identically_zero() {
        let problem = zero_problem();
        let integ = IntegratorSettings {
            dt: 1e-2,
            horizon: 2.0,
            decimation: 10,
            dt_min: 1e-6,
        };
        let (traj, report) = simulate(&problem, &integ, false).unwrap();
        for s in &traj.samples {
            assert_eq!(s.derived.norm_x, 0.0);
            assert_eq!(s.derived.norm_u, 0.0);
            assert_eq!(s.derived.v_theta, 0.0);
        }
        assert!(report.all_ok);
    }

    #[test]
    fn rk4_matches_exact_exponential_decay() {
        // scalar plant xdot = -x with the controller at rest: one RK4 step
        // of size h lands at x0 * (1 - h + h^2/2 - h^3/6 + h^4/24), whose
        // distance to x0 * exp(-h) is O(h^5)
        let plant = PlantModel::new(
            Matrix::from_rows(&[&[-1.0]]),
            Matrix::from_rows(&[&[1.0]]),
            0.0,
        )
        .unwrap();
        let reference = ReferenceModel::new(
            Matrix::from_rows(&[&[-1.0]]),
            Matrix::from_rows(&[&[1.0]]),
            Matrix::identity(1),
        )
        .unwrap();
        let spec =
            ConstraintSpec::new(10.0, 1.0, 1.0, Matrix::identity(1), 1.0, 5.0, &reference.p)
                .unwrap();
        let gains = AdaptiveGains::new(
            Matrix::identity(1),
            Matrix::identity(1),
            1.0,
            5.0,
            5.0,
        )
        .unwrap();
        let problem = SimProblem::new(
            plant,
            reference,
            ReferenceSignal::Zero,
            DisturbanceSignal::Zero,
            spec,
            gains,
            ControllerKind::Proposed,
            InitialState::origin(1, 1),
            0.95,
        )
        .unwrap();
        let x0 = 0.5;
        let base = AugmentedState {
            t: 0.0,
            x: Vector::from_slice(&[x0]),
            xr: Vector::zeros(1),
            e1: Vector::zeros(1),
            u: Vector::zeros(1),
            u_dot: Vector::zeros(1),
            khat_x: Matrix::zeros(1, 1),
            ku: Matrix::zeros(1, 1),
        };
        let err_at = |dt: f64| {
            let next = rk4_step(&base, dt, &problem).unwrap();
            (next.x[0] - x0 * (-dt).exp()).abs()
        };
        let e1 = err_at(0.1);
        assert!(e1 < 2e-7 * x0, "one-step error {e1}");
        // fifth-order local error: halving dt shrinks it by about 32
        let e2 = err_at(0.05);
        assert!(e1 / e2 > 20.0, "local order ratio {}", e1 / e2);
    }

    #[test]
    fn invalid_initial_state_lists_all_violations() {
        let mut problem = zero_problem();
        problem.init.u = Vector::from_slice(&[2.0, 0.0]); // outside U1' ball
        problem.init.u_dot = Vector::from_slice(&[1.0, 0.0]); // outside U2' ball
        let integ = IntegratorSettings::default();
        match simulate(&problem, &integ, true) {
            Err(Error::InvalidScenario { violations }) => {
                assert_eq!(violations.len(), 2, "{violations:?}");
                assert!(violations[0].contains("input-magnitude"));
                assert!(violations[1].contains("input-rate"));
            }
            other => panic!("expected invalid-scenario, got {other:?}"),
        }
    }

    #[test]
    fn delta_u_zero_keeps_e1_zero() {
        // force u == v by zeroing Khat, Kr effect: with r = 0 and Khat = 0,
        // v = 0; and u starts at 0 with Ku = 0 so u stays 0 and e1 stays 0
        let problem = zero_problem();
        let integ = IntegratorSettings {
            dt: 1e-2,
            horizon: 1.0,
            decimation: 1,
            dt_min: 1e-6,
        };
        let (traj, _) = simulate(&problem, &integ, false).unwrap();
        for s in &traj.samples {
            assert_eq!(s.state.e1.norm(), 0.0);
        }
    }

    #[test]
    fn aircraft_derivative_at_start_matches_hand_assembly() {
        // each sub-equation evaluated by hand at t = 0 from rest:
        //   r(0) = [0, 0.2], d(0) = c [0, 1, 0, 1]
        //   xdot = d(0), xrdot = Br r(0) = [0, 0.2, 0, 0.4]
        //   e1dot = B (u - v) = -B Kr r(0) = [0, -0.4, 0, -0.4] * ... see below
        //   uddot = Ku v = Kr r(0) = [0, 2]; Khat, Ku derivatives vanish
        let problem = preset::aircraft_problem(ControllerKind::Proposed);
        let s = AugmentedState {
            t: 0.0,
            x: Vector::zeros(4),
            xr: Vector::zeros(4),
            e1: Vector::zeros(4),
            u: Vector::zeros(2),
            u_dot: Vector::zeros(2),
            khat_x: problem.init.khat_x.clone(),
            ku: problem.init.ku.clone(),
        };
        let d = augmented_derivative(&s, &problem).unwrap();
        let c = preset::DISTURBANCE_SCALE / preset::DISTURBANCE_WAVEFORM_SUP;
        // xdot = A*0 + B*0 + d(0)
        assert!((d.x.as_slice()[0] - 0.0).abs() < 1e-15);
        assert!((d.x.as_slice()[1] - c).abs() < 1e-15);
        assert!((d.x.as_slice()[2] - 0.0).abs() < 1e-15);
        assert!((d.x.as_slice()[3] - c).abs() < 1e-15);
        // xrdot = Br [0, 0.2] = [0, 0.2, 0, 0.4]
        assert!(d.xr.sub(&Vector::from_slice(&[0.0, 0.2, 0.0, 0.4])).norm() < 1e-15);
        // v(0) = Kr r(0) = [0, 2]; u = 0 so e1dot = B (0 - v) = [0, -0.4, 0, -0.4]
        assert!(
            d.e1.sub(&Vector::from_slice(&[0.0, -0.0, 0.0, -0.4]))
                .norm()
                < 1e-15
        );
        // udot state derivative is u_dot = 0; uddot = Ku v - 0 - alpha 0 = [0, 2]
        assert_eq!(d.u.norm(), 0.0);
        assert!(d.u_dot.sub(&Vector::from_slice(&[0.0, 2.0])).norm() < 1e-15);
        // both adaptive derivatives vanish from rest (e_d = 0, udot = 0)
        assert_eq!(d.khat_x.max_abs(), 0.0);
        assert_eq!(d.ku.max_abs(), 0.0);
    }

    #[test]
    fn corrupted_sample_is_flagged_at_its_exact_index() {
        let problem = preset::aircraft_problem(ControllerKind::Proposed);
        let integ = IntegratorSettings {
            dt: 1e-3,
            horizon: 1.0,
            decimation: 10,
            dt_min: 1e-6,
        };
        let (mut traj, clean) = simulate(&problem, &integ, false).unwrap();
        assert!(clean.state_ok.ok);
        traj.samples[7].derived.norm_x = 6.5; // outside x_bar = 6
        traj.samples[7].derived.v_theta = 99.0; // a huge jump
        let report = evaluate_monitors(&traj, &problem).unwrap();
        assert!(!report.state_ok.ok);
        assert_eq!(report.state_ok.first_violation, Some(7));
        let vt = report.vtheta_monotone.unwrap();
        assert!(!vt.ok);
        assert_eq!(vt.first_violation, Some(7));
    }

    #[test]
    fn aircraft_short_run_smoke() {
        // 5 s of the bundled scenario: all monitors hold and the input
        // filter actually moves
        let problem = preset::aircraft_problem(ControllerKind::Proposed);
        let integ = IntegratorSettings {
            dt: 1e-3,
            horizon: 5.0,
            decimation: 10,
            dt_min: 1e-6,
        };
        let (traj, report) = simulate(&problem, &integ, false).unwrap();
        assert!(report.all_ok, "{report:#?}");
        assert!(report.max_norm_u > 0.01, "input never moved");
        assert!(report.max_norm_udot > 0.05);
        assert!(report.max_norm_x < 6.0);
        assert!(traj.samples.len() > 400);
    }

    #[test]
    fn baseline_violates_input_bound_immediately() {
        // u(0) = K_r r(0) = [0, 2] for the bundled scenario, so the
        // unfiltered baseline starts outside the input-magnitude set
        let problem = preset::aircraft_problem(ControllerKind::RobustMrac);
        let integ = IntegratorSettings {
            dt: 1e-3,
            horizon: 1.0,
            decimation: 10,
            dt_min: 1e-6,
        };
        let (traj, report) = simulate(&problem, &integ, true).unwrap();
        assert!(!report.input_ok.ok);
        assert_eq!(report.input_ok.first_violation, Some(0));
        assert!((traj.samples[0].derived.norm_u - 2.0).abs() < 1e-12);
        assert!(!report.all_ok);
    }

    #[test]
    fn generic_layer_runs_in_f32() {
        // the whole closed loop instantiated at f32: a benign scalar
        // problem integrates and keeps its monitors
        let plant = PlantModel::new(
            Matrix::<f32>::from_rows(&[&[-1.0]]),
            Matrix::from_rows(&[&[1.0]]),
            0.0,
        )
        .unwrap();
        let reference = ReferenceModel::new(
            Matrix::from_rows(&[&[-2.0]]),
            Matrix::from_rows(&[&[1.0]]),
            Matrix::identity(1),
        )
        .unwrap();
        let spec =
            ConstraintSpec::new(10.0_f32, 1.0, 1.0, Matrix::identity(1), 1.0, 5.0, &reference.p)
                .unwrap();
        let gains =
            AdaptiveGains::new(Matrix::identity(1), Matrix::identity(1), 1.0_f32, 5.0, 5.0)
                .unwrap();
        let problem = SimProblem::new(
            plant,
            reference,
            ReferenceSignal::Sinusoid(vec![crate::signal::SinusoidChannel {
                amplitude: 0.3_f32,
                omega: 1.0,
                phase: 0.0,
            }]),
            DisturbanceSignal::Zero,
            spec,
            gains,
            ControllerKind::Proposed,
            InitialState::origin_with_unit_ku(1, 1),
            1.9_f32,
        )
        .unwrap();
        let integ = IntegratorSettings {
            dt: 1e-3_f32,
            horizon: 2.0,
            decimation: 10,
            dt_min: 1e-5,
        };
        let (traj, report) = simulate(&problem, &integ, true).unwrap();
        assert!(traj.samples.len() > 100);
        assert!(report.max_norm_u > 0.0);
        assert!(report.input_ok.ok && report.rate_ok.ok);
    }

    #[test]
    fn error_decomposition_holds_to_round_off() {
        // e = e_d + e1 is algebraic, never integrated
        let s = AugmentedState {
            t: 0.3,
            x: Vector::from_slice(&[0.1, -0.2, 0.05, 0.0]),
            xr: Vector::from_slice(&[0.02, 0.0, -0.01, 0.03]),
            e1: Vector::from_slice(&[0.01, 0.002, -0.03, 0.0]),
            u: Vector::zeros(2),
            u_dot: Vector::zeros(2),
            khat_x: Matrix::zeros(2, 4),
            ku: Matrix::zeros(2, 2),
        };
        let e = s.e();
        let recomposed = s.ed().add(&s.e1);
        assert!(e.sub(&recomposed).norm() <= 1e-16);
    }
}
