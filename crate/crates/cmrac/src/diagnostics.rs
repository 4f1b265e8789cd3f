//! Runtime verification of the barrier calculus: analytic BLF gradients
//! against central finite differences, and the closed-form derivative of
//! the first-layer composite against its assembled evaluation.
//!
//! The derivative identity: substituting the input filter and the K_u
//! update into d/dt V_theta collapses everything except the rate term,
//!   V_theta_dot = -udot^T M udot / (U2'^2 - udot^T M udot),
//! independent of the state. Both sides are evaluated at random interior
//! points and compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::{blf_values, controller_accel, ku_derivative, AdaptiveGains, ConstraintSpec, ControllerState};
use crate::error::Result;
use crate::linalg::{Lu, Matrix, Vector};
use crate::preset;
use crate::tol;

/// Sign faults injectable into the analytic side of each check; test-only.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradFault {
    None,
    V1Sign,
    V2Sign,
    V3Sign,
    ThetaSign,
}

/// One line of the report.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: &'static str,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub seed: u64,
    pub entries: Vec<GradCheckEntry>,
    pub all_ok: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "gradient checks (seed {}):", self.seed)?;
        for e in &self.entries {
            writeln!(
                f,
                "  [{}] {:<22} max rel err {:.3e} (tol {:.1e})",
                if e.ok { "PASS" } else { "FAIL" },
                e.name,
                e.max_rel_err,
                e.tolerance
            )?;
        }
        write!(f, "overall: {}", if self.all_ok { "PASS" } else { "FAIL" })
    }
}

/// Runs all checks at 100 random interior points each.
pub fn run_gradcheck(seed: u64) -> Result<GradCheckReport> {
    run_gradcheck_with(seed, GradFault::None)
}

/// Fault-injectable variant; [`GradFault::None`] is the production path.
#[doc(hidden)]
pub fn run_gradcheck_with(seed: u64, fault: GradFault) -> Result<GradCheckReport> {
    let (_, reference) = preset::aircraft_models();
    let p = reference.p.clone();
    // deliberately non-identity weighting so the M factors are exercised
    let m = Matrix::from_rows(&[&[1.5, -0.2], &[-0.2, 0.8]]);
    let spec = ConstraintSpec::new(6.0, 1.0, 0.6, m.clone(), 2.0, 0.9, &p)?;
    let gains = AdaptiveGains::new(
        Matrix::from_rows(&[&[5.0, 0.5], &[0.5, 4.0]]),
        Matrix::from_rows(&[&[2.0, -0.3], &[-0.3, 1.5]]),
        1.0,
        5.0,
        10.0,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let draw_interior = |rng: &mut ChaCha8Rng, w: &Matrix<f64>, bound: f64, dim: usize| loop {
        let v = Vector::from_vec((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let q = v.dot(&w.matvec(&v));
        if q < 0.8 * bound * bound {
            return v;
        }
    };

    let h = 1e-6;
    let mut err_v1: f64 = 0.0;
    let mut err_v2: f64 = 0.0;
    let mut err_v3: f64 = 0.0;
    for _ in 0..100 {
        let ed = draw_interior(&mut rng, &p, spec.ed_bar_primed, 4);
        let u = draw_interior(&mut rng, &m, spec.u1_bar_primed, 2);
        let ud = draw_interior(&mut rng, &m, spec.u2_bar_primed, 2);

        let den_ed = spec.ed_bar_primed.powi(2) - ed.dot(&p.matvec(&ed));
        let den_u = spec.u1_bar_primed.powi(2) - u.dot(&m.matvec(&u));
        let den_ud = spec.u2_bar_primed.powi(2) - ud.dot(&m.matvec(&ud));
        let s1 = if fault == GradFault::V1Sign { -1.0 } else { 1.0 };
        let s2 = if fault == GradFault::V2Sign { -1.0 } else { 1.0 };
        let s3 = if fault == GradFault::V3Sign { -1.0 } else { 1.0 };
        let grad_v1 = p.matvec(&ed).scale(s1 / den_ed);
        let grad_v2 = m.matvec(&u).scale(s2 / den_u);
        let grad_v3 = m.matvec(&ud).scale(s3 / den_ud);

        for idx in 0..4usize {
            let mut hi = ed.clone();
            hi[idx] += h;
            let mut lo = ed.clone();
            lo[idx] -= h;
            let f_hi = blf_values(&hi, &u, &ud, &p, &spec, 0.0)?.0;
            let f_lo = blf_values(&lo, &u, &ud, &p, &spec, 0.0)?.0;
            let fd = (f_hi - f_lo) / (2.0 * h);
            err_v1 = err_v1.max((fd - grad_v1[idx]).abs() / (1.0 + grad_v1[idx].abs()));
        }
        for idx in 0..2usize {
            let mut hi = u.clone();
            hi[idx] += h;
            let mut lo = u.clone();
            lo[idx] -= h;
            let f_hi = blf_values(&ed, &hi, &ud, &p, &spec, 0.0)?.1;
            let f_lo = blf_values(&ed, &lo, &ud, &p, &spec, 0.0)?.1;
            let fd = (f_hi - f_lo) / (2.0 * h);
            err_v2 = err_v2.max((fd - grad_v2[idx]).abs() / (1.0 + grad_v2[idx].abs()));

            let mut hi = ud.clone();
            hi[idx] += h;
            let mut lo = ud.clone();
            lo[idx] -= h;
            let f_hi = blf_values(&ed, &u, &hi, &p, &spec, 0.0)?.2;
            let f_lo = blf_values(&ed, &u, &lo, &p, &spec, 0.0)?.2;
            let fd = (f_hi - f_lo) / (2.0 * h);
            err_v3 = err_v3.max((fd - grad_v3[idx]).abs() / (1.0 + grad_v3[idx].abs()));
        }
    }

    // assembled d/dt V_theta against the closed form
    let gamma_u_lu = Lu::factor(&gains.gamma_u)?;
    let mut err_theta: f64 = 0.0;
    for _ in 0..100 {
        let u = draw_interior(&mut rng, &m, spec.u1_bar_primed, 2);
        let ud = draw_interior(&mut rng, &m, spec.u2_bar_primed, 2);
        let ku_data: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ku = Matrix::new(2, 2, ku_data).unwrap();
        let v = Vector::from_vec((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect());

        let state = ControllerState {
            u: u.clone(),
            u_dot: ud.clone(),
            khat_x: Matrix::zeros(2, 4),
            ku: ku.clone(),
        };
        let u_ddot = controller_accel(&state, &v, &spec, 0.0)?;
        let ku_dot = ku_derivative(&ud, &v, &gains, &spec, 0.0)?;

        let den_u = spec.u1_bar_primed.powi(2) - u.dot(&m.matvec(&u));
        let den_ud = spec.u2_bar_primed.powi(2) - ud.dot(&m.matvec(&ud));
        let s = if fault == GradFault::ThetaSign { -1.0 } else { 1.0 };
        let assembled = u.dot(&m.matvec(&ud)) / den_u
            + ud.dot(&m.matvec(&u_ddot)) / den_ud
            + s * ku.frob_inner(&gamma_u_lu.solve_matrix(&ku_dot));
        let closed_form = -ud.dot(&m.matvec(&ud)) / den_ud;
        err_theta =
            err_theta.max((assembled - closed_form).abs() / (1.0 + closed_form.abs()));
    }

    let entries = vec![
        GradCheckEntry {
            name: "grad V1 (e_d barrier)",
            max_rel_err: err_v1,
            tolerance: tol::GRADCHECK_REL,
            ok: err_v1 < tol::GRADCHECK_REL,
        },
        GradCheckEntry {
            name: "grad V2 (u barrier)",
            max_rel_err: err_v2,
            tolerance: tol::GRADCHECK_REL,
            ok: err_v2 < tol::GRADCHECK_REL,
        },
        GradCheckEntry {
            name: "grad V3 (udot barrier)",
            max_rel_err: err_v3,
            tolerance: tol::GRADCHECK_REL,
            ok: err_v3 < tol::GRADCHECK_REL,
        },
        GradCheckEntry {
            name: "V_theta derivative",
            max_rel_err: err_theta,
            tolerance: tol::VTHETA_IDENTITY_REL,
            ok: err_theta < tol::VTHETA_IDENTITY_REL,
        },
    ];
    let all_ok = entries.iter().all(|e| e.ok);
    Ok(GradCheckReport {
        seed,
        entries,
        all_ok,
    })
}
