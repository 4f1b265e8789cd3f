//! The two-layer barrier-protected adaptive controller.
//!
//! Layer one treats the input and its rate as states of the second-order
//! filter udd + ud + alpha u = K_u v and keeps both inside weighted balls
//! through the coupling alpha and the K_u update. Layer two keeps the
//! difference error e_d inside a P-weighted ellipsoid through the
//! barrier-scaled, projected update of Khat_x. A plain sigma-modification
//! MRAC is included as the unprotected baseline for comparisons.
//!
//! All barrier denominators are guarded: a denominator within
//! `tol::BARRIER_GUARD_FRAC * bound^2` of zero is an integration failure
//! and surfaces as [`Error::BarrierBreach`] rather than being clamped.

use crate::error::{Barrier, Error, Result};
use crate::linalg::{symmetric_eig_extremes, Lu, Matrix, Vector};
use crate::scalar::Real;
use crate::tol;

/// User constraint bounds and their derived weighted ("primed") forms.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec<T> {
    /// Plant state bound X_bar.
    pub x_bar: T,
    /// Input magnitude bound U1_bar.
    pub u1_bar: T,
    /// Input rate bound U2_bar.
    pub u2_bar: T,
    /// Input weighting matrix M (symmetric positive definite).
    pub m: Matrix<T>,
    /// Reference trajectory bound X_bar_r.
    pub x_bar_r: T,
    /// Difference-error bound E_d_bar.
    pub ed_bar: T,
    /// U1_bar * sqrt(lambda_min(M)).
    pub u1_bar_primed: T,
    /// U2_bar * sqrt(lambda_min(M)).
    pub u2_bar_primed: T,
    /// E_d_bar * sqrt(lambda_min(P)).
    pub ed_bar_primed: T,
}

impl<T: Real> ConstraintSpec<T> {
    /// Derives the primed bounds from M and the reference-model P.
    pub fn new(
        x_bar: T,
        u1_bar: T,
        u2_bar: T,
        m: Matrix<T>,
        x_bar_r: T,
        ed_bar: T,
        p: &Matrix<T>,
    ) -> Result<Self> {
        if x_bar <= T::zero() || u1_bar <= T::zero() || u2_bar <= T::zero() || ed_bar <= T::zero()
        {
            return Err(Error::InvalidInput(
                "constraint bounds must be positive".into(),
            ));
        }
        if x_bar <= x_bar_r {
            return Err(Error::InvalidInput(format!(
                "x_bar = {x_bar} must exceed x_bar_r = {x_bar_r}"
            )));
        }
        let m_eig = symmetric_eig_extremes(&m)?;
        if m_eig.lambda_min <= T::zero() {
            return Err(Error::InvalidInput(
                "M must be symmetric positive definite".into(),
            ));
        }
        let p_eig = symmetric_eig_extremes(p)?;
        if p_eig.lambda_min <= T::zero() {
            return Err(Error::InvalidInput("P must be positive definite".into()));
        }
        let sqrt_lmin_m = m_eig.lambda_min.sqrt();
        Ok(Self {
            x_bar,
            u1_bar,
            u2_bar,
            m,
            x_bar_r,
            ed_bar,
            u1_bar_primed: u1_bar * sqrt_lmin_m,
            u2_bar_primed: u2_bar * sqrt_lmin_m,
            ed_bar_primed: ed_bar * p_eig.lambda_min.sqrt(),
        })
    }

    /// Tracking-error bound E_bar = X_bar - X_bar_r.
    pub fn e_bar(&self) -> T {
        self.x_bar - self.x_bar_r
    }
}

/// Adaptation gains and parameter bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveGains<T> {
    pub gamma_x: Matrix<T>,
    pub gamma_u: Matrix<T>,
    pub sigma_x: T,
    /// Projection radius K_bar_x (Frobenius).
    pub kx_bar: T,
    /// Reference-gain bound K_bar_r (feasibility only).
    pub kr_bar: T,
}

impl<T: Real> AdaptiveGains<T> {
    pub fn new(
        gamma_x: Matrix<T>,
        gamma_u: Matrix<T>,
        sigma_x: T,
        kx_bar: T,
        kr_bar: T,
    ) -> Result<Self> {
        for (name, g) in [("Gamma_x", &gamma_x), ("Gamma_u", &gamma_u)] {
            let eig = symmetric_eig_extremes(g)?;
            if eig.lambda_min <= T::zero() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be symmetric positive definite"
                )));
            }
        }
        if sigma_x <= T::zero() || kx_bar <= T::zero() || kr_bar <= T::zero() {
            return Err(Error::InvalidInput(
                "sigma_x, kx_bar, kr_bar must be positive".into(),
            ));
        }
        Ok(Self {
            gamma_x,
            gamma_u,
            sigma_x,
            kx_bar,
            kr_bar,
        })
    }
}

/// Controller-side state: the input filter and the adaptive gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState<T> {
    pub u: Vector<T>,
    pub u_dot: Vector<T>,
    pub khat_x: Matrix<T>,
    pub ku: Matrix<T>,
}

/// Weighted squared norm v^T W v.
fn weighted_sq<T: Real>(w: &Matrix<T>, v: &Vector<T>) -> T {
    v.dot(&w.matvec(v))
}

/// Barrier denominator bound^2 - q with the guard check.
fn guarded_denominator<T: Real>(bound: T, q: T, barrier: Barrier, t: T) -> Result<T> {
    let bound_sq = bound * bound;
    let den = bound_sq - q;
    if den <= T::of(tol::BARRIER_GUARD_FRAC) * bound_sq {
        return Err(Error::BarrierBreach {
            barrier,
            t: t.as_f64(),
            denominator: den.as_f64(),
        });
    }
    Ok(den)
}

/// Auxiliary input v = Khat_x x + K_r r.
pub fn auxiliary_input<T: Real>(
    khat_x: &Matrix<T>,
    kr: &Matrix<T>,
    x: &Vector<T>,
    r: &Vector<T>,
) -> Result<Vector<T>> {
    if khat_x.cols() != x.dim() || kr.cols() != r.dim() || khat_x.rows() != kr.rows() {
        return Err(Error::DimensionMismatch {
            context: "auxiliary_input",
            expected: format!("Khat_x m x {}, Kr m x {}", x.dim(), r.dim()),
            got: format!(
                "Khat_x {}x{}, Kr {}x{}",
                khat_x.rows(),
                khat_x.cols(),
                kr.rows(),
                kr.cols()
            ),
        });
    }
    Ok(khat_x.matvec(x).add(&kr.matvec(r)))
}

/// Coupling alpha = (U2'^2 - ud^T M ud) / (U1'^2 - u^T M u) of the input
/// filter; positive on the whole open admissible region.
pub fn alpha_coupling<T: Real>(
    u: &Vector<T>,
    u_dot: &Vector<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<T> {
    let den = guarded_denominator(
        spec.u1_bar_primed,
        weighted_sq(&spec.m, u),
        Barrier::InputMagnitude,
        t,
    )?;
    let num = guarded_denominator(
        spec.u2_bar_primed,
        weighted_sq(&spec.m, u_dot),
        Barrier::InputRate,
        t,
    )?;
    Ok(num / den)
}

/// Input filter acceleration udd = K_u v - ud - alpha u.
pub fn controller_accel<T: Real>(
    state: &ControllerState<T>,
    v: &Vector<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<Vector<T>> {
    let alpha = alpha_coupling(&state.u, &state.u_dot, spec, t)?;
    let mut out = state.ku.matvec(v);
    out.add_scaled(&state.u_dot, -T::one());
    out.add_scaled(&state.u, -alpha);
    Ok(out)
}

/// Smooth projection onto the Frobenius ball ||K||_F <= radius.
///
/// Convex indicator f(K) = (||K||_F^2 - (1 - eps) radius^2) / (eps radius^2)
/// with boundary layer eps = `tol::PROJECTION_LAYER`: strictly inside
/// (f <= 0) the raw derivative passes through; in the layer an outward raw
/// derivative keeps (1 - f) of its radial component, so the radial growth
/// vanishes at the boundary and reverses beyond it, pulling discrete
/// integration overshoot back onto the ball.
pub fn project_to_ball<T: Real>(k: &Matrix<T>, raw: &Matrix<T>, radius: T) -> Matrix<T> {
    let eps = T::of(tol::PROJECTION_LAYER);
    let r_sq = radius * radius;
    let f = (k.frob_inner(k) - (T::one() - eps) * r_sq) / (eps * r_sq);
    if f <= T::zero() {
        return raw.clone();
    }
    // grad f = 2 K / (eps radius^2); direction is K itself
    let outward = raw.frob_inner(k);
    if outward <= T::zero() {
        return raw.clone();
    }
    let k_sq = k.frob_inner(k);
    if k_sq == T::zero() {
        return raw.clone();
    }
    let mut out = raw.clone();
    out.add_scaled(k, -(f * outward / k_sq));
    out
}

/// Barrier-scaled, sigma-modified, projected update of Khat_x:
/// proj( -Gamma_x B^T P e_d x^T / (Ed'^2 - e_d^T P e_d) - sigma_x Gamma_x Khat_x ).
#[allow(clippy::too_many_arguments)]
pub fn khat_x_derivative<T: Real>(
    khat_x: &Matrix<T>,
    ed: &Vector<T>,
    x: &Vector<T>,
    b: &Matrix<T>,
    p: &Matrix<T>,
    gains: &AdaptiveGains<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<Matrix<T>> {
    let den = guarded_denominator(
        spec.ed_bar_primed,
        weighted_sq(p, ed),
        Barrier::DifferenceError,
        t,
    )?;
    let bt_p_ed = b.tr_matvec(&p.matvec(ed));
    let mut raw = gains
        .gamma_x
        .matmul(&Matrix::outer(&bt_p_ed, x))
        .scale(-(T::one() / den));
    raw.add_scaled(&gains.gamma_x.matmul(khat_x), -gains.sigma_x);
    Ok(project_to_ball(khat_x, &raw, gains.kx_bar))
}

/// Barrier-scaled update of the filter gain:
/// K_u_dot = -Gamma_u M ud v^T / (U2'^2 - ud^T M ud).
pub fn ku_derivative<T: Real>(
    u_dot: &Vector<T>,
    v: &Vector<T>,
    gains: &AdaptiveGains<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<Matrix<T>> {
    let den = guarded_denominator(
        spec.u2_bar_primed,
        weighted_sq(&spec.m, u_dot),
        Barrier::InputRate,
        t,
    )?;
    let m_ud = spec.m.matvec(u_dot);
    Ok(gains
        .gamma_u
        .matmul(&Matrix::outer(&m_ud, v))
        .scale(-(T::one() / den)))
}

/// The three log-barrier values (V1, V2, V3) for e_d, u, udot.
pub fn blf_values<T: Real>(
    ed: &Vector<T>,
    u: &Vector<T>,
    u_dot: &Vector<T>,
    p: &Matrix<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<(T, T, T)> {
    let half = T::of(0.5);
    let ed_bound_sq = spec.ed_bar_primed * spec.ed_bar_primed;
    let u1_bound_sq = spec.u1_bar_primed * spec.u1_bar_primed;
    let u2_bound_sq = spec.u2_bar_primed * spec.u2_bar_primed;
    let den1 = guarded_denominator(
        spec.ed_bar_primed,
        weighted_sq(p, ed),
        Barrier::DifferenceError,
        t,
    )?;
    let den2 = guarded_denominator(
        spec.u1_bar_primed,
        weighted_sq(&spec.m, u),
        Barrier::InputMagnitude,
        t,
    )?;
    let den3 = guarded_denominator(
        spec.u2_bar_primed,
        weighted_sq(&spec.m, u_dot),
        Barrier::InputRate,
        t,
    )?;
    Ok((
        half * (ed_bound_sq / den1).ln(),
        half * (u1_bound_sq / den2).ln(),
        half * (u2_bound_sq / den3).ln(),
    ))
}

/// First-layer composite V_theta = V2 + V3 + tr(K_u^T Gamma_u^{-1} K_u)/2.
pub fn composite_lyapunov_theta<T: Real>(
    state: &ControllerState<T>,
    p: &Matrix<T>,
    gains: &AdaptiveGains<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<T> {
    let zero_ed = Vector::zeros(p.rows());
    let (_, v2, v3) = blf_values(&zero_ed, &state.u, &state.u_dot, p, spec, t)?;
    let gamma_u_inv_ku = Lu::factor(&gains.gamma_u)?.solve_matrix(&state.ku);
    Ok(v2 + v3 + T::of(0.5) * state.ku.frob_inner(&gamma_u_inv_ku))
}

/// Second-layer composite V_phi = V1 + tr(Ktilde^T Gamma_x^{-1} Ktilde)/2.
///
/// Needs the true parameter error Ktilde_x = Khat_x - K_x, so this is a
/// simulator-side monitor; the controller never sees K_x.
pub fn composite_lyapunov_phi<T: Real>(
    ed: &Vector<T>,
    ktilde_x: &Matrix<T>,
    p: &Matrix<T>,
    gains: &AdaptiveGains<T>,
    spec: &ConstraintSpec<T>,
    t: T,
) -> Result<T> {
    let m = ktilde_x.rows();
    let zero = Vector::zeros(m);
    let (v1, _, _) = blf_values(ed, &zero, &zero, p, spec, t)?;
    let gamma_x_inv_kt = Lu::factor(&gains.gamma_x)?.solve_matrix(ktilde_x);
    Ok(v1 + T::of(0.5) * ktilde_x.frob_inner(&gamma_x_inv_kt))
}

/// One evaluation of the unprotected sigma-modification MRAC baseline:
/// u = Khat_x x + K_r r, Khat_x_dot = -Gamma_x B^T P e x^T - sigma_x Gamma_x Khat_x.
/// No barrier scaling, no projection, no input filter.
#[allow(clippy::too_many_arguments)]
pub fn robust_mrac_step<T: Real>(
    khat_x: &Matrix<T>,
    x: &Vector<T>,
    r: &Vector<T>,
    e: &Vector<T>,
    b: &Matrix<T>,
    p: &Matrix<T>,
    kr: &Matrix<T>,
    gains: &AdaptiveGains<T>,
) -> Result<(Vector<T>, Matrix<T>)> {
    let u = auxiliary_input(khat_x, kr, x, r)?;
    let bt_p_e = b.tr_matvec(&p.matvec(e));
    let mut khat_dot = gains
        .gamma_x
        .matmul(&Matrix::outer(&bt_p_e, x))
        .scale(-T::one());
    khat_dot.add_scaled(&gains.gamma_x.matmul(khat_x), -gains.sigma_x);
    Ok((u, khat_dot))
}
