//! All fixed numeric tolerances and guards, in one place.
//!
//! Values are `f64` contracts; generic code converts with [`Real::of`]
//! (`crate::scalar::Real`). Iterative solvers additionally use
//! `T::epsilon()`-scaled convergence thresholds internally so the `f32`
//! instantiation still converges.

/// Relative accuracy contract for the spectral norm.
pub const SPECTRAL_NORM_REL: f64 = 1e-10;

/// Symmetry test threshold: max |S_ij - S_ji| <= SYMMETRY * (1 + max |S_ij|).
pub const SYMMETRY: f64 = 1e-12;

/// Relative accuracy contract for symmetric extreme eigenvalues.
pub const SYM_EIG_REL: f64 = 1e-9;

/// Accuracy contract for the max real eigenvalue part of general matrices.
pub const GENERAL_EIG_ABS: f64 = 1e-8;

/// Lyapunov solve: ||Ar^T P + P Ar + Q|| <= LYAP_RESIDUAL_REL * ||Q||.
pub const LYAP_RESIDUAL_REL: f64 = 1e-10;

/// Left pseudo-inverse: max |(B^+ B - I)_ij| <= PINV_IDENTITY.
pub const PINV_IDENTITY: f64 = 1e-10;

/// Full-column-rank test: lambda_min(B^T B) must exceed this.
pub const RANK_MIN_EIG: f64 = 1e-12;

/// Matching-condition residual threshold (Assumption-1 verification).
pub const MATCH_RESIDUAL: f64 = 1e-8;

/// Barrier guard fraction: a denominator bound^2 - q below
/// BARRIER_GUARD_FRAC * bound^2 aborts the step instead of dividing.
/// The theory keeps trajectories strictly interior, so hitting the guard
/// indicates integration failure and must not be clamped over.
pub const BARRIER_GUARD_FRAC: f64 = 1e-9;

/// Smooth-projection boundary layer: the outward component of the raw
/// adaptive law is attenuated over (1-eps_p)..1 of the squared radius.
pub const PROJECTION_LAYER: f64 = 0.1;

/// Default integrator step (seconds).
pub const DT_DEFAULT: f64 = 1e-3;

/// Smallest step the barrier-retry logic may reach before giving up.
pub const DT_MIN: f64 = 1e-6;

/// Default trajectory decimation (store every k-th step).
pub const DECIMATION_DEFAULT: usize = 10;

/// Allowed per-sample increase of V_theta: 1e-8 * (1 + V_theta).
pub const VTHETA_STEP_REL: f64 = 1e-8;

/// Additive slack on the V_phi bound V_phi(0) + c/alpha.
pub const VPHI_SLACK: f64 = 1e-6;

/// Max relative error for BLF gradient checks (finite differences).
pub const GRADCHECK_REL: f64 = 1e-6;

/// Max relative error for the assembled V_theta-derivative identity.
pub const VTHETA_IDENTITY_REL: f64 = 1e-9;

/// Slack on the projection bound: ||Khat_x||_F <= kx_bar + KHAT_SLACK.
pub const KHAT_SLACK: f64 = 1e-9;

/// Significant digits used when printing floats to CSV and scenario files
/// (17 digits round-trips f64 exactly).
pub const PRINT_SIG_DIGITS: usize = 17;
