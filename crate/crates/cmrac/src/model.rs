//! Plant and reference models, matching conditions, and model-level checks.
//!
//! The plant matrix `A` is known to the simulator (it integrates the truth)
//! but is deliberately absent from everything the controller sees; the
//! controller-facing view is assembled in [`crate::sim`] from `B`, the
//! reference model, and bounds only.

use crate::error::{Error, Result};
use crate::linalg::{
    left_pseudo_inverse, max_real_eigenpart, solve_lyapunov, spectral_norm, Matrix, Vector,
};
use crate::scalar::Real;
use crate::signal::ReferenceSignal;
use crate::tol;

/// Uncertain plant xdot = A x + B u + d.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    /// Known bound on the unmatched disturbance norm.
    pub d_bar: T,
}

impl<T: Real> PlantModel<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, d_bar: T) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "plant A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.rows() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "PlantModel",
                expected: format!("B with {} rows", a.rows()),
                got: format!("{}x{}", b.rows(), b.cols()),
            });
        }
        if !a.is_finite() || !b.is_finite() || !d_bar.is_finite() || d_bar < T::zero() {
            return Err(Error::InvalidInput(
                "plant entries and d_bar must be finite, d_bar >= 0".into(),
            ));
        }
        // full column rank is required; non-Hurwitz A is allowed with a
        // warning downstream (only feasibility reporting depends on it)
        left_pseudo_inverse(&b)?;
        Ok(Self { a, b, d_bar })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn is_hurwitz(&self) -> Result<bool> {
        Ok(max_real_eigenpart(&self.a)? < T::zero())
    }
}

/// Stable reference model xr_dot = Ar xr + Br r, with the Lyapunov pair
/// (Q, P) cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel<T> {
    pub ar: Matrix<T>,
    pub br: Matrix<T>,
    pub q: Matrix<T>,
    /// Solution of Ar^T P + P Ar + Q = 0.
    pub p: Matrix<T>,
}

impl<T: Real> ReferenceModel<T> {
    pub fn new(ar: Matrix<T>, br: Matrix<T>, q: Matrix<T>) -> Result<Self> {
        if br.rows() != ar.rows() {
            return Err(Error::DimensionMismatch {
                context: "ReferenceModel",
                expected: format!("Br with {} rows", ar.rows()),
                got: format!("{}x{}", br.rows(), br.cols()),
            });
        }
        let p = solve_lyapunov(&ar, &q)?;
        Ok(Self { ar, br, q, p })
    }

    pub fn state_dim(&self) -> usize {
        self.ar.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.br.cols()
    }
}

/// Gains solving the matching conditions A + B Kx = Ar and B Kr = Br,
/// with the attained residuals.
#[derive(Debug, Clone)]
pub struct MatchedGains<T> {
    pub kx: Matrix<T>,
    pub kr: Matrix<T>,
    /// ||A + B Kx - Ar||
    pub residual_a: T,
    /// ||B Kr - Br||
    pub residual_b: T,
    /// Both residuals within tolerance.
    pub matched: bool,
}

/// Least-squares matching gains Kx = B^+(Ar - A), Kr = B^+ Br.
pub fn matched_gains<T: Real>(
    plant: &PlantModel<T>,
    reference: &ReferenceModel<T>,
) -> Result<MatchedGains<T>> {
    if plant.state_dim() != reference.state_dim() || plant.input_dim() != reference.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "matched_gains",
            expected: format!("{}x{}", plant.state_dim(), plant.input_dim()),
            got: format!("{}x{}", reference.state_dim(), reference.input_dim()),
        });
    }
    let pinv = left_pseudo_inverse(&plant.b)?;
    let kx = pinv.matmul(&reference.ar.sub(&plant.a));
    let kr = pinv.matmul(&reference.br);
    let residual_a = spectral_norm(&plant.a.add(&plant.b.matmul(&kx)).sub(&reference.ar))?;
    let residual_b = spectral_norm(&plant.b.matmul(&kr).sub(&reference.br))?;
    let matched =
        residual_a <= T::of(tol::MATCH_RESIDUAL) && residual_b <= T::of(tol::MATCH_RESIDUAL);
    Ok(MatchedGains {
        kx,
        kr,
        residual_a,
        residual_b,
        matched,
    })
}

/// Plant right-hand side A x + B u + d.
pub fn plant_derivative<T: Real>(
    plant: &PlantModel<T>,
    x: &Vector<T>,
    u: &Vector<T>,
    d: &Vector<T>,
) -> Result<Vector<T>> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    if x.dim() != n || u.dim() != m || d.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "plant_derivative",
            expected: format!("x:{n}, u:{m}, d:{n}"),
            got: format!("x:{}, u:{}, d:{}", x.dim(), u.dim(), d.dim()),
        });
    }
    let mut out = plant.a.matvec(x);
    out.add_scaled(&plant.b.matvec(u), T::one());
    out.add_scaled(d, T::one());
    Ok(out)
}

/// Reference right-hand side Ar xr + Br r.
pub fn reference_derivative<T: Real>(
    reference: &ReferenceModel<T>,
    xr: &Vector<T>,
    r: &Vector<T>,
) -> Result<Vector<T>> {
    let n = reference.state_dim();
    let m = reference.input_dim();
    if xr.dim() != n || r.dim() != m {
        return Err(Error::DimensionMismatch {
            context: "reference_derivative",
            expected: format!("xr:{n}, r:{m}"),
            got: format!("xr:{}, r:{}", xr.dim(), r.dim()),
        });
    }
    let mut out = reference.ar.matvec(xr);
    out.add_scaled(&reference.br.matvec(r), T::one());
    Ok(out)
}

/// Outcome of the empirical reference-trajectory bound check.
#[derive(Debug, Clone)]
pub struct ReferenceBoundReport<T> {
    pub sup_norm: T,
    pub x_bar_r: T,
    pub pass: bool,
}

/// Integrates the reference model from xr(0) = 0 with a fine fixed step
/// and reports sup ||xr(t)|| against the declared bound.
pub fn verify_reference_bound<T: Real>(
    reference: &ReferenceModel<T>,
    signal: &ReferenceSignal<T>,
    horizon: T,
    x_bar_r: T,
) -> Result<ReferenceBoundReport<T>> {
    if horizon <= T::zero() {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let dt = T::of(tol::DT_DEFAULT);
    let steps = (horizon / dt).ceil().as_f64() as usize;
    let mut xr = Vector::zeros(reference.state_dim());
    let mut t = T::zero();
    let mut sup = T::zero();
    let half = T::of(0.5);
    let sixth = T::of(1.0 / 6.0);
    let two = T::of(2.0);
    for _ in 0..steps {
        let f = |tt: T, state: &Vector<T>| -> Result<Vector<T>> {
            reference_derivative(reference, state, &signal.eval(tt, reference.input_dim()))
        };
        let k1 = f(t, &xr)?;
        let mut s2 = xr.clone();
        s2.add_scaled(&k1, dt * half);
        let k2 = f(t + dt * half, &s2)?;
        let mut s3 = xr.clone();
        s3.add_scaled(&k2, dt * half);
        let k3 = f(t + dt * half, &s3)?;
        let mut s4 = xr.clone();
        s4.add_scaled(&k3, dt);
        let k4 = f(t + dt, &s4)?;
        let mut incr = k1;
        incr.add_scaled(&k2, two);
        incr.add_scaled(&k3, two);
        incr.add_scaled(&k4, T::one());
        xr.add_scaled(&incr, dt * sixth);
        t += dt;
        let norm = xr.norm();
        if norm > sup {
            sup = norm;
        }
    }
    Ok(ReferenceBoundReport {
        sup_norm: sup,
        x_bar_r,
        pass: sup < x_bar_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;

    fn simple_plant() -> PlantModel<f64> {
        PlantModel::new(
            Matrix::identity(2),
            Matrix::identity(2),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn matched_gains_trivial_identity() {
        // A = Ar, B = Br = I: Kx = 0, Kr = I
        let plant = PlantModel::new(Matrix::scaled_identity(2, -1.0), Matrix::identity(2), 0.0)
            .unwrap();
        let reference = ReferenceModel::new(
            Matrix::scaled_identity(2, -1.0),
            Matrix::identity(2),
            Matrix::identity(2),
        )
        .unwrap();
        let g = matched_gains(&plant, &reference).unwrap();
        assert!(g.kx.max_abs() < 1e-14);
        assert!(g.kr.sub(&Matrix::identity(2)).max_abs() < 1e-14);
        assert!(g.matched);
    }

    #[test]
    fn matched_gains_aircraft() {
        let (plant, reference) = preset::aircraft_models();
        let g = matched_gains(&plant, &reference).unwrap();
        assert!(g.matched, "residuals {} {}", g.residual_a, g.residual_b);
        assert!(g.residual_a <= 1e-8 && g.residual_b <= 1e-8);
        let kx_norm = spectral_norm(&g.kx).unwrap();
        assert!(kx_norm < 11.5, "||Kx|| = {kx_norm}");
        // regression pins for the closed-form gains
        assert!((g.kx[(0, 0)] - 4.1).abs() < 1e-12);
        assert!((g.kx[(1, 2)] - 5.0).abs() < 1e-12);
        assert!((g.kr[(0, 0)] - 5.0).abs() < 1e-12);
        assert!((g.kr[(1, 1)] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn matched_gains_flags_unreachable_reference() {
        // perturb Ar outside range(B): for the aircraft B only rows 2 and 4
        // are reachable, so a row-1 perturbation cannot be matched
        let (plant, reference) = preset::aircraft_models();
        let mut ar = reference.ar.clone();
        ar[(0, 0)] += 0.01;
        let reference = ReferenceModel::new(ar, reference.br.clone(), Matrix::identity(4)).unwrap();
        let g = matched_gains(&plant, &reference).unwrap();
        assert!(!g.matched);
        assert!(g.residual_a > 1e-3);
    }

    #[test]
    fn plant_derivative_zero_state() {
        let p = simple_plant();
        let z = Vector::zeros(2);
        let out = plant_derivative(&p, &z, &z, &z).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn plant_derivative_direct_sum() {
        let p = simple_plant();
        let out = plant_derivative(
            &p,
            &Vector::from_slice(&[1.0, 0.0]),
            &Vector::from_slice(&[0.0, 1.0]),
            &Vector::from_slice(&[0.1, 0.1]),
        )
        .unwrap();
        assert_eq!(out.as_slice(), &[1.1, 1.1]);
    }

    #[test]
    fn plant_derivative_dimension_error() {
        let p = simple_plant();
        let r = plant_derivative(
            &p,
            &Vector::zeros(3),
            &Vector::zeros(2),
            &Vector::zeros(2),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn plant_derivative_is_linear_in_state() {
        use rand::{Rng, SeedableRng};
        let (plant, _) = preset::aircraft_models();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x1 = Vector::from_vec((0..4).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let x2 = Vector::from_vec((0..4).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let u = Vector::from_vec((0..2).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let d = Vector::from_vec((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let zu = Vector::zeros(2);
            let zd = Vector::zeros(4);
            let lhs = plant_derivative(&plant, &x1.add(&x2), &u, &d).unwrap();
            let rhs = plant_derivative(&plant, &x1, &u, &d)
                .unwrap()
                .add(&plant_derivative(&plant, &x2, &zu, &zd).unwrap());
            assert!(lhs.sub(&rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn reference_derivative_cases() {
        let reference = ReferenceModel::new(
            Matrix::scaled_identity(2, -1.0),
            Matrix::identity(2),
            Matrix::identity(2),
        )
        .unwrap();
        let out = reference_derivative(&reference, &Vector::zeros(2), &Vector::zeros(2)).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
        let out = reference_derivative(
            &reference,
            &Vector::from_slice(&[1.0, 1.0]),
            &Vector::from_slice(&[1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(out.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn reference_bound_zero_signal() {
        let (_, reference) = preset::aircraft_models();
        let report =
            verify_reference_bound(&reference, &ReferenceSignal::Zero, 1.0, 0.5).unwrap();
        assert_eq!(report.sup_norm, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn aircraft_reference_stays_under_its_bound_over_full_horizon() {
        let (_, reference) = preset::aircraft_models();
        let report = verify_reference_bound(
            &reference,
            &preset::aircraft_reference_signal(),
            60.0,
            2.0,
        )
        .unwrap();
        assert!(report.pass, "sup = {}", report.sup_norm);
        assert!(report.sup_norm < 2.0);
    }

    #[test]
    fn reference_bound_scaling_fails_large_amplitudes() {
        // the reference dynamics are linear, so a 100x amplitude scales the
        // sup by exactly 100 and must blow past the same bound
        let (_, reference) = preset::aircraft_models();
        let base = preset::aircraft_reference_signal();
        let small = verify_reference_bound(&reference, &base, 20.0, 2.0).unwrap();
        assert!(small.pass);
        let scaled = match &base {
            ReferenceSignal::Sinusoid(ch) => ReferenceSignal::Sinusoid(
                ch.iter()
                    .map(|c| crate::signal::SinusoidChannel {
                        amplitude: c.amplitude * 100.0,
                        omega: c.omega,
                        phase: c.phase,
                    })
                    .collect(),
            ),
            _ => unreachable!(),
        };
        let big = verify_reference_bound(&reference, &scaled, 20.0, 2.0).unwrap();
        assert!(!big.pass);
        let ratio = big.sup_norm / small.sup_norm;
        assert!((ratio - 100.0).abs() < 1e-6);
    }
}
