//! Continuous Lyapunov equation Ar^T P + P Ar + Q = 0.
//!
//! Solved by Kronecker vectorization: the n^2 x n^2 linear system
//! (I (x) Ar^T + Ar^T (x) I) vec(P) = -vec(Q) with a dense LU. At the
//! crate's dimension cap (n <= 16) the system is at most 256 unknowns.

use super::{max_real_eigenpart, spectral_norm, symmetric_eig_extremes, Lu, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tol;

pub fn solve_lyapunov<T: Real>(ar: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>> {
    if !ar.is_square() || !q.is_square() || ar.rows() != q.rows() {
        return Err(Error::DimensionMismatch {
            context: "solve_lyapunov",
            expected: format!("square Ar and Q of equal size, Ar is {}x{}", ar.rows(), ar.cols()),
            got: format!("Q is {}x{}", q.rows(), q.cols()),
        });
    }
    if !ar.is_finite() || !q.is_finite() {
        return Err(Error::InvalidInput("solve_lyapunov: non-finite entries".into()));
    }
    let max_re = max_real_eigenpart(ar)?;
    if max_re >= T::zero() {
        return Err(Error::InfeasibleModel(format!(
            "solve_lyapunov: Ar is not Hurwitz (max Re lambda = {max_re:e})"
        )));
    }
    let q_eig = symmetric_eig_extremes(q)?;
    if q_eig.lambda_min <= T::zero() {
        return Err(Error::InvalidInput(format!(
            "solve_lyapunov: Q is not positive definite (lambda_min = {:e})",
            q_eig.lambda_min
        )));
    }

    let n = ar.rows();
    // column-major vec: entry (i, j) of P lives at index j*n + i
    let mut big = Matrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                big[(row, j * n + k)] += ar[(k, i)]; // (I (x) Ar^T) term
            }
            for l in 0..n {
                big[(row, l * n + i)] += ar[(l, j)]; // (Ar^T (x) I) term
            }
        }
    }
    let mut rhs = vec![T::zero(); n * n];
    for j in 0..n {
        for i in 0..n {
            rhs[j * n + i] = -q[(i, j)];
        }
    }
    let lu = Lu::factor(&big)?;
    let z = lu.solve(&rhs);
    let mut p = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            p[(i, j)] = z[j * n + i];
        }
    }
    // the exact solution is symmetric; project out round-off asymmetry
    let p = p.symmetrized();

    let residual = ar.transpose().matmul(&p).add(&p.matmul(ar)).add(q);
    let rel = spectral_norm(&residual)? / spectral_norm(q)?;
    if rel > T::of(tol::LYAP_RESIDUAL_REL) && rel.as_f64() > f64::from(f32::EPSILON) * 10.0 {
        // the f64 contract is 1e-10; the f32 instantiation can only reach
        // a few ulps of its own epsilon
        return Err(Error::NumericalFailure(format!(
            "solve_lyapunov: relative residual {rel:e} exceeds tolerance"
        )));
    }
    let p_eig = symmetric_eig_extremes(&p)?;
    if p_eig.lambda_min <= T::zero() {
        return Err(Error::NumericalFailure(format!(
            "solve_lyapunov: computed P not positive definite (lambda_min = {:e})",
            p_eig.lambda_min
        )));
    }
    Ok(p)
}
