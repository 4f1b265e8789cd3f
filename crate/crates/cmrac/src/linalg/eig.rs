//! Eigenvalue extraction for small dense matrices.
//!
//! Symmetric path: cyclic Jacobi rotations. General path: Householder
//! Hessenberg reduction followed by Francis double-shift QR, eigenvalues
//! only. Robustness over speed; dimensions are capped at 16.

use super::{EigExtremes, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 64;
const MAX_QR_ITERS_PER_EIG: usize = 30;

/// Largest admissible dimension for the general eigenvalue path.
pub const MAX_DIM: usize = 16;

#[inline]
fn sign_of<T: Real>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues<T: Real>(s: &Matrix<T>) -> Result<Vec<T>> {
    s.check_symmetric("symmetric_eigenvalues")?;
    if !s.is_finite() {
        return Err(Error::InvalidInput(
            "symmetric_eigenvalues: non-finite entries".into(),
        ));
    }
    let n = s.rows();
    if n == 0 {
        return Err(Error::InvalidInput(
            "symmetric_eigenvalues: empty matrix".into(),
        ));
    }
    let mut a = s.clone();
    let scale = a.frobenius_norm();
    if scale == T::zero() {
        return Ok(vec![T::zero(); n]);
    }
    let target = T::epsilon() * scale * T::of(n as f64);

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= target {
            let mut eigs: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::epsilon() * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::of(2.0) * apq);
                // smaller-angle root of t^2 + 2 t theta - 1 = 0
                let t = sign_of(T::one(), theta) / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s_rot = t * c;
                // two-sided rotation on rows/cols p and q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s_rot * akq;
                    a[(k, q)] = s_rot * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s_rot * aqk;
                    a[(q, k)] = s_rot * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NumericalFailure(
        "Jacobi iteration did not converge".into(),
    ))
}

/// Smallest and largest eigenvalues of a symmetric matrix.
pub fn symmetric_eig_extremes<T: Real>(s: &Matrix<T>) -> Result<EigExtremes<T>> {
    let eigs = symmetric_eigenvalues(s)?;
    Ok(EigExtremes {
        lambda_min: eigs[0],
        lambda_max: eigs[eigs.len() - 1],
    })
}

/// Householder similarity reduction to upper Hessenberg form.
pub fn hessenberg<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    assert!(a.is_square());
    let n = a.rows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    let mut v = vec![T::zero(); n];
    for k in 0..(n - 2) {
        let mut norm2 = T::zero();
        for i in (k + 1)..n {
            norm2 += h[(i, k)] * h[(i, k)];
        }
        let alpha = norm2.sqrt();
        if alpha == T::zero() {
            continue;
        }
        let alpha = -sign_of(alpha, h[(k + 1, k)]);
        for x in v.iter_mut() {
            *x = T::zero();
        }
        v[k + 1] = h[(k + 1, k)] - alpha;
        for i in (k + 2)..n {
            v[i] = h[(i, k)];
        }
        let vtv: T = v.iter().map(|&x| x * x).sum();
        if vtv <= T::zero() {
            continue;
        }
        let beta = T::of(2.0) / vtv;
        // H <- (I - beta v v^T) H
        for j in 0..n {
            let mut dot = T::zero();
            for i in (k + 1)..n {
                dot += v[i] * h[(i, j)];
            }
            let w = beta * dot;
            for i in (k + 1)..n {
                let delta = w * v[i];
                h[(i, j)] -= delta;
            }
        }
        // H <- H (I - beta v v^T)
        for i in 0..n {
            let mut dot = T::zero();
            for j in (k + 1)..n {
                dot += h[(i, j)] * v[j];
            }
            let w = beta * dot;
            for j in (k + 1)..n {
                let delta = w * v[j];
                h[(i, j)] -= delta;
            }
        }
        // the column is now (alpha, 0, ..., 0) below the diagonal; force exact zeros
        h[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[(i, k)] = T::zero();
        }
    }
    h
}

/// Eigenvalues (re, im) of an upper Hessenberg matrix by Francis
/// double-shift QR. Destroys its input.
fn hqr_eigenvalues<T: Real>(h: &mut Matrix<T>) -> Result<Vec<(T, T)>> {
    let n = h.rows() as i64;
    let at = |m: &Matrix<T>, i: i64, j: i64| m[(i as usize, j as usize)];
    macro_rules! aset {
        ($m:expr, $i:expr, $j:expr, $v:expr) => {
            $m[($i as usize, $j as usize)] = $v
        };
    }
    let mut wr = vec![T::zero(); n as usize];
    let mut wi = vec![T::zero(); n as usize];

    let mut anorm = T::zero();
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += at(h, i, j).abs();
        }
    }
    if anorm == T::zero() {
        return Ok(vec![(T::zero(), T::zero()); n as usize]);
    }
    let eps = T::epsilon();
    let mut nn = n - 1;
    let mut t = T::zero();

    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let mut s = at(h, l - 1, l - 1).abs() + at(h, l, l).abs();
                if s == T::zero() {
                    s = anorm;
                }
                if at(h, l, l - 1).abs() <= eps * s {
                    aset!(h, l, l - 1, T::zero());
                    break;
                }
                l -= 1;
            }
            let mut x = at(h, nn, nn);
            if l == nn {
                // one real root found
                wr[nn as usize] = x + t;
                wi[nn as usize] = T::zero();
                nn -= 1;
                break;
            }
            let mut y = at(h, nn - 1, nn - 1);
            let mut w = at(h, nn, nn - 1) * at(h, nn - 1, nn);
            if l == nn - 1 {
                // a pair of roots found
                let p = T::of(0.5) * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + sign_of(z, p);
                    wr[(nn - 1) as usize] = x + z;
                    wr[nn as usize] = wr[(nn - 1) as usize];
                    if z != T::zero() {
                        wr[nn as usize] = x - w / z;
                    }
                    wi[(nn - 1) as usize] = T::zero();
                    wi[nn as usize] = T::zero();
                } else {
                    wr[(nn - 1) as usize] = x + p;
                    wr[nn as usize] = x + p;
                    wi[(nn - 1) as usize] = -z;
                    wi[nn as usize] = z;
                }
                nn -= 2;
                break;
            }
            // no root found yet; do a QR sweep
            if its == MAX_QR_ITERS_PER_EIG {
                return Err(Error::NumericalFailure(
                    "QR iteration did not converge".into(),
                ));
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nn {
                    let d = at(h, i, i) - x;
                    aset!(h, i, i, d);
                }
                let s = at(h, nn, nn - 1).abs() + at(h, nn - 1, nn - 2).abs();
                y = T::of(0.75) * s;
                x = y;
                w = T::of(-0.4375) * s * s;
            }
            its += 1;
            // form shift, then look for two consecutive small subdiagonals
            let mut p = T::zero();
            let mut q = T::zero();
            let mut r = T::zero();
            let mut m = nn - 2;
            while m >= l {
                let z = at(h, m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / at(h, m + 1, m) + at(h, m, m + 1);
                q = at(h, m + 1, m + 1) - z - rr - ss;
                r = at(h, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at(h, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at(h, m - 1, m - 1).abs() + z.abs() + at(h, m + 1, m + 1).abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                aset!(h, i, i - 2, T::zero());
                if i > m + 2 {
                    aset!(h, i, i - 3, T::zero());
                }
            }
            // double QR step over rows l..nn, columns m..nn
            for k in m..=(nn - 1) {
                if k != m {
                    p = at(h, k, k - 1);
                    q = at(h, k + 1, k - 1);
                    r = if k != nn - 1 {
                        at(h, k + 2, k - 1)
                    } else {
                        T::zero()
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == T::zero() {
                    continue;
                }
                if k == m {
                    if l != m {
                        let neg = -at(h, k, k - 1);
                        aset!(h, k, k - 1, neg);
                    }
                } else {
                    aset!(h, k, k - 1, -s * x);
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    let mut pp = at(h, k, j) + q * at(h, k + 1, j);
                    if k != nn - 1 {
                        pp += r * at(h, k + 2, j);
                        let d = at(h, k + 2, j) - pp * z;
                        aset!(h, k + 2, j, d);
                    }
                    let d1 = at(h, k + 1, j) - pp * y;
                    aset!(h, k + 1, j, d1);
                    let d0 = at(h, k, j) - pp * x;
                    aset!(h, k, j, d0);
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * at(h, i, k) + y * at(h, i, k + 1);
                    if k != nn - 1 {
                        pp += z * at(h, i, k + 2);
                        let d = at(h, i, k + 2) - pp * r;
                        aset!(h, i, k + 2, d);
                    }
                    let d1 = at(h, i, k + 1) - pp * q;
                    aset!(h, i, k + 1, d1);
                    let d0 = at(h, i, k) - pp;
                    aset!(h, i, k, d0);
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// Full spectrum (re, im) of a general square matrix.
pub(crate) fn eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<(T, T)>> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigenvalues: matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() == 0 || a.rows() > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "eigenvalues: dimension {} outside 1..={MAX_DIM}",
            a.rows()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("eigenvalues: non-finite entries".into()));
    }
    if a.rows() == 1 {
        return Ok(vec![(a[(0, 0)], T::zero())]);
    }
    let mut h = hessenberg(a);
    hqr_eigenvalues(&mut h)
}

/// Maximum real part over the full (possibly complex) spectrum.
pub fn max_real_eigenpart<T: Real>(a: &Matrix<T>) -> Result<T> {
    let spec = eigenvalues(a)?;
    Ok(spec
        .into_iter()
        .map(|(re, _)| re)
        .fold(T::neg_infinity(), |m, v| m.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    fn aircraft_ar() -> Matrix<f64> {
        m(&[
            &[0.0, 4.0, 0.0, 0.0],
            &[-14.18, -16.05, -3.88, -6.12],
            &[0.0, 0.0, 0.0, 4.0],
            &[-7.0, -10.2, -7.0, -10.2],
        ])
    }

    #[test]
    fn jacobi_identity() {
        let e = symmetric_eig_extremes(&Matrix::<f64>::identity(4)).unwrap();
        assert!((e.lambda_min - 1.0).abs() < 1e-14);
        assert!((e.lambda_max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_diagonal() {
        let e = symmetric_eig_extremes(&m(&[&[2.0, 0.0], &[0.0, 5.0]])).unwrap();
        assert!((e.lambda_min - 2.0).abs() < 1e-14);
        assert!((e.lambda_max - 5.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let e = symmetric_eig_extremes(&m(&[&[1.0, 2.0], &[0.0, 1.0]]));
        assert!(matches!(e, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn jacobi_known_2x2() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let e = symmetric_eig_extremes(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.lambda_min - 1.0).abs() < 1e-13);
        assert!((e.lambda_max - 3.0).abs() < 1e-13);
    }

    #[test]
    fn jacobi_matches_characteristic_roots_on_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.gen_range(-5.0..5.0);
            let b = rng.gen_range(-5.0..5.0);
            let d = rng.gen_range(-5.0..5.0);
            let s = m(&[&[a, b], &[b, d]]);
            let tr = a + d;
            let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
            let lo = 0.5 * (tr - disc);
            let hi = 0.5 * (tr + disc);
            let e = symmetric_eig_extremes(&s).unwrap();
            let scale = 1.0 + hi.abs().max(lo.abs());
            assert!((e.lambda_min - lo).abs() <= tol::SYM_EIG_REL * scale);
            assert!((e.lambda_max - hi).abs() <= tol::SYM_EIG_REL * scale);
        }
    }

    #[test]
    fn hessenberg_preserves_spectrum_proxy() {
        // Hessenberg form of an already-Hessenberg matrix is itself
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(hessenberg(&a), a);
        // trace is invariant under similarity
        let b = m(&[
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0, 7.0, 8.0],
            &[9.0, 1.0, 2.0, 3.0],
            &[4.0, 5.0, 6.0, 7.0],
        ]);
        let h = hessenberg(&b);
        assert!((h.trace() - b.trace()).abs() < 1e-12);
        for i in 0..4usize {
            for j in 0..4usize {
                if i > j + 1 {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn max_real_diag() {
        let v = max_real_eigenpart(&m(&[&[-1.0, 0.0], &[0.0, -3.0]])).unwrap();
        assert!((v + 1.0).abs() <= tol::GENERAL_EIG_ABS);
    }

    #[test]
    fn max_real_pure_rotation() {
        let v = max_real_eigenpart(&m(&[&[0.0, 1.0], &[-1.0, 0.0]])).unwrap();
        assert!(v.abs() <= tol::GENERAL_EIG_ABS);
    }

    #[test]
    fn max_real_defective_jordan_block() {
        let v = max_real_eigenpart(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        assert!((v - 1.0).abs() <= 1e-7, "got {v}");
    }

    #[test]
    fn max_real_companion_cubic() {
        // companion of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let c = m(&[&[6.0, -11.0, 6.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let v = max_real_eigenpart(&c).unwrap();
        assert!((v - 3.0).abs() <= tol::GENERAL_EIG_ABS, "got {v}");
    }

    #[test]
    fn max_real_aircraft_reference_model() {
        // Regression pin, cross-checked offline against an independent
        // solver; the slowest eigenvalue pair sits at -2.44180 +- 3.49383i.
        let v = max_real_eigenpart(&aircraft_ar()).unwrap();
        assert!((v - (-2.4417958908407558)).abs() <= 1e-6, "got {v}");
        assert!(v < 0.0);
        assert!(v.abs() > 2.3 && v.abs() < 2.5);
    }

    #[test]
    fn rejects_oversized_and_non_square() {
        let big = Matrix::<f64>::identity(17);
        assert!(max_real_eigenpart(&big).is_err());
        let rect = Matrix::<f64>::zeros(2, 3);
        assert!(max_real_eigenpart(&rect).is_err());
    }

    #[test]
    fn quadratic_formula_agreement_on_random_2x2() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let a = rng.gen_range(-10.0..10.0);
            let b = rng.gen_range(-10.0..10.0);
            let c = rng.gen_range(-10.0..10.0);
            let d = rng.gen_range(-10.0..10.0);
            let mat = m(&[&[a, b], &[c, d]]);
            let tr = a + d;
            let det = a * d - b * c;
            let disc = tr * tr - 4.0 * det;
            let expected = if disc >= 0.0 {
                0.5 * (tr + disc.sqrt())
            } else {
                0.5 * tr
            };
            let got = max_real_eigenpart(&mat).unwrap();
            assert!(
                (got - expected).abs() <= tol::GENERAL_EIG_ABS * (1.0 + expected.abs()),
                "a={a} b={b} c={c} d={d}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn general_path_agrees_with_jacobi_on_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = rng.gen_range(2..8);
            let mut s = Matrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-4.0..4.0);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            let jac = symmetric_eig_extremes(&s).unwrap();
            let qr = max_real_eigenpart(&s).unwrap();
            assert!(
                (jac.lambda_max - qr).abs() <= 1e-8 * (1.0 + jac.lambda_max.abs()),
                "jacobi {} vs qr {}",
                jac.lambda_max,
                qr
            );
        }
    }

    #[test]
    fn works_in_f32() {
        let s = Matrix::<f32>::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = symmetric_eig_extremes(&s).unwrap();
        assert!((e.lambda_min - 1.0).abs() < 1e-5);
        assert!((e.lambda_max - 3.0).abs() < 1e-5);
        let g = Matrix::<f32>::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert!(max_real_eigenpart(&g).unwrap().abs() < 1e-5);
    }
}
