//! Dense linear algebra for small real matrices (n <= 16).
//!
//! Row-major storage, no external backend. Provides exactly what the
//! control layer needs: norms, symmetric and general eigenvalue extremes,
//! the continuous Lyapunov equation, LU solves, and the left pseudo-inverse.

mod eig;
mod lu;
mod lyap;

pub use eig::{hessenberg, max_real_eigenpart, symmetric_eig_extremes, symmetric_eigenvalues};
pub use lu::Lu;
pub use lyap::solve_lyapunov;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tol;

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigExtremes<T> {
    pub lambda_min: T,
    pub lambda_max: T,
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Dense real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::new",
                expected: format!("{} entries", rows * cols),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from row slices; panics on ragged input (programming error).
    pub fn from_rows(rows: &[&[T]]) -> Self {
        assert!(!rows.is_empty(), "matrix must have at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "matrix must have at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has wrong length");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Diagonal matrix scale * I_n.
    pub fn scaled_identity(n: usize, scale: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = scale;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &Vector<T>) -> Vector<T> {
        assert_eq!(self.cols, v.dim(), "matvec dimension mismatch");
        let mut out = vec![T::zero(); self.rows];
        for i in 0..self.rows {
            let mut acc = T::zero();
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Vector::from_vec(out)
    }

    /// self^T * v without forming the transpose.
    pub fn tr_matvec(&self, v: &Vector<T>) -> Vector<T> {
        assert_eq!(self.rows, v.dim(), "tr_matvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)] * vi;
            }
        }
        Vector::from_vec(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// self += s * other, in place.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Rank-one product u v^T.
    pub fn outer(u: &Vector<T>, v: &Vector<T>) -> Self {
        let mut out = Self::zeros(u.dim(), v.dim());
        for i in 0..u.dim() {
            for j in 0..v.dim() {
                out[(i, j)] = u[i] * v[j];
            }
        }
        out
    }

    /// Gram matrix self^T self, filled symmetrically so it is exactly
    /// symmetric in floating point.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in 0..self.rows {
                    acc += self[(k, i)] * self[(k, j)];
                }
                g[(i, j)] = acc;
                g[(j, i)] = acc;
            }
        }
        g
    }

    /// Gram matrix self self^T (for wide matrices), exactly symmetric.
    pub fn gram_t(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc += self[(i, k)] * self[(j, k)];
                }
                g[(i, j)] = acc;
                g[(j, i)] = acc;
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|&a| a * a)
            .fold(T::zero(), |s, a| s + a)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &a| if a.abs() > m { a.abs() } else { m })
    }

    pub fn max_asymmetry(&self) -> T {
        debug_assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// (self + self^T) / 2.
    pub fn symmetrized(&self) -> Self {
        debug_assert!(self.is_square());
        let half = T::of(0.5);
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = (self[(i, j)] + self[(j, i)]) * half;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Trace of self^T other (Frobenius inner product).
    pub fn frob_inner(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .fold(T::zero(), |s, x| s + x)
    }

    pub fn trace(&self) -> T {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    fn check_symmetric(&self, context: &'static str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::InvalidInput(format!(
                "{context}: matrix is {}x{}, not square",
                self.rows, self.cols
            )));
        }
        let scale = T::one() + self.max_abs();
        let asym = self.max_asymmetry();
        if asym > T::of(tol::SYMMETRY) * scale {
            return Err(Error::InvalidInput(format!(
                "{context}: matrix asymmetry {asym:e} exceeds tolerance"
            )));
        }
        Ok(())
    }
}

impl<T: Real> Vector<T> {
    pub fn from_vec(data: Vec<T>) -> Self {
        Self { data }
    }

    pub fn from_slice(data: &[T]) -> Self {
        Self {
            data: data.to_vec(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![T::zero(); dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "dot dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .fold(T::zero(), |s, x| s + x)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// self += s * other, in place.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T> std::ops::Index<usize> for Vector<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> std::ops::IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

/// Largest singular value, computed as sqrt(lambda_max(A^T A)) with the
/// Jacobi symmetric eigensolver on the smaller Gram matrix.
pub fn spectral_norm<T: Real>(a: &Matrix<T>) -> Result<T> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidInput("spectral_norm: empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput(
            "spectral_norm: non-finite entries".into(),
        ));
    }
    let gram = if a.rows() >= a.cols() {
        a.gram()
    } else {
        a.gram_t()
    };
    let eig = symmetric_eig_extremes(&gram)?;
    Ok(eig.lambda_max.max(T::zero()).sqrt())
}

/// Left pseudo-inverse B^+ = (B^T B)^{-1} B^T for full-column-rank B.
pub fn left_pseudo_inverse<T: Real>(b: &Matrix<T>) -> Result<Matrix<T>> {
    if !b.is_finite() {
        return Err(Error::InvalidInput(
            "left_pseudo_inverse: non-finite entries".into(),
        ));
    }
    let gram = b.gram();
    let eig = symmetric_eig_extremes(&gram)?;
    if eig.lambda_min <= T::of(tol::RANK_MIN_EIG) {
        return Err(Error::InvalidInput(format!(
            "left_pseudo_inverse: rank-deficient input, lambda_min(B^T B) = {:e}",
            eig.lambda_min
        )));
    }
    let lu = Lu::factor(&gram)?;
    Ok(lu.solve_matrix(&b.transpose()))
}
