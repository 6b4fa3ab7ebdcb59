//! Small row-major dense matrices and vector helpers.
//!
//! Only what the oracle, sampler and estimators need: products, transposes
//! and the orthogonality / symmetry checks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

pub fn norm<T: Scalar>(x: &[T]) -> T {
    dot(x, x).sqrt()
}

/// `y ← y + alpha·x`
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}

/// Square `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Mᵀ x`
    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if a == T::zero() {
                    continue;
                }
                let row = &other.data[l * n..(l + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                axpy(a, row, dst);
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `max |M − Mᵀ|`
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `max |MᵀM − I|`
    pub fn orthogonality_defect(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for a in 0..n {
            for b in a..n {
                let mut s = T::zero();
                for i in 0..n {
                    s = s + self.get(i, a) * self.get(i, b);
                }
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    pub fn bilinear_form(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.mul_vec(y))
    }
}

/// Square matrix `Q` with `‖QᵀQ − I‖_max` within [`Scalar::ortho_tol`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix<T> {
    inner: SquareMatrix<T>,
}

impl<T: Scalar> OrthogonalMatrix<T> {
    pub fn new(m: SquareMatrix<T>) -> Result<Self> {
        let defect = m.orthogonality_defect();
        if !(defect <= T::ortho_tol()) {
            return Err(Error::NotOrthogonal {
                deviation: defect.as_f64(),
            });
        }
        Ok(OrthogonalMatrix { inner: m })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        OrthogonalMatrix {
            inner: SquareMatrix::identity(n),
        }
    }

    /// Plane rotation by `angle` in coordinates `(0, 1)` of `ℝⁿ`.
    pub fn plane_rotation(n: usize, angle: T) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "a plane rotation needs n ≥ 2"));
        }
        let mut m = SquareMatrix::identity(n);
        let (s, c) = angle.sin_cos();
        m.set(0, 0, c);
        m.set(0, 1, -s);
        m.set(1, 0, s);
        m.set(1, 1, c);
        Ok(OrthogonalMatrix { inner: m })
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.inner
    }

    /// `Q x`
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.inner.mul_vec(x)
    }

    /// `Qᵀ x`
    pub fn apply_transpose(&self, x: &[T]) -> Vec<T> {
        self.inner.transpose_mul_vec(x)
    }

    pub fn compose(&self, other: &Self) -> Self {
        OrthogonalMatrix {
            inner: self.inner.matmul(&other.inner),
        }
    }

    pub(crate) fn from_trusted(m: SquareMatrix<T>) -> Self {
        OrthogonalMatrix { inner: m }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_products_agree() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(m.matmul(&SquareMatrix::identity(2)), m);
    }

    #[test]
    fn rejects_non_orthogonal() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            OrthogonalMatrix::new(m),
            Err(Error::NotOrthogonal { .. })
        ));
        let rot = OrthogonalMatrix::<f64>::plane_rotation(3, 0.7).unwrap();
        assert!(rot.matrix().orthogonality_defect() < 1e-15);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(SquareMatrix::<f64>::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
