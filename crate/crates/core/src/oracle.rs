//! Implicit symmetric matrices behind a quadratic-form oracle `f_A(x) = xᵀAx`.
//!
//! Every representation carries exact ground truth (trace, Frobenius norm,
//! diagonal) without dense `O(n³)` work. Values are immutable and can be
//! shared freely across trial workers.

use serde::{Deserialize, Serialize};

use crate::dense::{dot, OrthogonalMatrix, SquareMatrix};
use crate::error::{Error, Result};
use crate::sampler::{haar_orthogonal_matrix, RandomSource};
use crate::scalar::Scalar;

/// Default bound on `n` for dense materialization.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 4096;

/// One `coefficient · d dᵀ` term of a planted low-rank matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFactor<T> {
    pub coefficient: T,
    pub direction: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKind<T> {
    Diagonal(Vec<T>),
    /// `Σ cᵢ dᵢdᵢᵀ` with pairwise orthonormal `dᵢ`.
    PlantedRank(Vec<PlantedFactor<T>>),
    DenseSymmetric(SquareMatrix<T>),
    /// `QᵀAQ` for the inner matrix `A` and orthogonal `Q`.
    Rotated {
        inner: Box<ImplicitMatrix<T>>,
        rotation: OrthogonalMatrix<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitMatrix<T> {
    n: usize,
    kind: MatrixKind<T>,
}

impl<T: Scalar> ImplicitMatrix<T> {
    pub fn diagonal(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        Ok(ImplicitMatrix {
            n: values.len(),
            kind: MatrixKind::Diagonal(values),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal(vec![T::one(); n])
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::diagonal(vec![T::zero(); n])
    }

    /// Planted low-rank matrix; directions must be pairwise orthonormal.
    pub fn planted(n: usize, factors: Vec<PlantedFactor<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        let mut worst = T::zero();
        for (i, f) in factors.iter().enumerate() {
            if f.direction.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: f.direction.len(),
                });
            }
            worst = worst.max((dot(&f.direction, &f.direction) - T::one()).abs());
            for g in &factors[..i] {
                worst = worst.max(dot(&f.direction, &g.direction).abs());
            }
        }
        if !(worst <= T::ortho_tol()) {
            return Err(Error::NotOrthonormal {
                deviation: worst.as_f64(),
            });
        }
        Ok(ImplicitMatrix {
            n,
            kind: MatrixKind::PlantedRank(factors),
        })
    }

    pub fn dense(m: SquareMatrix<T>) -> Result<Self> {
        if m.n() == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        let scale = T::one().max(m.frobenius_norm());
        let asym = m.asymmetry();
        if !(asym <= T::ortho_tol() * scale) {
            return Err(Error::NotSymmetric {
                deviation: asym.as_f64(),
            });
        }
        Ok(ImplicitMatrix {
            n: m.n(),
            kind: MatrixKind::DenseSymmetric(m),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MatrixKind<T> {
        &self.kind
    }

    fn check_len(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `xᵀAx`
    pub fn quadratic_query(&self, x: &[T]) -> Result<T> {
        self.check_len(x)?;
        Ok(self.quadratic_unchecked(x))
    }

    pub(crate) fn quadratic_unchecked(&self, x: &[T]) -> T {
        match &self.kind {
            MatrixKind::Diagonal(d) => d
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (&di, &xi)| acc + di * xi * xi),
            MatrixKind::PlantedRank(fs) => fs.iter().fold(T::zero(), |acc, f| {
                let p = dot(&f.direction, x);
                acc + f.coefficient * p * p
            }),
            MatrixKind::DenseSymmetric(m) => m.quadratic_form(x),
            MatrixKind::Rotated { inner, rotation } => inner.quadratic_unchecked(&rotation.apply(x)),
        }
    }

    /// `xᵀAy` read directly from the representation.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<T> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bilinear_unchecked(x, y))
    }

    fn bilinear_unchecked(&self, x: &[T], y: &[T]) -> T {
        match &self.kind {
            MatrixKind::Diagonal(d) => d
                .iter()
                .zip(x.iter().zip(y))
                .fold(T::zero(), |acc, (&di, (&xi, &yi))| acc + di * xi * yi),
            MatrixKind::PlantedRank(fs) => fs.iter().fold(T::zero(), |acc, f| {
                acc + f.coefficient * dot(&f.direction, x) * dot(&f.direction, y)
            }),
            MatrixKind::DenseSymmetric(m) => m.bilinear_form(x, y),
            MatrixKind::Rotated { inner, rotation } => {
                inner.bilinear_unchecked(&rotation.apply(x), &rotation.apply(y))
            }
        }
    }

    pub fn true_trace(&self) -> T {
        match &self.kind {
            MatrixKind::Diagonal(d) => d.iter().copied().sum(),
            MatrixKind::PlantedRank(fs) => fs.iter().map(|f| f.coefficient).sum(),
            MatrixKind::DenseSymmetric(m) => m.trace(),
            MatrixKind::Rotated { inner, .. } => inner.true_trace(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        match &self.kind {
            MatrixKind::Diagonal(d) => d.iter().map(|&v| v * v).sum::<T>().sqrt(),
            MatrixKind::PlantedRank(fs) => fs
                .iter()
                .map(|f| f.coefficient * f.coefficient)
                .sum::<T>()
                .sqrt(),
            MatrixKind::DenseSymmetric(m) => m.frobenius_norm(),
            MatrixKind::Rotated { inner, .. } => inner.frobenius_norm(),
        }
    }

    /// Diagonal entries `A_ii`. Planted: `O(n·r)`; rotated: one inner query per column of `Q`.
    pub fn diagonal_entries(&self) -> Vec<T> {
        match &self.kind {
            MatrixKind::Diagonal(d) => d.clone(),
            MatrixKind::PlantedRank(fs) => (0..self.n)
                .map(|i| {
                    fs.iter().fold(T::zero(), |acc, f| {
                        acc + f.coefficient * f.direction[i] * f.direction[i]
                    })
                })
                .collect(),
            MatrixKind::DenseSymmetric(m) => (0..self.n).map(|i| m.get(i, i)).collect(),
            MatrixKind::Rotated { inner, rotation } => (0..self.n)
                .map(|i| inner.quadratic_unchecked(&rotation.matrix().column(i)))
                .collect(),
        }
    }

    /// `Σᵢ A²ᵢᵢ`
    pub fn diagonal_sum_of_squares(&self) -> T {
        self.diagonal_entries().iter().map(|&v| v * v).sum()
    }

    /// `QᵀAQ`, kept implicit.
    pub fn similarity_transform(&self, q: &OrthogonalMatrix<T>) -> Result<Self> {
        if q.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: q.n(),
            });
        }
        let defect = q.matrix().orthogonality_defect();
        if !(defect <= T::ortho_tol()) {
            return Err(Error::NotOrthogonal {
                deviation: defect.as_f64(),
            });
        }
        Ok(ImplicitMatrix {
            n: self.n,
            kind: MatrixKind::Rotated {
                inner: Box::new(self.clone()),
                rotation: q.clone(),
            },
        })
    }

    pub fn materialize(&self) -> Result<SquareMatrix<T>> {
        self.materialize_with_limit(DEFAULT_MATERIALIZE_LIMIT)
    }

    pub fn materialize_with_limit(&self, limit: usize) -> Result<SquareMatrix<T>> {
        if self.n > limit {
            return Err(Error::MaterializationLimit { n: self.n, limit });
        }
        Ok(self.materialize_unchecked())
    }

    fn materialize_unchecked(&self) -> SquareMatrix<T> {
        let n = self.n;
        match &self.kind {
            MatrixKind::Diagonal(d) => {
                let mut m = SquareMatrix::zeros(n);
                for (i, &v) in d.iter().enumerate() {
                    m.set(i, i, v);
                }
                m
            }
            MatrixKind::PlantedRank(fs) => {
                let mut m = SquareMatrix::zeros(n);
                for f in fs {
                    for i in 0..n {
                        let a = f.coefficient * f.direction[i];
                        for j in 0..n {
                            m.set(i, j, m.get(i, j) + a * f.direction[j]);
                        }
                    }
                }
                m
            }
            MatrixKind::DenseSymmetric(m) => m.clone(),
            MatrixKind::Rotated { inner, rotation } => {
                let a = inner.materialize_unchecked();
                let q = rotation.matrix();
                q.transpose().matmul(&a).matmul(q)
            }
        }
    }

    /// Short description used as a default matrix id.
    pub fn describe(&self) -> String {
        match &self.kind {
            MatrixKind::Diagonal(_) => format!("diagonal(n={})", self.n),
            MatrixKind::PlantedRank(fs) => format!("planted(n={},r={})", self.n, fs.len()),
            MatrixKind::DenseSymmetric(_) => format!("dense(n={})", self.n),
            MatrixKind::Rotated { inner, .. } => format!("rotated({})", inner.describe()),
        }
    }
}

/// On-disk matrix description (JSON).
///
/// ```json
/// {"kind": "diagonal", "n": 3, "values": [1.0, 2.0, 3.0]}
/// {"kind": "dense", "n": 2, "entries": [[0.0, 1.0], [1.0, 0.0]]}
/// {"kind": "planted", "n": 2, "factors": [{"coefficient": 1.0, "direction": [1.0, 0.0]}]}
/// {"kind": "rotated", "n": 2, "inner": {…}, "seed": 7}
/// {"kind": "rotated", "n": 2, "inner": {…}, "rotation": [[0.0, -1.0], [1.0, 0.0]]}
/// ```
///
/// A rotated spec with only a `seed` draws its rotation as a Haar matrix from
/// stream `(seed, 0)`. Specs written by [`ImplicitMatrix::to_spec`] always carry
/// the explicit rotation, so matrix → spec → matrix is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatrixSpec {
    Diagonal {
        n: usize,
        values: Vec<f64>,
    },
    Dense {
        n: usize,
        entries: Vec<Vec<f64>>,
    },
    Planted {
        n: usize,
        factors: Vec<FactorSpec>,
    },
    Rotated {
        n: usize,
        inner: Box<MatrixSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub coefficient: f64,
    pub direction: Vec<f64>,
}

fn convert<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::of(x)).collect()
}

fn back<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| x.as_f64()).collect()
}

impl MatrixSpec {
    pub fn n(&self) -> usize {
        match self {
            MatrixSpec::Diagonal { n, .. }
            | MatrixSpec::Dense { n, .. }
            | MatrixSpec::Planted { n, .. }
            | MatrixSpec::Rotated { n, .. } => *n,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MatrixSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix specs always serialize")
    }

    pub fn build<T: Scalar>(&self) -> Result<ImplicitMatrix<T>> {
        let declared = self.n();
        let m = match self {
            MatrixSpec::Diagonal { values, .. } => ImplicitMatrix::diagonal(convert(values))?,
            MatrixSpec::Dense { entries, .. } => {
                let rows: Vec<Vec<T>> = entries.iter().map(|r| convert(r)).collect();
                ImplicitMatrix::dense(SquareMatrix::from_rows(&rows)?)?
            }
            MatrixSpec::Planted { n, factors } => ImplicitMatrix::planted(
                *n,
                factors
                    .iter()
                    .map(|f| PlantedFactor {
                        coefficient: T::of(f.coefficient),
                        direction: convert(&f.direction),
                    })
                    .collect(),
            )?,
            MatrixSpec::Rotated {
                n,
                inner,
                rotation,
                seed,
            } => {
                let inner = inner.build::<T>()?;
                let q = match (rotation, seed) {
                    (Some(rows), _) => {
                        let rows: Vec<Vec<T>> = rows.iter().map(|r| convert(r)).collect();
                        OrthogonalMatrix::from_rows(&rows)?
                    }
                    (None, Some(s)) => haar_orthogonal_matrix(*n, &mut RandomSource::new(*s, 0))?,
                    (None, None) => {
                        return Err(Error::MatrixSpec(
                            "rotated spec needs `rotation` or `seed`".into(),
                        ))
                    }
                };
                inner.similarity_transform(&q)?
            }
        };
        if m.n() != declared {
            return Err(Error::MatrixSpec(format!(
                "declared n = {declared} but the data has dimension {}",
                m.n()
            )));
        }
        Ok(m)
    }
}

impl<T: Scalar> ImplicitMatrix<T> {
    pub fn to_spec(&self) -> MatrixSpec {
        let n = self.n;
        match &self.kind {
            MatrixKind::Diagonal(d) => MatrixSpec::Diagonal { n, values: back(d) },
            MatrixKind::DenseSymmetric(m) => MatrixSpec::Dense {
                n,
                entries: m.to_rows().iter().map(|r| back(r)).collect(),
            },
            MatrixKind::PlantedRank(fs) => MatrixSpec::Planted {
                n,
                factors: fs
                    .iter()
                    .map(|f| FactorSpec {
                        coefficient: f.coefficient.as_f64(),
                        direction: back(&f.direction),
                    })
                    .collect(),
            },
            MatrixKind::Rotated { inner, rotation } => MatrixSpec::Rotated {
                n,
                inner: Box::new(inner.to_spec()),
                rotation: Some(rotation.matrix().to_rows().iter().map(|r| back(r)).collect()),
                seed: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1_instance() -> ImplicitMatrix<f64> {
        let s5 = 5f64.sqrt();
        ImplicitMatrix::planted(
            3,
            vec![
                PlantedFactor {
                    coefficient: 1.0 / s5,
                    direction: vec![1.0, 0.0, 0.0],
                },
                PlantedFactor {
                    coefficient: 2.0 / s5,
                    direction: vec![0.0, 1.0, 0.0],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn quadratic_query_examples() {
        let id = ImplicitMatrix::<f64>::identity(3).unwrap();
        assert_eq!(id.quadratic_query(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let d = ImplicitMatrix::diagonal(vec![1.0, 2.0]).unwrap();
        assert_eq!(d.quadratic_query(&[1.0, 1.0]).unwrap(), 3.0);
        let p1 = p1_instance();
        let q = p1.quadratic_query(&[1.0, 0.0, 0.0]).unwrap();
        assert!((q - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let d = ImplicitMatrix::diagonal(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            d.quadratic_query(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn ground_truth_examples() {
        let p1 = p1_instance();
        assert!((p1.true_trace() - 3.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((p1.frobenius_norm() - 1.0).abs() < 1e-15);
        assert_eq!(ImplicitMatrix::<f64>::identity(7).unwrap().true_trace(), 7.0);
        let d = ImplicitMatrix::diagonal(vec![3.0, 4.0]).unwrap();
        assert_eq!(d.frobenius_norm(), 5.0);
    }

    #[test]
    fn diagonal_sum_of_squares_examples() {
        let d = ImplicitMatrix::diagonal(vec![1.0, 2.0]).unwrap();
        assert_eq!(d.diagonal_sum_of_squares(), 5.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let off = ImplicitMatrix::dense(
            SquareMatrix::from_rows(&[vec![0.0, h], vec![h, 0.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(off.diagonal_sum_of_squares(), 0.0);
        // uuᵀ with u = (1/√2, 1/√2): diagonal (1/2, 1/2)
        let uu = ImplicitMatrix::planted(
            2,
            vec![PlantedFactor {
                coefficient: 1.0,
                direction: vec![h, h],
            }],
        )
        .unwrap();
        assert!((uu.diagonal_sum_of_squares() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn similarity_transform_examples() {
        let d = ImplicitMatrix::diagonal(vec![1.0, 2.0]).unwrap();
        let q = OrthogonalMatrix::plane_rotation(2, std::f64::consts::FRAC_PI_2).unwrap();
        let r = d.similarity_transform(&q).unwrap();
        assert!((r.true_trace() - 3.0).abs() < 1e-15);
        // rotation by π/2 swaps the diagonal
        let diag = r.diagonal_entries();
        assert!((diag[0] - 2.0).abs() < 1e-15 && (diag[1] - 1.0).abs() < 1e-15);

        let id = ImplicitMatrix::<f64>::identity(3).unwrap();
        let mut rng = RandomSource::new(1, 0);
        let h = haar_orthogonal_matrix(3, &mut rng).unwrap();
        let rid = id.similarity_transform(&h).unwrap();
        let x = [0.3, -1.2, 0.5];
        assert!((rid.quadratic_query(&x).unwrap() - id.quadratic_query(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn non_orthogonal_rotation_rejected() {
        let d = ImplicitMatrix::diagonal(vec![1.0, 2.0]).unwrap();
        let bad = OrthogonalMatrix::from_trusted(
            SquareMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap(),
        );
        assert!(matches!(
            d.similarity_transform(&bad),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn planted_requires_orthonormal_directions() {
        let r = ImplicitMatrix::planted(
            2,
            vec![
                PlantedFactor {
                    coefficient: 1.0,
                    direction: vec![1.0, 0.0],
                },
                PlantedFactor {
                    coefficient: 1.0,
                    direction: vec![0.6, 0.8],
                },
            ],
        );
        assert!(matches!(r, Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn dense_requires_symmetry() {
        let r = ImplicitMatrix::dense(SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap());
        assert!(matches!(r, Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn materialize_guard() {
        let big = ImplicitMatrix::<f64>::identity(5000).unwrap();
        assert!(matches!(
            big.materialize(),
            Err(Error::MaterializationLimit { n: 5000, .. })
        ));
        assert!(big.materialize_with_limit(2).is_err());
        let small = ImplicitMatrix::<f64>::identity(3).unwrap();
        assert_eq!(small.materialize().unwrap(), SquareMatrix::identity(3));
    }

    #[test]
    fn spec_round_trip_is_exact() {
        let mut rng = RandomSource::new(9, 0);
        let q = haar_orthogonal_matrix(3, &mut rng).unwrap();
        let m = p1_instance().similarity_transform(&q).unwrap();
        let text = m.to_spec().to_json();
        let back = MatrixSpec::from_json(&text).unwrap().build::<f64>().unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn seeded_rotation_spec() {
        let text = r#"{"kind":"rotated","n":2,"seed":7,
            "inner":{"kind":"diagonal","n":2,"values":[1.0,0.0]}}"#;
        let m = MatrixSpec::from_json(text).unwrap().build::<f64>().unwrap();
        assert!((m.true_trace() - 1.0).abs() < 1e-15);
        let again = MatrixSpec::from_json(text).unwrap().build::<f64>().unwrap();
        assert_eq!(m, again);
        let missing = r#"{"kind":"rotated","n":2,"inner":{"kind":"diagonal","n":2,"values":[1.0,0.0]}}"#;
        assert!(MatrixSpec::from_json(missing).unwrap().build::<f64>().is_err());
        let wrong_n = r#"{"kind":"diagonal","n":3,"values":[1.0,0.0]}"#;
        assert!(MatrixSpec::from_json(wrong_n).unwrap().build::<f64>().is_err());
    }
}
