//! Linear nonadaptive trace estimators and their rotation / symmetrization wrappers.
//!
//! An estimator draws `k` queries and weights independently of the oracle's
//! answers, then returns `Σ wᵢ f_A(xᵢ)`. Unbiasedness fixes the weights: `1/k`
//! for Rademacher and Gaussian queries, `n/k` for unit-length queries, and
//! `E[Σ wᵢ] = n` for a configured mixture.

use serde::{Deserialize, Serialize};

use crate::dense::{axpy, OrthogonalMatrix};
use crate::error::{Error, Result};
use crate::oracle::ImplicitMatrix;
use crate::sampler::{
    fill_rademacher, haar_orthogonal_matrix, orthogonal_tuple, standard_gaussian,
    uniform_unit_vector, RandomSource,
};
use crate::scalar::Scalar;

/// Gram factorization tolerance for angle configurations.
pub const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    pub value: T,
    pub queries_used: usize,
    pub seed_provenance: (u64, u64),
}

/// Anything that turns oracle access to `A` into one trace estimate.
pub trait TraceEstimator<T: Scalar>: Sync {
    fn estimate(&self, a: &ImplicitMatrix<T>, rng: &mut RandomSource) -> Result<EstimateResult<T>>;

    fn id(&self) -> String;

    /// Oracle queries spent per estimate.
    fn queries(&self) -> usize;
}

/// One deterministic branch of a configured estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigBranch<T> {
    pub probability: f64,
    /// `θᵢⱼ` for `i < j`, upper triangle row-major.
    pub angles: Vec<T>,
    pub weights: Vec<T>,
    /// Columns of the Gram factor with a nonzero pivot: `xᵢ = Σ_c factor[i][c]·y_c`.
    factor: Vec<Vec<T>>,
}

impl<T: Scalar> ConfigBranch<T> {
    pub fn rank(&self) -> usize {
        self.factor.first().map_or(0, |r| r.len())
    }
}

/// Finite mixture of (angles, weights) configurations for dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T> {
    n: usize,
    k: usize,
    branches: Vec<ConfigBranch<T>>,
}

fn pair_index(k: usize, i: usize, j: usize) -> usize {
    // position of (i, j), i < j, in the row-major upper triangle
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// Lower-triangular factor of the PSD Gram matrix `G`, keeping only columns
/// with a nonzero pivot. Non-PSD or inconsistent matrices are rejected.
fn semidefinite_factor<T: Scalar>(gram: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let k = gram.len();
    let tol = T::of(GRAM_TOL);
    let mut l = vec![vec![T::zero(); k]; k];
    let mut active = vec![false; k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = gram[i][j];
            for c in 0..j {
                s = s - l[i][c] * l[j][c];
            }
            if i == j {
                if s < -tol {
                    return Err(Error::InfeasibleConfiguration(format!(
                        "Gram matrix is not positive semidefinite (pivot {:e} at query {i})",
                        s.as_f64()
                    )));
                }
                if s > tol {
                    l[i][i] = s.sqrt();
                    active[i] = true;
                }
            } else if active[j] {
                l[i][j] = s / l[j][j];
            } else if s.abs() > tol {
                return Err(Error::InfeasibleConfiguration(format!(
                    "angles between queries {j} and {i} are inconsistent"
                )));
            }
        }
    }
    Ok(l
        .into_iter()
        .map(|row| {
            row.into_iter()
                .zip(&active)
                .filter(|(_, &a)| a)
                .map(|(v, _)| v)
                .collect()
        })
        .collect())
}

impl<T: Scalar> Configuration<T> {
    /// Validates probabilities, angle ranges, realizability in `ℝⁿ` and `E[Σ wᵢ] = n`.
    pub fn new(n: usize, branches: Vec<(f64, Vec<T>, Vec<T>)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        let Some(first) = branches.first() else {
            return Err(Error::InfeasibleConfiguration("no branches".into()));
        };
        let k = first.2.len();
        if k == 0 {
            return Err(Error::invalid("k", "need at least one query"));
        }
        let pairs = k * (k - 1) / 2;
        let pi = T::of(std::f64::consts::PI);
        let mut total_p = 0.0;
        let mut expected_weight = 0.0;
        let mut built = Vec::with_capacity(branches.len());
        for (p, angles, weights) in branches {
            if !(p >= 0.0 && p <= 1.0) {
                return Err(Error::invalid("probability", format!("{p} is outside [0, 1]")));
            }
            if weights.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: weights.len(),
                });
            }
            if angles.len() != pairs {
                return Err(Error::DimensionMismatch {
                    expected: pairs,
                    actual: angles.len(),
                });
            }
            if let Some(bad) = angles.iter().find(|&&a| !(a >= T::zero() && a <= pi)) {
                return Err(Error::invalid("angles", format!("{bad} is outside [0, π]")));
            }
            let mut gram = vec![vec![T::one(); k]; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let c = angles[pair_index(k, i, j)].cos();
                    gram[i][j] = c;
                    gram[j][i] = c;
                }
            }
            let factor = semidefinite_factor(&gram)?;
            let rank = factor.first().map_or(0, |r| r.len());
            if rank > n {
                return Err(Error::InfeasibleConfiguration(format!(
                    "angle configuration needs {rank} dimensions but n = {n}"
                )));
            }
            total_p += p;
            expected_weight += p * weights.iter().map(|w| w.as_f64()).sum::<f64>();
            built.push(ConfigBranch {
                probability: p,
                angles,
                weights,
                factor,
            });
        }
        if (total_p - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "probability",
                format!("branch probabilities sum to {total_p}, not 1"),
            ));
        }
        let nf = n as f64;
        if (expected_weight - nf).abs() > 1e-12 * nf.max(1.0) {
            return Err(Error::invalid(
                "weights",
                format!("E[Σ wᵢ] = {expected_weight} but unbiasedness needs {n}"),
            ));
        }
        Ok(Configuration {
            n,
            k,
            branches: built,
        })
    }

    /// Single deterministic configuration: every pair at `theta`, given weights.
    pub fn uniform_angle(n: usize, theta: T, weights: Vec<T>) -> Result<Self> {
        let k = weights.len();
        let pairs = k * k.saturating_sub(1) / 2;
        Self::new(n, vec![(1.0, vec![theta; pairs], weights)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn branches(&self) -> &[ConfigBranch<T>] {
        &self.branches
    }

    fn pick(&self, rng: &mut RandomSource) -> &ConfigBranch<T> {
        let u = rng.uniform();
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.probability;
            if u < acc {
                return b;
            }
        }
        self.branches.last().expect("configurations have a branch")
    }

    /// Unit queries with the branch's pairwise angles inside a Haar-random frame.
    fn realize(&self, branch: &ConfigBranch<T>, rng: &mut RandomSource) -> Result<Vec<Vec<T>>> {
        let frame = orthogonal_tuple::<T>(self.n, branch.rank().max(1), rng)?.vectors;
        Ok(branch
            .factor
            .iter()
            .map(|coeffs| {
                let mut x = vec![T::zero(); self.n];
                for (c, y) in coeffs.iter().zip(&frame) {
                    axpy(*c, y, &mut x);
                }
                x
            })
            .collect())
    }
}

/// JSON form of a configured estimator (the `configured:<file>` CLI spec).
///
/// ```json
/// {"n": 4, "branches": [
///   {"probability": 0.5, "angles": [1.5707963267948966], "weights": [2.0, 2.0]},
///   {"probability": 0.5, "angles": [1.5707963267948966], "weights": [4.0, 0.0]}
/// ]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationSpec {
    pub n: usize,
    pub branches: Vec<BranchSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub probability: f64,
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ConfigurationSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::EstimatorSpec(e.to_string()))
    }

    pub fn build<T: Scalar>(&self) -> Result<Configuration<T>> {
        Configuration::new(
            self.n,
            self.branches
                .iter()
                .map(|b| {
                    (
                        b.probability,
                        b.angles.iter().map(|&a| T::of(a)).collect(),
                        b.weights.iter().map(|&w| T::of(w)).collect(),
                    )
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind<T> {
    Rademacher,
    Gaussian,
    UnitVector,
    Orthogonal,
    Configured(Configuration<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Wrapper<T> {
    /// Queries `Q xᵢ` for a fixed orthogonal `Q`.
    Rotated(OrthogonalMatrix<T>),
    /// Fresh Haar `U` per estimate, queries `U xᵢ`.
    Symmetrized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimator<T> {
    kind: EstimatorKind<T>,
    k: usize,
    /// Applied in order: the first wrapper acts on the base queries.
    wrappers: Vec<Wrapper<T>>,
}

impl<T: Scalar> LinearEstimator<T> {
    fn base(kind: EstimatorKind<T>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "need at least one query"));
        }
        Ok(LinearEstimator {
            kind,
            k,
            wrappers: Vec::new(),
        })
    }

    pub fn rademacher(k: usize) -> Result<Self> {
        Self::base(EstimatorKind::Rademacher, k)
    }

    pub fn gaussian(k: usize) -> Result<Self> {
        Self::base(EstimatorKind::Gaussian, k)
    }

    pub fn unit_vector(k: usize) -> Result<Self> {
        Self::base(EstimatorKind::UnitVector, k)
    }

    /// The minimum-variance estimator: `k` random orthogonal unit queries, weights `n/k`.
    pub fn orthogonal(k: usize) -> Result<Self> {
        Self::base(EstimatorKind::Orthogonal, k)
    }

    pub fn configured(config: Configuration<T>) -> Result<Self> {
        let k = config.k();
        Self::base(EstimatorKind::Configured(config), k)
    }

    pub fn kind(&self) -> &EstimatorKind<T> {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn wrappers(&self) -> &[Wrapper<T>] {
        &self.wrappers
    }

    /// Whether the base kind (ignoring wrappers) matches.
    pub fn is_kind(&self, other: &EstimatorKind<T>) -> bool {
        std::mem::discriminant(&self.kind) == std::mem::discriminant(other)
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        match &self.kind {
            EstimatorKind::Orthogonal if self.k > n => Err(Error::invalid(
                "k",
                format!("k ≤ n required for orthogonal queries (k = {}, n = {n})", self.k),
            )),
            EstimatorKind::Configured(c) if c.n() != n => Err(Error::DimensionMismatch {
                expected: c.n(),
                actual: n,
            }),
            _ => Ok(()),
        }
    }

    fn base_queries(&self, n: usize, rng: &mut RandomSource) -> Result<(Vec<Vec<T>>, Weights<T>)> {
        let k = self.k;
        let nk = T::of(n as f64) / T::of(k as f64);
        Ok(match &self.kind {
            EstimatorKind::Rademacher => (
                (0..k).map(|_| fill_rademacher(n, rng)).collect(),
                Weights::Mean,
            ),
            EstimatorKind::Gaussian => (
                (0..k).map(|_| standard_gaussian(n, rng)).collect(),
                Weights::Mean,
            ),
            EstimatorKind::UnitVector => (
                (0..k)
                    .map(|_| uniform_unit_vector(n, rng))
                    .collect::<Result<_>>()?,
                Weights::Uniform(nk),
            ),
            EstimatorKind::Orthogonal => (orthogonal_tuple(n, k, rng)?.vectors, Weights::Uniform(nk)),
            EstimatorKind::Configured(c) => {
                let branch = c.pick(rng);
                (c.realize(branch, rng)?, Weights::Explicit(branch.weights.clone()))
            }
        })
    }

    fn wrapped_queries(&self, n: usize, rng: &mut RandomSource) -> Result<(Vec<Vec<T>>, Weights<T>)> {
        self.check_dimension(n)?;
        let (mut queries, weights) = self.base_queries(n, rng)?;
        for w in &self.wrappers {
            let drawn;
            let q = match w {
                Wrapper::Rotated(q) => q,
                Wrapper::Symmetrized => {
                    drawn = haar_orthogonal_matrix(n, rng)?;
                    &drawn
                }
            };
            if q.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: q.n(),
                });
            }
            for x in queries.iter_mut() {
                *x = q.apply(x);
            }
        }
        Ok((queries, weights))
    }

    /// The queries and weights one estimate would use, after all wrappers.
    pub fn draw_queries(&self, n: usize, rng: &mut RandomSource) -> Result<(Vec<Vec<T>>, Vec<T>)> {
        let (queries, weights) = self.wrapped_queries(n, rng)?;
        let k = self.k;
        let explicit = match weights {
            Weights::Mean => vec![T::one() / T::of(k as f64); k],
            Weights::Uniform(w) => vec![w; k],
            Weights::Explicit(w) => w,
        };
        Ok((queries, explicit))
    }
}

enum Weights<T> {
    Mean,
    Uniform(T),
    Explicit(Vec<T>),
}

impl<T: Scalar> TraceEstimator<T> for LinearEstimator<T> {
    fn estimate(&self, a: &ImplicitMatrix<T>, rng: &mut RandomSource) -> Result<EstimateResult<T>> {
        let provenance = rng.provenance();
        let (queries, weights) = self.wrapped_queries(a.n(), rng)?;
        let answers = queries.iter().map(|x| a.quadratic_unchecked(x));
        let value = match weights {
            // Σf / k keeps exact answers exact (e.g. Rademacher on diagonal matrices)
            Weights::Mean => answers.sum::<T>() / T::of(self.k as f64),
            Weights::Uniform(w) => w * answers.sum::<T>(),
            Weights::Explicit(w) => answers.zip(w).fold(T::zero(), |acc, (f, wi)| acc + wi * f),
        };
        Ok(EstimateResult {
            value,
            queries_used: self.k,
            seed_provenance: provenance,
        })
    }

    fn id(&self) -> String {
        let mut s = match &self.kind {
            EstimatorKind::Rademacher => "rademacher".to_string(),
            EstimatorKind::Gaussian => "gaussian".to_string(),
            EstimatorKind::UnitVector => "unit".to_string(),
            EstimatorKind::Orthogonal => "orthogonal".to_string(),
            EstimatorKind::Configured(_) => "configured".to_string(),
        };
        for w in &self.wrappers {
            s = match w {
                Wrapper::Rotated(_) => format!("rot({s})"),
                Wrapper::Symmetrized => format!("sym({s})"),
            };
        }
        s
    }

    fn queries(&self) -> usize {
        self.k
    }
}

/// `h^Q`: the base estimator's queries mapped through `Q`, weights unchanged.
pub fn rotate_estimator<T: Scalar>(est: &LinearEstimator<T>, q: &OrthogonalMatrix<T>) -> Result<LinearEstimator<T>> {
    let defect = q.matrix().orthogonality_defect();
    if !(defect <= T::ortho_tol()) {
        return Err(Error::NotOrthogonal {
            deviation: defect.as_f64(),
        });
    }
    let mut out = est.clone();
    out.wrappers.push(Wrapper::Rotated(q.clone()));
    Ok(out)
}

/// `h^sym`: a fresh Haar rotation per estimate.
pub fn symmetrize_estimator<T: Scalar>(est: &LinearEstimator<T>) -> LinearEstimator<T> {
    let mut out = est.clone();
    out.wrappers.push(Wrapper::Symmetrized);
    out
}

/// Parses `rademacher`, `gaussian`, `unit`, `orthogonal`, `configured:<file>`
/// and `sym:<spec>`; `k` is ignored for configured estimators (it comes from the file).
pub fn parse_estimator<T: Scalar>(spec: &str, k: usize) -> Result<LinearEstimator<T>> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix("sym:") {
        return Ok(symmetrize_estimator(&parse_estimator(inner, k)?));
    }
    if let Some(path) = spec.strip_prefix("configured:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::EstimatorSpec(format!("cannot read `{path}`: {e}")))?;
        return LinearEstimator::configured(ConfigurationSpec::from_json(&text)?.build()?);
    }
    match spec {
        "rademacher" | "hutchinson" => LinearEstimator::rademacher(k),
        "gaussian" => LinearEstimator::gaussian(k),
        "unit" => LinearEstimator::unit_vector(k),
        "orthogonal" => LinearEstimator::orthogonal(k),
        other => Err(Error::EstimatorSpec(format!("unknown estimator `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::SquareMatrix;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn rademacher_on_diagonal_is_exact() {
        let a = ImplicitMatrix::diagonal(vec![1.0, 0.25, -3.5, 2.0]).unwrap();
        for k in [1, 3, 7] {
            let est = LinearEstimator::rademacher(k).unwrap();
            let mut rng = RandomSource::new(1, k as u64);
            for _ in 0..100 {
                assert_eq!(est.estimate(&a, &mut rng).unwrap().value, a.true_trace());
            }
        }
    }

    #[test]
    fn unit_vector_on_identity_returns_n() {
        let a = ImplicitMatrix::<f64>::identity(9).unwrap();
        let est = LinearEstimator::unit_vector(4).unwrap();
        let mut rng = RandomSource::new(2, 0);
        for _ in 0..100 {
            assert!((est.estimate(&a, &mut rng).unwrap().value - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_full_basis_is_exact() {
        let mut rng = RandomSource::new(3, 0);
        let q = haar_orthogonal_matrix::<f64>(6, &mut rng).unwrap();
        let a = ImplicitMatrix::diagonal(vec![1.0, -2.0, 0.5, 3.0, 0.0, 4.0])
            .unwrap()
            .similarity_transform(&q)
            .unwrap();
        let est = LinearEstimator::orthogonal(6).unwrap();
        for _ in 0..200 {
            let v = est.estimate(&a, &mut rng).unwrap();
            assert!((v.value - a.true_trace()).abs() <= 1e-9);
            assert_eq!(v.queries_used, 6);
        }
    }

    #[test]
    fn orthogonal_rejects_k_above_n() {
        let a = ImplicitMatrix::<f64>::identity(3).unwrap();
        let est = LinearEstimator::orthogonal(4).unwrap();
        assert!(est.estimate(&a, &mut RandomSource::new(0, 0)).is_err());
        assert!(LinearEstimator::<f64>::gaussian(0).is_err());
    }

    #[test]
    fn gaussian_on_zero_matrix() {
        let a = ImplicitMatrix::<f64>::zero(5).unwrap();
        let est = LinearEstimator::gaussian(3).unwrap();
        let mut rng = RandomSource::new(4, 0);
        for _ in 0..20 {
            assert_eq!(est.estimate(&a, &mut rng).unwrap().value, 0.0);
        }
    }

    #[test]
    fn rotation_by_identity_is_transparent() {
        let a = ImplicitMatrix::diagonal(vec![1.0, 2.0, 3.0]).unwrap();
        let base = LinearEstimator::gaussian(2).unwrap();
        let rot = rotate_estimator(&base, &OrthogonalMatrix::identity(3)).unwrap();
        let x = base.estimate(&a, &mut RandomSource::new(5, 1)).unwrap();
        let y = rot.estimate(&a, &mut RandomSource::new(5, 1)).unwrap();
        assert_eq!(x.value, y.value);
        assert_eq!(rot.id(), "rot(gaussian)");
    }

    #[test]
    fn rotate_rejects_non_orthogonal() {
        let base = LinearEstimator::<f64>::gaussian(1).unwrap();
        let bad = OrthogonalMatrix::from_trusted(SquareMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap());
        assert!(rotate_estimator(&base, &bad).is_err());
    }

    #[test]
    fn draw_queries_matches_estimate() {
        let a = ImplicitMatrix::diagonal(vec![0.3, 1.0, 2.0, 0.0]).unwrap();
        let est = symmetrize_estimator(&LinearEstimator::orthogonal(3).unwrap());
        let (qs, ws) = est.draw_queries(4, &mut RandomSource::new(6, 2)).unwrap();
        let direct: f64 = qs.iter().zip(&ws).map(|(x, w)| w * a.quadratic_query(x).unwrap()).sum();
        let v = est.estimate(&a, &mut RandomSource::new(6, 2)).unwrap().value;
        assert!((direct - v).abs() < 1e-12);
        assert_eq!(est.id(), "sym(orthogonal)");
    }

    #[test]
    fn configured_realizes_angles() {
        let k = 3;
        let angles = vec![PI / 3.0, PI / 2.0, PI / 4.0];
        let cfg = Configuration::new(5, vec![(1.0, angles.clone(), vec![5.0 / 3.0; 3])]).unwrap();
        let est = LinearEstimator::configured(cfg).unwrap();
        let (qs, _) = est.draw_queries(5, &mut RandomSource::new(7, 0)).unwrap();
        for i in 0..k {
            assert!((crate::dense::norm(&qs[i]) - 1.0).abs() < 1e-10);
            for j in (i + 1)..k {
                let c = crate::dense::dot(&qs[i], &qs[j]);
                assert!((c - angles[pair_index(k, i, j)].cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn configured_zero_angle_repeats_query() {
        let cfg = Configuration::uniform_angle(4, 0.0f64, vec![2.0, 2.0]).unwrap();
        assert_eq!(cfg.branches()[0].rank(), 1);
        let est = LinearEstimator::<f64>::configured(cfg).unwrap();
        let (qs, _) = est.draw_queries(4, &mut RandomSource::new(8, 0)).unwrap();
        for (a, b) in qs[0].iter().zip(&qs[1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn configured_rejects_infeasible_or_biased() {
        // three vectors pairwise at angle π: impossible
        assert!(matches!(
            Configuration::<f64>::uniform_angle(4, PI, vec![4.0 / 3.0; 3]),
            Err(Error::InfeasibleConfiguration(_))
        ));
        // 4 orthogonal vectors do not fit in ℝ³
        assert!(Configuration::<f64>::uniform_angle(3, PI / 2.0, vec![0.75; 4]).is_err());
        // weights must average to n
        assert!(Configuration::<f64>::uniform_angle(4, PI / 2.0, vec![1.0, 1.0]).is_err());
        // probabilities must sum to 1
        assert!(Configuration::<f64>::new(2, vec![(0.4, vec![], vec![2.0])]).is_err());
        // angles outside [0, π]
        assert!(Configuration::<f64>::uniform_angle(4, 4.0, vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn configured_dimension_must_match() {
        let cfg = Configuration::uniform_angle(4, PI / 2.0, vec![2.0, 2.0]).unwrap();
        let est = LinearEstimator::configured(cfg).unwrap();
        let a = ImplicitMatrix::<f64>::identity(5).unwrap();
        assert!(est.estimate(&a, &mut RandomSource::new(0, 0)).is_err());
    }

    #[test]
    fn configuration_spec_parses() {
        let text = r#"{"n": 4, "branches": [
            {"probability": 0.5, "angles": [1.5707963267948966], "weights": [2.0, 2.0]},
            {"probability": 0.5, "angles": [1.5707963267948966], "weights": [4.0, 0.0]}]}"#;
        let cfg = ConfigurationSpec::from_json(text).unwrap().build::<f64>().unwrap();
        assert_eq!(cfg.k(), 2);
        assert_eq!(cfg.branches().len(), 2);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(parse_estimator::<f64>("gaussian", 3).unwrap().id(), "gaussian");
        assert_eq!(parse_estimator::<f64>("sym:rademacher", 3).unwrap().id(), "sym(rademacher)");
        assert!(matches!(
            parse_estimator::<f64>("bogus", 1),
            Err(Error::EstimatorSpec(_))
        ));
        assert!(parse_estimator::<f64>("configured:/nonexistent.json", 1).is_err());
    }

    #[test]
    fn pair_index_layout() {
        let k = 4;
        let mut expected = 0;
        for i in 0..k {
            for j in (i + 1)..k {
                assert_eq!(pair_index(k, i, j), expected);
                expected += 1;
            }
        }
    }
}
