//! Named builtin matrices and the fixed family used as a worst-case-variance proxy.
//!
//! Builtin spec strings:
//!
//! | spec | matrix |
//! |---|---|
//! | `identity:n` | `I` |
//! | `diag-spike:n` | `e₁e₁ᵀ` |
//! | `diag-flat:n` | `I/√n` |
//! | `offdiag:n` | `(e₁e₂ᵀ + e₂e₁ᵀ)/√2` |
//! | `planted-rank1:n` | `uuᵀ`, random unit `u` |
//! | `planted-p1:n[:eps]` | `(uuᵀ + 2vvᵀ)/√5`, random orthonormal `(u, v)` |
//! | `planted-p2:n:eps` | the perturbed rank-2 instance at `eps` |
//! | `rotated:<inner>:seed` | `QᵀAQ` with Haar `Q` drawn from stream `(seed, 0)` |
//!
//! Anything else is read as a path to a JSON matrix spec.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::lowerbound::{sample_game5, GameParams, Hypothesis};
use crate::oracle::{ImplicitMatrix, MatrixSpec, PlantedFactor};
use crate::sampler::{haar_orthogonal_matrix, orthogonal_tuple, uniform_unit_vector, RandomSource};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix<T> {
    pub id: String,
    pub matrix: ImplicitMatrix<T>,
}

impl<T: Scalar> NamedMatrix<T> {
    pub fn new(id: impl Into<String>, matrix: ImplicitMatrix<T>) -> Self {
        NamedMatrix { id: id.into(), matrix }
    }
}

fn parse_usize(spec: &str, field: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::MatrixSpec(format!("`{spec}`: `{field}` is not a dimension")))
}

fn parse_f64(spec: &str, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::MatrixSpec(format!("`{spec}`: `{field}` is not a number")))
}

fn basis<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut e = vec![T::zero(); n];
    e[i] = T::one();
    e
}

/// `(uuᵀ + 2vvᵀ)/√5` for a random orthonormal pair.
pub fn game5_null<T: Scalar>(n: usize, rng: &mut RandomSource) -> Result<ImplicitMatrix<T>> {
    let mut t = orthogonal_tuple::<T>(n, 2, rng)?;
    let v = t.vectors.pop().unwrap();
    let u = t.vectors.pop().unwrap();
    let r5 = T::of(5f64.sqrt());
    ImplicitMatrix::planted(
        n,
        vec![
            PlantedFactor { coefficient: T::one() / r5, direction: u },
            PlantedFactor { coefficient: T::of(2.0) / r5, direction: v },
        ],
    )
}

/// Builds a matrix from a builtin spec string or a JSON spec file.
/// Randomized builtins (planted directions) draw from `rng`.
pub fn parse_matrix<T: Scalar>(spec: &str, rng: &mut RandomSource) -> Result<NamedMatrix<T>> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    let m = match parts.as_slice() {
        ["identity", n] => ImplicitMatrix::identity(parse_usize(spec, n)?)?,
        ["diag-spike", n] => {
            let n = parse_usize(spec, n)?;
            if n == 0 {
                return Err(Error::MatrixSpec(format!("`{spec}`: n must be at least 1")));
            }
            ImplicitMatrix::diagonal(basis(n, 0))?
        }
        ["diag-flat", n] => {
            let n = parse_usize(spec, n)?;
            if n == 0 {
                return Err(Error::MatrixSpec(format!("`{spec}`: n must be at least 1")));
            }
            ImplicitMatrix::diagonal(vec![T::one() / T::of((n as f64).sqrt()); n])?
        }
        ["offdiag", n] => {
            let n = parse_usize(spec, n)?;
            if n < 2 {
                return Err(Error::MatrixSpec(format!("`{spec}`: needs n ≥ 2")));
            }
            // (e₁e₂ᵀ + e₂e₁ᵀ)/√2 = (w₊w₊ᵀ − w₋w₋ᵀ)/√2 with w± = (e₁ ± e₂)/√2
            let h = T::of(std::f64::consts::FRAC_1_SQRT_2);
            let mut plus = vec![T::zero(); n];
            let mut minus = vec![T::zero(); n];
            plus[0] = h;
            plus[1] = h;
            minus[0] = h;
            minus[1] = -h;
            ImplicitMatrix::planted(
                n,
                vec![
                    PlantedFactor { coefficient: h, direction: plus },
                    PlantedFactor { coefficient: -h, direction: minus },
                ],
            )?
        }
        ["planted-rank1", n] => {
            let n = parse_usize(spec, n)?;
            let u = uniform_unit_vector::<T>(n, rng)?;
            ImplicitMatrix::planted(n, vec![PlantedFactor { coefficient: T::one(), direction: u }])?
        }
        ["planted-p1", n] | ["planted-p1", n, _] => {
            if let [_, _, eps] = parts.as_slice() {
                GameParams::new(parse_f64(spec, eps)?)?;
            }
            game5_null(parse_usize(spec, n)?, rng)?
        }
        ["planted-p2", n, eps] => {
            let params = GameParams::new(parse_f64(spec, eps)?)?;
            sample_game5::<T>(&params, parse_usize(spec, n)?, Hypothesis::P2, rng)?.0
        }
        ["rotated", .., last] if parts.len() >= 3 => {
            let seed: u64 = last
                .parse()
                .map_err(|_| Error::MatrixSpec(format!("`{spec}`: `{last}` is not a seed")))?;
            let inner_spec = &spec["rotated:".len()..spec.len() - last.len() - 1];
            let inner = parse_matrix::<T>(inner_spec, rng)?.matrix;
            let q = haar_orthogonal_matrix(inner.n(), &mut RandomSource::new(seed, 0))?;
            inner.similarity_transform(&q)?
        }
        _ => {
            let text = std::fs::read_to_string(spec).map_err(|e| {
                Error::MatrixSpec(format!(
                    "`{spec}` is neither a builtin matrix nor a readable spec file ({e})"
                ))
            })?;
            MatrixSpec::from_json(&text)?.build()?
        }
    };
    Ok(NamedMatrix::new(spec, m))
}

/// Unit-Frobenius family over which worst-case variance is approximated:
/// spike, flat diagonal, off-diagonal pair, planted rank-1 and rank-2, and
/// Haar rotations of the spike and the off-diagonal pair.
///
/// Every member is built from the incoming state of `rng`, so `parse_matrix(id, rng)`
/// on a fresh copy reproduces it; `rng` then advances by the two rotation seeds.
pub fn standard_family<T: Scalar>(n: usize, rng: &mut RandomSource) -> Result<Vec<NamedMatrix<T>>> {
    if n < 2 {
        return Err(Error::invalid("n", "the standard family needs n ≥ 2"));
    }
    let base = rng.clone();
    let rot_spike = rng.next_u64();
    let rot_off = rng.next_u64();
    [
        format!("diag-spike:{n}"),
        format!("diag-flat:{n}"),
        format!("offdiag:{n}"),
        format!("planted-rank1:{n}"),
        format!("planted-p1:{n}"),
        format!("rotated:diag-spike:{n}:{rot_spike}"),
        format!("rotated:offdiag:{n}:{rot_off}"),
    ]
    .iter()
    .map(|s| parse_matrix(s, &mut base.clone()))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(spec: &str) -> Result<NamedMatrix<f64>> {
        parse_matrix(spec, &mut RandomSource::new(4, 0))
    }

    #[test]
    fn builtins_have_expected_ground_truth() {
        let id = build("identity:7").unwrap();
        assert_eq!(id.matrix.true_trace(), 7.0);
        assert_eq!(id.id, "identity:7");
        let spike = build("diag-spike:16").unwrap().matrix;
        assert_eq!(spike.true_trace(), 1.0);
        let flat = build("diag-flat:16").unwrap().matrix;
        assert!((flat.frobenius_norm() - 1.0).abs() < 1e-15);
        let off = build("offdiag:5").unwrap().matrix;
        assert!(off.true_trace().abs() < 1e-15);
        assert!(off.diagonal_sum_of_squares().abs() < 1e-15);
        let mut e12 = vec![0.0; 5];
        e12[0] = 1.0;
        e12[1] = 1.0;
        assert!((off.quadratic_query(&e12).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn planted_instances() {
        let p1 = build("planted-p1:16").unwrap().matrix;
        assert!((p1.true_trace() - 3.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((p1.frobenius_norm() - 1.0).abs() < 1e-12);
        let p2 = build("planted-p2:16:0.1").unwrap().matrix;
        assert!((p2.frobenius_norm() - 1.0).abs() < 1e-10);
        assert!(build("planted-p2:16:0.5").is_err());
        assert!(build("planted-p1:16:0.4").is_err());
    }

    #[test]
    fn rotated_builtin_keeps_invariants() {
        let r = build("rotated:diag-spike:8:3").unwrap();
        assert_eq!(r.id, "rotated:diag-spike:8:3");
        assert!((r.matrix.true_trace() - 1.0).abs() < 1e-12);
        let again = build("rotated:diag-spike:8:3").unwrap();
        assert_eq!(r.matrix, again.matrix);
        let nested = build("rotated:rotated:offdiag:4:1:2").unwrap();
        assert!((nested.matrix.frobenius_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_specs_are_rejected() {
        assert!(build("bogus:3").is_err());
        assert!(build("identity:x").is_err());
        assert!(build("offdiag:1").is_err());
    }

    #[test]
    fn family_is_unit_frobenius() {
        let fam = standard_family::<f64>(16, &mut RandomSource::new(9, 0)).unwrap();
        assert_eq!(fam.len(), 7);
        for m in &fam {
            assert!((m.matrix.frobenius_norm() - 1.0).abs() < 1e-9, "{}", m.id);
            let again = parse_matrix::<f64>(&m.id, &mut RandomSource::new(9, 0)).unwrap();
            assert_eq!(again.matrix, m.matrix, "{}", m.id);
        }
    }
}
