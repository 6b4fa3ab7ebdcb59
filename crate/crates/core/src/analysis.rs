//! Monte Carlo evaluation of estimators and the Gaussian probability toolbox
//! (zero-mean KL divergence, Pinsker bound, scale-family total variation,
//! chi-square tail checks).
//!
//! Variances are always centered at the known trace: `Var(A, h) = E[(h(A) − tr A)²]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::TraceEstimator;
use crate::family::NamedMatrix;
use crate::oracle::ImplicitMatrix;
use crate::sampler::RandomSource;
use crate::scalar::Scalar;
use crate::stats::{binomial_stderr, chi_squared_cdf, success_radius};

/// One aggregated (estimator, matrix, k) cell. Serializes to the report CSV/JSON row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub estimator_id: String,
    pub matrix_id: String,
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "mean")]
    pub empirical_mean: f64,
    #[serde(rename = "variance")]
    pub empirical_variance: f64,
    pub stderr_mean: f64,
    #[serde(rename = "stderr_var")]
    pub stderr_variance: f64,
    pub success_rate: Option<f64>,
    pub epsilon: Option<f64>,
}

impl ExperimentReport {
    pub fn with_matrix_id(mut self, id: impl Into<String>) -> Self {
        self.matrix_id = id.into();
        self
    }
}

/// Mean/variance summary of estimates about a known center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub trials: u64,
    pub mean: f64,
    pub stderr_mean: f64,
    /// `Σ (hᵢ − center)² / N`
    pub variance: f64,
    /// From the spread of the squared deviations (fourth-moment formula).
    pub stderr_variance: f64,
}

impl TrialSummary {
    pub fn from_values(values: &[f64], center: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let spread = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let variance = values.iter().map(|v| (v - center).powi(2)).sum::<f64>() / n;
        let fourth = values
            .iter()
            .map(|v| ((v - center).powi(2) - variance).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        TrialSummary {
            trials: values.len() as u64,
            mean,
            stderr_mean: (spread / n).sqrt(),
            variance,
            stderr_variance: (fourth / n).sqrt(),
        }
    }
}

/// Raw estimates for `trials` independent runs; trial `i` uses stream `rng.derive(i)`,
/// so the output does not depend on the worker count.
pub fn sample_estimates<T: Scalar, E: TraceEstimator<T> + ?Sized>(
    est: &E,
    a: &ImplicitMatrix<T>,
    trials: usize,
    rng: &RandomSource,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i as u64);
            est.estimate(a, &mut r).map(|e| e.value.as_f64())
        })
        .collect()
}

fn require_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 trials"));
    }
    Ok(())
}

pub fn run_trials<T: Scalar, E: TraceEstimator<T> + ?Sized>(
    est: &E,
    a: &ImplicitMatrix<T>,
    trials: usize,
    rng: &RandomSource,
) -> Result<ExperimentReport> {
    require_trials(trials)?;
    let values = sample_estimates(est, a, trials, rng)?;
    let s = TrialSummary::from_values(&values, a.true_trace().as_f64());
    Ok(ExperimentReport {
        estimator_id: est.id(),
        matrix_id: a.describe(),
        n: a.n(),
        k: est.queries(),
        trials: s.trials,
        seed: rng.seed(),
        empirical_mean: s.mean,
        empirical_variance: s.variance,
        stderr_mean: s.stderr_mean,
        stderr_variance: s.stderr_variance,
        success_rate: None,
        epsilon: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticKind {
    Gaussian,
    Rademacher,
}

/// `(2/k)‖A‖²_F` (Gaussian) or `(2/k)(‖A‖²_F − Σ A²ᵢᵢ)` (Rademacher).
pub fn analytic_variance<T: Scalar>(kind: AnalyticKind, a: &ImplicitMatrix<T>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "need at least one query"));
    }
    let fro2 = a.frobenius_norm().as_f64().powi(2);
    let single = match kind {
        AnalyticKind::Gaussian => 2.0 * fro2,
        AnalyticKind::Rademacher => 2.0 * (fro2 - a.diagonal_sum_of_squares().as_f64()).max(0.0),
    };
    Ok(single / k as f64)
}

/// Family maximum of per-matrix empirical variance, a proxy for `sup_{‖A‖_F=1} Var(A, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub variance: f64,
    pub stderr: f64,
    pub matrix_id: String,
    pub reports: Vec<ExperimentReport>,
}

pub fn worst_case_variance<T: Scalar, E: TraceEstimator<T> + ?Sized>(
    est: &E,
    family: &[NamedMatrix<T>],
    trials: usize,
    rng: &RandomSource,
) -> Result<WorstCase> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for m in family {
        let f = m.matrix.frobenius_norm().as_f64();
        if (f - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "family",
                format!("`{}` has ‖A‖_F = {f}, expected 1", m.id),
            ));
        }
    }
    let mut reports = Vec::with_capacity(family.len());
    // common random numbers: each row is reproducible from (matrix, seed) alone
    for m in family {
        reports.push(run_trials(est, &m.matrix, trials, rng)?.with_matrix_id(&m.id));
    }
    let worst = reports
        .iter()
        .max_by(|a, b| a.empirical_variance.total_cmp(&b.empirical_variance))
        .expect("non-empty family");
    Ok(WorstCase {
        variance: worst.empirical_variance,
        stderr: worst.stderr_variance,
        matrix_id: worst.matrix_id.clone(),
        reports: reports.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessEstimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    /// 95% confidence half-width.
    pub radius: f64,
    pub report: ExperimentReport,
}

/// Fraction of trials with `|h(A) − tr A| ≤ ε·tr A`.
pub fn eps_delta_success<T: Scalar, E: TraceEstimator<T> + ?Sized>(
    est: &E,
    a: &ImplicitMatrix<T>,
    epsilon: f64,
    trials: usize,
    rng: &RandomSource,
) -> Result<SuccessEstimate> {
    require_trials(trials)?;
    let tr = a.true_trace().as_f64();
    if !(tr > 0.0) {
        return Err(Error::invalid(
            "matrix",
            "a multiplicative guarantee needs trace(A) > 0",
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let values = sample_estimates(est, a, trials, rng)?;
    let successes = values.iter().filter(|&&h| (h - tr).abs() <= epsilon * tr).count() as u64;
    let s = TrialSummary::from_values(&values, tr);
    let rate = successes as f64 / trials as f64;
    Ok(SuccessEstimate {
        successes,
        trials: trials as u64,
        rate,
        radius: success_radius(successes, trials as u64),
        report: ExperimentReport {
            estimator_id: est.id(),
            matrix_id: a.describe(),
            n: a.n(),
            k: est.queries(),
            trials: trials as u64,
            seed: rng.seed(),
            empirical_mean: s.mean,
            empirical_variance: s.variance,
            stderr_mean: s.stderr_mean,
            stderr_variance: s.stderr_variance,
            success_rate: Some(rate),
            epsilon: Some(epsilon),
        },
    })
}

fn check_variances(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(name, "empty covariance"));
    }
    if let Some(bad) = v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(name, format!("variance {bad} is not positive")));
    }
    Ok(())
}

/// `d_KL(N(0, Σ₀) ‖ N(0, Σ₁))` for diagonal covariances given as variances:
/// `½(tr(Σ₁⁻¹Σ₀) − n − ln(det Σ₀ / det Σ₁))`.
pub fn kl_zero_mean_gaussians(sigma0: &[f64], sigma1: &[f64]) -> Result<f64> {
    check_variances("sigma0", sigma0)?;
    check_variances("sigma1", sigma1)?;
    if sigma0.len() != sigma1.len() {
        return Err(Error::DimensionMismatch {
            expected: sigma0.len(),
            actual: sigma1.len(),
        });
    }
    let total: f64 = sigma0
        .iter()
        .zip(sigma1)
        .map(|(s0, s1)| {
            let r = s0 / s1;
            ((r - 1.0) - r.ln()).max(0.0)
        })
        .sum();
    Ok(0.5 * total)
}

/// Pinsker: `TV ≤ √(KL/2)`.
pub fn pinsker_tv_upper(kl: f64) -> Result<f64> {
    if !(kl >= 0.0) {
        return Err(Error::invalid("kl", "divergence must be nonnegative"));
    }
    Ok((kl / 2.0).sqrt())
}

/// Squared radius where the densities of `N(0, var0)ᵏ` and `N(0, var1)ᵏ` cross.
pub fn crossing_radius_sq(var0: f64, var1: f64, k: usize) -> f64 {
    k as f64 * (var1 / var0).ln() / (1.0 / var0 - 1.0 / var1)
}

/// Exact `d_TV(N(0, σ₀²)ᵏ, N(0, σ₁²)ᵏ)` (standard deviations in).
///
/// The likelihood ratio is monotone in `‖z‖²`, so the TV set is a ball and
/// `TV = |F_k(r*²/σ₀²) − F_k(r*²/σ₁²)|` with chi-square CDFs.
pub fn scale_family_tv(sigma0: f64, sigma1: f64, k: usize) -> Result<f64> {
    if !(sigma0 > 0.0 && sigma1 > 0.0) {
        return Err(Error::invalid("sigma", "standard deviations must be positive"));
    }
    if k == 0 || sigma0 == sigma1 {
        return Ok(0.0);
    }
    let (v0, v1) = (sigma0 * sigma0, sigma1 * sigma1);
    let r2 = crossing_radius_sq(v0, v1, k);
    Ok((chi_squared_cdf(k, r2 / v0) - chi_squared_cdf(k, r2 / v1)).abs())
}

/// Monte Carlo check of the chi-square tail bounds at deviation `t`:
/// `Pr(X > k + 2√k t + 2t²) ≤ e^{−t²}` and `Pr(X < k − 2√k t) ≤ e^{−t²}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub k: usize,
    pub t: f64,
    pub trials: u64,
    pub upper_threshold: f64,
    pub lower_threshold: f64,
    pub empirical_upper: f64,
    pub empirical_lower: f64,
    pub bound: f64,
    /// Binomial standard error at the bound, `√(b(1−b)/N)`.
    pub stderr_at_bound: f64,
}

impl TailCheck {
    pub fn holds(&self, sigmas: f64) -> bool {
        let ceiling = self.bound + sigmas * self.stderr_at_bound;
        self.empirical_upper <= ceiling && self.empirical_lower <= ceiling
    }
}

pub fn chi_square_tail_check(k: usize, t: f64, trials: usize, rng: &RandomSource) -> Result<TailCheck> {
    if k == 0 {
        return Err(Error::invalid("k", "need at least one degree of freedom"));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", "must be nonnegative"));
    }
    if trials < 10_000 {
        return Err(Error::invalid("trials", "need at least 10⁴ trials"));
    }
    let kf = k as f64;
    let upper = kf + 2.0 * kf.sqrt() * t + 2.0 * t * t;
    let lower = kf - 2.0 * kf.sqrt() * t;
    let (above, below) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i as u64);
            let x: f64 = (0..k).map(|_| r.standard_normal().powi(2)).sum();
            ((x > upper) as u64, (x < lower) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let bound = (-t * t).exp();
    let n = trials as u64;
    Ok(TailCheck {
        k,
        t,
        trials: n,
        upper_threshold: upper,
        lower_threshold: lower,
        empirical_upper: above as f64 / trials as f64,
        empirical_lower: below as f64 / trials as f64,
        bound,
        stderr_at_bound: binomial_stderr(bound.min(1.0), n),
    })
}
