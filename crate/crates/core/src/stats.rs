//! Goodness-of-fit and interval helpers shared by the analysis and game code.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsOutcome {
    /// Not rejected at level `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (−1)^{j−1} e^{−2j²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-18 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let sq = effective_n.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsOutcome {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsOutcome {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsOutcome {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    KsOutcome {
        statistic: d,
        p_value: ks_p_value(d, n * m / (n + m)),
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

pub fn chi_squared_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").cdf(x)
}

pub fn chi_squared_pdf(dof: usize, x: f64) -> f64 {
    use statrs::distribution::Continuous;
    if x <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").pdf(x)
}

/// `√(p(1−p)/n)`
pub fn binomial_stderr(rate: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (rate * (1.0 - rate) / trials as f64).sqrt()
}

/// Half-width of a 95% interval for a success rate: normal approximation, or
/// the Wilson interval when fewer than 30 successes or failures were seen.
pub fn success_radius(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    if successes >= 30 && trials - successes >= 30 {
        return z * (p * (1.0 - p) / n).sqrt();
    }
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // widest distance from p to either Wilson endpoint
    ((center + half) - p).max(p - (center - half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.628) ≈ 0.01 and Q(1.358) ≈ 0.05
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 2e-4);
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 2e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.2).collect();
        assert!(!ks_two_sample(&a, &b).passes(0.01));
        assert!(ks_two_sample(&a, &a).passes(0.01));
        let uniform = ks_one_sample(&a, |x| x.clamp(0.0, 1.0));
        assert!(uniform.statistic <= 1.0 / 1000.0 + 1e-12);
    }

    #[test]
    fn wilson_fallback_for_rare_events() {
        let r = success_radius(0, 100);
        assert!(r > 0.0 && r < 0.05);
        let normal = success_radius(500, 1000);
        assert!((normal - 1.96 * (0.25f64 / 1000.0).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn chi_squared_helpers() {
        assert!((chi_squared_cdf(2, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(chi_squared_cdf(3, -1.0), 0.0);
        assert!((normal_quantile(normal_cdf(0.7)) - 0.7).abs() < 1e-9);
    }
}
