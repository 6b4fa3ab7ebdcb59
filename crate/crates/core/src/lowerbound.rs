//! Distinguishing games behind the variance and `(ε, δ)` lower bounds.
//!
//! * Game 5: rank-2 planted matrices `P₁ = (uuᵀ + 2vvᵀ)/√5` against the
//!   perturbed `P₂ = ((1+2ε)uuᵀ + (2−ε)vvᵀ)/C`, played with strong queries
//!   that reveal the scaled projections `(√α⟨u,x⟩, √β⟨v,x⟩)`.
//! * Game 6: rank-1 `uuᵀ` against `(1+3ε)uuᵀ`, played with the scaled
//!   projection oracle `x ↦ trace(A)⟨u,x⟩`.
//!
//! Both games reduce to testing zero-mean Gaussian scale families, where the
//! likelihood-ratio test thresholds squared norms.
//!
//! Large-`n` rounds are simulated through the distribution of the responses
//! instead of explicit `n`-dimensional vectors: the responses to `k` Haar
//! orthogonal queries are a `k`-prefix of one or two Haar rows, which
//! [`haar_row_prefixes`] samples exactly in `O(k)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::analysis::{crossing_radius_sq, scale_family_tv};
use crate::dense::dot;
use crate::error::{Error, Result};
use crate::estimators::{symmetrize_estimator, EstimateResult, LinearEstimator, TraceEstimator};
use crate::oracle::{ImplicitMatrix, PlantedFactor};
use crate::sampler::{haar_row_prefixes, orthogonal_tuple, uniform_unit_vector, RandomSource};
use crate::scalar::Scalar;
use crate::stats::{binomial_stderr, chi_squared_cdf};

/// Largest `n` simulated with explicit vectors under [`SimulationMode::Auto`].
pub const EXPLICIT_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    P1,
    P2,
}

impl Hypothesis {
    pub fn fair(rng: &mut RandomSource) -> Self {
        if rng.coin() {
            Hypothesis::P2
        } else {
            Hypothesis::P1
        }
    }
}

/// `ε` and the derived rank-2 constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    pub epsilon: f64,
    /// `(1+2ε)/√(1+ε²) − 1`
    pub eps1: f64,
    /// `2 − (2−ε)/√(1+ε²)`
    pub eps2: f64,
    pub eps3: f64,
    /// `√(5(1+ε²))`
    pub c: f64,
}

impl GameParams {
    /// Closed forms at any `ε ≥ 0`, without the game's range check.
    pub fn closed_forms(epsilon: f64) -> Self {
        let root = (1.0 + epsilon * epsilon).sqrt();
        let eps1 = (1.0 + 2.0 * epsilon) / root - 1.0;
        let eps2 = 2.0 - (2.0 - epsilon) / root;
        GameParams {
            epsilon,
            eps1,
            eps2,
            eps3: eps1 - eps2,
            c: (5.0 * (1.0 + epsilon * epsilon)).sqrt(),
        }
    }

    /// Validated parameters for `ε ∈ (0, 1/3)`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0 / 3.0) {
            return Err(Error::invalid("epsilon", format!("{epsilon} is outside (0, 1/3)")));
        }
        let p = Self::closed_forms(epsilon);
        let direct = (1.0 + 2.0 * epsilon).powi(2) + (2.0 - epsilon).powi(2);
        if (p.c * p.c - direct).abs() > 1e-12 {
            return Err(Error::invalid("epsilon", "normalizing constant mismatch"));
        }
        let range = 0.0..=3.0 * epsilon;
        if !(range.contains(&p.eps1) && range.contains(&p.eps2) && p.eps3 > 0.0) {
            return Err(Error::invalid("epsilon", "derived constants out of range"));
        }
        Ok(p)
    }

    /// `(α, β)` of the rank-2 instance.
    pub fn game5_coefficients(&self, which: Hypothesis) -> (f64, f64) {
        let r5 = 5f64.sqrt();
        match which {
            Hypothesis::P1 => (1.0 / r5, 2.0 / r5),
            Hypothesis::P2 => ((1.0 + 2.0 * self.epsilon) / self.c, (2.0 - self.epsilon) / self.c),
        }
    }

    pub fn game5_trace(&self, which: Hypothesis) -> f64 {
        let (a, b) = self.game5_coefficients(which);
        a + b
    }

    /// `(3 + ε₃/2)/√5`, halfway between the two traces.
    pub fn game5_threshold(&self) -> f64 {
        (3.0 + 0.5 * self.eps3) / 5f64.sqrt()
    }

    /// Variance budget `ε₃²/60` of the variance-to-distinguisher reduction.
    pub fn game5_variance_budget(&self) -> f64 {
        self.eps3 * self.eps3 / 60.0
    }

    /// Trace of the rank-1 instance: `1` or `1 + 3ε`.
    pub fn game6_scale(&self, which: Hypothesis) -> f64 {
        match which {
            Hypothesis::P1 => 1.0,
            Hypothesis::P2 => 1.0 + 3.0 * self.epsilon,
        }
    }
}

/// Hidden orthonormal directions with coefficients: `A = α uuᵀ + β vvᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPair<T> {
    pub u: Vec<T>,
    pub v: Option<Vec<T>>,
    pub alpha: T,
    pub beta: T,
}

impl<T: Scalar> PlantedPair<T> {
    pub fn new(u: Vec<T>, v: Option<Vec<T>>, alpha: T, beta: T) -> Result<Self> {
        if alpha < T::zero() || beta < T::zero() {
            return Err(Error::invalid("alpha/beta", "coefficients must be nonnegative"));
        }
        if v.is_none() && beta != T::zero() {
            return Err(Error::invalid("beta", "a rank-1 pair has no second coefficient"));
        }
        let mut dev = (dot(&u, &u) - T::one()).abs();
        if let Some(v) = &v {
            if v.len() != u.len() {
                return Err(Error::DimensionMismatch {
                    expected: u.len(),
                    actual: v.len(),
                });
            }
            dev = dev.max((dot(v, v) - T::one()).abs()).max(dot(&u, v).abs());
        }
        if !(dev <= T::ortho_tol()) {
            return Err(Error::NotOrthonormal {
                deviation: dev.as_f64(),
            });
        }
        Ok(PlantedPair { u, v, alpha, beta })
    }

    pub fn n(&self) -> usize {
        self.u.len()
    }

    pub fn rank(&self) -> usize {
        1 + self.v.is_some() as usize
    }

    pub fn trace(&self) -> T {
        self.alpha + self.beta
    }

    pub fn matrix(&self) -> Result<ImplicitMatrix<T>> {
        let mut factors = vec![PlantedFactor {
            coefficient: self.alpha,
            direction: self.u.clone(),
        }];
        if let Some(v) = &self.v {
            factors.push(PlantedFactor {
                coefficient: self.beta,
                direction: v.clone(),
            });
        }
        ImplicitMatrix::planted(self.n(), factors)
    }
}

/// Rank-2 game instance with Haar-random orthonormal `(u, v)`.
pub fn sample_game5<T: Scalar>(
    params: &GameParams,
    n: usize,
    which: Hypothesis,
    rng: &mut RandomSource,
) -> Result<(ImplicitMatrix<T>, PlantedPair<T>)> {
    if n < 2 {
        return Err(Error::invalid("n", "the rank-2 game needs n ≥ 2"));
    }
    let mut t = orthogonal_tuple::<T>(n, 2, rng)?;
    let v = t.vectors.pop().unwrap();
    let u = t.vectors.pop().unwrap();
    let (a, b) = params.game5_coefficients(which);
    let pair = PlantedPair::new(u, Some(v), T::of(a), T::of(b))?;
    Ok((pair.matrix()?, pair))
}

/// Rank-1 game instance `τ uuᵀ` with uniform unit `u`.
pub fn sample_game6<T: Scalar>(
    params: &GameParams,
    n: usize,
    which: Hypothesis,
    rng: &mut RandomSource,
) -> Result<(ImplicitMatrix<T>, PlantedPair<T>)> {
    let u = uniform_unit_vector::<T>(n, rng)?;
    let pair = PlantedPair::new(u, None, T::of(params.game6_scale(which)), T::zero())?;
    Ok((pair.matrix()?, pair))
}

fn require_unit<T: Scalar>(pair: &PlantedPair<T>, x: &[T]) -> Result<()> {
    if x.len() != pair.n() {
        return Err(Error::DimensionMismatch {
            expected: pair.n(),
            actual: x.len(),
        });
    }
    let dev = (dot(x, x).sqrt() - T::one()).abs();
    if !(dev.as_f64() <= 1e-9) {
        return Err(Error::invalid("x", "strong queries must be unit vectors"));
    }
    Ok(())
}

/// `(√α⟨u,x⟩, √β⟨v,x⟩)`; the second entry is 0 for rank-1 pairs.
pub fn strong_query<T: Scalar>(pair: &PlantedPair<T>, x: &[T]) -> Result<(T, T)> {
    require_unit(pair, x)?;
    let a = pair.alpha.sqrt() * dot(&pair.u, x);
    let b = match &pair.v {
        Some(v) => pair.beta.sqrt() * dot(v, x),
        None => T::zero(),
    };
    Ok((a, b))
}

/// `trace(A)·⟨u,x⟩` for a rank-1 pair.
pub fn scaled_projection_query<T: Scalar>(pair: &PlantedPair<T>, x: &[T]) -> Result<T> {
    if pair.v.is_some() {
        return Err(Error::invalid("pair", "the scaled-projection oracle is defined for rank-1 pairs"));
    }
    require_unit(pair, x)?;
    Ok(pair.trace() * dot(&pair.u, x))
}

/// Reports `trace(A) + N(0, variance)` without querying: a synthetic
/// estimator with exactly the given variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyTraceOracle {
    pub variance: f64,
}

impl NoisyTraceOracle {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid("variance", "must be finite and nonnegative"));
        }
        Ok(NoisyTraceOracle { variance })
    }
}

impl<T: Scalar> TraceEstimator<T> for NoisyTraceOracle {
    fn estimate(&self, a: &ImplicitMatrix<T>, rng: &mut RandomSource) -> Result<EstimateResult<T>> {
        let provenance = rng.provenance();
        let noise = self.variance.sqrt() * rng.standard_normal();
        Ok(EstimateResult {
            value: T::of(a.true_trace().as_f64() + noise),
            queries_used: 1,
            seed_provenance: provenance,
        })
    }

    fn id(&self) -> String {
        format!("noisy-trace(var={:e})", self.variance)
    }

    fn queries(&self) -> usize {
        1
    }
}

/// Rank-2 decision from one trace estimate: `P₁` iff `h(A) ≤ (3 + ε₃/2)/√5`.
pub fn variance_distinguisher<T: Scalar, E: TraceEstimator<T> + ?Sized>(
    h: &E,
    a: &ImplicitMatrix<T>,
    params: &GameParams,
    rng: &mut RandomSource,
) -> Result<Hypothesis> {
    let value = h.estimate(a, rng)?.value.as_f64();
    Ok(if value <= params.game5_threshold() {
        Hypothesis::P1
    } else {
        Hypothesis::P2
    })
}

/// Success count of a game played over independent fair rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameOutcome {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub stderr: f64,
    /// `½ + ½·d_TV` of the Gaussian surrogate, when one exists.
    pub analytic_ceiling: Option<f64>,
}

impl GameOutcome {
    pub fn new(successes: u64, trials: u64, analytic_ceiling: Option<f64>) -> Self {
        let rate = if trials == 0 {
            0.5
        } else {
            successes as f64 / trials as f64
        };
        GameOutcome {
            successes,
            trials,
            rate,
            stderr: binomial_stderr(rate, trials),
            analytic_ceiling,
        }
    }
}

/// Plays the rank-2 game with `variance_distinguisher` around `h`.
pub fn variance_game<E: TraceEstimator<f64> + ?Sized>(
    h: &E,
    params: &GameParams,
    n: usize,
    trials: usize,
    rng: &RandomSource,
) -> Result<GameOutcome> {
    let wins: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i as u64);
            let truth = Hypothesis::fair(&mut r);
            let (a, _) = sample_game5::<f64>(params, n, truth, &mut r)?;
            Ok(variance_distinguisher(h, &a, params, &mut r)? == truth)
        })
        .collect::<Result<_>>()?;
    Ok(GameOutcome::new(wins.iter().filter(|&&w| w).count() as u64, trials as u64, None))
}

/// `N(0, var0)ᵏ` (hypothesis `P₁`) against `N(0, var1)ᵏ` (hypothesis `P₂`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFamily {
    pub var0: f64,
    pub var1: f64,
}

impl ScaleFamily {
    pub fn new(var0: f64, var1: f64) -> Result<Self> {
        if !(var0 > 0.0 && var1 > 0.0 && var0.is_finite() && var1.is_finite()) {
            return Err(Error::invalid("variance", "scale-family variances must be positive"));
        }
        if var0 == var1 {
            return Err(Error::invalid("variance", "equal variances cannot be distinguished"));
        }
        Ok(ScaleFamily { var0, var1 })
    }

    /// Variance `1` against `1 + θ`.
    pub fn tv_normal(theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::invalid("theta", "must be positive"));
        }
        Self::new(1.0, 1.0 + theta)
    }

    /// The rank-1 game's surrogate: `N(0, 1/n)` against `N(0, (1+3ε)²/n)`.
    pub fn game6(params: &GameParams, n: usize) -> Result<Self> {
        let s = params.game6_scale(Hypothesis::P2);
        Self::new(1.0 / n as f64, s * s / n as f64)
    }

    /// Squared density-crossing radius in `k` dimensions.
    pub fn crossing_radius_sq(&self, k: usize) -> f64 {
        crossing_radius_sq(self.var0, self.var1, k)
    }

    fn wider(&self) -> Hypothesis {
        if self.var1 > self.var0 {
            Hypothesis::P2
        } else {
            Hypothesis::P1
        }
    }

    fn other(h: Hypothesis) -> Hypothesis {
        match h {
            Hypothesis::P1 => Hypothesis::P2,
            Hypothesis::P2 => Hypothesis::P1,
        }
    }

    /// `wider` hypothesis iff `stat ≥ threshold`.
    fn side(&self, stat: f64, threshold: f64) -> Hypothesis {
        if stat >= threshold {
            self.wider()
        } else {
            Self::other(self.wider())
        }
    }

    /// Likelihood-ratio test on `‖z‖²`. An empty sample is a tie, decided as `P₁`.
    pub fn decide(&self, sample: &[f64]) -> Hypothesis {
        if sample.is_empty() {
            return Hypothesis::P1;
        }
        let energy: f64 = sample.iter().map(|z| z * z).sum();
        self.side(energy, self.crossing_radius_sq(sample.len()))
    }

    pub fn tv(&self, k: usize) -> f64 {
        scale_family_tv(self.var0.sqrt(), self.var1.sqrt(), k).expect("validated variances")
    }

    /// `½ + ½·d_TV`: the best possible success rate from `k` samples.
    pub fn success(&self, k: usize) -> f64 {
        0.5 + 0.5 * self.tv(k)
    }
}

/// Likelihood-ratio decision between variance `1` and `1 + θ`.
pub fn lr_distinguisher(sample: &[f64], theta: f64) -> Result<Hypothesis> {
    Ok(ScaleFamily::tv_normal(theta)?.decide(sample))
}

/// Distinguishers compared on the rank-1 game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distinguisher {
    /// Likelihood ratio on the scaled projections.
    LikelihoodRatio,
    /// Mean absolute response against the midpoint of its two expectations.
    MeanThreshold,
    /// Largest squared response against the best fixed threshold.
    MaxCoordinate,
    /// Likelihood ratio on the first `⌈k/2⌉` responses only.
    HalfEnergy,
    /// Symmetrized Gaussian trace estimate (quadratic queries) against its own best threshold.
    SymmetrizedGaussian,
}

impl Distinguisher {
    pub const ALL: [Distinguisher; 5] = [
        Distinguisher::LikelihoodRatio,
        Distinguisher::MeanThreshold,
        Distinguisher::MaxCoordinate,
        Distinguisher::HalfEnergy,
        Distinguisher::SymmetrizedGaussian,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        Distinguisher::ALL
            .into_iter()
            .find(|d| d.name() == name)
            .ok_or_else(|| Error::invalid("distinguisher", format!("unknown distinguisher `{name}`")))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distinguisher::LikelihoodRatio => "lr",
            Distinguisher::MeanThreshold => "mean-threshold",
            Distinguisher::MaxCoordinate => "max-coordinate",
            Distinguisher::HalfEnergy => "half-energy",
            Distinguisher::SymmetrizedGaussian => "sym-gaussian",
        }
    }
}

/// Threshold `c` maximizing the success of "`max zᵢ² ≥ c` ⇒ wider hypothesis".
fn max_coordinate_threshold(family: &ScaleFamily, k: usize) -> f64 {
    let (lo, hi) = if family.var0 < family.var1 {
        (family.var0, family.var1)
    } else {
        (family.var1, family.var0)
    };
    let gain = |c: f64| {
        let k = k as i32;
        chi_squared_cdf(1, c / lo).powi(k) - chi_squared_cdf(1, c / hi).powi(k)
    };
    let (a, b) = ((lo * 1e-4).ln(), (hi * 200.0).ln());
    let steps = 400;
    let mut best = (f64::NEG_INFINITY, a);
    for i in 0..=steps {
        let x = a + (b - a) * i as f64 / steps as f64;
        let g = gain(x.exp());
        if g > best.0 {
            best = (g, x);
        }
    }
    // golden-section refinement inside the neighbouring grid cells
    let h = (b - a) / steps as f64;
    let (mut l, mut r) = (best.1 - h, best.1 + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = r - phi * (r - l);
        let m2 = l + phi * (r - l);
        if gain(m1.exp()) < gain(m2.exp()) {
            l = m1;
        } else {
            r = m2;
        }
    }
    (0.5 * (l + r)).exp()
}

/// Fixed per-cell thresholds for every distinguisher.
#[derive(Debug, Clone, Copy)]
struct Game6Rules {
    family: ScaleFamily,
    k: usize,
    mean_threshold: f64,
    max_threshold: f64,
    /// Scale family seen by the quadratic-query estimate: variance `τ` per coordinate.
    quadratic: ScaleFamily,
}

impl Game6Rules {
    fn new(params: &GameParams, n: usize, k: usize) -> Result<Self> {
        let family = ScaleFamily::game6(params, n)?;
        let mean_threshold =
            0.5 * (family.var0.sqrt() + family.var1.sqrt()) * (2.0 / std::f64::consts::PI).sqrt();
        let max_threshold = if k == 0 {
            0.0
        } else {
            max_coordinate_threshold(&family, k)
        };
        let quadratic = ScaleFamily::new(params.game6_scale(Hypothesis::P1), params.game6_scale(Hypothesis::P2))?;
        Ok(Game6Rules {
            family,
            k,
            mean_threshold,
            max_threshold,
            quadratic,
        })
    }

    fn decide(&self, which: Distinguisher, z: &[f64], quadratic_sum: f64) -> Hypothesis {
        if self.k == 0 {
            return Hypothesis::P1;
        }
        let f = &self.family;
        match which {
            Distinguisher::LikelihoodRatio => f.decide(z),
            Distinguisher::MeanThreshold => {
                let m = z.iter().map(|x| x.abs()).sum::<f64>() / z.len() as f64;
                f.side(m, self.mean_threshold)
            }
            Distinguisher::MaxCoordinate => {
                let m = z.iter().fold(0.0f64, |acc, x| acc.max(x * x));
                f.side(m, self.max_threshold)
            }
            Distinguisher::HalfEnergy => f.decide(&z[..self.k.div_ceil(2)]),
            Distinguisher::SymmetrizedGaussian => {
                self.quadratic.side(quadratic_sum, self.quadratic.crossing_radius_sq(self.k))
            }
        }
    }
}

/// How game rounds produce oracle responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    /// Explicit `n`-dimensional planted vectors and Haar queries.
    Explicit,
    /// Exact response distribution from Haar row prefixes.
    Reduced,
    /// Explicit up to [`EXPLICIT_LIMIT`], reduced beyond.
    Auto,
}

impl SimulationMode {
    fn explicit(self, n: usize) -> bool {
        match self {
            SimulationMode::Explicit => true,
            SimulationMode::Reduced => false,
            SimulationMode::Auto => n <= EXPLICIT_LIMIT,
        }
    }
}

/// One round of the rank-1 game: scaled projections of `k` orthogonal queries and
/// the symmetrized Gaussian estimator's `k·h(A)`.
fn game6_round(
    params: &GameParams,
    n: usize,
    k: usize,
    which: Hypothesis,
    explicit: bool,
    rng: &mut RandomSource,
) -> Result<(Vec<f64>, f64)> {
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if explicit {
        let (a, pair) = sample_game6::<f64>(params, n, which, rng)?;
        let queries = orthogonal_tuple::<f64>(n, k, rng)?;
        let z = queries
            .vectors
            .iter()
            .map(|x| scaled_projection_query(&pair, x))
            .collect::<Result<Vec<_>>>()?;
        let sym = symmetrize_estimator(&LinearEstimator::<f64>::gaussian(k)?);
        let s = sym.estimate(&a, rng)?.value * k as f64;
        Ok((z, s))
    } else {
        let tau = params.game6_scale(which);
        let prefix = haar_row_prefixes::<f64>(n, 1, k, rng)?;
        let z = prefix[0].iter().map(|p| tau * p).collect();
        // Gaussian queries are rotation invariant, so ⟨gᵢ, Uu⟩ are i.i.d. N(0, 1)
        let s = tau * (0..k).map(|_| rng.standard_normal().powi(2)).sum::<f64>();
        Ok((z, s))
    }
}

fn check_game(n: usize, k: usize, trials: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "dimension must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid("k", format!("k ≤ n required (k = {k}, n = {n})")));
    }
    if trials < 1000 {
        return Err(Error::invalid("trials", "games need at least 10³ rounds"));
    }
    Ok(())
}

/// Every distinguisher's outcome on one `(ε, n, k)` cell of the rank-1 game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Game6Cell {
    pub epsilon: f64,
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    /// `½ + ½·d_TV` of the Gaussian surrogate.
    pub analytic_ceiling: f64,
    pub outcomes: Vec<(Distinguisher, GameOutcome)>,
}

impl Game6Cell {
    pub fn outcome(&self, which: Distinguisher) -> GameOutcome {
        self.outcomes
            .iter()
            .find(|(d, _)| *d == which)
            .map(|(_, o)| *o)
            .expect("every distinguisher is played")
    }
}

/// Plays `trials` rounds of the rank-1 game; all distinguishers see the same rounds.
pub fn game6_cell(
    params: &GameParams,
    n: usize,
    k: usize,
    trials: usize,
    mode: SimulationMode,
    rng: &RandomSource,
) -> Result<Game6Cell> {
    check_game(n, k, trials)?;
    let rules = Game6Rules::new(params, n, k)?;
    let explicit = mode.explicit(n);
    let wins = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.derive(i as u64);
            let truth = Hypothesis::fair(&mut r);
            let (z, s) = game6_round(params, n, k, truth, explicit, &mut r)?;
            let mut w = [0u64; 5];
            for (slot, d) in w.iter_mut().zip(Distinguisher::ALL) {
                *slot = (rules.decide(d, &z, s) == truth) as u64;
            }
            Ok(w)
        })
        .try_reduce(
            || [0u64; 5],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    let ceiling = if k == 0 { 0.5 } else { rules.family.success(k) };
    Ok(Game6Cell {
        epsilon: params.epsilon,
        n,
        k,
        trials: trials as u64,
        analytic_ceiling: ceiling,
        outcomes: Distinguisher::ALL
            .iter()
            .zip(wins)
            .map(|(&d, w)| (d, GameOutcome::new(w, trials as u64, Some(ceiling))))
            .collect(),
    })
}

/// Rank-2 surrogate: per-coordinate variances of `(a, b)` under each hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Game5Surrogate {
    /// `(var_a, var_b)` under `P₁`.
    pub null: (f64, f64),
    /// `(var_a, var_b)` under `P₂`.
    pub alternative: (f64, f64),
}

impl Game5Surrogate {
    pub fn new(params: &GameParams, n: usize) -> Self {
        let nf = n as f64;
        let (a1, b1) = params.game5_coefficients(Hypothesis::P1);
        let (a2, b2) = params.game5_coefficients(Hypothesis::P2);
        Game5Surrogate {
            null: (a1 / nf, b1 / nf),
            alternative: (a2 / nf, b2 / nf),
        }
    }

    /// `(c_a, c_b, κ)` with `ln(p₂/p₁) = c_a‖a‖² + c_b‖b‖² − κ`.
    fn log_ratio_terms(&self, k: usize) -> (f64, f64, f64) {
        let (sa1, sb1) = self.null;
        let (sa2, sb2) = self.alternative;
        let ca = 0.5 * (1.0 / sa1 - 1.0 / sa2);
        let cb = 0.5 * (1.0 / sb1 - 1.0 / sb2);
        let kappa = 0.5 * k as f64 * ((sa2 / sa1).ln() + (sb2 / sb1).ln());
        (ca, cb, kappa)
    }

    /// Bivariate likelihood-ratio rule on `(‖a‖², ‖b‖²)`; empty samples decide `P₁`.
    pub fn decide(&self, a: &[f64], b: &[f64]) -> Hypothesis {
        if a.is_empty() {
            return Hypothesis::P1;
        }
        let (ca, cb, kappa) = self.log_ratio_terms(a.len());
        let ea: f64 = a.iter().map(|x| x * x).sum();
        let eb: f64 = b.iter().map(|x| x * x).sum();
        if ca * ea + cb * eb >= kappa {
            Hypothesis::P2
        } else {
            Hypothesis::P1
        }
    }

    /// `Pr(decide P₂)` when `‖a‖² ~ var_a·χ²_k` and `‖b‖² ~ var_b·χ²_k`,
    /// integrating over `√(‖b‖²/var_b)` (a χ variable, smooth density).
    fn prob_p2(&self, k: usize, (va, vb): (f64, f64)) -> f64 {
        let (ca, cb, kappa) = self.log_ratio_terms(k);
        let kf = k as f64;
        let log_norm = (0.5 * kf - 1.0) * 2f64.ln() + ln_gamma(0.5 * kf);
        let chi_pdf = |t: f64| {
            if t <= 0.0 {
                return if k == 1 { (2.0 / std::f64::consts::PI).sqrt() } else { 0.0 };
            }
            ((kf - 1.0) * t.ln() - 0.5 * t * t - log_norm).exp()
        };
        // ca > 0: decide P₂ iff ‖a‖² ≥ (κ − c_b‖b‖²)/c_a
        let tail = |t: f64| {
            let x = (kappa - cb * vb * t * t) / (ca * va);
            1.0 - chi_squared_cdf(k, x)
        };
        let upper = kf.sqrt() + 12.0;
        let m = 4000;
        let h = upper / m as f64;
        let mut acc = 0.0;
        for i in 0..=m {
            let t = i as f64 * h;
            let w = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * chi_pdf(t) * tail(t);
        }
        acc * h / 3.0
    }

    /// Success rate of the likelihood-ratio rule, which is `½ + ½·d_TV`.
    pub fn success(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.5;
        }
        0.5 + 0.5 * (self.prob_p2(k, self.alternative) - self.prob_p2(k, self.null))
    }
}

/// Which game [`strong_query_game`] plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameKind {
    Rank2,
    Rank1,
}

impl GameKind {
    pub fn number(&self) -> u8 {
        match self {
            GameKind::Rank2 => 5,
            GameKind::Rank1 => 6,
        }
    }

    pub fn from_number(g: u8) -> Result<Self> {
        match g {
            5 => Ok(GameKind::Rank2),
            6 => Ok(GameKind::Rank1),
            _ => Err(Error::invalid("game", format!("unknown game {g}; expected 5 or 6"))),
        }
    }
}

fn game5_round(
    params: &GameParams,
    n: usize,
    k: usize,
    which: Hypothesis,
    explicit: bool,
    rng: &mut RandomSource,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if explicit {
        let (_, pair) = sample_game5::<f64>(params, n, which, rng)?;
        let queries = orthogonal_tuple::<f64>(n, k, rng)?;
        let mut a = Vec::with_capacity(k);
        let mut b = Vec::with_capacity(k);
        for x in &queries.vectors {
            let (p, q) = strong_query(&pair, x)?;
            a.push(p);
            b.push(q);
        }
        Ok((a, b))
    } else {
        let (alpha, beta) = params.game5_coefficients(which);
        // responses form a k × 2 block of a Haar matrix; its transpose is a 2 × k prefix
        let p = haar_row_prefixes::<f64>(n, 2, k, rng)?;
        Ok((
            p[0].iter().map(|x| alpha.sqrt() * x).collect(),
            p[1].iter().map(|x| beta.sqrt() * x).collect(),
        ))
    }
}

/// Full strong-query game: fair hypothesis, planted instance, `k` orthogonal
/// strong queries, likelihood-ratio decision.
pub fn strong_query_game(
    params: &GameParams,
    n: usize,
    k: usize,
    game: GameKind,
    trials: usize,
    mode: SimulationMode,
    rng: &RandomSource,
) -> Result<GameOutcome> {
    match game {
        GameKind::Rank1 => Ok(game6_cell(params, n, k, trials, mode, rng)?.outcome(Distinguisher::LikelihoodRatio)),
        GameKind::Rank2 => {
            check_game(n, k, trials)?;
            if n < 2 {
                return Err(Error::invalid("n", "the rank-2 game needs n ≥ 2"));
            }
            let surrogate = Game5Surrogate::new(params, n);
            let explicit = mode.explicit(n);
            let wins = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng.derive(i as u64);
                    let truth = Hypothesis::fair(&mut r);
                    let (a, b) = game5_round(params, n, k, truth, explicit, &mut r)?;
                    Ok((surrogate.decide(&a, &b) == truth) as u64)
                })
                .try_reduce(|| 0, |x, y| Ok(x + y))?;
            Ok(GameOutcome::new(wins, trials as u64, Some(surrogate.success(k))))
        }
    }
}

/// Smallest `k` whose optimal success `½ + ½·d_TV` reaches `1 − δ`, with the curve up to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryComplexity {
    pub delta: f64,
    pub k_star: usize,
    /// `(k, success)` for `k = 1..=k_star`.
    pub curve: Vec<(usize, f64)>,
}

/// Analytic query complexity for an arbitrary scale family.
pub fn query_complexity(family: &ScaleFamily, delta: f64) -> Result<QueryComplexity> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid("delta", format!("{delta} is outside (0, 1/2)")));
    }
    let target = 1.0 - delta;
    const CAP: usize = 1 << 24;
    let mut hi = 1usize;
    while family.success(hi) < target {
        if hi >= CAP {
            return Err(Error::invalid("delta", "target success not reached below 2²⁴ queries"));
        }
        hi *= 2;
    }
    let mut lo = hi / 2; // success(lo) < target, or lo = 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if family.success(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(QueryComplexity {
        delta,
        k_star: hi,
        curve: (1..=hi).map(|k| (k, family.success(k))).collect(),
    })
}

/// `k*` for the rank-1 game at `ε` (variance ratio `(1+3ε)²`).
pub fn empirical_query_complexity(epsilon: f64, delta: f64) -> Result<QueryComplexity> {
    let params = GameParams::new(epsilon)?;
    query_complexity(&ScaleFamily::game6(&params, 1)?, delta)
}
