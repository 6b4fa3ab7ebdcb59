//! Matrix-free stochastic trace estimation.
//!
//! Symmetric matrices are seen only through quadratic-form queries `xᵀAx`
//! ([`oracle`]). Estimators ([`estimators`]) draw seeded queries
//! ([`sampler`]) and combine the answers linearly; [`analysis`] measures
//! them by Monte Carlo, and [`lowerbound`] plays the distinguishing games
//! that bound what any estimator can achieve.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod analysis;
pub mod dense;
pub mod error;
pub mod estimators;
pub mod family;
pub mod lowerbound;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod stats;

pub use analysis::{
    analytic_variance, chi_square_tail_check, eps_delta_success, kl_zero_mean_gaussians,
    pinsker_tv_upper, run_trials, scale_family_tv, worst_case_variance, AnalyticKind,
    ExperimentReport,
};
pub use error::{Error, Result};
pub use estimators::{
    parse_estimator, rotate_estimator, symmetrize_estimator, Configuration, EstimateResult,
    TraceEstimator,
};
pub use family::{parse_matrix, standard_family, NamedMatrix};
pub use lowerbound::{GameParams, Hypothesis, ScaleFamily};
pub use oracle::MatrixSpec;
pub use sampler::RandomSource;
pub use scalar::Scalar;

pub type Matrix = oracle::ImplicitMatrix<f64>;
pub type Estimator = estimators::LinearEstimator<f64>;
pub type Orthogonal = dense::OrthogonalMatrix<f64>;
pub type Dense = dense::SquareMatrix<f64>;
pub type Pair = lowerbound::PlantedPair<f64>;
pub type Tuple = sampler::QueryTuple<f64>;
