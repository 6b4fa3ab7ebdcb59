//! Command execution.

use anyhow::Context;
use tracekit::analysis::{
    analytic_variance, eps_delta_success, run_trials, worst_case_variance, AnalyticKind,
};
use tracekit::estimators::EstimatorKind;
use tracekit::lowerbound::{empirical_query_complexity, game6_cell, strong_query_game, GameKind, GameParams};
use tracekit::sampler::{haar_orthogonal_matrix, uniform_unit_vector};
use tracekit::stats::ks_two_sample;
use tracekit::{parse_estimator, parse_matrix, standard_family, Estimator, RandomSource, TraceEstimator};

use crate::config::{CommandKind, ExperimentConfig, DEFAULT_GAME_N};
use crate::report::{write_rows, EstimateRow, GameRow, HaarRow};

/// Stream for randomized matrix construction; trials use stream 0.
pub const MATRIX_STREAM: u64 = 1;
const REFERENCE_STREAM: u64 = 2;

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    match cfg.command {
        CommandKind::Estimate => estimate(cfg),
        CommandKind::BenchVariance => bench_variance(cfg),
        CommandKind::BenchEpsdelta => bench_epsdelta(cfg),
        CommandKind::Game | CommandKind::Sweep => game(cfg),
        CommandKind::HaarCheck => haar_check(cfg),
    }
}

fn estimator(cfg: &ExperimentConfig) -> anyhow::Result<Estimator> {
    Ok(parse_estimator(&cfg.estimator, cfg.k.unwrap_or(0))?)
}

fn matrix_spec(cfg: &ExperimentConfig) -> anyhow::Result<&str> {
    cfg.matrix.as_deref().context("no matrix given")
}

fn analytic_kind(est: &Estimator) -> Option<AnalyticKind> {
    if !est.wrappers().is_empty() {
        return None;
    }
    match est.kind() {
        EstimatorKind::Gaussian => Some(AnalyticKind::Gaussian),
        EstimatorKind::Rademacher => Some(AnalyticKind::Rademacher),
        _ => None,
    }
}

fn estimate(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let est = estimator(cfg)?;
    let m = parse_matrix::<f64>(matrix_spec(cfg)?, &mut RandomSource::new(cfg.seed, MATRIX_STREAM))?;
    let r = est.estimate(&m.matrix, &mut RandomSource::new(cfg.seed, 0))?;
    let row = EstimateRow {
        estimator_id: est.id(),
        matrix_id: m.id,
        n: m.matrix.n(),
        k: est.queries(),
        seed: cfg.seed,
        value: r.value,
        true_trace: m.matrix.true_trace(),
    };
    eprintln!("estimate = {:?} (trace = {:?})", row.value, row.true_trace);
    write_rows(&[row], cfg.format, cfg.out.as_deref())
}

fn bench_variance(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let est = estimator(cfg)?;
    let spec = matrix_spec(cfg)?;
    let mut mrng = RandomSource::new(cfg.seed, MATRIX_STREAM);
    let trials = RandomSource::new(cfg.seed, 0);
    if let Some(n) = spec.strip_prefix("family:") {
        let family = standard_family::<f64>(n.parse()?, &mut mrng)?;
        let worst = worst_case_variance(&est, &family, cfg.trials, &trials)?;
        eprintln!(
            "{}: worst-case variance {:.6} ± {:.6} on {}",
            est.id(),
            worst.variance,
            worst.stderr,
            worst.matrix_id
        );
        return write_rows(&worst.reports, cfg.format, cfg.out.as_deref());
    }
    let m = parse_matrix::<f64>(spec, &mut mrng)?;
    let report = run_trials(&est, &m.matrix, cfg.trials, &trials)?.with_matrix_id(&m.id);
    let analytic = match analytic_kind(&est) {
        Some(kind) => format!(" (analytic {:.6})", analytic_variance(kind, &m.matrix, est.queries())?),
        None => String::new(),
    };
    eprintln!(
        "{} on {}: mean {:.6}, variance {:.6} ± {:.6}{analytic}",
        report.estimator_id, report.matrix_id, report.empirical_mean, report.empirical_variance, report.stderr_variance
    );
    write_rows(&[report], cfg.format, cfg.out.as_deref())
}

fn bench_epsdelta(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let est = estimator(cfg)?;
    let m = parse_matrix::<f64>(matrix_spec(cfg)?, &mut RandomSource::new(cfg.seed, MATRIX_STREAM))?;
    let eps = cfg.single_epsilon().context("one epsilon required")?;
    let s = eps_delta_success(&est, &m.matrix, eps, cfg.trials, &RandomSource::new(cfg.seed, 0))?;
    eprintln!(
        "{} on {}: P(|h − tr| ≤ {eps}·tr) = {:.4} ± {:.4}",
        s.report.estimator_id, m.id, s.rate, s.radius
    );
    write_rows(&[s.report.with_matrix_id(m.id)], cfg.format, cfg.out.as_deref())
}

/// Cells in parameter order: ε, then k, then distinguisher. Every cell uses the
/// trial stream `(seed, 0)`, so any row is reproduced by `game` with its own parameters.
fn game(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let n = cfg.n.unwrap_or(DEFAULT_GAME_N);
    let kmax = cfg.k.context("no k given")?;
    let ks: Vec<usize> = match cfg.command {
        CommandKind::Sweep => (1..=kmax).collect(),
        _ => vec![kmax],
    };
    let rng = RandomSource::new(cfg.seed, 0);
    let mode = cfg.mode.into();
    let mut rows = Vec::new();
    for &eps in &cfg.epsilon {
        let params = GameParams::new(eps)?;
        for &k in &ks {
            if cfg.game == 5 {
                let o = strong_query_game(&params, n, k, GameKind::Rank2, cfg.trials, mode, &rng)?;
                rows.push(GameRow {
                    game: "5".into(),
                    n,
                    k,
                    epsilon: eps,
                    delta: cfg.delta,
                    trials: o.trials,
                    success_rate: o.rate,
                    stderr: o.stderr,
                    analytic_ceiling: o.analytic_ceiling,
                    seed: cfg.seed,
                });
                continue;
            }
            let cell = game6_cell(&params, n, k, cfg.trials, mode, &rng)?;
            for d in cfg.distinguishers() {
                let o = cell.outcome(d);
                let name = match d.name() {
                    "lr" => "6".to_string(),
                    other => format!("6:{other}"),
                };
                rows.push(GameRow {
                    game: name,
                    n,
                    k,
                    epsilon: eps,
                    delta: cfg.delta,
                    trials: o.trials,
                    success_rate: o.rate,
                    stderr: o.stderr,
                    analytic_ceiling: o.analytic_ceiling,
                    seed: cfg.seed,
                });
            }
        }
        if let (Some(delta), 6) = (cfg.delta, cfg.game) {
            let q = empirical_query_complexity(eps, delta)?;
            eprintln!("ε = {eps}, δ = {delta}: analytic k* = {}", q.k_star);
        }
    }
    for r in rows.iter().filter(|r| cfg.command == CommandKind::Game || r.k == kmax) {
        eprintln!(
            "game {} ε = {} k = {}: success {:.4} ± {:.4} (ceiling {})",
            r.game,
            r.epsilon,
            r.k,
            r.success_rate,
            r.stderr,
            r.analytic_ceiling.map_or("n/a".into(), |c| format!("{c:.4}"))
        );
    }
    write_rows(&rows, cfg.format, cfg.out.as_deref())
}

fn haar_check(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    use rayon::prelude::*;
    let n = cfg.n.context("no n given")?;
    let rng = RandomSource::new(cfg.seed, 0);
    let reference = RandomSource::new(cfg.seed, REFERENCE_STREAM);
    let draws = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let q = haar_orthogonal_matrix::<f64>(n, &mut rng.derive(i as u64))?;
            let x = uniform_unit_vector::<f64>(n, &mut reference.derive(i as u64))?;
            let m = q.matrix();
            Ok((m.orthogonality_defect(), m.trace(), m.get(0, 0), x[0]))
        })
        .collect::<tracekit::Result<Vec<_>>>()?;
    let t = draws.len() as f64;
    let defect = draws.iter().map(|d| d.0).fold(0.0, f64::max);
    let trace_mean = draws.iter().map(|d| d.1).sum::<f64>() / t;
    let trace_second_moment = draws.iter().map(|d| d.1 * d.1).sum::<f64>() / t;
    let entries: Vec<f64> = draws.iter().map(|d| d.2).collect();
    let unit: Vec<f64> = draws.iter().map(|d| d.3).collect();
    let ks = ks_two_sample(&entries, &unit);
    let row = HaarRow {
        n,
        trials: draws.len() as u64,
        seed: cfg.seed,
        max_orthogonality_defect: defect,
        trace_mean,
        trace_second_moment,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
    };
    eprintln!(
        "n = {n}: max |QᵀQ − I| = {defect:.2e}, E tr Q = {trace_mean:.4}, E (tr Q)² = {trace_second_moment:.4}, KS p = {:.3}",
        ks.p_value
    );
    write_rows(&[row], cfg.format, cfg.out.as_deref())
}
