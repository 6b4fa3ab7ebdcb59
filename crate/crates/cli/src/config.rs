//! Flag parsing, JSON config overlay and validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Subcommand, ValueEnum};
use serde::Deserialize;
use tracekit::estimators::ConfigurationSpec;
use tracekit::lowerbound::{Distinguisher, SimulationMode};
use tracekit::MatrixSpec;

/// Used when no `--seed` is given, so bare invocations are reproducible.
pub const DEFAULT_SEED: u64 = 20_240_607;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_GAME_N: usize = 10_000;
pub const DEFAULT_SWEEP_K: usize = 100;
pub const DEFAULT_HAAR_N: usize = 32;

const BUILTIN_MATRICES: [&str; 7] = [
    "identity",
    "diag-spike",
    "diag-flat",
    "offdiag",
    "planted-rank1",
    "planted-p1",
    "planted-p2",
];
const BASE_ESTIMATORS: [&str; 5] = ["rademacher", "hutchinson", "gaussian", "unit", "orthogonal"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Estimate,
    BenchVariance,
    BenchEpsdelta,
    Game,
    Sweep,
    HaarCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Explicit,
    Reduced,
    #[default]
    Auto,
}

impl From<Mode> for SimulationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Explicit => SimulationMode::Explicit,
            Mode::Reduced => SimulationMode::Reduced,
            Mode::Auto => SimulationMode::Auto,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One estimate of trace(A).
    Estimate(Flags),
    /// Empirical mean and variance over seeded trials (`--matrix family:n` runs the worst-case family).
    BenchVariance(Flags),
    /// Fraction of trials within (1 ± ε)·trace(A).
    BenchEpsdelta(Flags),
    /// One cell of the rank-2 (5) or rank-1 (6) distinguishing game.
    Game(Flags),
    /// Rank-1 or rank-2 game over every ε given and k = 1..=K.
    Sweep(Flags),
    /// Orthogonality and marginal checks of the Haar sampler.
    HaarCheck(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Estimate(f) => (CommandKind::Estimate, f),
            Command::BenchVariance(f) => (CommandKind::BenchVariance, f),
            Command::BenchEpsdelta(f) => (CommandKind::BenchEpsdelta, f),
            Command::Game(f) => (CommandKind::Game, f),
            Command::Sweep(f) => (CommandKind::Sweep, f),
            Command::HaarCheck(f) => (CommandKind::HaarCheck, f),
        }
    }
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Builtin matrix (`identity:n`, `diag-spike:n`, `rotated:<inner>:seed`, ...) or JSON spec path.
    #[arg(long)]
    pub matrix: Option<String>,
    /// `rademacher`, `gaussian`, `unit`, `orthogonal`, `configured:<file>`, optionally `sym:`-prefixed.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Query count; the largest k for `sweep`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of the flags above; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// 5 (rank-2, strong queries) or 6 (rank-1, scaled projections).
    #[arg(long)]
    pub game: Option<u8>,
    /// Game-6 distinguisher name, or `all`.
    #[arg(long)]
    pub distinguisher: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    #[default]
    None,
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
struct FileConfig {
    command: Option<CommandKind>,
    #[serde(alias = "matrix_spec")]
    matrix: Option<String>,
    #[serde(alias = "estimator_spec")]
    estimator: Option<String>,
    n: Option<usize>,
    k: Option<usize>,
    trials: Option<usize>,
    #[serde(default)]
    epsilon: OneOrMany,
    delta: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    #[serde(alias = "out_path")]
    out: Option<PathBuf>,
    format: Option<Format>,
    game: Option<u8>,
    distinguisher: Option<String>,
    mode: Option<Mode>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub matrix: Option<String>,
    pub estimator: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub trials: usize,
    pub epsilon: Vec<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub game: u8,
    pub distinguisher: String,
    pub mode: Mode,
    /// Set when the config file names a different command.
    pub command_conflict: Option<CommandKind>,
}

impl ExperimentConfig {
    pub fn resolve(command: CommandKind, flags: Flags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config `{}`", path.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .with_context(|| format!("malformed config `{}`", path.display()))?
            }
            None => FileConfig::default(),
        };
        let file_eps = match file.epsilon {
            OneOrMany::None => None,
            OneOrMany::One(e) => Some(vec![e]),
            OneOrMany::Many(v) => Some(v),
        };
        let game_like = matches!(command, CommandKind::Game | CommandKind::Sweep);
        let n = flags.n.or(file.n).or(match command {
            CommandKind::Game | CommandKind::Sweep => Some(DEFAULT_GAME_N),
            CommandKind::HaarCheck => Some(DEFAULT_HAAR_N),
            _ => None,
        });
        let k = flags
            .k
            .or(file.k)
            .or((command == CommandKind::Sweep).then_some(DEFAULT_SWEEP_K));
        Ok(ExperimentConfig {
            command,
            matrix: flags.matrix.or(file.matrix),
            estimator: flags.estimator.or(file.estimator).unwrap_or_else(|| "gaussian".into()),
            n,
            k,
            trials: flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            epsilon: flags.epsilon.or(file_eps).unwrap_or_else(|| {
                if game_like {
                    vec![0.1]
                } else {
                    Vec::new()
                }
            }),
            delta: flags.delta.or(file.delta),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            workers: flags.workers.or(file.workers).unwrap_or(0),
            out: flags.out.or(file.out),
            format: flags.format.or(file.format).unwrap_or_default(),
            game: flags.game.or(file.game).unwrap_or(6),
            distinguisher: flags.distinguisher.or(file.distinguisher).unwrap_or_else(|| "lr".into()),
            mode: flags.mode.or(file.mode).unwrap_or_default(),
            command_conflict: file.command.filter(|c| *c != command),
        })
    }

    /// The single ε of non-sweep commands.
    pub fn single_epsilon(&self) -> Option<f64> {
        match self.epsilon.as_slice() {
            [e] => Some(*e),
            _ => None,
        }
    }

    pub fn distinguishers(&self) -> Vec<Distinguisher> {
        if self.distinguisher == "all" {
            Distinguisher::ALL.to_vec()
        } else {
            Distinguisher::from_name(&self.distinguisher).into_iter().collect()
        }
    }
}

/// Dimension of a matrix spec without building it.
pub fn matrix_dimension(spec: &str) -> anyhow::Result<usize> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    if let Some(rest) = spec.strip_prefix("rotated:") {
        let Some((inner, seed)) = rest.rsplit_once(':') else {
            bail!("`{spec}`: expected rotated:<inner>:seed");
        };
        seed.parse::<u64>()
            .with_context(|| format!("`{spec}`: `{seed}` is not a seed"))?;
        return matrix_dimension(inner);
    }
    if parts[0] == "family" || BUILTIN_MATRICES.contains(&parts[0]) {
        let Some(n) = parts.get(1) else {
            bail!("`{spec}`: missing dimension");
        };
        return n
            .parse()
            .with_context(|| format!("`{spec}`: `{n}` is not a dimension"));
    }
    let text = std::fs::read_to_string(spec)
        .with_context(|| format!("`{spec}` is neither a builtin matrix nor a readable spec file"))?;
    Ok(MatrixSpec::from_json(&text)?.n())
}

/// `(k, n)` fixed by a configured estimator's file, if any.
fn configured_shape(spec: &str) -> anyhow::Result<Option<(usize, usize)>> {
    let base = spec.trim_start_matches("sym:");
    let Some(path) = base.strip_prefix("configured:") else {
        if BASE_ESTIMATORS.contains(&base) {
            return Ok(None);
        }
        bail!("unknown estimator `{spec}`");
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read `{path}`"))?;
    let c = ConfigurationSpec::from_json(&text)?.build::<f64>()?;
    Ok(Some((c.k(), c.n())))
}

fn check_out(out: &Option<PathBuf>, v: &mut Vec<String>) {
    if let Some(p) = out {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            v.push(format!("out: directory `{}` does not exist", parent.display()));
        } else if p.is_dir() {
            v.push(format!("out: `{}` is a directory", p.display()));
        }
    }
}

fn check_estimation(cfg: &ExperimentConfig, v: &mut Vec<String>) {
    let Some(spec) = &cfg.matrix else {
        v.push("matrix: required for this command".into());
        return;
    };
    let family = spec.starts_with("family:");
    let n = match matrix_dimension(spec) {
        Ok(n) => Some(n),
        Err(e) => {
            v.push(format!("matrix: {e:#}"));
            None
        }
    };
    if family && cfg.command != CommandKind::BenchVariance {
        v.push("matrix: `family:n` is only available to bench-variance".into());
    }
    if let (Some(n), Some(given)) = (n, cfg.n) {
        if n != given {
            v.push(format!("n: --n {given} disagrees with the matrix dimension {n}"));
        }
    }
    match configured_shape(&cfg.estimator) {
        Ok(Some((_, cn))) => {
            if let Some(n) = n.filter(|&n| n != cn) {
                v.push(format!("estimator: configuration is for n = {cn}, matrix has n = {n}"));
            }
        }
        Ok(None) => match cfg.k {
            None => v.push("k: required (number of queries)".into()),
            Some(0) => v.push("k: k ≥ 1 required".into()),
            Some(k) => {
                let base = cfg.estimator.trim_start_matches("sym:");
                if let (Some(n), "orthogonal") = (n, base) {
                    if k > n {
                        v.push(format!("k: k ≤ n required for the orthogonal estimator (k = {k}, n = {n})"));
                    }
                }
            }
        },
        Err(e) => v.push(format!("estimator: {e:#}")),
    }
    if cfg.trials < 2 && cfg.command != CommandKind::Estimate {
        v.push("trials: at least 2 required".into());
    }
    if cfg.command == CommandKind::BenchEpsdelta {
        match cfg.single_epsilon() {
            Some(e) if e > 0.0 && e.is_finite() => {}
            Some(e) => v.push(format!("epsilon: {e} must be positive")),
            None => v.push("epsilon: exactly one value required".into()),
        }
    }
}

fn check_game(cfg: &ExperimentConfig, v: &mut Vec<String>) {
    if !matches!(cfg.game, 5 | 6) {
        v.push(format!("game: {} is not 5 or 6", cfg.game));
    }
    if cfg.epsilon.is_empty() {
        v.push("epsilon: at least one value required".into());
    }
    for e in &cfg.epsilon {
        if !(*e > 0.0 && *e < 1.0 / 3.0) {
            v.push(format!("epsilon: epsilon ∈ (0, 1/3) required, got {e}"));
        }
    }
    if cfg.command == CommandKind::Game && cfg.epsilon.len() > 1 {
        v.push("epsilon: game takes a single value (use sweep)".into());
    }
    let n = cfg.n.unwrap_or(DEFAULT_GAME_N);
    let min_n = if cfg.game == 5 { 2 } else { 1 };
    if n < min_n {
        v.push(format!("n: n ≥ {min_n} required"));
    }
    match cfg.k {
        None => v.push("k: required (number of queries)".into()),
        Some(k) if k > n => v.push(format!("k: k ≤ n required (k = {k}, n = {n})")),
        Some(0) if cfg.command == CommandKind::Sweep => v.push("k: sweep needs k ≥ 1".into()),
        _ => {}
    }
    if cfg.trials < 1000 {
        v.push("trials: at least 1000 rounds required".into());
    }
    if let Some(d) = cfg.delta {
        if !(d > 0.0 && d < 0.5) {
            v.push(format!("delta: delta ∈ (0, 1/2) required, got {d}"));
        }
    }
    if cfg.distinguishers().is_empty() {
        v.push(format!(
            "distinguisher: unknown `{}` (lr, mean-threshold, max-coordinate, half-energy, sym-gaussian, all)",
            cfg.distinguisher
        ));
    } else if cfg.game == 5 && cfg.distinguisher != "lr" {
        v.push("distinguisher: game 5 only supports lr".into());
    }
}

/// Every constraint the config violates; empty iff the run would proceed.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut v = Vec::new();
    if let Some(c) = cfg.command_conflict {
        v.push(format!("command: config file is for `{c:?}`"));
    }
    match cfg.command {
        CommandKind::Estimate | CommandKind::BenchVariance | CommandKind::BenchEpsdelta => {
            check_estimation(cfg, &mut v)
        }
        CommandKind::Game | CommandKind::Sweep => check_game(cfg, &mut v),
        CommandKind::HaarCheck => {
            if cfg.n.unwrap_or(0) == 0 {
                v.push("n: n ≥ 1 required".into());
            }
            if cfg.trials < 2 {
                v.push("trials: at least 2 required".into());
            }
        }
    }
    check_out(&cfg.out, &mut v);
    v
}

/// Non-fatal notes, e.g. games outside the `k ≪ n` regime.
pub fn warnings(cfg: &ExperimentConfig) -> Vec<String> {
    let mut w = Vec::new();
    if matches!(cfg.command, CommandKind::Game | CommandKind::Sweep) {
        if let (Some(n), Some(k)) = (cfg.n, cfg.k) {
            if 100 * k > n {
                w.push(format!(
                    "k = {k} is not ≪ n = {n}; Gaussian surrogate ceilings may be inaccurate"
                ));
            }
        }
    }
    w
}
