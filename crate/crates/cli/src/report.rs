//! Row types and CSV/JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::Format;

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub estimator_id: String,
    pub matrix_id: String,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub value: f64,
    pub true_trace: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GameRow {
    /// `5` or `6` for the likelihood-ratio test, `6:<name>` for the other distinguishers.
    pub game: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub trials: u64,
    pub success_rate: f64,
    pub stderr: f64,
    pub analytic_ceiling: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HaarRow {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub max_orthogonality_defect: f64,
    pub trace_mean: f64,
    pub trace_second_moment: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

fn write_to<R: Serialize>(rows: &[R], format: Format, w: impl Write) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in rows {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        Format::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes `rows` in parameter order to `out`, or standard output.
pub fn write_rows<R: Serialize>(rows: &[R], format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot write `{}`", path.display()))?;
            write_to(rows, format, BufWriter::new(f))
                .with_context(|| format!("cannot write `{}`", path.display()))
        }
        None => write_to(rows, format, io::stdout().lock()),
    }
}
