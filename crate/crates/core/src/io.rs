//! Output file formats: per-step record CSV, network series CSV, learning
//! curves, run summaries and the run manifest.
//!
//! All reals are written with exactly six decimals, rounding half away from
//! zero, so that identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::SimConfig;
use crate::engine::TrialRecord;
use crate::metrics::NetworkStats;

pub const RECORDS_HEADER: &str = "trial,step,agent,kind,target,reward,fitness,cum_fitness,step_regret,cum_regret";
pub const NETWORK_HEADER: &str = "trial,step,avg_degree,avg_clustering,largest_component,edge_count";
pub const SUMMARY_HEADER: &str = "policy,mean_final_cum_fitness,ci95,mean_final_cum_regret";
pub const CURVES_HEADER: &str = "step,mean_cum_fitness,ci95_cum_fitness,mean_cum_regret,ci95_cum_regret,mean_reward,ci95_reward";

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct IoError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

impl IoError {
    pub fn new(path: &Path, source: std::io::Error) -> Self {
        Self { path: path.to_path_buf(), source }
    }
}

/// Fixed six-decimal formatting, ties rounded away from zero.
///
/// `{:.6}` rounds exact decimal ties to even. A binary double sits exactly
/// on a six-decimal tie only when it is an odd multiple of 2^-7, so those
/// values are nudged one ulp outward before formatting.
pub fn fmt6(x: f64) -> String {
    let scaled = x * 128.0;
    let x = if scaled.fract() == 0.0 && scaled.rem_euclid(2.0) == 1.0 {
        if x > 0.0 {
            x.next_up()
        } else {
            x.next_down()
        }
    } else {
        x
    };
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

pub fn record_row(r: &TrialRecord) -> String {
    let target = r.target.map_or("-1".to_string(), |t| t.to_string());
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.trial,
        r.step,
        r.agent,
        r.kind.as_str(),
        target,
        fmt6(r.reward),
        fmt6(r.fitness),
        fmt6(r.cum_fitness),
        fmt6(r.step_regret),
        fmt6(r.cum_regret)
    )
}

pub fn network_row(trial: usize, step: u64, s: &NetworkStats) -> String {
    format!(
        "{trial},{step},{},{},{},{}",
        fmt6(s.avg_degree),
        fmt6(s.avg_clustering),
        s.largest_component,
        s.edge_count
    )
}

/// Line-oriented CSV writer that counts data rows.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
    rows: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| IoError::new(path, e))?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file), rows: 0 };
        w.line(header)?;
        w.rows = 0;
        Ok(w)
    }

    pub fn line(&mut self, line: &str) -> Result<(), IoError> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| IoError::new(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn records<'a>(&mut self, records: impl IntoIterator<Item = &'a TrialRecord>) -> Result<(), IoError> {
        for r in records {
            self.line(&record_row(r))?;
        }
        Ok(())
    }

    /// Flushes and returns the number of data rows written.
    pub fn finish(mut self) -> Result<usize, IoError> {
        self.out.flush().map_err(|e| IoError::new(&self.path, e))?;
        Ok(self.rows)
    }
}

/// Writes a complete `records.csv`.
pub fn write_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a TrialRecord>) -> Result<usize, IoError> {
    let mut w = CsvWriter::create(path, RECORDS_HEADER)?;
    w.records(records)?;
    w.finish()
}

/// Writes a complete `network.csv`.
pub fn write_network_series<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = &'a (usize, u64, NetworkStats)>,
) -> Result<usize, IoError> {
    let mut w = CsvWriter::create(path, NETWORK_HEADER)?;
    for (trial, step, s) in rows {
        w.line(&network_row(*trial, *step, s))?;
    }
    w.finish()
}

/// One `summary.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub mean_final_cum_fitness: f64,
    pub ci95: Option<f64>,
    pub mean_final_cum_regret: f64,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<usize, IoError> {
    let mut w = CsvWriter::create(path, SUMMARY_HEADER)?;
    for r in rows {
        w.line(&format!(
            "{},{},{},{}",
            r.policy,
            fmt6(r.mean_final_cum_fitness),
            fmt_opt(r.ci95),
            fmt6(r.mean_final_cum_regret)
        ))?;
    }
    w.finish()
}

/// Per-step learning curve: mean and 95% half-width over trials.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Curves {
    pub mean_cum_fitness: Vec<f64>,
    pub ci_cum_fitness: Option<Vec<f64>>,
    pub mean_cum_regret: Vec<f64>,
    pub ci_cum_regret: Option<Vec<f64>>,
    pub mean_reward: Vec<f64>,
    pub ci_reward: Option<Vec<f64>>,
}

pub fn write_curves(path: &Path, c: &Curves) -> Result<usize, IoError> {
    let mut w = CsvWriter::create(path, CURVES_HEADER)?;
    let at = |v: &Option<Vec<f64>>, t: usize| v.as_ref().map(|v| v[t]);
    for t in 0..c.mean_cum_fitness.len() {
        w.line(&format!(
            "{},{},{},{},{},{},{}",
            t + 1,
            fmt6(c.mean_cum_fitness[t]),
            fmt_opt(at(&c.ci_cum_fitness, t)),
            fmt6(c.mean_cum_regret[t]),
            fmt_opt(at(&c.ci_cum_regret, t)),
            fmt6(c.mean_reward[t]),
            fmt_opt(at(&c.ci_reward, t)),
        ))?;
    }
    w.finish()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::new(path, e))
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
}

/// Written once per experiment; `config` alone reproduces every other file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: SimConfig,
    pub outputs: Vec<OutputFile>,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), IoError> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest always serializes");
    write_text(path, &(json + "\n"))
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
