//! Per-run artifact directory: `trace.csv`, `summary.json`, `config.toml`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trace::{read_trace, write_trace, TRACE_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::solver::{IterationRecord, Method, RunStatus};
use crate::theory::AuditReport;

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Relative tolerance for checking a summary against its trace.
pub const SUMMARY_TOLERANCE: f64 = 1e-12;

/// Terminal metrics of one run. Everything except `status`, `error` and
/// `audit` is a function of the trace alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trace_schema_version: u32,
    pub method: Method,
    pub problem: String,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub iterations: usize,
    pub stopping_time: Option<usize>,
    pub feval_count: u64,
    pub geval_count: u64,
    pub heval_count: u64,
    pub final_f_true: f64,
    pub best_f_true: f64,
    pub best_grad_norm: f64,
    pub final_grad_norm: f64,
    pub final_lambda_true: f64,
    pub final_x: Vec<f64>,
    pub audit: Option<AuditReport>,
}

/// Trace-derived part of a summary.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMetrics {
    pub iterations: usize,
    pub stopping_time: Option<usize>,
    pub feval_count: u64,
    pub geval_count: u64,
    pub heval_count: u64,
    pub final_f_true: f64,
    pub best_f_true: f64,
    pub best_grad_norm: f64,
    pub final_grad_norm: f64,
    pub final_lambda_true: f64,
    pub final_x: Vec<f64>,
}

impl TraceMetrics {
    pub fn from_records(records: &[IterationRecord], cfg: &ExperimentConfig) -> Self {
        let p = cfg.effective_solver();
        let last = records.last();
        let best_f = records
            .iter()
            .map(|r| r.f_true)
            .chain(last.map(|r| r.f_next_true))
            .fold(f64::INFINITY, f64::min);
        TraceMetrics {
            iterations: records.len(),
            stopping_time: crate::theory::stopping_time(records, p.epsbar_g, p.epsbar_h, p.epsbar_lambda),
            feval_count: last.map_or(0, |r| r.fevals),
            geval_count: last.map_or(0, |r| r.gevals),
            heval_count: last.map_or(0, |r| r.hevals),
            final_f_true: last.map_or(f64::NAN, |r| r.f_next_true),
            best_f_true: best_f,
            best_grad_norm: records.iter().map(|r| r.grad_true_norm).fold(f64::INFINITY, f64::min),
            final_grad_norm: last.map_or(f64::NAN, |r| r.grad_true_norm),
            final_lambda_true: last.map_or(f64::NAN, |r| r.lambda_true),
            final_x: last.map_or_else(Vec::new, |r| r.x_next.clone()),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= SUMMARY_TOLERANCE * a.abs().max(b.abs())
}

impl RunSummary {
    /// Fails with the first field that disagrees with the trace.
    pub fn check_against(&self, m: &TraceMetrics) -> Result<()> {
        let mismatch = |field: &str| Err(Error::Trace(format!("summary field {field} disagrees with trace")));
        if self.iterations != m.iterations {
            return mismatch("iterations");
        }
        if self.stopping_time != m.stopping_time {
            return mismatch("stopping_time");
        }
        if (self.feval_count, self.geval_count, self.heval_count) != (m.feval_count, m.geval_count, m.heval_count) {
            return mismatch("eval counts");
        }
        let pairs = [
            ("final_f_true", self.final_f_true, m.final_f_true),
            ("best_f_true", self.best_f_true, m.best_f_true),
            ("best_grad_norm", self.best_grad_norm, m.best_grad_norm),
            ("final_grad_norm", self.final_grad_norm, m.final_grad_norm),
            ("final_lambda_true", self.final_lambda_true, m.final_lambda_true),
        ];
        for (name, a, b) in pairs {
            if !close(a, b) {
                return mismatch(name);
            }
        }
        if self.final_x.len() != m.final_x.len() || self.final_x.iter().zip(&m.final_x).any(|(a, b)| !close(*a, *b)) {
            return mismatch("final_x");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifact {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_artifact(
    dir: &Path,
    config: &ExperimentConfig,
    records: &[IterationRecord],
    summary: &RunSummary,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trace(&dir.join(TRACE_FILE), records)?;
    let json = serde_json::to_vec_pretty(summary).map_err(|e| Error::Trace(e.to_string()))?;
    write_file(&dir.join(SUMMARY_FILE), &json)?;
    write_file(&dir.join(CONFIG_FILE), config.to_toml()?.as_bytes())
}

/// Loads an artifact and checks its summary against the trace.
pub fn load_artifact(dir: &Path) -> Result<RunArtifact> {
    let records = read_trace(&dir.join(TRACE_FILE))?;
    let config = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let summary: RunSummary =
        serde_json::from_slice(&text).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))?;
    if summary.trace_schema_version != TRACE_SCHEMA_VERSION {
        return Err(Error::Trace(format!(
            "{}: trace schema version {} is not supported (expected {TRACE_SCHEMA_VERSION})",
            path.display(),
            summary.trace_schema_version
        )));
    }
    summary.check_against(&TraceMetrics::from_records(&records, &config))?;
    Ok(RunArtifact {
        dir: dir.to_path_buf(),
        config,
        records,
        summary,
    })
}

/// Every directory under `root` (inclusive) holding a trace file, sorted.
pub fn find_artifact_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        if d.join(TRACE_FILE).is_file() {
            out.push(d.clone());
        }
        for entry in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let entry = entry.map_err(|e| Error::io(&d, e))?;
            if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_dir() {
                stack.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}
