//! Experiment harness: runs configured methods over seeds and sweeps, writes
//! trace/summary artifacts, aggregates across seeds and renders plots.

pub mod artifact;
pub mod config;
pub mod plot;
pub mod report;
pub mod trace;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use artifact::{find_artifact_dirs, load_artifact, RunArtifact, RunSummary, TraceMetrics};
pub use config::{parse_seeds, ExperimentConfig, SweepCell};
pub use plot::PlotReport;
pub use report::{BestSoFar, Spread};
pub use trace::{read_trace, trace_to_bytes, write_trace, TRACE_COLUMNS, TRACE_SCHEMA_VERSION};

use crate::error::{Error, Result};
use crate::rng::OracleStreams;
use crate::solver::{self, Method, RunResult, RunStatus};
use crate::theory::{
    lemma_audit, tail_estimate, validate_params, AuditReport, TailPoint, TheoryConstants, ValidationReport,
};

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub methods: Option<Vec<Method>>,
}

impl RunOptions {
    fn apply(&self, cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
        let mut c = cfg.clone();
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        if let Some(seeds) = &self.seeds {
            c.seeds = seeds.clone();
        }
        if let Some(m) = &self.methods {
            if let Some(first) = m.first() {
                c.method = *first;
            }
            c.methods = m.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Executes one configured run. Divergence is folded into the result with
/// the partial trace and the error message.
pub fn execute_run(cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<(RunResult, Option<String>)> {
    let problem = cfg.problem_spec()?;
    let x0 = cfg.start_point(&problem)?;
    let ocfg = cfg.effective_oracle();
    let params = cfg.effective_solver();
    match solver::run(method, &problem, &ocfg, &params, &x0, OracleStreams::new(seed, 0)) {
        Ok(r) => Ok((r, None)),
        Err(Error::Divergence {
            iteration,
            reason,
            partial,
        }) => Ok((*partial, Some(format!("diverged at iteration {iteration}: {reason}")))),
        Err(e) => Err(e),
    }
}

/// Per-run audit against the run's own configuration; `None` when the
/// analysis constants are infeasible for it.
pub fn audit_run(cfg: &ExperimentConfig, results: &[RunResult]) -> Option<AuditReport> {
    let problem = cfg.problem_spec().ok()?;
    let ocfg = cfg.effective_oracle();
    let params = cfg.effective_solver();
    let c = TheoryConstants::compute(&problem, &params, &ocfg, &cfg.theory).ok()?;
    Some(lemma_audit(results, &c, &ocfg, &params))
}

/// Snapshot of the exact configuration of a single run.
pub fn run_snapshot(cfg: &ExperimentConfig, method: Method, seed: u64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.method = method;
    c.methods.clear();
    c.seeds = vec![seed];
    c.sweep.clear();
    c
}

pub fn build_summary(cfg: &ExperimentConfig, seed: u64, result: &RunResult, error: Option<String>) -> RunSummary {
    let m = TraceMetrics::from_records(&result.records, cfg);
    RunSummary {
        trace_schema_version: TRACE_SCHEMA_VERSION,
        method: result.method,
        problem: cfg.problem.name.clone(),
        seed,
        status: result.status,
        error,
        iterations: m.iterations,
        stopping_time: m.stopping_time,
        feval_count: m.feval_count,
        geval_count: m.geval_count,
        heval_count: m.heval_count,
        final_f_true: m.final_f_true,
        best_f_true: m.best_f_true,
        best_grad_norm: m.best_grad_norm,
        final_grad_norm: m.final_grad_norm,
        final_lambda_true: m.final_lambda_true,
        final_x: m.final_x,
        audit: audit_run(cfg, std::slice::from_ref(result)),
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub cell: usize,
    pub method: Method,
    pub seed: u64,
    pub dir: PathBuf,
    pub result: RunResult,
    pub summary: RunSummary,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub outcomes: Vec<RunOutcome>,
    /// Analysis-condition checks per cell, in cell order.
    pub validation: Vec<ValidationReport>,
}

impl RunReport {
    pub fn first_divergence(&self) -> Option<&RunOutcome> {
        self.outcomes.iter().find(|o| o.result.status == RunStatus::Diverged)
    }

    /// Converts a divergence into the runtime error the CLI reports.
    pub fn divergence_error(&self) -> Option<Error> {
        self.first_divergence().map(|o| Error::Divergence {
            iteration: o.result.records.len(),
            reason: format!(
                "{} seed {}: {}",
                o.method,
                o.seed,
                // The stored message already names the iteration.
                o.summary
                    .error
                    .as_deref()
                    .map_or("", |e| e.split_once(": ").map_or(e, |(_, r)| r))
            ),
            partial: Box::new(o.result.clone()),
        })
    }

    fn for_cell(&self, cell: usize) -> impl Iterator<Item = &RunOutcome> {
        self.outcomes.iter().filter(move |o| o.cell == cell)
    }
}

struct Job {
    cell: usize,
    config: ExperimentConfig,
    method: Method,
    seed: u64,
    dir: PathBuf,
}

fn execute_jobs(jobs: Vec<Job>, threads: usize) -> Result<Vec<RunOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let (result, error) = execute_run(&job.config, job.method, job.seed)?;
                let snapshot = run_snapshot(&job.config, job.method, job.seed);
                let summary = build_summary(&snapshot, job.seed, &result, error);
                artifact::write_artifact(&job.dir, &snapshot, &result.records, &summary)?;
                Ok(RunOutcome {
                    cell: job.cell,
                    method: job.method,
                    seed: job.seed,
                    dir: job.dir,
                    result,
                    summary,
                })
            })
            .collect()
    })
}

fn run_dir(base: &Path, method: Method, seed: u64) -> PathBuf {
    base.join(method.label()).join(format!("seed_{seed}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Trace(e.to_string()))?;
    write_text(path, &s)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Trace(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Trace(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Trace(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn write_runs_table(path: &Path, outcomes: &[RunOutcome]) -> Result<()> {
    let header: Vec<String> = [
        "cell",
        "method",
        "seed",
        "status",
        "iterations",
        "stopping_time",
        "fevals",
        "gevals",
        "hevals",
        "final_f_true",
        "best_grad_norm",
        "lemma_violations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            let s = &o.summary;
            vec![
                o.cell.to_string(),
                o.method.to_string(),
                o.seed.to_string(),
                format!("{:?}", s.status),
                s.iterations.to_string(),
                fmt_opt(s.stopping_time),
                s.feval_count.to_string(),
                s.geval_count.to_string(),
                s.heval_count.to_string(),
                format!("{:?}", s.final_f_true),
                format!("{:?}", s.best_grad_norm),
                s.audit
                    .as_ref()
                    .map_or_else(String::new, |a| a.lemma_violations().to_string()),
            ]
        })
        .collect();
    write_text(path, &csv_bytes(&header, &rows)?)
}

fn run_cells(cells: &[SweepCell], opts: &RunOptions, out_dir: &Path, nested: bool) -> Result<RunReport> {
    let mut jobs = Vec::new();
    let mut validation = Vec::new();
    for cell in cells {
        let base = if nested {
            out_dir.join(format!("cell_{}", cell.index))
        } else {
            out_dir.to_path_buf()
        };
        validation.push(validate_params(
            &cell.config.effective_solver(),
            &cell.config.effective_oracle(),
        ));
        for method in cell.config.method_list() {
            for &seed in &cell.config.seeds {
                jobs.push(Job {
                    cell: cell.index,
                    config: cell.config.clone(),
                    method,
                    seed,
                    dir: run_dir(&base, method, seed),
                });
            }
        }
    }
    let outcomes = execute_jobs(jobs, opts.jobs)?;
    write_runs_table(&out_dir.join("runs.csv"), &outcomes)?;
    let labelled: BTreeMap<String, &ValidationReport> = cells
        .iter()
        .zip(&validation)
        .map(|(c, v)| (format!("cell_{}:{}", c.index, c.label()), v))
        .collect();
    write_json(&out_dir.join("validation.json"), &labelled)?;
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        outcomes,
        validation,
    })
}

/// Runs `method` (or the option's first method) over the configured seeds.
pub fn cmd_run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut c = opts.apply(cfg)?;
    c.methods.clear();
    c.sweep.clear();
    let out = c.output_dir.clone();
    let cell = SweepCell {
        index: 0,
        assignments: Vec::new(),
        config: c,
    };
    run_cells(&[cell], opts, &out, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointAggregate {
    pub at: u64,
    pub f_true: Spread,
    pub grad_true_norm: Spread,
    pub lambda_true: Spread,
    pub alpha: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    pub cell: usize,
    pub label: String,
    pub method: Method,
    pub runs: usize,
    pub best_grad_norm: Spread,
    pub final_f_true: Spread,
    pub terminal_f_true: Spread,
    pub step_size: Spread,
    pub iteration_checkpoints: Vec<CheckpointAggregate>,
    pub feval_checkpoints: Vec<CheckpointAggregate>,
    pub tail: Option<Vec<TailPoint>>,
}

fn checkpoint(at: u64, bests: impl Iterator<Item = Option<BestSoFar>>) -> CheckpointAggregate {
    let b: Vec<BestSoFar> = bests.flatten().collect();
    let col = |f: fn(&BestSoFar) -> f64| Spread::of(&b.iter().map(f).collect::<Vec<_>>());
    CheckpointAggregate {
        at,
        f_true: col(|b| b.f_true),
        grad_true_norm: col(|b| b.grad_true_norm),
        lambda_true: col(|b| b.lambda_true),
        alpha: col(|b| b.alpha),
    }
}

/// Cross-seed aggregate for one cell and method.
pub fn aggregate_level(cell: &SweepCell, method: Method, outcomes: &[&RunOutcome]) -> Result<LevelAggregate> {
    let rep = &cell.config.report;
    let runs: Vec<&RunResult> = outcomes.iter().map(|o| &o.result).collect();
    let col = |f: &dyn Fn(&RunResult) -> f64| Spread::of(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
    let max_fevals = runs.iter().map(|r| r.feval_count).max().unwrap_or(0);
    let tail = if runs.len() >= 2 {
        Some(tail_estimate(
            &runs.iter().map(|r| r.stopping_time).collect::<Vec<_>>(),
            &rep.tail_grid,
        )?)
    } else {
        None
    };
    Ok(LevelAggregate {
        cell: cell.index,
        label: cell.label(),
        method,
        runs: runs.len(),
        best_grad_norm: col(&|r| r.records.iter().map(|x| x.grad_true_norm).fold(f64::INFINITY, f64::min)),
        final_f_true: col(&|r| r.records.last().map_or(f64::NAN, |x| x.f_next_true)),
        terminal_f_true: col(&|r| report::terminal_window_f(&r.records, rep.terminal_fraction)),
        step_size: col(&|r| report::step_size_at(&r.records, rep.step_size_iteration)),
        iteration_checkpoints: rep
            .iteration_checkpoints
            .iter()
            .map(|&k| checkpoint(k as u64, runs.iter().map(|r| report::best_at_iteration(&r.records, k))))
            .collect(),
        feval_checkpoints: report::feval_grid(max_fevals)
            .into_iter()
            .map(|b| checkpoint(b, runs.iter().map(|r| report::best_at_fevals(&r.records, b))))
            .collect(),
        tail,
    })
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub runs: RunReport,
    pub levels: Vec<LevelAggregate>,
}

fn spread_cells(s: &Spread) -> [String; 3] {
    [
        format!("{:?}", s.median),
        format!("{:?}", s.q25),
        format!("{:?}", s.q75),
    ]
}

fn write_level_tables(out: &Path, levels: &[LevelAggregate]) -> Result<()> {
    let mut header: Vec<String> = ["cell", "label", "method", "runs"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in ["best_grad_norm", "final_f_true", "terminal_f_true", "step_size"] {
        for q in ["median", "q25", "q75"] {
            header.push(format!("{m}_{q}"));
        }
    }
    let rows: Vec<Vec<String>> = levels
        .iter()
        .map(|l| {
            let mut r = vec![
                l.cell.to_string(),
                l.label.clone(),
                l.method.to_string(),
                l.runs.to_string(),
            ];
            for s in [&l.best_grad_norm, &l.final_f_true, &l.terminal_f_true, &l.step_size] {
                r.extend(spread_cells(s));
            }
            r
        })
        .collect();
    write_text(&out.join("levels.csv"), &csv_bytes(&header, &rows)?)?;

    let mut header: Vec<String> = ["cell", "method", "axis", "at"].iter().map(|s| s.to_string()).collect();
    for m in ["f_true", "grad_true_norm", "lambda_true", "alpha"] {
        for q in ["median", "q25", "q75"] {
            header.push(format!("{m}_{q}"));
        }
    }
    let mut rows = Vec::new();
    for l in levels {
        for (axis, cps) in [
            ("iteration", &l.iteration_checkpoints),
            ("fevals", &l.feval_checkpoints),
        ] {
            for c in cps {
                let mut r = vec![
                    l.cell.to_string(),
                    l.method.to_string(),
                    axis.to_string(),
                    c.at.to_string(),
                ];
                for s in [&c.f_true, &c.grad_true_norm, &c.lambda_true, &c.alpha] {
                    r.extend(spread_cells(s));
                }
                rows.push(r);
            }
        }
    }
    write_text(&out.join("checkpoints.csv"), &csv_bytes(&header, &rows)?)?;

    let header: Vec<String> = ["cell", "method", "t", "estimate", "std_err"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = levels
        .iter()
        .flat_map(|l| {
            l.tail.iter().flatten().map(move |p| {
                vec![
                    l.cell.to_string(),
                    l.method.to_string(),
                    p.t.to_string(),
                    format!("{:?}", p.estimate),
                    format!("{:?}", p.std_err),
                ]
            })
        })
        .collect();
    write_text(&out.join("tail.csv"), &csv_bytes(&header, &rows)?)?;
    write_json(&out.join("aggregate.json"), &levels)
}

/// Runs the cross product of the sweep axes and aggregates each cell.
pub fn cmd_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport> {
    let c = opts.apply(cfg)?;
    let out = c.output_dir.clone();
    let cells = c.expand_sweep()?;
    let runs = run_cells(&cells, opts, &out, !c.sweep.is_empty())?;
    let mut levels = Vec::new();
    for cell in &cells {
        for method in cell.config.method_list() {
            let outs: Vec<&RunOutcome> = runs.for_cell(cell.index).filter(|o| o.method == method).collect();
            levels.push(aggregate_level(cell, method, &outs)?);
        }
    }
    write_level_tables(&out, &levels)?;
    Ok(SweepReport { runs, levels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparePoint {
    pub fevals: u64,
    pub f_true: Spread,
    pub grad_true_norm: Spread,
    pub lambda_true: Spread,
    pub alpha: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: Method,
    pub final_f_true: Spread,
    pub points: Vec<ComparePoint>,
}

#[derive(Clone, Debug)]
pub struct CompareReport {
    pub runs: RunReport,
    pub curves: Vec<MethodCurve>,
}

/// Runs every listed method on the same seeds and budgets and aligns the
/// best-so-far metrics on a shared power-of-two feval grid.
pub fn cmd_compare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CompareReport> {
    let mut c = opts.apply(cfg)?;
    c.sweep.clear();
    let methods = c.method_list();
    if methods.len() < 2 {
        return Err(Error::Config(format!(
            "compare needs at least 2 methods, got {}",
            methods.len()
        )));
    }
    let out = c.output_dir.clone();
    let cell = SweepCell {
        index: 0,
        assignments: Vec::new(),
        config: c.clone(),
    };
    let runs = run_cells(&[cell], opts, &out, false)?;
    let budget = match c.effective_solver().max_fevals {
        b if b < i64::MAX as u64 => b,
        _ => runs.outcomes.iter().map(|o| o.result.feval_count).max().unwrap_or(1),
    };
    let grid = report::feval_grid(budget);
    let mut curves = Vec::new();
    let mut rows = Vec::new();
    for &m in &methods {
        let rs: Vec<&RunOutcome> = runs.outcomes.iter().filter(|o| o.method == m).collect();
        let mut points = Vec::new();
        for &b in &grid {
            let bests: Vec<(u64, BestSoFar)> = rs
                .iter()
                .filter_map(|o| report::best_at_fevals(&o.result.records, b).map(|x| (o.seed, x)))
                .collect();
            for (seed, x) in &bests {
                rows.push(vec![
                    m.to_string(),
                    seed.to_string(),
                    b.to_string(),
                    format!("{:?}", x.f_true),
                    format!("{:?}", x.grad_true_norm),
                    format!("{:?}", x.lambda_true),
                    format!("{:?}", x.alpha),
                ]);
            }
            let col = |f: fn(&BestSoFar) -> f64| Spread::of(&bests.iter().map(|(_, x)| f(x)).collect::<Vec<_>>());
            points.push(ComparePoint {
                fevals: b,
                f_true: col(|x| x.f_true),
                grad_true_norm: col(|x| x.grad_true_norm),
                lambda_true: col(|x| x.lambda_true),
                alpha: col(|x| x.alpha),
            });
        }
        let finals: Vec<f64> = rs
            .iter()
            .map(|o| o.result.records.last().map_or(f64::NAN, |r| r.f_next_true))
            .collect();
        curves.push(MethodCurve {
            method: m,
            final_f_true: Spread::of(&finals),
            points,
        });
    }
    let header: Vec<String> = [
        "method",
        "seed",
        "fevals",
        "best_f_true",
        "best_grad_norm",
        "best_lambda_true",
        "alpha",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    write_text(&out.join("compare.csv"), &csv_bytes(&header, &rows)?)?;
    write_json(&out.join("compare.json"), &curves)?;
    Ok(CompareReport { runs, curves })
}

/// Loads and checks every artifact under `dir`, then renders all panels.
pub fn cmd_plot(dir: &Path) -> Result<PlotReport> {
    let dirs = find_artifact_dirs(dir)?;
    if dirs.is_empty() {
        return Err(Error::NotFound(dir.join(artifact::TRACE_FILE)));
    }
    let arts = dirs.iter().map(|d| load_artifact(d)).collect::<Result<Vec<_>>>()?;
    plot::render_all(dir, &arts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditGroup {
    pub method: Method,
    pub runs: Vec<PathBuf>,
    pub constants: Option<TheoryConstants>,
    pub report: Option<AuditReport>,
    pub note: Option<String>,
}

/// Groups artifacts by configuration (ignoring the seed), runs the lemma
/// audit on each group and writes `audit.json` into `dir`.
pub fn cmd_audit(dir: &Path) -> Result<Vec<AuditGroup>> {
    let dirs = find_artifact_dirs(dir)?;
    if dirs.is_empty() {
        return Err(Error::NotFound(dir.join(artifact::TRACE_FILE)));
    }
    let mut groups: BTreeMap<String, (ExperimentConfig, Vec<RunArtifact>)> = BTreeMap::new();
    for d in &dirs {
        let a = load_artifact(d)?;
        let mut key_cfg = a.config.clone();
        key_cfg.seeds = vec![0];
        let key = key_cfg.to_toml()?;
        groups
            .entry(key)
            .or_insert_with(|| (a.config.clone(), Vec::new()))
            .1
            .push(a);
    }
    let mut out = Vec::new();
    for (_, (cfg, arts)) in groups {
        let problem = cfg.problem_spec()?;
        let ocfg = cfg.effective_oracle();
        let params = cfg.effective_solver();
        let results: Vec<RunResult> = arts
            .iter()
            .map(|a| RunResult {
                method: a.summary.method,
                stopping_time: a.summary.stopping_time,
                status: a.summary.status,
                feval_count: a.summary.feval_count,
                geval_count: a.summary.geval_count,
                heval_count: a.summary.heval_count,
                records: a.records.clone(),
            })
            .collect();
        let (constants, report, note) = match TheoryConstants::compute(&problem, &params, &ocfg, &cfg.theory) {
            Ok(c) => {
                let r = lemma_audit(&results, &c, &ocfg, &params);
                (Some(c), Some(r), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        };
        out.push(AuditGroup {
            method: cfg.method,
            runs: arts.iter().map(|a| a.dir.clone()).collect(),
            constants,
            report,
            note,
        });
    }
    write_json(&dir.join("audit.json"), &out)?;
    Ok(out)
}
