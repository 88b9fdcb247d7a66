//! Experiment configuration: TOML with dotted section keys, plus sweeps.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::OracleConfig;
use crate::problems::ProblemSpec;
use crate::solver::{Method, SolverParams};
use crate::theory::TheoremInputs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            name: "rosenbrock2".into(),
            dim: None,
            x0: None,
        }
    }
}

/// Optional overrides of the solver's iteration and evaluation budgets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_fevals: Option<u64>,
}

/// One swept parameter: a dotted config path and the values it takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

/// Post-processing knobs for aggregates and plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Iteration checkpoints for per-level aggregates.
    pub iteration_checkpoints: Vec<usize>,
    /// Trailing fraction of each run averaged as the terminal window.
    pub terminal_fraction: f64,
    /// Iteration whose step size is reported per level.
    pub step_size_iteration: usize,
    /// Grid of `t` values for the stopping-time tail curve.
    pub tail_grid: Vec<usize>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            iteration_checkpoints: vec![100, 200, 1000, 2000, 5000, 20000],
            terminal_fraction: 0.1,
            step_size_iteration: 100,
            tail_grid: vec![10, 100, 1000, 10000],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    /// Methods for `compare`; empty means only `method`.
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub problem: ProblemConfig,
    pub oracle: OracleConfig,
    pub solver: SolverParams,
    pub budgets: Budgets,
    pub theory: TheoremInputs,
    pub report: ReportConfig,
    pub sweep: Vec<SweepAxis>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Ss2NcG,
            methods: Vec::new(),
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
            problem: ProblemConfig::default(),
            oracle: OracleConfig::default(),
            solver: SolverParams::default(),
            budgets: Budgets::default(),
            theory: TheoremInputs::default(),
            report: ReportConfig::default(),
            sweep: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::NotFound(path.to_path_buf())
            } else {
                Error::io(path, e)
            }
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(value)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Hard checks; the analysis inequalities are reported separately.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.oracle.resolved().validate()?;
        self.effective_solver().validate()?;
        let problem = self.problem_spec()?;
        self.start_point(&problem)?;
        if !(self.report.terminal_fraction > 0.0 && self.report.terminal_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "report.terminal_fraction must lie in (0,1], got {}",
                self.report.terminal_fraction
            )));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("sweep over '{}' has no values", axis.path)));
            }
            if matches!(axis.path.split('.').next(), Some("sweep" | "seeds")) {
                return Err(Error::Config(format!("cannot sweep '{}'", axis.path)));
            }
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::by_name(&self.problem.name, self.problem.dim).map_err(|e| match e {
            Error::InvalidInput(m) | Error::InvalidDimension(m) => Error::Config(format!("problem: {m}")),
            other => other,
        })
    }

    pub fn start_point(&self, problem: &ProblemSpec) -> Result<Vec<f64>> {
        let x0 = self.problem.x0.clone().unwrap_or_else(|| problem.default_start.clone());
        if x0.len() != problem.dim {
            return Err(Error::Config(format!(
                "problem.x0 has length {}, expected {}",
                x0.len(),
                problem.dim
            )));
        }
        Ok(x0)
    }

    /// Solver parameters with budgets applied and `e_f` resolved.
    pub fn effective_solver(&self) -> SolverParams {
        let mut p = self.solver.clone();
        if let Some(n) = self.budgets.max_iters {
            p.max_iters = n;
        }
        if let Some(n) = self.budgets.max_fevals {
            p.max_fevals = n;
        }
        p.resolved(self.oracle.resolved().eps_f)
    }

    pub fn effective_oracle(&self) -> OracleConfig {
        self.oracle.resolved()
    }

    /// Methods for comparison runs, falling back to the single `method`.
    pub fn method_list(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            vec![self.method]
        } else {
            self.methods.clone()
        }
    }

    /// Returns a copy with `path` set to `value`, re-validated.
    pub fn with_override(&self, path: &str, value: toml::Value) -> Result<Self> {
        let mut table =
            toml::Table::try_from(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
        set_path(&mut table, path, value)?;
        Self::from_table(table)
    }

    /// Cross product of the sweep axes. Each cell carries its assignments and
    /// a config differing from `self` in exactly those fields; the cell
    /// configs themselves have no sweep.
    pub fn expand_sweep(&self) -> Result<Vec<SweepCell>> {
        let mut base = self.clone();
        base.sweep.clear();
        let mut cells = vec![SweepCell {
            index: 0,
            assignments: Vec::new(),
            config: base,
        }];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(cells.len() * axis.values.len());
            for cell in &cells {
                for v in sorted_values(&axis.values) {
                    let mut assignments = cell.assignments.clone();
                    assignments.push((axis.path.clone(), v.clone()));
                    next.push(SweepCell {
                        index: 0,
                        assignments,
                        config: cell.config.with_override(&axis.path, v)?,
                    });
                }
            }
            cells = next;
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.index = i;
        }
        Ok(cells)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub assignments: Vec<(String, toml::Value)>,
    pub config: ExperimentConfig,
}

impl SweepCell {
    /// `path=value` pairs joined by commas.
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(p, v)| format!("{p}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn as_number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(f) => Some(*f),
        _ => None,
    }
}

// Numeric axes run in ascending order; anything else keeps the given order.
fn sorted_values(values: &[toml::Value]) -> Vec<toml::Value> {
    let mut out = values.to_vec();
    if out.iter().all(|v| as_number(v).is_some()) {
        out.sort_by(|a, b| as_number(a).unwrap().total_cmp(&as_number(b).unwrap()));
    }
    out
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed config path '{path}'")));
    }
    let (last, prefix) = parts.split_last().expect("non-empty split");
    let mut cur = table;
    for p in prefix {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{p}' in '{path}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses `--seeds` values: `a..b` (half-open) or comma-separated integers.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b <= a {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
method = "SS2-NC-G"
seeds = [1, 2]
problem.name = "rosenbrock2"
oracle.eps_f = 1e-3
oracle.scaling = "coupled"
solver.e_f_ratio = 2.0
solver.max_iters = 50
"#;

    #[test]
    fn parses_dotted_keys() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.oracle.eps_f, 1e-3);
        assert_eq!(c.effective_solver().e_f, 2e-3);
        assert_eq!(c.effective_oracle().eps_h, 1e-3_f64.cbrt());
        assert_eq!(c.seeds, vec![1, 2]);
    }

    #[test]
    fn reports_unknown_field() {
        let err = ExperimentConfig::parse("solver.c_q = 1.0").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("c_q")), "{err}");
        let err = ExperimentConfig::parse("method = 3\nseeds = [").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("line")), "{err}");
    }

    #[test]
    fn rejects_duplicate_seeds() {
        assert!(ExperimentConfig::parse("seeds = [1, 1]").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        let back = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn sweep_cells_differ_only_in_swept_fields() {
        let text = format!(
            "{BASE}\n[[sweep]]\npath = \"oracle.eps_f\"\nvalues = [1e-2, 0.0, 1e-5]\n[[sweep]]\npath = \"solver.e_f_ratio\"\nvalues = [2.0, 16.0]\n"
        );
        let c = ExperimentConfig::parse(&text).unwrap();
        let cells = c.expand_sweep().unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].config.oracle.eps_f, 0.0);
        assert_eq!(cells[5].config.oracle.eps_f, 1e-2);
        for cell in &cells {
            let mut expect = c.clone();
            expect.sweep.clear();
            expect.oracle.eps_f = cell.config.oracle.eps_f;
            expect.solver.e_f_ratio = cell.config.solver.e_f_ratio;
            assert_eq!(cell.config, expect);
        }
        assert_eq!(cells[1].label(), "oracle.eps_f=0.0,solver.e_f_ratio=16.0");
    }

    #[test]
    fn empty_sweep_is_one_cell() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        let cells = c.expand_sweep().unwrap();
        assert_eq!(cells.len(), 1);
        assert!(cells[0].assignments.is_empty());
    }

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 9").unwrap(), vec![5, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }
}
