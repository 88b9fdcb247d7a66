use std::fs;
use std::path::Path;
use std::process::Command;

use ssnc::harness::artifact::{SUMMARY_FILE, TRACE_FILE};
use ssnc::harness::{
    self, find_artifact_dirs, load_artifact, read_trace, trace_to_bytes, ExperimentConfig, RunOptions,
};
use ssnc::solver::Method;
use ssnc::Error;

const SMALL: &str = r#"
method = "SS2-NC-G"
seeds = [0, 1]
problem.name = "rosenbrock2"
problem.x0 = [-1.2, 1.0]
oracle.eps_f = 1e-3
oracle.scaling = "coupled"
solver.e_f_ratio = 2.0
solver.halt_at_stopping_time = false
budgets.max_iters = 300
"#;

fn opts(out: &Path) -> RunOptions {
    RunOptions {
        out: Some(out.to_path_buf()),
        jobs: 1,
        ..RunOptions::default()
    }
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn repeated_runs_write_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let a = harness::cmd_run(&cfg, &opts(&tmp.path().join("a"))).unwrap();
    let b = harness::cmd_run(
        &cfg,
        &RunOptions {
            jobs: 2,
            ..opts(&tmp.path().join("b"))
        },
    )
    .unwrap();
    assert_eq!(a.outcomes.len(), 2);
    for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
        let tx = fs::read(x.dir.join(TRACE_FILE)).unwrap();
        let ty = fs::read(y.dir.join(TRACE_FILE)).unwrap();
        assert_eq!(tx, ty);
    }
}

#[test]
fn summaries_match_their_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let rep = harness::cmd_run(&cfg, &opts(tmp.path())).unwrap();
    for o in &rep.outcomes {
        let art = load_artifact(&o.dir).unwrap();
        assert_eq!(
            trace_to_bytes(&art.records).unwrap(),
            trace_to_bytes(&o.result.records).unwrap()
        );
        assert_eq!(art.summary, o.summary);
        assert_eq!(art.summary.iterations, 300);
    }
}

#[test]
fn tampered_summary_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let rep = harness::cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let dir = &rep.outcomes[0].dir;
    let path = dir.join(SUMMARY_FILE);
    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    v["best_grad_norm"] = serde_json::json!(123.0);
    fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
    assert!(load_artifact(dir).is_err());
}

#[test]
fn missing_trace_is_not_found() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        read_trace(&tmp.path().join("none.csv")),
        Err(Error::NotFound(_))
    ));
    assert!(matches!(
        harness::cmd_plot(&tmp.path().join("none")),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn sweep_writes_one_cell_per_level() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[[sweep]]\npath = \"oracle.eps_f\"\nvalues = [1e-2, 0.0]\n");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let rep = harness::cmd_sweep(&cfg, &opts(tmp.path())).unwrap();
    assert_eq!(rep.levels.len(), 2);
    assert_eq!(rep.runs.outcomes.len(), 4);
    assert!(tmp.path().join("levels.csv").is_file());
    // Cells are ordered by ascending level.
    assert!(rep.levels[0].label.contains("oracle.eps_f=0"));
    let again = harness::cmd_sweep(&cfg, &opts(&tmp.path().join("again"))).unwrap();
    for (x, y) in rep.runs.outcomes.iter().zip(&again.runs.outcomes) {
        assert_eq!(
            trace_to_bytes(&x.result.records).unwrap(),
            trace_to_bytes(&y.result.records).unwrap()
        );
    }
}

#[test]
fn compare_uses_common_seeds_and_budgets() {
    let tmp = tempfile::tempdir().unwrap();
    let text =
        SMALL.replace("method = \"SS2-NC-G\"", "methods = [\"SS2-NC-G\", \"SS-G\"]") + "budgets.max_fevals = 400\n";
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let rep = harness::cmd_compare(&cfg, &opts(tmp.path())).unwrap();
    assert_eq!(rep.curves.len(), 2);
    for o in &rep.runs.outcomes {
        assert!(o.result.feval_count <= 400 + 3);
    }
    let single = ExperimentConfig::parse(SMALL).unwrap();
    assert!(harness::cmd_compare(&single, &opts(&tmp.path().join("x"))).is_err());
}

#[test]
fn plots_and_audit_over_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    harness::cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let plots = harness::cmd_plot(tmp.path()).unwrap();
    assert!(!plots.files.is_empty());
    assert!(plots
        .files
        .iter()
        .all(|f| f.extension().is_some_and(|e| e == "svg") && f.is_file()));
    assert!(plots.notices.is_empty());
    let groups = harness::cmd_audit(tmp.path()).unwrap();
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].method, Method::Ss2NcG);
    assert_eq!(find_artifact_dirs(tmp.path()).unwrap().len(), 2);
}

#[test]
fn high_dimensional_runs_skip_contours_with_a_notice() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace(
            "problem.name = \"rosenbrock2\"",
            "problem.name = \"rosenbrockN\"\nproblem.dim = 4",
        )
        .replace("problem.x0 = [-1.2, 1.0]", "")
        .replace("seeds = [0, 1]", "seeds = [0]");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    harness::cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let plots = harness::cmd_plot(tmp.path()).unwrap();
    assert_eq!(plots.notices.len(), 1);
    assert!(plots.notices[0].contains("dimension 4"));
}

#[test]
fn plotting_an_empty_trace_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&SMALL.replace("seeds = [0, 1]", "seeds = [0]")).unwrap();
    let rep = harness::cmd_run(&cfg, &opts(tmp.path())).unwrap();
    let trace = rep.outcomes[0].dir.join(TRACE_FILE);
    let header = fs::read_to_string(&trace).unwrap().lines().next().unwrap().to_string();
    fs::write(&trace, header + "\n").unwrap();
    assert!(harness::cmd_plot(tmp.path()).is_err());
    let svgs = walk(tmp.path())
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .count();
    assert_eq!(svgs, 0);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn ssnc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ssnc")).args(args).output().unwrap()
}

#[test]
fn cli_run_then_plot_and_audit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = ssnc(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seeds",
        "3..5",
        "--jobs",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(find_artifact_dirs(&out).unwrap().len(), 2);
    assert!(ssnc(&["plot", out.to_str().unwrap()]).status.success());
    let a = ssnc(&["audit", out.to_str().unwrap()]);
    assert!(a.status.success());
    assert!(String::from_utf8_lossy(&a.stdout).contains("violations"));
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        ssnc(&["run", "--config", missing.to_str().unwrap()]).status.code(),
        Some(4)
    );

    let bad = write_config(tmp.path(), &format!("{SMALL}\nsolver.bogus = 1\n"));
    let o = ssnc(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    // A huge noise allowance accepts every trial step, so the step size
    // doubles until the iterates leave the divergence radius.
    let diverging = SMALL.replace("solver.e_f_ratio = 2.0", "solver.e_f_ratio = 1e300");
    let d = tmp.path().join("d");
    fs::create_dir(&d).unwrap();
    let cfg = write_config(&d, &diverging);
    let o = ssnc(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    // The partial trace is still written.
    assert_eq!(find_artifact_dirs(&d.join("out")).unwrap().len(), 2);

    assert_eq!(
        ssnc(&["audit", tmp.path().join("nothing").to_str().unwrap()])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(
        ssnc(&["run", "--config", bad.to_str().unwrap(), "--method", "nope"])
            .status
            .code(),
        Some(2)
    );
}
