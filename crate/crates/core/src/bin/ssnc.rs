//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ssnc::harness::{self, parse_seeds, ExperimentConfig, RunOptions, RunReport};
use ssnc::solver::Method;
use ssnc::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "ssnc", version, about = "Step-search negative-curvature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML, dotted keys such as `oracle.eps_f = 1e-3`).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds as `a..b` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Method(s): SS2-NC-G, SS-G, SS-NC-CG. Repeat or comma-separate for compare.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method over the configured seeds.
    Run(Common),
    /// Run the cross product of the config's sweep axes.
    Sweep(Common),
    /// Run several methods on identical seeds and budgets.
    Compare(Common),
    /// Render SVG panels for every run under an artifact directory.
    Plot { dir: PathBuf },
    /// Audit the lemma properties over an artifact directory.
    Audit { dir: PathBuf },
}

fn options(c: &Common) -> Result<(ExperimentConfig, RunOptions)> {
    let cfg = ExperimentConfig::load(&c.config)?;
    let methods = if c.method.is_empty() {
        None
    } else {
        Some(
            c.method
                .iter()
                .map(|m| Method::parse(m.trim()))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let seeds = c.seeds.as_deref().map(parse_seeds).transpose()?;
    Ok((
        cfg,
        RunOptions {
            out: c.out.clone(),
            seeds,
            jobs: c.jobs,
            methods,
        },
    ))
}

fn report_runs(r: &RunReport) -> Result<()> {
    for (i, v) in r.validation.iter().enumerate() {
        for f in v.failures() {
            eprintln!("warning: cell {i}: analysis condition {} fails ({})", f.name, f.detail);
        }
    }
    for o in &r.outcomes {
        let s = &o.summary;
        println!(
            "{} seed {}: {:?} after {} iterations, {} fevals, f = {:e}, best |grad| = {:e}",
            o.method, o.seed, s.status, s.iterations, s.feval_count, s.final_f_true, s.best_grad_norm
        );
    }
    println!("artifacts in {}", r.out_dir.display());
    match r.divergence_error() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            let (cfg, opts) = options(&c)?;
            report_runs(&harness::cmd_run(&cfg, &opts)?)
        }
        Command::Sweep(c) => {
            let (cfg, opts) = options(&c)?;
            let rep = harness::cmd_sweep(&cfg, &opts)?;
            for l in &rep.levels {
                println!(
                    "cell {} [{}] {}: median best |grad| = {:e}, median terminal f = {:e}",
                    l.cell, l.label, l.method, l.best_grad_norm.median, l.terminal_f_true.median
                );
            }
            report_runs(&rep.runs)
        }
        Command::Compare(c) => {
            let (cfg, opts) = options(&c)?;
            let rep = harness::cmd_compare(&cfg, &opts)?;
            for curve in &rep.curves {
                println!("{}: median final f = {:e}", curve.method, curve.final_f_true.median);
            }
            report_runs(&rep.runs)
        }
        Command::Plot { dir } => {
            let rep = harness::cmd_plot(&dir)?;
            for n in &rep.notices {
                eprintln!("note: {n}");
            }
            println!("wrote {} panels", rep.files.len());
            Ok(())
        }
        Command::Audit { dir } => {
            let groups = harness::cmd_audit(&dir)?;
            for g in &groups {
                match &g.report {
                    Some(r) => println!(
                        "{} ({} runs, {} iterations): violations i={} ii={} iii={} iv={} v={}",
                        g.method,
                        g.runs.len(),
                        r.iterations_audited,
                        r.violations_i,
                        r.violations_ii,
                        r.violations_iii,
                        r.violations_iv,
                        r.violations_v
                    ),
                    None => println!(
                        "{} ({} runs): not audited: {}",
                        g.method,
                        g.runs.len(),
                        g.note.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("wrote {}", dir.join("audit.json").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Divergence { .. } => 3,
                other => other.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
