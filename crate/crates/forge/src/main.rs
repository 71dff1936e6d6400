use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use forge::{compare_baseline, default_config, registry_names, run_experiment, ExperimentConfig};

/// Experiment runner: gluing data, decay sweeps, and solver checks, emitted
/// as CSV and JSON reports.
#[derive(Parser)]
#[command(name = "forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one named experiment.
    Run {
        /// Experiment name (see `forge list`).
        experiment: String,
        /// JSON config file; defaults baked into the registry when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the CSV and JSON reports.
        #[arg(long, default_value = "forge-out")]
        out: PathBuf,
    },
    /// Run every registered experiment (or a comma-separated subset).
    Sweep {
        #[arg(long)]
        experiments: Option<String>,
        #[arg(long, default_value = "forge-out")]
        out: PathBuf,
        /// Seed applied to every experiment.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare a report against a baseline, field by field.
    Compare {
        report: PathBuf,
        baseline: PathBuf,
        /// Relative tolerance per field.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// List the registered experiment names.
    List,
}

fn init_threads() {
    if let Ok(v) = std::env::var("FORGE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn load_config(experiment: &str, path: &Option<PathBuf>) -> anyhow::Result<ExperimentConfig> {
    match path {
        None => Ok(default_config(experiment)?),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config JSON")?;
            if cfg.experiment.is_empty() {
                cfg.experiment = experiment.to_string();
            } else if cfg.experiment != experiment {
                bail!("config is for experiment '{}', not '{}'", cfg.experiment, experiment);
            }
            Ok(cfg)
        }
    }
}

/// Print a line, tolerating a closed pipe (e.g. `forge list | head`).
fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn real_main() -> anyhow::Result<bool> {
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in registry_names() {
                say(name);
            }
            Ok(true)
        }
        Command::Run { experiment, config, out } => {
            let cfg = load_config(&experiment, &config)?;
            let report = run_experiment(&cfg, &out)?;
            for (name, ok) in &report.checks {
                say(&format!("{} {}: {}", if *ok { "PASS" } else { "FAIL" }, report.experiment, name));
            }
            say(&format!("{}: {}", report.experiment, if report.passed { "PASS" } else { "FAIL" }));
            Ok(report.passed)
        }
        Command::Sweep { experiments, out, seed } => {
            let names: Vec<String> = match experiments {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => registry_names().iter().map(|s| s.to_string()).collect(),
            };
            use rayon::prelude::*;
            let results: Vec<anyhow::Result<(String, bool)>> = names
                .par_iter()
                .map(|name| {
                    let mut cfg = default_config(name)?;
                    cfg.seed = seed;
                    let report = run_experiment(&cfg, &out)?;
                    Ok((name.clone(), report.passed))
                })
                .collect();
            let mut all = true;
            for r in results {
                let (name, ok) = r?;
                say(&format!("{} {}", if ok { "PASS" } else { "FAIL" }, name));
                all &= ok;
            }
            Ok(all)
        }
        Command::Compare { report, baseline, tol } => {
            let a = forge::report::load_json(&report)?;
            let b = forge::report::load_json(&baseline)?;
            let outcome = compare_baseline(&a, &b, tol);
            for (field, got, expect) in &outcome.mismatches {
                say(&format!("MISMATCH {field}: report {got:.6e} vs baseline {expect:.6e}"));
            }
            say(&format!("compare: {}", if outcome.pass { "PASS" } else { "FAIL" }));
            Ok(outcome.pass)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
