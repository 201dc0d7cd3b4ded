//! `psd`: scenario runs and randomized verification from the command line.
//!
//! Exit codes: 0 all checks passed, 2 at least one check failed, 3 bad
//! config, 4 resource limit, 1 other errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psd_lab::formats::{
    load_config, CheckStatus, GaussianConfig, ScenarioConfig, VerifyConfig,
};
use psd_lab::scenario::{demo_tree_config, run_scenario, RunOutput, ScenarioError};

#[derive(Parser)]
#[command(name = "psd", version, about = "Spatial decomposition workbench")]
struct Cli {
    /// Output directory (default: psd-out/<scenario>)
    #[arg(long, global = true, env = "PSD_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric two-packet superposition against the closed-form decay
    Gaussian(GaussianArgs),
    /// Free velocity channels plus a single-bound-state well
    Scattering,
    /// Branching history for a packet superposition (demo unless --config)
    CustomTree(CustomTreeArgs),
    /// Randomized self-checks of the exact backend
    Verify(VerifyArgs),
    /// Any scenario from a JSON config file
    Run(RunArgs),
}

#[derive(Args)]
struct GaussianArgs {
    /// Packet momentum ±p0
    #[arg(long)]
    momentum: Option<f64>,
    /// Momentum spread σp
    #[arg(long)]
    momentum_spread: Option<f64>,
    #[arg(long, env = "PSD_GRID_N")]
    grid_n: Option<usize>,
    #[arg(long, env = "PSD_T_MAX")]
    t_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    branch_threshold: Option<f64>,
}

#[derive(Args)]
struct CustomTreeArgs {
    /// JSON config with a custom-tree scenario
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, env = "PSD_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    split_trials: Option<usize>,
    #[arg(long)]
    tree_trials: Option<usize>,
    #[arg(long)]
    partition_trials: Option<usize>,
    /// Stop after the first failing suite
    #[arg(long)]
    fail_fast: bool,
    /// Deliberately break one check to prove failures are detected
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config selecting the scenario via its "kind" field
    #[arg(long)]
    config: PathBuf,
}

fn build_config(command: Command) -> Result<ScenarioConfig, String> {
    match command {
        Command::Gaussian(a) => {
            let mut c = GaussianConfig::default();
            if let Some(v) = a.momentum {
                c.momentum = v;
            }
            if let Some(v) = a.momentum_spread {
                c.momentum_spread = v;
            }
            if let Some(v) = a.grid_n {
                c.grid_n = v;
            }
            if let Some(v) = a.t_max {
                c.t_max = v;
            }
            if let Some(v) = a.samples {
                c.samples = v;
            }
            if let Some(v) = a.branch_threshold {
                c.branch_threshold = v;
            }
            Ok(ScenarioConfig::Gaussian(c))
        }
        Command::Scattering => Ok(ScenarioConfig::Scattering(Default::default())),
        Command::CustomTree(a) => match a.config {
            None => Ok(ScenarioConfig::CustomTree(demo_tree_config())),
            Some(path) => match load_config(&path) {
                Ok(cfg @ ScenarioConfig::CustomTree(_)) => Ok(cfg),
                Ok(other) => Err(format!(
                    "{} holds a {:?} config, expected custom-tree",
                    path.display(),
                    other.name()
                )),
                Err(e) => Err(e.to_string()),
            },
        },
        Command::Verify(a) => {
            let mut c = VerifyConfig::default();
            if let Some(v) = a.seed {
                c.seed = v;
            }
            if let Some(v) = a.split_trials {
                c.split_trials = v;
            }
            if let Some(v) = a.tree_trials {
                c.tree_trials = v;
            }
            if let Some(v) = a.partition_trials {
                c.partition_trials = v;
            }
            c.fail_fast = a.fail_fast;
            c.inject_fault = a.inject_fault;
            Ok(ScenarioConfig::Verify(c))
        }
        Command::Run(a) => load_config(&a.config).map_err(|e| e.to_string()),
    }
}

fn print_report(out: &RunOutput) {
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &out.report.checks {
        let tag = match c.status {
            CheckStatus::Passed => "PASS",
            CheckStatus::Failed => "FAIL",
            CheckStatus::Skipped => "SKIP",
        };
        println!("{tag} {} - {}", c.name, c.detail);
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(cli.command) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(3);
        }
    };
    let out_dir = cli
        .out_dir
        .unwrap_or_else(|| PathBuf::from("psd-out").join(cfg.name()));
    match run_scenario(&cfg, &out_dir) {
        Ok(out) => {
            print_report(&out);
            if out.report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ScenarioError::Config(_) => ExitCode::from(3),
                ScenarioError::Resource(_) => ExitCode::from(4),
                ScenarioError::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
