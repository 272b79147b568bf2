//! Batch experiment runner. Parses a config, wires graphs, operators,
//! noise, and schemes, executes the configured study, and writes reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiprox_cli::{config::ExperimentConfig, list_builtins, runner};

#[derive(Parser)]
#[command(name = "semiprox", version, about = "Numerical laboratory runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a config file and write its artifacts.
    Run {
        config: PathBuf,
        /// Output root; overrides the SEMIPROX_OUTPUT_ROOT environment
        /// variable. The config's output directory is created beneath it.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Parse and validate a config file, echoing the resolved form.
    Validate { config: PathBuf },
    /// List the built-in graphs, mark laws, schemes, and study kinds.
    ListBuiltins,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out_root } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            match runner::run(&cfg, out_root.as_deref()) {
                Ok(summary) => {
                    for check in &summary.checks {
                        println!("[{}] {}", if check.passed { "pass" } else { "FAIL" }, check.detail);
                    }
                    if summary.passed {
                        println!("all checks passed");
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("some checks failed; see summary.json");
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.resolved_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::ListBuiltins => {
            print!("{}", list_builtins());
            ExitCode::SUCCESS
        }
    }
}
