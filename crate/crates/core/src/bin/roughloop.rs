use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use roughloop::experiments::{list_experiments, run_with_workers, to_csv, ExperimentConfig, SEED_ENV};

#[derive(Parser)]
#[command(name = "roughloop", version, about = "Seeded rough-path and loop-group experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write its CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Exit with status 3 when any acceptance check fails.
        #[arg(long = "assert")]
        assert_checks: bool,
        /// Worker threads; the output does not depend on this.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write 0 in the wall-time column so the file is byte-reproducible.
        #[arg(long)]
        zero_time: bool,
    },
    /// List registered experiments.
    List,
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::from_file(path).map_err(|errs| {
        for e in errs {
            eprintln!("error: {e}");
        }
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            for (name, desc) in list_experiments() {
                println!("{name:<26}{desc}");
            }
            println!("\ndefault seed override: {SEED_ENV}");
            ExitCode::SUCCESS
        }
        Cmd::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("ok: {}", c.experiment);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Run { config, out, assert_checks, workers, zero_time } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let outcome = match run_with_workers(&cfg, workers) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            let doc = match to_csv(&cfg, &outcome, zero_time) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if let Err(e) = std::fs::write(&out, doc) {
                eprintln!("error: {}: {e}", out.display());
                return ExitCode::FAILURE;
            }
            for c in &outcome.checks {
                eprintln!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            if assert_checks && !outcome.all_pass() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
    }
}
