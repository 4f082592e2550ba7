use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ppcomp::config::ExperimentConfig;
use ppcomp::output::run_to_dir;
use ppcomp::smoke::{run_smoke, SMOKE_MIN_ETA};

#[derive(Parser)]
#[command(name = "ppcomp", version, about = "Covariance estimation Monte-Carlo harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for raw.csv, agg.csv and meta.json.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// On-grid noiseless sanity run; exits nonzero if any trial misses.
    Smoke {
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            match run_to_dir(&cfg, &out, workers) {
                Ok(outputs) => {
                    let failed = outputs.rows.iter().filter(|r| r.failed()).count();
                    eprintln!(
                        "{} rows ({failed} failed) written to {}",
                        outputs.rows.len(),
                        out.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Smoke { workers } => match run_smoke(workers) {
            Ok((rows, bad)) => {
                for r in &bad {
                    eprintln!("FAIL {} trial {}: eta = {}", r.algorithm, r.trial, r.eta);
                }
                let worst = rows.iter().map(|r| r.eta).fold(f64::INFINITY, f64::min);
                println!(
                    "smoke: {} rows, min eta {worst:.6}, threshold {SMOKE_MIN_ETA}: {}",
                    rows.len(),
                    if bad.is_empty() { "PASS" } else { "FAIL" }
                );
                if bad.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
