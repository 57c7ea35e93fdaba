use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use npg::config::load_config;
use npg::harness::{experiment_oracle, render_oracle, render_summary, run_experiment};

#[derive(Parser)]
#[command(name = "npg", about = "Newsvendor pricing game simulator", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and emit CSVs plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit SVG charts next to the CSVs.
        #[arg(long)]
        svg: bool,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<u64>,
        /// Override the horizon.
        #[arg(long)]
        horizon: Option<u64>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the perfect-information equilibrium table, no simulation.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Alias kept for scripting symmetry; `oracle` never simulates.
        #[arg(long, hide = true)]
        oracle_only: bool,
    },
    /// Run the acceptance suite, one pass/fail line per criterion.
    Selftest,
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run() -> Result<ExitCode, (u8, String)> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, svg, trials, horizon, seed } => {
            let mut experiment = load_config(&config).map_err(|e| (1u8, e.to_string()))?;
            if let Some(n) = trials {
                experiment.trials = n;
            }
            if let Some(t) = horizon {
                experiment.horizon = t;
            }
            if let Some(s) = seed {
                experiment.base_seed = s;
            }
            experiment.validate().map_err(|e| (1u8, e.to_string()))?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&experiment.out_dir));
            let summary = run_experiment(&experiment, &out_dir, svg)
                .map_err(|e| (2u8, e.to_string()))?;
            print!("{}", render_summary(&summary));
            println!("wall_time_s={:.3}", summary.wall_time_s);
            println!("outputs written to {}", out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, oracle_only: _ } => {
            let experiment = load_config(&config).map_err(|e| (1u8, e.to_string()))?;
            let oracle = experiment_oracle(&experiment).map_err(|e| (2u8, e.to_string()))?;
            println!("{}", render_oracle(&oracle));
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let results = npg::selftest::run_all();
            let mut failed = 0;
            for r in &results {
                println!("{r}");
                if !r.passed {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("selftest: all {} criteria passed", results.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("selftest: {failed}/{} criteria failed", results.len());
                Ok(ExitCode::from(3))
            }
        }
    }
}
