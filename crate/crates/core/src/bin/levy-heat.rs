use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use levy_heat::experiment::{run_experiment, ExperimentConfig, RunOptions};

/// Run a configured experiment and write summary.json, points.csv and
/// provenance.json to the output directory.
#[derive(Parser, Debug)]
#[command(name = "levy-heat", version)]
struct Args {
    /// TOML (or JSON) experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `mc.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo paths.
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 2 when an estimate misses its band.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = (|| {
        let config = ExperimentConfig::load(&args.config)?;
        let opts = RunOptions {
            out: args.out.clone(),
            seed: args.seed,
        };
        match args.workers {
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| levy_heat::Error::Configuration(e.to_string()))?;
                pool.install(|| run_experiment(&config, &opts))
            }
            None => run_experiment(&config, &opts),
        }
    })();
    match result {
        Ok(outcome) => {
            println!(
                "{} -> {}",
                if outcome.passed { "passed" } else { "band missed" },
                outcome.out_dir.display()
            );
            if !outcome.passed && args.strict {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
