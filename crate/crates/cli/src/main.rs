use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use reinsure_cli::config::ScenarioConfig;
use reinsure_cli::error::CliResult;
use reinsure_cli::{execute, resolve_out_dir, Verb};

/// Optimal reinsurance and investment experiments.
#[derive(Debug, Parser)]
#[command(name = "reinsure", version)]
struct Args {
    #[arg(value_enum)]
    verb: Verb,
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications; overrides `mc.n_reps`.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> CliResult<()> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.mc.n_reps = reps;
    }
    cfg.check()?;
    let out_dir = resolve_out_dir(args.out.as_deref(), &cfg);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let written = pool.build()?.install(|| execute(args.verb, &cfg, &out_dir))?;
    for name in written {
        println!("{}", out_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
