use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use flowkernel_cli::{run, CliError, ExperimentConfig, Kind, Overrides};

/// Run flowkernel simulations and bound-verification suites from a TOML config.
#[derive(Debug, Parser)]
#[command(name = "flowkernel", version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "FLOWKERNEL_THREADS")]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Parse(format!("thread pool: {e}")))?;
    }
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply(&Overrides {
        seed: args.seed,
        n_paths: args.n_paths,
        step: args.step,
        out: args.out.clone(),
        kind: args.kind,
    });
    let outcome = run(&config)?;
    let failures: Vec<_> = outcome.failures().collect();
    for f in &failures {
        eprintln!(
            "FAIL {} [{}] {} lhs={} rhs={} margin={}",
            f.name, f.flow, f.points, f.lhs, f.rhs, f.margin
        );
    }
    for s in &outcome.skipped {
        eprintln!("skipped {} [{}]: {}", s.suite, s.flow, s.reason);
    }
    println!(
        "{} reports, {} failed; written to {}",
        outcome.reports.len(),
        failures.len(),
        outcome.out_dir.display()
    );
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
