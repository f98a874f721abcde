use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use monotone_spde::verify::Verdict;
use mspde_cli::{parse_config, resolve_output, run, Command, OUTPUT_ROOT_VAR};

#[derive(Parser)]
#[command(
    name = "mspde",
    version,
    about = "Monotone-drift stochastic heat equation: solver and studies"
)]
struct Cli {
    /// Worker threads for seed fan-out (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding `output` in the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample the stochastic convolution for every configured seed.
    SampleNoise { config: PathBuf },
    /// Run the lambda continuation for every configured seed.
    Solve { config: PathBuf },
    /// Run one study: cauchy, l1, moments, propagation, extension, bernoulli, chain_rule, eiconv.
    Study { name: String, config: PathBuf },
    /// Run the invariant suite on the configured setup.
    CheckInvariants { config: PathBuf },
}

fn execute(cli: Cli) -> Result<Verdict, String> {
    let (command, config_path) = match cli.command {
        Sub::SampleNoise { config } => (Command::SampleNoise, config),
        Sub::Solve { config } => (Command::Solve, config),
        Sub::Study { name, config } => (Command::Study(name), config),
        Sub::CheckInvariants { config } => (Command::CheckInvariants, config),
    };
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("{}: {e}", config_path.display()))?;
    let config = parse_config(&text).map_err(|e| format!("{}: {e}", config_path.display()))?;
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from);
    let out = resolve_output(
        &config.output,
        cli.output.as_deref(),
        root.as_deref().map(Path::new),
    );
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| format!("worker pool: {e}"))?;
    pool.install(|| run(&config, &command, &out))
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Inconclusive) => ExitCode::from(2),
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
