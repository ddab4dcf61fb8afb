use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use scatterlab_harness::{run, Command, ExperimentConfig, HarnessError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Simulate,
    Decay,
    Scattering,
    Remainder,
    Asymptotic,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Simulate => Command::Simulate,
            CommandArg::Decay => Command::Decay,
            CommandArg::Scattering => Command::Scattering,
            CommandArg::Remainder => Command::Remainder,
            CommandArg::Asymptotic => Command::Asymptotic,
        }
    }
}

/// Numerical experiments on the cubic coupled Schrödinger pair.
#[derive(Debug, Parser)]
#[command(name = "scatterlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides io.outdir).
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Seed for randomized checks (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<bool, HarnessError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(dir) = &cli.outdir {
        cfg.outdir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outputs = run(cli.command.into(), &cfg, &cfg.outdir)?;
    print!("{}", outputs.summary.render());
    for f in &outputs.files {
        log::info!("wrote {}", f.display());
    }
    Ok(outputs.summary.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
