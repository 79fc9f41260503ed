use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyniter_cli::{check_config, load_config, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "dyniter", version, about = "Dynamic iteration experiments for coupled passive systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the splitting over the configured lambda/omega grid and write reports.
    Run(Common),
    /// Check the certificates of the configured problem without iterating.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: PathBuf,
    /// Output directory (overrides `out` in the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled certificates (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, String> {
        let mut config = load_config(&self.config).map_err(|e| format!("{}: {e}", self.config.display()))?;
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run) = match &cli.command {
        Command::Run(c) => (c, true),
        Command::Check(c) => (c, false),
    };
    let config = match common.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if !run {
        let outcome = check_config(&config);
        print!("{}", outcome.text);
        return if outcome.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE };
    }
    match run_experiment(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("wrote {} files to {}", outcome.files.len(), config.out.display());
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
