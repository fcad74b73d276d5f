use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsbandit_cli::config::{resolve, Mode, RawConfig};
use dsbandit_cli::{cmd_run, cmd_sweep, CliError};

#[derive(Parser)]
#[command(name = "dsbandit", version = dsbandit_cli::output::VERSION, about = "Double-sampling bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret curves for one bandit instance.
    Run(Common),
    /// Relative regret across a parameter grid, indexed by min-KL.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Use the full-resolution grid instead of the desk-scale subgrid.
        #[arg(long)]
        full_grid: bool,
    },
}

/// Flags override the config file, which overrides defaults.
#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// Algorithm name, comma-separated list, or `all`.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    mc_samples: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// `pseudo` or `observed`.
    #[arg(long)]
    regret_mode: Option<String>,
    #[arg(long)]
    threads: Option<String>,
}

impl Common {
    fn load(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let flags = [
            ("seed", "--seed", &self.seed),
            ("realizations", "--realizations", &self.realizations),
            ("horizon", "--horizon", &self.horizon),
            ("mc_samples", "--mc-samples", &self.mc_samples),
            ("regret_mode", "--regret-mode", &self.regret_mode),
            ("threads", "--threads", &self.threads),
        ];
        for (key, flag, value) in flags {
            if let Some(v) = value {
                raw.set_flag(key, v, flag)?;
            }
        }
        if let Some(a) = &self.algorithm {
            let value = if a.contains(',') {
                format!("[{a}]")
            } else {
                a.clone()
            };
            raw.set_flag("algorithm", &value, "--algorithm")?;
        }
        if let Some(out) = &self.out {
            raw.set_flag("out", &format!("\"{out}\""), "--out")?;
        }
        Ok(raw)
    }
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Run(common) => cmd_run(&resolve(&common.load()?, Mode::Run)?),
        Command::Sweep { common, full_grid } => {
            let mut raw = common.load()?;
            if full_grid {
                raw.set_flag("grid_preset", "full", "--full-grid")?;
            }
            cmd_sweep(&resolve(&raw, Mode::Sweep)?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
