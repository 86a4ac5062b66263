//! `vecfekete`: runs weighted vector Fekete experiments from TOML configs.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use config::{load, BergmanCmd, DiameterCmd, EnergyCmd, FeketeCmd, FormsCmd, GramCmd, SelftestCmd};
use report::{CliError, CliResult, Output};

#[derive(Parser, Debug)]
#[command(name = "vecfekete", version, about = "Weighted vector Fekete experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// RNG seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fekete configuration for a weighted vector space on a mesh.
    Fekete,
    /// r-th diameter over a range of degrees.
    Diameter,
    /// Gram matrix, free energy and Bernstein-Markov constant of a measure.
    Gram,
    /// Energy curve along a weight perturbation with three derivative routes.
    Energy,
    /// Bergman density current paired with a test field.
    Bergman,
    /// Fekete currents for differential forms and interpolation checks.
    Forms,
    /// Built-in acceptance and invariant checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fekete => "fekete",
            Command::Diameter => "diameter",
            Command::Gram => "gram",
            Command::Energy => "energy",
            Command::Bergman => "bergman",
            Command::Forms => "forms",
            Command::Selftest => "selftest",
        }
    }
}

const DEFAULT_OUT: &str = "vecfekete-out";

fn read<T: DeserializeOwned>(path: Option<&Path>, cmd: &str) -> CliResult<T> {
    match path {
        Some(p) => load(p),
        None => Err(CliError::config("config", format!("--config is required for `{cmd}`"))),
    }
}

fn output(cli: &Cli, from_config: Option<&PathBuf>) -> CliResult<Output> {
    let dir = cli
        .out
        .clone()
        .or_else(|| from_config.cloned())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Output::create(dir)
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(CliError::config("workers", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::config("workers", e.to_string()))?;
    }
    let path = cli.config.as_deref();
    let name = cli.command.name();
    macro_rules! dispatch {
        ($ty:ty, $f:path) => {{
            let cfg: $ty = read(path, name)?;
            let seed = cli.seed.or(cfg.seed).unwrap_or(0);
            let mut out = output(cli, cfg.output.as_ref())?;
            $f(&cfg, seed, &mut out)
        }};
    }
    match cli.command {
        Command::Fekete => dispatch!(FeketeCmd, commands::fekete),
        Command::Diameter => dispatch!(DiameterCmd, commands::diameter),
        Command::Gram => dispatch!(GramCmd, commands::gram),
        Command::Energy => dispatch!(EnergyCmd, commands::energy),
        Command::Bergman => dispatch!(BergmanCmd, commands::bergman),
        Command::Forms => dispatch!(FormsCmd, commands::forms),
        Command::Selftest => {
            // the config is optional here
            let cfg: SelftestCmd = match path {
                Some(p) => load(p)?,
                None => config::parse("")?,
            };
            let mut out = output(cli, cfg.output.as_ref())?;
            commands::selftest(&cfg, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
