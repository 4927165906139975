use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke_core::validation::Profile;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::run::run_to;
use crate::sweep::sweep_to;
use crate::verify::{verify_to, VerifyConfig};

pub const DEFAULT_OUT_DIR: &str = "dicke-out";
pub const OUT_DIR_ENV: &str = "DICKE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dicke", version, about = "Photon production by oscillating detectors in a damped cavity")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output directory. Falls back to the config's `out_dir`, then
    /// $DICKE_OUT_DIR, then `dicke-out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel kernels and sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration.
    Run {
        /// TOML config, or a `summary.json` from an earlier run.
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate one configuration per detector number in the sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a Hilbert-space configuration and write Wigner snapshots.
    Wigner {
        #[arg(long)]
        config: PathBuf,
        /// Snapshot times; default is the Fano peak, the trough after it
        /// and the final time.
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
        /// Grid points per axis.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Check golden outputs and run the acceptance criteria.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `default` runs the fast criteria, `full` runs all nine.
        #[arg(long, default_value = "default")]
        profile: String,
        /// Criterion numbers; overrides the profile and the config.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
    },
}

fn out_dir(flag: &Option<PathBuf>, config: Option<&str>) -> PathBuf {
    if let Some(p) = flag {
        return p.clone();
    }
    if let Some(p) = config {
        return PathBuf::from(p);
    }
    match std::env::var(OUT_DIR_ENV) {
        Ok(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// Point config errors at the offending line of a TOML config.
fn located<T>(config: &Path, result: CliResult<T>) -> CliResult<T> {
    result.map_err(|e| match (&e, std::fs::read_to_string(config)) {
        (CliError::Config { .. }, Ok(text)) if config.extension().is_some_and(|x| x == "toml") => e.locate(&text),
        _ => e,
    })
}

pub fn execute(cli: Cli) -> CliResult<PathBuf> {
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        // Fails only if a pool already exists, which keeps the first setting.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cli.global.out, cfg.out_dir.as_deref());
            located(&config, run_to(&cfg, OutputDir::create(&dir)?))?;
            Ok(dir)
        }
        Command::Sweep { config } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cli.global.out, cfg.out_dir.as_deref());
            located(&config, sweep_to(&cfg, OutputDir::create(&dir)?))?;
            Ok(dir)
        }
        Command::Wigner { config, at, points } => {
            let mut cfg = RunConfig::load(&config)?;
            let defaults = cfg.solver.default_observables();
            let obs = cfg
                .observables
                .get_or_insert_with(|| defaults.iter().map(|s| s.to_string()).collect());
            if !obs.iter().any(|o| o == "wigner") {
                obs.push("wigner".into());
            }
            if at.is_some() {
                cfg.wigner_times = at;
            }
            if points.is_some() {
                cfg.wigner_points = points;
            }
            let dir = out_dir(&cli.global.out, cfg.out_dir.as_deref());
            located(&config, run_to(&cfg, OutputDir::create(&dir)?))?;
            Ok(dir)
        }
        Command::Verify {
            config,
            profile,
            criteria,
        } => {
            let profile: Profile = profile.parse()?;
            let cfg = match &config {
                Some(p) => VerifyConfig::load(p)?,
                None => VerifyConfig::default(),
            };
            let dir = out_dir(&cli.global.out, None);
            verify_to(&cfg, profile, criteria, OutputDir::create(&dir)?, |o| println!("{o}"))?;
            Ok(dir)
        }
    }
}

/// Run the parsed command, report on stderr and map errors to exit codes.
pub fn main_with(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(dir) => {
            eprintln!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
