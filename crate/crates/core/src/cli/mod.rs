//! Command-line front end: configuration, experiment modes and output files.

pub mod config;
mod experiment;
pub mod snapshot;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, Outcome};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Integrate the configured trajectory (or ensemble).
    Simulate,
    /// Operator identities and inequality constants on random fields.
    VerifyOperators,
    /// Subordinator law, moment scaling and summability of the noise.
    VerifyNoise,
    /// OU moments against their closed forms and bounds.
    VerifyOu,
    /// Energy-identity convergence and a-priori bounds.
    VerifyEnergy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::VerifyOperators => "verify-operators",
            Mode::VerifyNoise => "verify-noise",
            Mode::VerifyOu => "verify-ou",
            Mode::VerifyEnergy => "verify-energy",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Mode as ValueEnum>::from_str(s, false).map_err(|_| {
            format!(
                "unknown mode '{s}' (expected simulate, verify-operators, verify-noise, verify-ou or verify-energy)"
            )
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "snse",
    version,
    about = "Stochastic Navier-Stokes on the rotating sphere"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Parses arguments, runs the experiment and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut cfg = match parse_config(&cli.config, Some(cli.mode)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("snse: {}: {e}", cli.config.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = cli.output {
        cfg.output_dir = out;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("snse: --workers must be at least 1");
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("snse: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| run_experiment(&cfg)) {
        Ok(out) => {
            println!("{}", out.summary);
            if out.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("snse: {e}");
            match e {
                crate::Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}
