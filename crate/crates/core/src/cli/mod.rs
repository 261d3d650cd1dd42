//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or numerical failure, 2 usage or
//! configuration error.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::Error;
use commands::{DistributionFlags, Flags, Outcome};
use config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "casimir-work", version, about = "Work statistics of a cavity field driven by a vibrating wall", after_long_help = config::KEYS_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (see --help for keys)
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory, overriding [output] dir
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelFlags {
    /// Evaluate coupled resonance groups with the symplectic engine
    #[arg(long)]
    pub symplectic: bool,
    /// Proceed when no mode is resonant
    #[arg(long)]
    pub adiabatic_ok: bool,
}

impl ModelFlags {
    fn flags(&self) -> Flags {
        Flags {
            symplectic: self.symplectic,
            adiabatic_ok: self.adiabatic_ok,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mode spectrum up to the cutoff as CSV
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Resonance plan of every drive frequency as JSON
    Plan {
        #[command(flatten)]
        common: Common,
    },
    /// Characteristic function on a (u, v) grid
    Charfun {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Work and photon-number marginals with cumulative comparisons
    Distribution {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        /// Use the truncated Fock-space simulation instead of closed forms
        #[arg(long)]
        oracle: bool,
        /// Check against the Fock-space simulation and write golden files
        /// into this directory
        #[arg(long, value_name = "DIR")]
        freeze: Option<PathBuf>,
    },
    /// Jarzynski, Crooks, periodicity and normalization checks
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        /// Scale G by (1 + EPS) to exercise the failure path
        #[arg(long, value_name = "EPS")]
        perturb: Option<f64>,
    },
    /// Mean and standard deviation of the work over a sweep
    Moments {
        #[command(flatten)]
        common: Common,
    },
}

fn write_outcome(outcome: &Outcome, dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| CliError::usage(format!("cannot create {}: {e}", d.display())))?;
            for (name, content) in &outcome.files {
                let path = d.join(name);
                std::fs::write(&path, content).map_err(|e| CliError {
                    code: 1,
                    message: format!("cannot write {}: {e}", path.display()),
                })?;
            }
        }
        None => {
            let many = outcome.files.len() > 1;
            for (name, content) in &outcome.files {
                if many {
                    println!("# {name}");
                }
                print!("{content}");
            }
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    let common = match &cli.command {
        Command::Spectrum { common }
        | Command::Plan { common }
        | Command::Charfun { common, .. }
        | Command::Distribution { common, .. }
        | Command::Verify { common, .. }
        | Command::Moments { common } => common,
    };
    let cfg = RunConfig::from_path(&common.config)?;
    let out_dir = common.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from));
    let mut dir = out_dir;
    let outcome = match &cli.command {
        Command::Spectrum { .. } => commands::cmd_spectrum(&cfg)?,
        Command::Plan { .. } => commands::cmd_plan(&cfg)?,
        Command::Charfun { model, .. } => commands::cmd_charfun(&cfg, model.flags())?,
        Command::Distribution {
            model, oracle, freeze, ..
        } => {
            if let Some(f) = freeze {
                dir = Some(f.clone());
            }
            commands::cmd_distribution(
                &cfg,
                DistributionFlags {
                    common: model.flags(),
                    oracle: *oracle,
                    freeze: freeze.is_some(),
                },
            )?
        }
        Command::Verify { model, perturb, .. } => commands::cmd_verify(&cfg, model.flags(), *perturb)?,
        Command::Moments { .. } => commands::cmd_moments(&cfg)?,
    };
    write_outcome(&outcome, dir.as_deref())?;
    Ok(outcome.exit)
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
