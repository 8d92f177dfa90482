//! Command-line front end for two-way relay precoding sweeps.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use twr_precoding::sim::{self, Scheme, SweepResult};

use config::{Format, RunConfig, SchemeList};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Failures(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Exit status: 2 configuration, 3 I/O, 4 too many failed trials,
    /// 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Failures(_) => 4,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "twr", version, about = "Monte Carlo sweeps for MIMO two-way relay precoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Alternating MMSE optimization of all precoders.
    Iterative(CommonArgs),
    /// Channel parallelization with optimized power allocation.
    Cp(CommonArgs),
    /// Channel parallelization with equal power per stream.
    CpUniform(CommonArgs),
    /// Single-stream source antenna selection.
    Sas(CommonArgs),
    /// Identity precoders with Wiener decoders.
    None(CommonArgs),
    /// All schemes listed in the config, on shared channel draws.
    Compare(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Iterative(a)
            | Command::Cp(a)
            | Command::CpUniform(a)
            | Command::Sas(a)
            | Command::None(a)
            | Command::Compare(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Iterative(_) => "iterative",
            Command::Cp(_) => "cp",
            Command::CpUniform(_) => "cp-uniform",
            Command::Sas(_) => "sas",
            Command::None(_) => "none",
            Command::Compare(_) => "compare",
        }
    }

    fn scheme(&self) -> Option<Scheme> {
        match self {
            Command::Iterative(_) => Some(Scheme::Iterative),
            Command::Cp(_) => Some(Scheme::Cp),
            Command::CpUniform(_) => Some(Scheme::CpUniform),
            Command::Sas(_) => Some(Scheme::Sas),
            Command::None(_) => Some(Scheme::None),
            Command::Compare(_) => None,
        }
    }
}

/// Loads the config (or the defaults) and applies the subcommand and flags.
pub fn resolve_config(command: &Command) -> Result<RunConfig, CliError> {
    let args = command.args();
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            config::parse_config(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        None => RunConfig::with_defaults(),
    };
    if let Some(s) = command.scheme() {
        cfg.scheme = SchemeList::One(s);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    if let Some(t) = args.threads {
        cfg.output.threads = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn sweep(cfg: &RunConfig) -> Result<SweepResult, CliError> {
    let spec = cfg.spec();
    let res = match cfg.output.threads {
        Some(t) => sim::run_sweep_with_threads(&spec, t),
        None => sim::run_sweep(&spec),
    };
    res.map_err(|e| CliError::Internal(e.to_string()))
}

/// Runs the sweep and writes the table (and metadata next to it).
pub fn run(command: &Command) -> Result<(), CliError> {
    let cfg = resolve_config(command)?;
    log::info!(
        "{}: {} trials at {} SNR points, seed {}",
        command.name(),
        cfg.trials,
        cfg.snr_db.len(),
        cfg.seed
    );
    let result = sweep(&cfg)?;
    for p in result.points.iter().filter(|p| p.not_converged > 0) {
        log::warn!(
            "{} at {} dB: {} trials stopped at the iteration cap",
            p.scheme,
            p.snr.rho1_db,
            p.not_converged
        );
    }
    let flagged = result.flagged();
    let table = output::render(&result, cfg.output.format)?;
    match &cfg.output.path {
        Some(path) => {
            let meta = output::Metadata::new(&cfg, command.name(), flagged).to_bytes()?;
            output::write_atomic(path, &table)?;
            output::write_atomic(&output::metadata_path(path), &meta)?;
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&table)
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
        }
    }
    if flagged {
        let worst = result
            .points
            .iter()
            .filter(|p| p.flagged())
            .map(|p| {
                format!(
                    "{} at {} dB: {}/{} trials failed ({})",
                    p.scheme,
                    p.snr.rho1_db,
                    p.failures,
                    p.trials,
                    p.first_failure.as_deref().unwrap_or("unknown")
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Failures(format!("more than 10% of trials failed: {worst}")));
    }
    Ok(())
}
