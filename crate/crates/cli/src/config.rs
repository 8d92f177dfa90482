//! TOML run configuration.
//!
//! ```toml
//! n = 2
//! m = 2
//! scheme = "iterative"        # or a list, e.g. ["iterative", "cp"]
//! snr_db = [0.0, 10.0, 20.0]  # sets ρ1 = ρ2 = ρr
//! rho2_offset_db = 0.0        # optional: ρ2 = snr + offset
//! rhor_offset_db = 0.0        # optional: ρr = snr + offset
//! streams = "multi"           # "single" is implied by scheme "sas"
//! trials = 100
//! symbols_per_trial = 10000
//! seed = 1
//! reciprocal = true
//! restarts = 0
//!
//! [output]
//! path = "results.csv"
//! format = "csv"              # or "json"
//! threads = 4
//! verbosity = "warn"
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use twr_precoding::iterative::StreamMode;
use twr_precoding::sim::{ExperimentSpec, Scheme, SnrPoint};

use crate::CliError;

/// One scheme or several, written as a string or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeList {
    One(Scheme),
    Many(Vec<Scheme>),
}

impl SchemeList {
    pub fn schemes(&self) -> Vec<Scheme> {
        match self {
            SchemeList::One(s) => vec![*s],
            SchemeList::Many(v) => v.clone(),
        }
    }

    pub fn from_vec(mut v: Vec<Scheme>) -> Self {
        if v.len() == 1 {
            SchemeList::One(v.remove(0))
        } else {
            SchemeList::Many(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_verbosity")]
    pub verbosity: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: None,
            format: Format::Csv,
            threads: None,
            verbosity: default_verbosity(),
        }
    }
}

fn default_verbosity() -> String {
    "warn".into()
}

fn default_trials() -> usize {
    100
}

fn default_symbols() -> usize {
    10_000
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub scheme: SchemeList,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub rho2_offset_db: f64,
    #[serde(default)]
    pub rhor_offset_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<StreamMode>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_symbols")]
    pub symbols_per_trial: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub reciprocal: bool,
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

const VERBOSITY: [&str; 6] = ["off", "error", "warn", "info", "debug", "trace"];

impl RunConfig {
    /// Built-in defaults: `N = M = 2`, iterative scheme, 0 to 25 dB.
    pub fn with_defaults() -> Self {
        Self {
            n: 2,
            m: 2,
            scheme: SchemeList::One(Scheme::Iterative),
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            rho2_offset_db: 0.0,
            rhor_offset_db: 0.0,
            streams: None,
            trials: default_trials(),
            symbols_per_trial: default_symbols(),
            seed: 0,
            reciprocal: true,
            restarts: 0,
            output: OutputConfig::default(),
        }
    }

    /// Stream mode: explicit, else single when SAS is among the schemes.
    pub fn stream_mode(&self) -> StreamMode {
        self.streams.unwrap_or_else(|| {
            if self.scheme.schemes().contains(&Scheme::Sas) {
                StreamMode::Single
            } else {
                StreamMode::Multi
            }
        })
    }

    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            n: self.n,
            m: self.m,
            snr: self
                .snr_db
                .iter()
                .map(|&db| SnrPoint {
                    rho1_db: db,
                    rho2_db: db + self.rho2_offset_db,
                    rhor_db: db + self.rhor_offset_db,
                })
                .collect(),
            schemes: self.scheme.schemes(),
            streams: self.stream_mode(),
            trials: self.trials,
            symbols_per_trial: self.symbols_per_trial,
            seed: self.seed,
            reciprocal: self.reciprocal,
            restarts: self.restarts,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let SchemeList::Many(v) = &self.scheme {
            if v.is_empty() {
                return Err(CliError::Config("field `scheme`: at least one scheme is required".into()));
            }
            for (k, s) in v.iter().enumerate() {
                if v[..k].contains(s) {
                    return Err(CliError::Config(format!("field `scheme`: {s} listed twice")));
                }
            }
        }
        if self.output.threads == Some(0) {
            return Err(CliError::Config("field `output.threads`: must be at least 1".into()));
        }
        if !VERBOSITY.contains(&self.output.verbosity.as_str()) {
            return Err(CliError::Config(format!(
                "field `output.verbosity`: expected one of {}",
                VERBOSITY.join(", ")
            )));
        }
        if !self.rho2_offset_db.is_finite() || !self.rhor_offset_db.is_finite() {
            return Err(CliError::Config("SNR offsets must be finite".into()));
        }
        self.spec()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical TOML of a configuration, every defaulted field spelled out.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration serializes to TOML")
}
