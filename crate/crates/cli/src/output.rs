//! Result tables and run metadata.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use twr_precoding::sim::{SweepPoint, SweepResult};

use crate::config::{emit_config, Format, RunConfig};
use crate::CliError;

pub const COLUMNS: [&str; 8] = [
    "snr_db",
    "scheme",
    "mean_total_mse",
    "mean_ber_s1",
    "mean_ber_s2",
    "trials",
    "failures",
    "mean_iters",
];

/// Twelve significant digits.
fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn render_csv(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(COLUMNS).map_err(csv_err)?;
    for p in &result.points {
        w.write_record([
            num(p.snr.rho1_db),
            p.scheme.to_string(),
            num(p.mean_total_mse),
            num(p.mean_ber_s1),
            num(p.mean_ber_s2),
            p.trials.to_string(),
            p.failures.to_string(),
            num(p.mean_iters),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

#[derive(Serialize)]
struct JsonRow<'a> {
    snr_db: f64,
    rho2_db: f64,
    rhor_db: f64,
    scheme: String,
    mean_total_mse: f64,
    mean_ber_s1: f64,
    mean_ber_s2: f64,
    trials: usize,
    failures: usize,
    not_converged: usize,
    mean_iters: f64,
    first_failure: &'a Option<String>,
}

pub fn render_json(result: &SweepResult) -> Result<Vec<u8>, CliError> {
    let rows: Vec<_> = result
        .points
        .iter()
        .map(|p: &SweepPoint| JsonRow {
            snr_db: p.snr.rho1_db,
            rho2_db: p.snr.rho2_db,
            rhor_db: p.snr.rhor_db,
            scheme: p.scheme.to_string(),
            mean_total_mse: p.mean_total_mse,
            mean_ber_s1: p.mean_ber_s1,
            mean_ber_s2: p.mean_ber_s2,
            trials: p.trials,
            failures: p.failures,
            not_converged: p.not_converged,
            mean_iters: p.mean_iters,
            first_failure: &p.first_failure,
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| CliError::Io(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn render(result: &SweepResult, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => render_csv(result),
        Format::Json => render_json(result),
    }
}

#[derive(Serialize)]
pub struct Metadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub threads: Option<usize>,
    pub flagged: bool,
    pub config: String,
}

impl<'a> Metadata<'a> {
    pub fn new(cfg: &RunConfig, command: &'a str, flagged: bool) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            library_version: twr_precoding::VERSION,
            command,
            seed: cfg.seed,
            threads: cfg.output.threads,
            flagged,
            config: emit_config(cfg),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut out = serde_json::to_vec_pretty(self).map_err(|e| CliError::Io(format!("json: {e}")))?;
        out.push(b'\n');
        Ok(out)
    }
}

/// `results.csv` → `results.csv.meta.json`.
pub fn metadata_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
