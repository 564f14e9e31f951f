//! `simulate`: BER sweeps to CSV, with a manifest that re-runs them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::linklevel_sim::{run_sweep, BerRecord, SimConfig};

use super::config::RunConfig;
use super::CliError;

pub const CSV_HEADER: &str = "scheme,snr_db,trials,total_bits,bit_errors,ber,empirical_rho";

/// Runs every scheme of `cfg`, in order, and returns all records.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<BerRecord>, CliError> {
    let mut records = Vec::new();
    for &scheme in &cfg.schemes {
        let sim = SimConfig {
            scheme,
            ..cfg.sim.clone()
        };
        records.extend(run_sweep(&sim)?);
    }
    Ok(records)
}

pub fn to_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme, r.snr_db, r.trials, r.total_bits, r.bit_errors, r.ber, r.empirical_rho
        );
    }
    out
}

/// Path of the manifest written next to `csv`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Manifest text: provenance comments followed by the resolved config, which
/// is itself a valid config file.
pub fn manifest(cfg: &RunConfig, csv: &Path) -> String {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "# kpcfb {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# timestamp: {timestamp}");
    let _ = writeln!(out, "# csv: {}", csv.display());
    let _ = writeln!(out, "# manifest: {}", manifest_path(csv).display());
    out.push_str(&cfg.to_text());
    out
}

/// Loads, resolves and runs a config file; writes the CSV and its manifest.
/// Returns the number of records written.
pub fn cmd_simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<usize, CliError> {
    let text =
        fs::read_to_string(config).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    let cfg = cfg.resolve()?;
    let records = simulate(&cfg)?;
    let write = |path: &Path, body: String| {
        fs::write(path, body).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    write(out, to_csv(&records))?;
    write(&manifest_path(out), manifest(&cfg, out))?;
    Ok(records.len())
}
