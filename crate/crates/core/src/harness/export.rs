//! Deterministic result files.
//!
//! Three files describe an experiment:
//!
//! * `summary.json` — the configuration that ran plus the aggregated
//!   coverage rows, pretty-printed;
//! * `records.jsonl` — one JSON object per trial, in trial order;
//! * `curves.csv` — the coverage/volume table flattened for plotting, with
//!   the fixed header `checkpoint,kind,coverage,beta_lo,beta_hi,vol_mean,vol_std`.
//!
//! All numbers are written in shortest round-trip form (parsing the text
//! recovers the exact f64), and nothing in these files depends on the clock,
//! the machine, or thread timing, so a rerun with the same configuration
//! reproduces each file byte for byte. The demo exporter writes one
//! `demo_<measurements>.json` per checkpoint with raw particles for plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{CoverageRow, DemoSnapshot, ExperimentResult, TrialRecord};
use super::{config::ExperimentConfig, HarnessError};

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    /// The configuration the experiment ran with.
    pub config: ExperimentConfig,
    /// Aggregated coverage rows.
    pub rows: Vec<CoverageRow>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(super) fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Serializes trial records as JSON Lines (one object per line).
pub(super) fn records_jsonl(records: &[TrialRecord]) -> Result<String, HarnessError> {
    let mut lines = String::new();
    for record in records {
        lines.push_str(&serde_json::to_string(record)?);
        lines.push('\n');
    }
    Ok(lines)
}

/// Formats an optional float as a CSV cell (empty when undefined).
fn csv_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Renders the coverage table as CSV text.
fn curves_csv(rows: &[CoverageRow]) -> String {
    let mut out = String::from("checkpoint,kind,coverage,beta_lo,beta_hi,vol_mean,vol_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.checkpoint,
            r.kind,
            r.coverage,
            r.beta_lo,
            r.beta_hi,
            csv_cell(r.vol_mean),
            csv_cell(r.vol_std),
        );
    }
    out
}

/// Writes `summary.json`, `records.jsonl`, and `curves.csv` into `out_dir`
/// (creating it if needed).
pub fn export_results(result: &ExperimentResult, out_dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let summary = SummaryFile {
        config: result.config.clone(),
        rows: result.summary.rows.clone(),
    };
    let mut summary_text = serde_json::to_string_pretty(&summary)?;
    summary_text.push('\n');
    write_file(&out_dir.join("summary.json"), &summary_text)?;

    write_file(
        &out_dir.join("records.jsonl"),
        &records_jsonl(&result.records)?,
    )?;

    write_file(&out_dir.join("curves.csv"), &curves_csv(&result.summary.rows))
}

/// Writes one `demo_<measurements>.json` per snapshot into `out_dir` and
/// returns the paths in checkpoint order.
pub fn write_demo_snapshots(
    snapshots: &[DemoSnapshot],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut paths = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let path = out_dir.join(format!("demo_{:06}.json", snap.measurements));
        let mut text = serde_json::to_string_pretty(snap)?;
        text.push('\n');
        write_file(&path, &text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads a `summary.json` written by [`export_results`].
pub fn load_summary(path: &Path) -> Result<SummaryFile, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Loads a `records.jsonl` written by [`export_results`].
pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}
