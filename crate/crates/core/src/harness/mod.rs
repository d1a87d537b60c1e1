//! Experiment harness: configuration, trial execution, coverage statistics,
//! and deterministic export of results.
//!
//! The harness turns the library's building blocks into repeatable coverage
//! experiments. A TOML [`ExperimentConfig`] fixes the model, the particle
//! filter, the credible level, and the measurement schedule; [`run_experiment`]
//! executes the configured number of independent trials (in parallel, each
//! from its own seed derived from the master seed) and aggregates containment
//! counts into a [`CoverageSummary`] with Beta-posterior interval estimates
//! for the true coverage probability.
//!
//! Every trial follows the same script: draw a true state from the prior,
//! alternate random controls with simulated outcomes and Bayes updates,
//! resample when the effective sample size sags, and at each checkpoint build
//! the requested credible regions, recording volume, truth containment, and
//! enclosed mass. Determinism is part of the contract — rerunning a
//! configuration with the same master seed reproduces the output files byte
//! for byte, which the test suite checks. To keep that promise, nothing in
//! the export path depends on wall-clock time, map iteration order, or thread
//! scheduling.
//!
//! Results land in three files: `summary.json` (the configuration plus
//! aggregate coverage rows), `records.jsonl` (one JSON object per trial with
//! every checkpoint region), and `curves.csv` (flat coverage/volume curves
//! for plotting). The `simulate` CLI subcommand additionally dumps
//! `demo_*.json` snapshots with raw particles, convex hulls, and regions for
//! single-trial visualisations.

pub mod cli;
mod config;
mod export;
mod run;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::inference::InferenceError;
use crate::models::ModelError;
use crate::regions::RegionError;

pub use config::{
    DbscanSection, EpsSpec, ExperimentConfig, ModelConfig, ModelKindName, MveeSection,
    ResampleSection,
};
pub use export::{export_results, load_records, load_summary, write_demo_snapshots, SummaryFile};
pub use run::{
    run_demo_trial, run_experiment, run_trial, trial_seed, CheckpointRecord, CoverageRow,
    CoverageSummary, DemoSnapshot, EllipsoidJson, ExperimentResult, MarginalReport, PlotRegion,
    RegionReport, TrialRecord,
};
pub use stats::{beta_cdf, beta_hpd_interval};

/// Errors produced while configuring, running, or exporting an experiment.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// The TOML text could not be parsed or failed validation.
    #[error("configuration error: {0}")]
    Config(String),
    /// A model could not be constructed from the configuration.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// The particle filter failed inside a trial.
    #[error(transparent)]
    Inference(#[from] InferenceError),
    /// Region construction failed inside a trial.
    #[error(transparent)]
    Region(#[from] RegionError),
    /// A geometry primitive failed inside a trial.
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Interval mass outside (0, 1).
    #[error("interval mass must lie strictly between 0 and 1, got {value}")]
    InvalidMass { value: f64 },
    /// More successes than trials.
    #[error("cannot have {successes} successes in {trials} trials")]
    InvalidCounts { successes: usize, trials: usize },
    /// Reading or writing a results file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// JSON (de)serialization failed.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// A trial failed; wraps the underlying error with the trial index.
    #[error("trial {trial} failed: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<HarnessError>,
    },
}
