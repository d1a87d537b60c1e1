//! Command-line interface.
//!
//! Five subcommands:
//!
//! * `coverage` — run a full multi-trial experiment from a TOML
//!   configuration and write `summary.json`, `records.jsonl`, `curves.csv`;
//! * `simulate` — run a single trial and additionally dump `demo_*.json`
//!   particle snapshots for plotting;
//! * `mvee` — read a whitespace-delimited point file and print the minimum
//!   enclosing ellipsoid;
//! * `quantile` — print a chi-squared quantile;
//! * `version` — print name and version.
//!
//! Exit codes: 0 on success, 1 for configuration problems (bad flags,
//! unreadable or invalid config file), 2 for runtime failures (a trial or
//! an output write failing).

use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::geometry::chi2_quantile;
use crate::regions::{mvee_of_points, MveeParams, RegionKind};

use super::config::ExperimentConfig;
use super::export::{export_results, records_jsonl, write_demo_snapshots, write_file};
use super::run::{run_demo_trial, run_experiment};
use super::HarnessError;

#[derive(Debug, Parser)]
#[command(
    name = "smcregions",
    version,
    about = "Sequential Monte Carlo state estimation with ellipsoidal credible regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and dump demo_*.json particle snapshots for plots.
    Simulate(RunArgs),
    /// Run a multi-trial coverage experiment.
    Coverage(RunArgs),
    /// Print the minimum-volume enclosing ellipsoid of a point file.
    Mvee {
        /// Whitespace-delimited points, one per line ('#' comments allowed).
        #[arg(long, value_name = "FILE")]
        points: PathBuf,
        /// Solver tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Print a chi-squared quantile.
    Quantile {
        /// Probability in (0, 1).
        #[arg(long)]
        prob: f64,
        /// Degrees of freedom.
        #[arg(long)]
        dof: usize,
    },
    /// Print name and version.
    Version,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Directory for the output files (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the particle count.
    #[arg(long)]
    particles: Option<usize>,
    /// Override the number of measurements per trial.
    #[arg(long)]
    measurements: Option<usize>,
    /// Override alpha (credible level is 1 - alpha).
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the region kinds, comma separated: pce,mvee,clustered.
    #[arg(long, value_name = "LIST")]
    kinds: Option<String>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

/// Entry point, factored for testing: parses `argv`, runs the requested
/// subcommand, and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                // --help / --version are not failures.
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            match &e {
                HarnessError::Config(msg) => eprintln!("configuration error: {msg}"),
                HarnessError::Model(m) => eprintln!("configuration error: {m}"),
                other => eprintln!("error: {other}"),
            }
            code
        }
    }
}

/// Configuration problems exit 1, everything else 2.
fn exit_code(e: &HarnessError) -> i32 {
    match e {
        HarnessError::Config(_) | HarnessError::Model(_) => 1,
        _ => 2,
    }
}

fn run_command(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Coverage(args) => coverage(args),
        Command::Simulate(args) => simulate(args),
        Command::Mvee { points, tolerance } => mvee_cmd(&points, tolerance),
        Command::Quantile { prob, dof } => {
            let q = chi2_quantile(prob, dof)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            println!("{q:.5}");
            Ok(())
        }
        Command::Version => {
            println!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

/// Reads the config file, applies command-line overrides, validates.
fn load_config(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        HarnessError::Config(format!(
            "cannot read config {}: {e}",
            args.config.display()
        ))
    })?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(particles) = args.particles {
        cfg.particles = particles;
    }
    if let Some(measurements) = args.measurements {
        cfg.measurements = measurements;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    if let Some(list) = &args.kinds {
        let mut kinds = Vec::new();
        for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: RegionKind = part
                .parse()
                .map_err(|_| HarnessError::Config(format!("unknown region kind \"{part}\"")))?;
            kinds.push(kind);
        }
        cfg.kinds = kinds;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn coverage(args: RunArgs) -> Result<(), HarnessError> {
    let cfg = load_config(&args)?;
    let result = run_experiment(&cfg)?;
    export_results(&result, &args.out)?;
    if !args.quiet {
        for row in &result.summary.rows {
            println!(
                "checkpoint {:>6}  {:<14} coverage {:.3} in [{:.3}, {:.3}]",
                row.checkpoint, row.kind, row.coverage, row.beta_lo, row.beta_hi
            );
        }
        println!("results written to {}", args.out.display());
    }
    Ok(())
}

fn simulate(args: RunArgs) -> Result<(), HarnessError> {
    let cfg = load_config(&args)?;
    let model = cfg.build_model()?;
    let (record, snapshots) = run_demo_trial(&cfg, &model, 0)?;
    let paths = write_demo_snapshots(&snapshots, &args.out)?;
    write_file(&args.out.join("records.jsonl"), &records_jsonl(&[record])?)?;
    if !args.quiet {
        println!(
            "simulated 1 trial ({} measurements), wrote {} demo snapshot(s) and records.jsonl to {}",
            cfg.measurements,
            paths.len(),
            args.out.display()
        );
    }
    Ok(())
}

/// Parses a whitespace-delimited point file: one point per line, blank
/// lines and `#` comments skipped, all rows the same length.
fn parse_points(text: &str) -> Result<DMatrix<f64>, HarnessError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            let value: f64 = token.parse().map_err(|_| {
                HarnessError::Config(format!(
                    "line {}: \"{token}\" is not a number",
                    idx + 1
                ))
            })?;
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(HarnessError::Config(format!(
                    "line {}: expected {} coordinates, found {}",
                    idx + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(HarnessError::Config("point file contains no points".into()));
    }
    let d = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

fn mvee_cmd(points_path: &PathBuf, tolerance: f64) -> Result<(), HarnessError> {
    let text = fs::read_to_string(points_path).map_err(|e| {
        HarnessError::Config(format!(
            "cannot read points {}: {e}",
            points_path.display()
        ))
    })?;
    let points = parse_points(&text)?;
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(HarnessError::Config(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let params = MveeParams {
        tolerance,
        ..MveeParams::default()
    };
    let ellipsoid = mvee_of_points(&points, &params)?;
    let center: Vec<String> = ellipsoid.center().iter().map(|v| format!("{v}")).collect();
    println!("center: {}", center.join(" "));
    println!("shape:");
    let shape = ellipsoid.shape();
    for i in 0..shape.nrows() {
        let row: Vec<String> = (0..shape.ncols()).map(|j| format!("{}", shape[(i, j)])).collect();
        println!("{}", row.join(" "));
    }
    match ellipsoid.volume() {
        Ok(v) => println!("volume: {v}"),
        Err(_) => println!("volume: undefined (flat ellipsoid)"),
    }
    Ok(())
}
