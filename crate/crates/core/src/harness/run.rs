//! Trial execution and coverage aggregation.
//!
//! [`run_trial`] plays one simulated experiment: a true state drawn from the
//! prior, a stream of random Pauli controls with simulated ±1 outcomes, a
//! Bayes update per datum, adaptive resampling, and at each checkpoint one
//! credible region per requested kind. [`run_experiment`] repeats that over
//! independent trials (parallelised with deterministic, index-derived seeds)
//! and reduces the records to a [`CoverageSummary`].
//!
//! Reproducibility contract: every random draw inside a trial comes from a
//! single ChaCha stream seeded by [`trial_seed`], and draws happen in a fixed
//! program order (truth, prior cloud, then per measurement the control, the
//! outcome, any resampling noise, and finally any Monte Carlo overlap
//! estimates at a checkpoint). Trials never share a generator, so the record
//! of trial `i` is the same whether it runs alone or in a batch, serially or
//! in parallel.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{convex_hull_2d, Ellipsoid, PointCloud};
use crate::inference::{bayes_update, init_cloud, maybe_resample, ParticleCloud};
use crate::models::Model;
use crate::regions::{
    clustered_region, enclosed_mass, hpd_particle_set, marginal_region, mvee_region, pce_region,
    region_contains, region_volume, RegionError, RegionEstimate, RegionKind,
};

use super::config::ExperimentConfig;
use super::stats::beta_hpd_interval;
use super::HarnessError;

/// Mass of the Beta interval reported for each coverage estimate.
const COVERAGE_INTERVAL_MASS: f64 = 0.95;

/// Monte Carlo points per ordered component pair when estimating overlap.
const OVERLAP_SAMPLES: usize = 1000;

/// One ellipsoid as stored in the output files: center, row-major shape
/// matrix, the credible level it was built for, and the kind of region it
/// belongs to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidJson {
    /// Center in parameter space.
    pub center: Vec<f64>,
    /// Shape matrix `A` (row-major, `center.len()²` entries): the region is
    /// `{x : (x − c)ᵀ A⁻¹ (x − c) ≤ 1}`.
    pub shape: Vec<f64>,
    /// The `alpha` of the region this component belongs to.
    pub alpha: f64,
    /// Region kind name (`"pce"`, `"mvee"`, `"clustered"`).
    pub kind: String,
}

impl EllipsoidJson {
    fn from_ellipsoid(e: &Ellipsoid, alpha: f64, kind: &str) -> Self {
        Self {
            center: e.center().iter().copied().collect(),
            shape: {
                let s = e.shape();
                let d = s.nrows();
                let mut flat = Vec::with_capacity(d * d);
                for i in 0..d {
                    for j in 0..d {
                        flat.push(s[(i, j)]);
                    }
                }
                flat
            },
            alpha,
            kind: kind.to_string(),
        }
    }

    /// Rebuilds the geometric object (after loading records from disk).
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid, HarnessError> {
        let d = self.center.len();
        if self.shape.len() != d * d {
            return Err(HarnessError::Config(format!(
                "shape has {} entries, expected {}",
                self.shape.len(),
                d * d
            )));
        }
        let center = DVector::from_row_slice(&self.center);
        let shape = nalgebra::DMatrix::from_row_slice(d, d, &self.shape);
        Ok(Ellipsoid::new(center, shape).map_err(RegionError::from)?)
    }
}

/// A credible region projected onto a subset of the parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalReport {
    /// Which parameter indices the marginal keeps.
    pub coords: Vec<usize>,
    /// Components of the projected region.
    pub components: Vec<EllipsoidJson>,
    /// Volume of the projection, `null` when it is flat.
    pub volume: Option<f64>,
    /// Whether the projected truth lies in the projected region.
    pub contains_truth: bool,
}

/// One credible region at one checkpoint of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionReport {
    /// Region kind.
    pub kind: RegionKind,
    /// The `alpha` the region was built for.
    pub alpha: f64,
    /// Ellipsoidal components (one except for clustered regions).
    pub components: Vec<EllipsoidJson>,
    /// Total component volume; `null` when a component is flat and the
    /// volume in the full parameter space is undefined.
    pub volume: Option<f64>,
    /// Whether the true parameter vector lies in the region.
    pub contains_truth: bool,
    /// Posterior mass (particle weight) the region captures.
    pub enclosed_mass: f64,
    /// For clustered regions with at least two components: the largest
    /// fraction of Monte Carlo points drawn in one component that land in
    /// another (0 means the union is disjoint in practice).
    pub components_overlap: Option<f64>,
    /// Projection onto the state parameters (present when the visibility is
    /// estimated alongside the state).
    pub state_marginal: Option<MarginalReport>,
    /// Projection onto the visibility parameter (present when estimated).
    pub eta_marginal: Option<MarginalReport>,
}

/// Everything recorded at one checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointRecord {
    /// Number of measurements processed so far.
    pub measurements: usize,
    /// Posterior mean of the parameters.
    pub posterior_mean: Vec<f64>,
    /// Effective sample size of the weighted cloud.
    pub ess: f64,
    /// One report per requested region kind, in configuration order.
    pub regions: Vec<RegionReport>,
}

/// Full record of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Trial index within the experiment.
    pub trial: usize,
    /// The derived seed the trial ran from.
    pub seed: u64,
    /// Parameter names, in the order used by `truth` and all centers.
    pub parameter_labels: Vec<String>,
    /// True parameter vector drawn from the prior.
    pub truth: Vec<f64>,
    /// Checkpoint snapshots in schedule order.
    pub checkpoints: Vec<CheckpointRecord>,
}

/// One row of the coverage summary: a (checkpoint, region-kind) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    /// Measurement count of the checkpoint.
    pub checkpoint: usize,
    /// Region kind name; marginal rows use `"<kind>_state"` / `"<kind>_eta"`.
    pub kind: String,
    /// Number of trials aggregated.
    pub trials: usize,
    /// Trials whose region contained the truth.
    pub hits: usize,
    /// `hits / trials`.
    pub coverage: f64,
    /// Lower end of the 95% Beta posterior interval for the coverage.
    pub beta_lo: f64,
    /// Upper end of the 95% Beta posterior interval for the coverage.
    pub beta_hi: f64,
    /// Mean region volume over trials with a defined volume, `null` if none.
    pub vol_mean: Option<f64>,
    /// Sample standard deviation of those volumes, `null` if none.
    pub vol_std: Option<f64>,
}

/// Aggregated coverage table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageSummary {
    /// Rows ordered by checkpoint, then kind (configuration order), with
    /// marginal rows directly after their joint row.
    pub rows: Vec<CoverageRow>,
}

/// Result of a full experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// The configuration that produced it.
    pub config: ExperimentConfig,
    /// Aggregated coverage rows.
    pub summary: CoverageSummary,
    /// Per-trial records.
    pub records: Vec<TrialRecord>,
}

/// One particle-cloud snapshot, for single-trial demo plots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoSnapshot {
    /// Number of measurements processed so far.
    pub measurements: usize,
    /// Posterior mean of the parameters.
    pub posterior_mean: Vec<f64>,
    /// Particle locations, one row per particle.
    pub particles: Vec<Vec<f64>>,
    /// Particle weights, aligned with `particles`.
    pub weights: Vec<f64>,
    /// Which two parameters the hull and plot regions live in, if the model
    /// nominates a plotting plane.
    pub plot_coords: Option<[usize; 2]>,
    /// Convex hull of the highest-density particles in the plotting plane
    /// (closed polygon, counterclockwise, when at least three distinct
    /// points exist).
    pub hull: Option<Vec<[f64; 2]>>,
    /// Requested regions projected onto the plotting plane.
    pub plot_regions: Vec<PlotRegion>,
}

/// A region's components projected onto the demo plotting plane.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotRegion {
    /// Region kind name.
    pub kind: String,
    /// Projected components.
    pub components: Vec<EllipsoidJson>,
}

/// SplitMix64 finalizer — decorrelates consecutive trial indices.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under master seed `master`. Pure function of its
/// arguments, so any trial can be reproduced in isolation.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master ^ 0x9E3779B97F4A7C15u64.wrapping_mul(trial as u64 + 1))
}

/// Builds one region of the requested kind from the current cloud.
fn build_region(
    kind: RegionKind,
    cloud: &ParticleCloud,
    cfg: &ExperimentConfig,
) -> Result<RegionEstimate, HarnessError> {
    let level = cfg.credible_level()?;
    let region = match kind {
        RegionKind::Pce => pce_region(cloud, level)?,
        RegionKind::Mvee => mvee_region(cloud, level, &cfg.mvee_params())?,
        RegionKind::Clustered => clustered_region(cloud, level, &cfg.cluster_params())?,
    };
    Ok(region)
}

/// `region_volume` with flatness mapped to `None` instead of an error: a
/// constrained model's posterior can legitimately live on a lower-dimensional
/// subspace, where full-dimensional volume is undefined rather than wrong.
fn volume_or_none(region: &RegionEstimate) -> Result<Option<f64>, HarnessError> {
    match region_volume(region) {
        Ok(v) => Ok(Some(v)),
        Err(RegionError::DegenerateComponent { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Largest pairwise overlap fraction among components, by Monte Carlo:
/// for each ordered pair, the fraction of `OVERLAP_SAMPLES` points drawn
/// uniformly in one component that fall inside the other.
fn overlap_estimate(
    region: &RegionEstimate,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>, HarnessError> {
    let comps = region.components();
    if comps.len() < 2 {
        return Ok(None);
    }
    let mut worst = 0.0_f64;
    for (i, a) in comps.iter().enumerate() {
        for (j, b) in comps.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut inside = 0usize;
            for _ in 0..OVERLAP_SAMPLES {
                let x = a.sample_point(rng);
                if b.contains(&x).map_err(RegionError::from)? {
                    inside += 1;
                }
            }
            worst = worst.max(inside as f64 / OVERLAP_SAMPLES as f64);
        }
    }
    Ok(Some(worst))
}

/// Projects a region onto `coords` and summarizes the result.
fn marginal_report(
    region: &RegionEstimate,
    coords: &[usize],
    truth: &[f64],
) -> Result<MarginalReport, HarnessError> {
    let marginal = marginal_region(region, coords)?;
    let truth_proj = DVector::from_iterator(coords.len(), coords.iter().map(|&c| truth[c]));
    let kind = marginal.kind().to_string();
    Ok(MarginalReport {
        coords: coords.to_vec(),
        components: marginal
            .components()
            .iter()
            .map(|e| EllipsoidJson::from_ellipsoid(e, marginal.alpha(), &kind))
            .collect(),
        volume: volume_or_none(&marginal)?,
        contains_truth: region_contains(&marginal, &truth_proj)?,
    })
}

/// Builds the report for one region kind at one checkpoint.
fn region_report(
    kind: RegionKind,
    cloud: &ParticleCloud,
    cfg: &ExperimentConfig,
    model: &Model,
    truth: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<RegionReport, HarnessError> {
    let region = build_region(kind, cloud, cfg)?;
    let truth_vec = DVector::from_row_slice(truth);
    let kind_name = kind.to_string();
    let (state_marginal, eta_marginal) = if model.estimates_visibility() {
        let d = model.param_dim();
        let state_coords: Vec<usize> = (0..d - 1).collect();
        (
            Some(marginal_report(&region, &state_coords, truth)?),
            Some(marginal_report(&region, &[d - 1], truth)?),
        )
    } else {
        (None, None)
    };
    Ok(RegionReport {
        kind,
        alpha: region.alpha(),
        components: region
            .components()
            .iter()
            .map(|e| EllipsoidJson::from_ellipsoid(e, region.alpha(), &kind_name))
            .collect(),
        volume: volume_or_none(&region)?,
        contains_truth: region_contains(&region, &truth_vec)?,
        enclosed_mass: enclosed_mass(&region, cloud)?,
        components_overlap: match kind {
            RegionKind::Clustered => overlap_estimate(&region, rng)?,
            _ => None,
        },
        state_marginal,
        eta_marginal,
    })
}

/// Records everything requested at the current checkpoint.
fn checkpoint_record(
    measurements: usize,
    cloud: &ParticleCloud,
    cfg: &ExperimentConfig,
    model: &Model,
    truth: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<CheckpointRecord, HarnessError> {
    let mut regions = Vec::with_capacity(cfg.kinds.len());
    for &kind in &cfg.kinds {
        regions.push(region_report(kind, cloud, cfg, model, truth, rng)?);
    }
    Ok(CheckpointRecord {
        measurements,
        posterior_mean: cloud.posterior_mean().iter().copied().collect(),
        ess: cloud.effective_sample_size(),
        regions,
    })
}

/// Runs one trial, optionally letting `observe` capture the live cloud right
/// after each checkpoint record is built (used by the demo exporter).
fn run_trial_observed(
    cfg: &ExperimentConfig,
    model: &Model,
    trial: usize,
    mut observe: impl FnMut(&ParticleCloud, &CheckpointRecord) -> Result<(), HarnessError>,
) -> Result<TrialRecord, HarnessError> {
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = model.sample_prior(&mut rng);
    let mut cloud = init_cloud(model, cfg.particles, &mut rng)?;
    let schedule = cfg.resolved_checkpoints();
    let resample_cfg = cfg.resample_config();

    let mut checkpoints = Vec::with_capacity(schedule.len());
    if schedule.binary_search(&0).is_ok() {
        let record = checkpoint_record(0, &cloud, cfg, model, &truth, &mut rng)?;
        observe(&cloud, &record)?;
        checkpoints.push(record);
    }
    for t in 1..=cfg.measurements {
        let control = model.random_control(&mut rng);
        let datum = model.simulate_outcome(&truth, control, &mut rng)?;
        cloud = bayes_update(&cloud, model, &datum)?;
        cloud = maybe_resample(&cloud, model, &resample_cfg, &mut rng)?;
        if schedule.binary_search(&t).is_ok() {
            let record = checkpoint_record(t, &cloud, cfg, model, &truth, &mut rng)?;
            observe(&cloud, &record)?;
            checkpoints.push(record);
        }
    }
    Ok(TrialRecord {
        trial,
        seed,
        parameter_labels: model.parameter_labels(),
        truth,
        checkpoints,
    })
}

/// Runs one complete trial: samples a truth from the prior, processes the
/// configured number of measurements, and snapshots the requested regions at
/// every checkpoint. Fully determined by `(cfg, trial)`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    model: &Model,
    trial: usize,
) -> Result<TrialRecord, HarnessError> {
    run_trial_observed(cfg, model, trial, |_, _| Ok(()))
}

/// Like [`run_trial`], but also captures raw particle snapshots for demo
/// plots: the full cloud, the convex hull of the highest-density particles
/// in the model's plotting plane, and every region projected onto it.
pub fn run_demo_trial(
    cfg: &ExperimentConfig,
    model: &Model,
    trial: usize,
) -> Result<(TrialRecord, Vec<DemoSnapshot>), HarnessError> {
    let level = cfg.credible_level()?;
    let plot_coords = model.plot_coords();
    let mut snapshots: Vec<DemoSnapshot> = Vec::new();
    let record = run_trial_observed(cfg, model, trial, |cloud, record| {
        let particles: Vec<Vec<f64>> = (0..cloud.len())
            .map(|j| cloud.particle(j).to_vec())
            .collect();
        let (hull, plot_regions) = match plot_coords {
            Some([cx, cy]) => {
                let hpd = hpd_particle_set(cloud, level);
                let coords = nalgebra::DMatrix::from_fn(hpd.member_indices.len(), 2, |r, c| {
                    let p = cloud.particle(hpd.member_indices[r]);
                    if c == 0 {
                        p[cx]
                    } else {
                        p[cy]
                    }
                });
                let hull = PointCloud::new(coords)
                    .ok()
                    .and_then(|pc| convex_hull_2d(&pc).ok())
                    .map(|poly| poly.vertices().to_vec());
                let mut plot_regions = Vec::with_capacity(record.regions.len());
                for report in &record.regions {
                    let mut components = Vec::with_capacity(report.components.len());
                    for comp in &report.components {
                        let e = comp.to_ellipsoid()?;
                        let proj = e.project(&[cx, cy]).map_err(RegionError::from)?;
                        components.push(EllipsoidJson::from_ellipsoid(
                            &proj,
                            report.alpha,
                            &report.kind.to_string(),
                        ));
                    }
                    plot_regions.push(PlotRegion {
                        kind: report.kind.to_string(),
                        components,
                    });
                }
                (hull, plot_regions)
            }
            None => (None, Vec::new()),
        };
        snapshots.push(DemoSnapshot {
            measurements: record.measurements,
            posterior_mean: record.posterior_mean.clone(),
            particles,
            weights: cloud.weights().to_vec(),
            plot_coords,
            hull,
            plot_regions,
        });
        Ok(())
    })?;
    Ok((record, snapshots))
}

/// Runs the configured number of independent trials (in parallel) and
/// aggregates their containment counts and volumes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(cfg, &model, trial).map_err(|e| HarnessError::Trial {
                trial,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    let summary = summarize(cfg, &model, &records)?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        summary,
        records,
    })
}

/// Mean and sample standard deviation of the defined volumes at one cell.
fn volume_stats(volumes: &[f64]) -> (Option<f64>, Option<f64>) {
    if volumes.is_empty() {
        return (None, None);
    }
    let n = volumes.len() as f64;
    let mean = volumes.iter().sum::<f64>() / n;
    let std = if volumes.len() > 1 {
        (volumes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// One summary row from a list of per-trial (contained, volume) pairs.
fn coverage_row(
    checkpoint: usize,
    kind: String,
    outcomes: &[(bool, Option<f64>)],
) -> Result<CoverageRow, HarnessError> {
    let trials = outcomes.len();
    let hits = outcomes.iter().filter(|(c, _)| *c).count();
    let (beta_lo, beta_hi) = beta_hpd_interval(hits, trials, COVERAGE_INTERVAL_MASS)?;
    let volumes: Vec<f64> = outcomes.iter().filter_map(|(_, v)| *v).collect();
    let (vol_mean, vol_std) = volume_stats(&volumes);
    Ok(CoverageRow {
        checkpoint,
        kind,
        trials,
        hits,
        coverage: hits as f64 / trials as f64,
        beta_lo,
        beta_hi,
        vol_mean,
        vol_std,
    })
}

/// Reduces trial records to the coverage table: one row per
/// (checkpoint, kind) plus, when the visibility is estimated, rows for the
/// state and visibility marginals.
fn summarize(
    cfg: &ExperimentConfig,
    model: &Model,
    records: &[TrialRecord],
) -> Result<CoverageSummary, HarnessError> {
    let schedule = cfg.resolved_checkpoints();
    let mut rows = Vec::new();
    for (ci, &checkpoint) in schedule.iter().enumerate() {
        for (ki, &kind) in cfg.kinds.iter().enumerate() {
            let joint: Vec<(bool, Option<f64>)> = records
                .iter()
                .map(|r| {
                    let report = &r.checkpoints[ci].regions[ki];
                    (report.contains_truth, report.volume)
                })
                .collect();
            rows.push(coverage_row(checkpoint, kind.to_string(), &joint)?);
            if model.estimates_visibility() {
                let state: Vec<(bool, Option<f64>)> = records
                    .iter()
                    .map(|r| {
                        let m = r.checkpoints[ci].regions[ki]
                            .state_marginal
                            .as_ref()
                            .expect("state marginal present when visibility is estimated");
                        (m.contains_truth, m.volume)
                    })
                    .collect();
                rows.push(coverage_row(checkpoint, format!("{kind}_state"), &state)?);
                let eta: Vec<(bool, Option<f64>)> = records
                    .iter()
                    .map(|r| {
                        let m = r.checkpoints[ci].regions[ki]
                            .eta_marginal
                            .as_ref()
                            .expect("eta marginal present when visibility is estimated");
                        (m.contains_truth, m.volume)
                    })
                    .collect();
                rows.push(coverage_row(checkpoint, format!("{kind}_eta"), &eta)?);
            }
        }
    }
    Ok(CoverageSummary { rows })
}
