//! Sequential Monte Carlo state estimation with ellipsoidal credible regions.
//!
//! The crate approximates a Bayesian posterior over model parameters with a
//! weighted particle cloud, updates it measurement by measurement, and then
//! summarizes the posterior with credible regions built from the particles:
//!
//! * highest-posterior-density (HPD) particle sets,
//! * posterior covariance ellipsoids (PCE) scaled by a chi-square quantile,
//! * minimum-volume enclosing ellipsoids (MVEE) of the HPD particles,
//! * unions of per-cluster MVEEs when the posterior is multimodal.
//!
//! Module layout:
//!
//! * [`geometry`] — ellipsoids, convex hulls, MVEE solver, chi-square quantiles;
//! * [`inference`] — particle clouds, Bayes updates, Liu–West resampling;
//! * [`models`] — qubit tomography likelihoods under Pauli measurements with
//!   optional visibility (measurement noise) estimation;
//! * [`regions`] — credible-region construction on top of particle clouds;
//! * [`harness`] — experiment configuration, coverage studies, file export,
//!   and the command-line interface.

pub mod geometry;
pub mod harness;
pub mod inference;
pub mod models;
pub mod regions;

pub use geometry::{chi2_quantile, convex_hull_2d, mvee, Ellipsoid, PointCloud, Polytope2D};
pub use harness::{
    beta_hpd_interval, run_experiment, run_trial, CoverageSummary, ExperimentConfig,
    ExperimentResult, HarnessError, TrialRecord,
};
pub use inference::{
    bayes_update, init_cloud, maybe_resample, Datum, Outcome, ParticleCloud, ResampleConfig,
};
pub use models::{Model, ModelKind, PauliControl, StateVector, Visibility};
pub use regions::{
    clustered_region, enclosed_mass, hpd_particle_set, marginal_region, mvee_region, pce_region,
    region_contains, region_volume, CredibleLevel, RegionEstimate, RegionKind,
};
