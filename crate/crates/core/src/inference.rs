//! Sequential Monte Carlo approximation of the Bayesian posterior.
//!
//! The posterior after a sequence of measurement records is represented by a
//! weighted particle cloud `{(w_j, x_j)}`. Each datum reweights the cloud by
//! its likelihood (`bayes_update`); when the effective sample size drops
//! below a configured fraction of the particle count, the cloud is rebuilt
//! by Liu–West resampling (`maybe_resample`): ancestors are drawn
//! multinomially by weight, shrunk toward the posterior mean by a factor
//! `a`, and perturbed with Gaussian noise of covariance `(1 − a²) Σ` so that
//! the first two posterior moments are preserved in expectation. Proposed
//! particles that leave the model's valid parameter set are redrawn.
//!
//! Particle locations are stored in one shared, immutable buffer; reweighting
//! clones only the weight vector, so checkpoint snapshots of the cloud are
//! cheap.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::models::{Model, ModelError, PauliControl};

/// Floor on the total unnormalized weight: anything at or below this is
/// treated as an impossible data record rather than renormalized.
const WEIGHT_UNDERFLOW: f64 = 1e-300;

/// Relative eigenvalue cutoff below which a posterior-covariance direction is
/// treated as exactly degenerate when building resampling noise.
const NOISE_EIGENVALUE_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("particle cloud must contain at least one particle")]
    EmptyCloud,
    #[error("location buffer holds {got} values, expected {expected}")]
    LocationLength { expected: usize, got: usize },
    #[error("particle dimension must be positive")]
    ZeroDimension,
    #[error("location {index} is not finite")]
    NonFiniteLocation { index: usize },
    #[error("weight {index} is {value}, weights must be finite and nonnegative")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected a positive finite total")]
    WeightSum { sum: f64 },
    #[error("datum has zero likelihood under every particle")]
    ImpossibleData,
    #[error("resample shrink factor a = {value} must lie in (0, 1]")]
    InvalidShrink { value: f64 },
    #[error("resample ESS threshold {value} must be finite and nonnegative")]
    InvalidEssThreshold { value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Binary outcome of a Pauli measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Plus => write!(f, "+1"),
            Outcome::Minus => write!(f, "-1"),
        }
    }
}

/// One measurement record: which Pauli was measured and what came out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Datum {
    pub outcome: Outcome,
    pub control: PauliControl,
}

impl std::fmt::Display for Datum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.outcome, self.control)
    }
}

/// A weighted particle approximation of the posterior.
///
/// Locations live in an `Arc`-shared flat buffer (`n × dim`, row-major) that
/// never mutates; Bayes updates produce a new cloud sharing the same buffer
/// with fresh weights. `generation` counts Bayes updates applied since the
/// prior, so checkpoints can assert how much data a snapshot has absorbed.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    locations: Arc<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
    generation: u64,
}

impl ParticleCloud {
    /// Builds a cloud from raw parts. Locations must be finite with length
    /// `weights.len() * dim`; weights must be finite and nonnegative with a
    /// positive sum, and are normalized to sum to one.
    pub fn from_parts(
        locations: Vec<f64>,
        dim: usize,
        weights: Vec<f64>,
    ) -> Result<Self, InferenceError> {
        if dim == 0 {
            return Err(InferenceError::ZeroDimension);
        }
        if weights.is_empty() {
            return Err(InferenceError::EmptyCloud);
        }
        if locations.len() != weights.len() * dim {
            return Err(InferenceError::LocationLength {
                expected: weights.len() * dim,
                got: locations.len(),
            });
        }
        if let Some(index) = locations.iter().position(|v| !v.is_finite()) {
            return Err(InferenceError::NonFiniteLocation { index });
        }
        let mut weights = weights;
        normalize_weights(&mut weights)?;
        Ok(Self {
            locations: Arc::new(locations),
            weights,
            dim,
            generation: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Dimension of each particle's parameter vector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of Bayes updates absorbed since initialization.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn particle(&self, j: usize) -> &[f64] {
        &self.locations[j * self.dim..(j + 1) * self.dim]
    }

    /// Weighted posterior mean.
    pub fn posterior_mean(&self) -> DVector<f64> {
        let mut mean = DVector::zeros(self.dim);
        for (j, &w) in self.weights.iter().enumerate() {
            let x = self.particle(j);
            for i in 0..self.dim {
                mean[i] += w * x[i];
            }
        }
        mean
    }

    /// Weighted posterior covariance, computed in two passes about the mean
    /// so that a tightly concentrated cloud does not lose precision to
    /// cancellation.
    pub fn posterior_covariance(&self) -> DMatrix<f64> {
        let mean = self.posterior_mean();
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        let mut dev = DVector::zeros(self.dim);
        for (j, &w) in self.weights.iter().enumerate() {
            let x = self.particle(j);
            for i in 0..self.dim {
                dev[i] = x[i] - mean[i];
            }
            cov.ger(w, &dev, &dev, 1.0);
        }
        cov
    }

    /// Effective sample size `1 / Σ w_j²`, between 1 (one particle carries
    /// all weight) and `n` (uniform weights).
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

fn normalize_weights(weights: &mut [f64]) -> Result<(), InferenceError> {
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(InferenceError::InvalidWeight { index, value: w });
        }
    }
    let sum: f64 = weights.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(InferenceError::WeightSum { sum });
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(())
}

/// Draws `n` particles from the model's prior with uniform weights.
pub fn init_cloud<R: Rng + ?Sized>(
    model: &Model,
    n: usize,
    rng: &mut R,
) -> Result<ParticleCloud, InferenceError> {
    if n == 0 {
        return Err(InferenceError::EmptyCloud);
    }
    let dim = model.param_dim();
    let mut locations = Vec::with_capacity(n * dim);
    for _ in 0..n {
        locations.extend_from_slice(&model.sample_prior(rng));
    }
    Ok(ParticleCloud {
        locations: Arc::new(locations),
        weights: vec![1.0 / n as f64; n],
        dim,
        generation: 0,
    })
}

/// Reweights the cloud by the datum's likelihood and renormalizes.
///
/// Particle locations are shared with the input cloud; only weights change.
/// Returns [`InferenceError::ImpossibleData`] when the total unnormalized
/// weight underflows (every particle assigns the datum probability ≈ 0).
pub fn bayes_update(
    cloud: &ParticleCloud,
    model: &Model,
    datum: &Datum,
) -> Result<ParticleCloud, InferenceError> {
    let mut weights = Vec::with_capacity(cloud.len());
    for (j, &w) in cloud.weights.iter().enumerate() {
        weights.push(w * model.likelihood(cloud.particle(j), datum)?);
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= WEIGHT_UNDERFLOW {
        return Err(InferenceError::ImpossibleData);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(ParticleCloud {
        locations: Arc::clone(&cloud.locations),
        weights,
        dim: cloud.dim,
        generation: cloud.generation + 1,
    })
}

/// Liu–West resampling policy.
#[derive(Debug, Clone, Copy)]
pub struct ResampleConfig {
    /// Resample when `ESS < ess_threshold · n`. A value above 1 forces a
    /// resample on every call.
    pub ess_threshold: f64,
    /// Shrink factor `a ∈ (0, 1]`: ancestors move to
    /// `a·x + (1−a)·μ` before Gaussian noise of covariance `(1−a²)Σ`.
    pub a: f64,
    /// How many noise redraws to attempt for a particle that keeps landing
    /// outside the valid set before keeping its ancestor unperturbed.
    pub max_validity_rejections: usize,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self {
            ess_threshold: 0.5,
            a: 0.98,
            max_validity_rejections: 100,
        }
    }
}

/// Resamples the cloud if its effective sample size has dropped below
/// `cfg.ess_threshold · n`; otherwise returns a cheap clone.
///
/// New particles are drawn by the Liu–West rule and rejected while invalid
/// under the model (up to `cfg.max_validity_rejections` noise redraws each,
/// after which the ancestor is kept unperturbed). The resampled cloud has
/// uniform weights and the same generation as the input.
pub fn maybe_resample<R: Rng + ?Sized>(
    cloud: &ParticleCloud,
    model: &Model,
    cfg: &ResampleConfig,
    rng: &mut R,
) -> Result<ParticleCloud, InferenceError> {
    if !(cfg.a > 0.0 && cfg.a <= 1.0) {
        return Err(InferenceError::InvalidShrink { value: cfg.a });
    }
    if !cfg.ess_threshold.is_finite() || cfg.ess_threshold < 0.0 {
        return Err(InferenceError::InvalidEssThreshold {
            value: cfg.ess_threshold,
        });
    }
    let n = cloud.len();
    if n == 0 {
        return Err(InferenceError::EmptyCloud);
    }
    if cloud.effective_sample_size() >= cfg.ess_threshold * n as f64 {
        return Ok(cloud.clone());
    }

    let dim = cloud.dim;
    let mean = cloud.posterior_mean();
    let noise_factor = resample_noise_factor(&cloud.posterior_covariance(), cfg.a);
    let ancestors = sample_ancestors(&cloud.weights, n, rng);

    let mut locations = Vec::with_capacity(n * dim);
    let mut shrunk = vec![0.0; dim];
    let mut z = DVector::zeros(dim);
    let mut proposal = vec![0.0; dim];
    for &anc in &ancestors {
        let x = cloud.particle(anc);
        for i in 0..dim {
            shrunk[i] = cfg.a * x[i] + (1.0 - cfg.a) * mean[i];
        }
        let mut accepted = false;
        for _ in 0..cfg.max_validity_rejections {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let noise = &noise_factor * &z;
            for i in 0..dim {
                proposal[i] = shrunk[i] + noise[i];
            }
            model.project_constraints(&mut proposal);
            if model.is_valid(&proposal) {
                locations.extend_from_slice(&proposal);
                accepted = true;
                break;
            }
        }
        if !accepted {
            // The ancestor itself is valid by construction; fall back to it
            // rather than loop forever on a hopeless corner of the space.
            locations.extend_from_slice(x);
        }
    }

    Ok(ParticleCloud {
        locations: Arc::new(locations),
        weights: vec![1.0 / n as f64; n],
        dim,
        generation: cloud.generation,
    })
}

/// Square root of the Liu–West noise covariance `(1 − a²) Σ`, with
/// eigenvalues below `λ_max · 1e-12` zeroed so that exactly degenerate
/// posterior directions (a constrained coordinate, a collapsed cloud) stay
/// exactly degenerate instead of picking up eigensolver dust.
fn resample_noise_factor(cov: &DMatrix<f64>, a: f64) -> DMatrix<f64> {
    let eigen = cov.clone().symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = lambda_max * NOISE_EIGENVALUE_RTOL;
    let scale = 1.0 - a * a;
    let mut factor = eigen.eigenvectors;
    for (mut col, &lambda) in factor.column_iter_mut().zip(eigen.eigenvalues.iter()) {
        let s = if lambda > cutoff {
            (scale * lambda).sqrt()
        } else {
            0.0
        };
        col *= s;
    }
    factor
}

/// Systematic (low-variance) ancestor draw: a single uniform offset
/// `u ∈ [0, 1/count)` places `count` equally spaced pointers `u + k/count`
/// on the cumulative-weight axis, and each pointer selects the particle
/// whose weight segment it lands in. Counts satisfy `E[n_j] = count · w_j`
/// as with independent categorical draws, but with far less variance — the
/// cloud loses fewer distinct ancestors per resample, which matters in high
/// dimension where repeated resampling otherwise erodes posterior spread.
fn sample_ancestors<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let offset = rng.random::<f64>() / count as f64;
    let total: f64 = weights.iter().sum();
    let top = weights.len() - 1;
    let mut out = Vec::with_capacity(count);
    let mut cum = 0.0;
    let mut j = 0usize;
    for k in 0..count {
        let target = (offset + k as f64 / count as f64) * total;
        while j < top && cum + weights[j] < target {
            cum += weights[j];
            j += 1;
        }
        out.push(j);
    }
    out
}
