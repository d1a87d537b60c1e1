//! TOML experiment configuration.
//!
//! A configuration file fixes everything a coverage experiment needs:
//!
//! ```toml
//! seed = 42
//! particles = 5000
//! measurements = 100
//! trials = 50
//! alpha = 0.05
//! kinds = ["pce", "mvee"]
//!
//! [model]
//! kind = "qubit"
//! qubits = 1
//! visibility = 0.9
//!
//! [resample]
//! ess_threshold = 0.5
//! a = 0.98
//!
//! [dbscan]
//! eps = "auto"
//! ```
//!
//! Unknown keys are rejected so that a typo cannot silently fall back to a
//! default. Every section except `[model]` is optional. The checkpoint
//! schedule defaults to a 1–2–5 log spacing up to and including the final
//! measurement count, so coverage curves get roughly even coverage on a log
//! axis without configuration.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::inference::ResampleConfig;
use crate::models::{Model, Visibility};
use crate::regions::{ClusterParams, CredibleLevel, DbscanEps, MveeParams, RegionKind};

use super::HarnessError;

fn default_particles() -> usize {
    5000
}

fn default_measurements() -> usize {
    100
}

fn default_trials() -> usize {
    50
}

fn default_alpha() -> f64 {
    0.05
}

fn default_kinds() -> Vec<RegionKind> {
    vec![RegionKind::Pce]
}

/// Complete description of one coverage experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; each trial derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    /// Particles in the sequential Monte Carlo filter.
    #[serde(default = "default_particles")]
    pub particles: usize,
    /// Measurements per trial.
    #[serde(default = "default_measurements")]
    pub measurements: usize,
    /// Independent trials to run.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Credible level is `1 − alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Measurement counts at which regions are built. Defaults to a 1–2–5
    /// log spacing ending at `measurements`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    /// Region kinds to build at every checkpoint.
    #[serde(default = "default_kinds")]
    pub kinds: Vec<RegionKind>,
    /// What is being estimated.
    pub model: ModelConfig,
    /// Resampling knobs.
    #[serde(default)]
    pub resample: ResampleSection,
    /// Enclosing-ellipsoid solver knobs.
    #[serde(default)]
    pub mvee: MveeSection,
    /// Clustering knobs for the disjoint-union region.
    #[serde(default)]
    pub dbscan: DbscanSection,
}

/// Model selector: which parameter space and whether the visibility is a
/// known constant or an extra estimated parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `"qubit"`, `"rebit"`, or `"diagonal"`.
    pub kind: ModelKindName,
    /// Number of qubits; only meaningful for `kind = "qubit"` (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    /// Known visibility. Exactly one of `visibility` and
    /// `visibility_interval` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    /// Uniform prior interval for an estimated visibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility_interval: Option<[f64; 2]>,
}

/// Names for the supported model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKindName {
    /// Full q-qubit state estimation.
    Qubit,
    /// Single qubit restricted to the real plane of the Bloch ball.
    Rebit,
    /// Diagonal qubit: a single population parameter `p`.
    Diagonal,
}

/// Resampling configuration section; fields mirror
/// [`ResampleConfig`](crate::inference::ResampleConfig).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResampleSection {
    /// Resample when ESS drops below this fraction of the particle count.
    pub ess_threshold: f64,
    /// Shrinkage parameter of the resampling kernel, in (0, 1].
    pub a: f64,
    /// Attempts at perturbing a resampled particle before keeping its
    /// ancestor unchanged.
    pub max_validity_rejections: usize,
}

impl Default for ResampleSection {
    fn default() -> Self {
        let c = ResampleConfig::default();
        Self {
            ess_threshold: c.ess_threshold,
            a: c.a,
            max_validity_rejections: c.max_validity_rejections,
        }
    }
}

/// Enclosing-ellipsoid solver section; fields mirror
/// [`MveeParams`](crate::regions::MveeParams).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MveeSection {
    /// Relative optimality gap at which the solver stops.
    pub tolerance: f64,
    /// Iteration cap.
    pub max_iterations: usize,
}

impl Default for MveeSection {
    fn default() -> Self {
        let p = MveeParams::default();
        Self {
            tolerance: p.tolerance,
            max_iterations: p.max_iterations,
        }
    }
}

/// Clustering section for the disjoint-union region.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbscanSection {
    /// Neighbourhood radius: `"auto"` or a fixed positive number.
    pub eps: EpsSpec,
    /// Minimum neighbourhood size for a core point (default: dimension + 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pts: Option<usize>,
}

impl Default for DbscanSection {
    fn default() -> Self {
        Self {
            eps: EpsSpec::Auto,
            min_pts: None,
        }
    }
}

/// DBSCAN radius specification: the string `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSpec {
    /// Twice the median nearest-neighbour distance of the clustered set.
    Auto,
    /// Fixed radius.
    Fixed(f64),
}

impl Serialize for EpsSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            EpsSpec::Auto => s.serialize_str("auto"),
            EpsSpec::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for EpsSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct EpsVisitor;

        impl Visitor<'_> for EpsVisitor {
            type Value = EpsSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"auto\" or a positive number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<EpsSpec, E> {
                if v == "auto" {
                    Ok(EpsSpec::Auto)
                } else {
                    Err(E::custom(format!(
                        "unknown eps \"{v}\"; expected \"auto\" or a number"
                    )))
                }
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<EpsSpec, E> {
                Ok(EpsSpec::Fixed(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<EpsSpec, E> {
                Ok(EpsSpec::Fixed(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<EpsSpec, E> {
                Ok(EpsSpec::Fixed(v as f64))
            }
        }

        d.deserialize_any(EpsVisitor)
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the cross-field constraints that serde cannot express. Returns
    /// the first violation as [`HarnessError::Config`].
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.particles == 0 {
            return fail("particles must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            ));
        }
        if self.kinds.is_empty() {
            return fail("kinds must name at least one region kind".into());
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if self.kinds[..i].contains(k) {
                return fail(format!("region kind \"{k}\" listed twice"));
            }
        }
        if let Some(list) = &self.checkpoints {
            if list.is_empty() {
                return fail("checkpoints must not be empty when given".into());
            }
            if let Some(&bad) = list.iter().find(|&&c| c > self.measurements) {
                return fail(format!(
                    "checkpoint {bad} exceeds the measurement count {}",
                    self.measurements
                ));
            }
        }
        if !(self.resample.ess_threshold >= 0.0
            && self.resample.ess_threshold <= 1.0
            && self.resample.ess_threshold.is_finite())
        {
            return fail(format!(
                "resample.ess_threshold must lie in [0, 1], got {}",
                self.resample.ess_threshold
            ));
        }
        if !(self.resample.a > 0.0 && self.resample.a <= 1.0) {
            return fail(format!(
                "resample.a must lie in (0, 1], got {}",
                self.resample.a
            ));
        }
        if !(self.mvee.tolerance > 0.0 && self.mvee.tolerance.is_finite()) {
            return fail(format!(
                "mvee.tolerance must be positive, got {}",
                self.mvee.tolerance
            ));
        }
        if self.mvee.max_iterations == 0 {
            return fail("mvee.max_iterations must be at least 1".into());
        }
        if let EpsSpec::Fixed(eps) = self.dbscan.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return fail(format!("dbscan.eps must be positive, got {eps}"));
            }
        }
        if self.dbscan.min_pts == Some(0) {
            return fail("dbscan.min_pts must be at least 1".into());
        }
        // Model cross-field rules, then an actual construction so that any
        // further model validation surfaces at configuration time.
        match (self.model.visibility, self.model.visibility_interval) {
            (Some(_), Some(_)) => {
                return fail(
                    "model.visibility and model.visibility_interval are mutually exclusive".into(),
                )
            }
            (None, None) => {
                return fail(
                    "model needs either visibility or visibility_interval".into(),
                )
            }
            _ => {}
        }
        if self.model.kind != ModelKindName::Qubit && self.model.qubits.is_some() {
            return fail("model.qubits only applies to kind = \"qubit\"".into());
        }
        self.build_model()?;
        Ok(())
    }

    /// Builds the configured [`Model`].
    pub fn build_model(&self) -> Result<Model, HarnessError> {
        let visibility = match (self.model.visibility, self.model.visibility_interval) {
            (Some(eta), None) => Visibility::Known(eta),
            (None, Some([lo, hi])) => Visibility::Estimated { lo, hi },
            _ => {
                return Err(HarnessError::Config(
                    "model needs exactly one of visibility and visibility_interval".into(),
                ))
            }
        };
        let model = match self.model.kind {
            ModelKindName::Qubit => Model::qubits(self.model.qubits.unwrap_or(1), visibility)?,
            ModelKindName::Rebit => Model::rebit(visibility)?,
            ModelKindName::Diagonal => Model::diagonal(visibility)?,
        };
        Ok(model)
    }

    /// The credible level implied by `alpha`.
    pub fn credible_level(&self) -> Result<CredibleLevel, HarnessError> {
        Ok(CredibleLevel::new(self.alpha)?)
    }

    /// The checkpoint schedule, sorted and deduplicated. Defaults to a 1–2–5
    /// log spacing that always ends at `measurements` (and is just `[0]` for
    /// a zero-measurement prior study).
    pub fn resolved_checkpoints(&self) -> Vec<usize> {
        if let Some(list) = &self.checkpoints {
            let mut v = list.clone();
            v.sort_unstable();
            v.dedup();
            return v;
        }
        let n = self.measurements;
        if n == 0 {
            return vec![0];
        }
        let mut v = Vec::new();
        let mut decade = 1usize;
        'outer: loop {
            for mantissa in [1usize, 2, 5] {
                let Some(c) = mantissa.checked_mul(decade) else {
                    break 'outer;
                };
                if c > n {
                    break 'outer;
                }
                v.push(c);
            }
            match decade.checked_mul(10) {
                Some(next) => decade = next,
                None => break,
            }
        }
        if v.last() != Some(&n) {
            v.push(n);
        }
        v
    }

    /// Resampling parameters for [`maybe_resample`](crate::inference::maybe_resample).
    pub fn resample_config(&self) -> ResampleConfig {
        ResampleConfig {
            ess_threshold: self.resample.ess_threshold,
            a: self.resample.a,
            max_validity_rejections: self.resample.max_validity_rejections,
        }
    }

    /// Solver parameters for enclosing-ellipsoid regions.
    pub fn mvee_params(&self) -> MveeParams {
        MveeParams {
            tolerance: self.mvee.tolerance,
            max_iterations: self.mvee.max_iterations,
        }
    }

    /// Clustering parameters for the disjoint-union region.
    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            eps: match self.dbscan.eps {
                EpsSpec::Auto => DbscanEps::Auto,
                EpsSpec::Fixed(v) => DbscanEps::Fixed(v),
            },
            min_pts: self.dbscan.min_pts,
            mvee: self.mvee_params(),
        }
    }
}
