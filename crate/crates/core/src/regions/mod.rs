//! Credible-region construction on top of a weighted particle cloud.
//!
//! Every region estimator starts from the same posterior summary — the
//! particles and weights — and returns a [`RegionEstimate`], a union of one
//! or more ellipsoids at a requested credibility `1 − α`:
//!
//! * [`hpd_particle_set`] picks the smallest set of particles whose weight
//!   reaches `1 − α` (highest posterior density in the discrete sense); it is
//!   the common substrate for the hull-based estimators.
//! * [`pce_region`] scales the posterior covariance ellipsoid so that a
//!   Gaussian posterior would be covered with probability `1 − α`.
//! * [`mvee_region`] wraps the HPD particles in their minimum-volume
//!   enclosing ellipsoid — never smaller than the data demand, at the price
//!   of convexifying the posterior's shape.
//! * [`clustered_region`] first splits the HPD particles into density
//!   clusters (DBSCAN) and wraps each cluster separately, so multimodal or
//!   ridge-shaped posteriors are not bridged by one gigantic ellipsoid.
//! * [`marginal_region`] projects any of the above onto a coordinate subset
//!   (the shadow of the joint region, which conservatively contains the
//!   marginal credible set).

mod dbscan;

pub use dbscan::{auto_dbscan_eps, dbscan, DbscanEps};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{chi2_quantile, mvee_capped, Ellipsoid, GeometryError, PointCloud};
use crate::inference::ParticleCloud;

/// Relative scatter-eigenvalue cutoff below which a direction of an HPD
/// point set is treated as degenerate and projected out before the MVEE
/// solve (the enclosing ellipsoid is flat along it).
const SPAN_EIGENVALUE_RTOL: f64 = 1e-10;

/// Relative floor applied to posterior-covariance eigenvalues inside
/// [`pce_region`], so that an exactly-degenerate direction still yields a
/// usable (thin) ellipsoid instead of a singular solve.
const PCE_EIGENVALUE_FLOOR_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("credibility parameter alpha = {alpha} must lie strictly between 0 and 1")]
    InvalidLevel { alpha: f64 },
    #[error("region construction needs a nonempty particle cloud")]
    EmptyCloud,
    #[error("dimension mismatch: region is {expected}-dimensional, input is {got}-dimensional")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("DBSCAN radius eps = {value} must be positive and finite")]
    InvalidEps { value: f64 },
    #[error("DBSCAN min_pts must be at least 1")]
    InvalidMinPts,
    #[error("component {index} is degenerate (flat); its {dim}-dimensional volume is undefined")]
    DegenerateComponent { index: usize, dim: usize },
    #[error("expected {expected} parameter labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("unknown region kind {value:?} (expected \"pce\", \"mvee\", or \"clustered\")")]
    UnknownKind { value: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A credibility level `1 − α`, stored as the tail mass `α ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CredibleLevel {
    alpha: f64,
}

impl CredibleLevel {
    pub fn new(alpha: f64) -> Result<Self, RegionError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RegionError::InvalidLevel { alpha });
        }
        Ok(Self { alpha })
    }

    /// The excluded tail mass α.
    pub fn alpha(self) -> f64 {
        self.alpha
    }

    /// The target credibility `1 − α`.
    pub fn mass(self) -> f64 {
        1.0 - self.alpha
    }
}

/// The discrete highest-posterior-density particle set: the fewest particles
/// whose total weight reaches the target credibility.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdSet {
    /// Indices of the member particles, in ascending order.
    pub member_indices: Vec<usize>,
    /// Total weight of the members (≥ the target mass, with equality only
    /// when the boundary weight closes the gap exactly).
    pub achieved_mass: f64,
    /// Weight of the lightest included particle; every excluded particle
    /// weighs at most this much.
    pub threshold_weight: f64,
}

/// Which estimator produced a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    /// Posterior covariance ellipsoid, chi-square scaled.
    Pce,
    /// Minimum-volume enclosing ellipsoid of the HPD particles.
    Mvee,
    /// Union of per-cluster MVEEs over a DBSCAN split of the HPD particles.
    Clustered,
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegionKind::Pce => "pce",
            RegionKind::Mvee => "mvee",
            RegionKind::Clustered => "clustered",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for RegionKind {
    type Err = RegionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pce" => Ok(RegionKind::Pce),
            "mvee" => Ok(RegionKind::Mvee),
            "clustered" => Ok(RegionKind::Clustered),
            other => Err(RegionError::UnknownKind {
                value: other.to_string(),
            }),
        }
    }
}

/// A credible region: a union of ellipsoid components at credibility
/// `1 − alpha`.
#[derive(Debug, Clone)]
pub struct RegionEstimate {
    kind: RegionKind,
    alpha: f64,
    components: Vec<Ellipsoid>,
    parameter_labels: Option<Vec<String>>,
}

impl RegionEstimate {
    fn new(kind: RegionKind, level: CredibleLevel, components: Vec<Ellipsoid>) -> Self {
        debug_assert!(!components.is_empty());
        debug_assert!(components
            .windows(2)
            .all(|w| w[0].dim() == w[1].dim()));
        Self {
            kind,
            alpha: level.alpha(),
            components,
            parameter_labels: None,
        }
    }

    pub fn kind(&self) -> RegionKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[Ellipsoid] {
        &self.components
    }

    /// Attaches coordinate names (must match the region's dimension).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, RegionError> {
        if labels.len() != self.dim() {
            return Err(RegionError::LabelCount {
                expected: self.dim(),
                got: labels.len(),
            });
        }
        self.parameter_labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.parameter_labels.as_deref()
    }
}

/// Smallest particle set reaching the target mass: particles are ranked by
/// weight (ties broken toward the lower index) and taken greedily until the
/// cumulative weight is at least `1 − α`.
pub fn hpd_particle_set(cloud: &ParticleCloud, level: CredibleLevel) -> HpdSet {
    let weights = cloud.weights();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));

    let target = level.mass();
    let mut mass = 0.0;
    let mut members = Vec::new();
    let mut threshold = 0.0;
    for &j in &order {
        members.push(j);
        threshold = weights[j];
        mass += threshold;
        if mass >= target {
            break;
        }
    }
    members.sort_unstable();
    HpdSet {
        member_indices: members,
        achieved_mass: mass,
        threshold_weight: threshold,
    }
}

/// Posterior covariance ellipsoid: centered on the posterior mean, shaped by
/// the posterior covariance, scaled by the chi-square quantile
/// `χ²_{d}(1 − α)` that would cover a Gaussian posterior at the target
/// level. Covariance eigenvalues below `1e-12` of the largest are floored to
/// keep exactly-degenerate directions representable.
pub fn pce_region(
    cloud: &ParticleCloud,
    level: CredibleLevel,
) -> Result<RegionEstimate, RegionError> {
    if cloud.is_empty() {
        return Err(RegionError::EmptyCloud);
    }
    let d = cloud.dim();
    let z2 = chi2_quantile(level.mass(), d)?;
    let mean = cloud.posterior_mean();
    let mut eigen = cloud.posterior_covariance().symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = lambda_max * PCE_EIGENVALUE_FLOOR_RTOL;
    for l in eigen.eigenvalues.iter_mut() {
        *l = l.max(floor) * z2;
    }
    let shape = &eigen.eigenvectors
        * DMatrix::from_diagonal(&eigen.eigenvalues)
        * eigen.eigenvectors.transpose();
    let shape = symmetrized(shape);
    let component = Ellipsoid::new(mean, shape)?;
    Ok(RegionEstimate::new(RegionKind::Pce, level, vec![component]))
}

/// Tuning for the MVEE solves inside region construction.
#[derive(Debug, Clone, Copy)]
pub struct MveeParams {
    /// Relative optimality gap at which the solve stops.
    pub tolerance: f64,
    /// Iteration cap for one solve.
    pub max_iterations: usize,
}

impl Default for MveeParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100_000,
        }
    }
}

/// Minimum-volume enclosing ellipsoid of the HPD particle set.
pub fn mvee_region(
    cloud: &ParticleCloud,
    level: CredibleLevel,
    params: &MveeParams,
) -> Result<RegionEstimate, RegionError> {
    if cloud.is_empty() {
        return Err(RegionError::EmptyCloud);
    }
    let hpd = hpd_particle_set(cloud, level);
    let points = gather_points(cloud, &hpd.member_indices);
    let component = mvee_of_points(&points, params)?;
    let region = RegionEstimate::new(RegionKind::Mvee, level, vec![component]);
    debug_assert!(
        enclosed_mass(&region, cloud).unwrap() >= level.mass() - 1e-9,
        "MVEE region lost part of its HPD set"
    );
    Ok(region)
}

/// Clustering stage configuration for [`clustered_region`].
#[derive(Debug, Clone, Copy)]
pub struct ClusterParams {
    /// Neighborhood radius (data-driven by default).
    pub eps: DbscanEps,
    /// Core-point threshold; defaults to `dim + 1` when `None`.
    pub min_pts: Option<usize>,
    /// MVEE tuning for the per-cluster solves.
    pub mvee: MveeParams,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps: DbscanEps::Auto,
            min_pts: None,
            mvee: MveeParams::default(),
        }
    }
}

/// Union-of-ellipsoids region: DBSCAN splits the HPD particles into density
/// clusters, each cluster gets its own MVEE, and noise particles are folded
/// into the cluster whose preliminary ellipsoid center is nearest (the
/// affected clusters are refit), so every HPD particle ends up covered.
///
/// With zero or one cluster this degrades gracefully to the plain MVEE of
/// the whole HPD set (the kind still reports `Clustered`).
pub fn clustered_region(
    cloud: &ParticleCloud,
    level: CredibleLevel,
    params: &ClusterParams,
) -> Result<RegionEstimate, RegionError> {
    if cloud.is_empty() {
        return Err(RegionError::EmptyCloud);
    }
    let hpd = hpd_particle_set(cloud, level);
    let points = gather_points(cloud, &hpd.member_indices);
    let m = points.nrows();
    let d = points.ncols();

    let single = |points: &DMatrix<f64>| -> Result<RegionEstimate, RegionError> {
        let component = mvee_of_points(points, &params.mvee)?;
        Ok(RegionEstimate::new(
            RegionKind::Clustered,
            level,
            vec![component],
        ))
    };

    let eps = match params.eps {
        DbscanEps::Fixed(e) => e,
        DbscanEps::Auto => {
            let pc = PointCloud::new(points.clone())?;
            auto_dbscan_eps(&pc)
        }
    };
    // A collapsed or single-point HPD set offers no scale to cluster at.
    if m < 2 || eps.is_nan() || eps <= 0.0 {
        return single(&points);
    }
    let min_pts = params.min_pts.unwrap_or(d + 1);
    let labels = dbscan(&PointCloud::new(points.clone())?, eps, min_pts)?;
    let clusters = 1 + labels.iter().copied().max().unwrap_or(-1);
    if clusters <= 1 {
        return single(&points);
    }

    // Group rows by cluster, fit preliminary MVEEs, then fold each noise
    // point into the cluster with the nearest preliminary center.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); clusters as usize];
    for (row, &label) in labels.iter().enumerate() {
        if label >= 0 {
            groups[label as usize].push(row);
        }
    }
    let mut prelim = Vec::with_capacity(groups.len());
    for group in &groups {
        let pts = select_rows(&points, group);
        prelim.push(mvee_of_points(&pts, &params.mvee)?);
    }
    let mut grew = vec![false; groups.len()];
    for (row, &label) in labels.iter().enumerate() {
        if label >= 0 {
            continue;
        }
        let x = points.row(row).transpose();
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (k, e) in prelim.iter().enumerate() {
            let dist = (&x - e.center()).norm_squared();
            if dist < best_dist {
                best_dist = dist;
                best = k;
            }
        }
        groups[best].push(row);
        grew[best] = true;
    }
    let mut components = Vec::with_capacity(groups.len());
    for (k, group) in groups.iter().enumerate() {
        if grew[k] {
            let pts = select_rows(&points, group);
            components.push(mvee_of_points(&pts, &params.mvee)?);
        } else {
            components.push(prelim[k].clone());
        }
    }
    let region = RegionEstimate::new(RegionKind::Clustered, level, components);
    debug_assert!(
        enclosed_mass(&region, cloud).unwrap() >= level.mass() - 1e-9,
        "clustered region lost part of its HPD set"
    );
    Ok(region)
}

/// Projects a region onto a coordinate subset: the shadow of each component
/// (a coordinate submatrix of its shape), which contains the corresponding
/// marginal credible set. Labels, when present, are carried along.
pub fn marginal_region(
    region: &RegionEstimate,
    coords: &[usize],
) -> Result<RegionEstimate, RegionError> {
    let mut components = Vec::with_capacity(region.components.len());
    for c in &region.components {
        components.push(c.project(coords)?);
    }
    let labels = region
        .parameter_labels
        .as_ref()
        .map(|labels| coords.iter().map(|&i| labels[i].clone()).collect());
    Ok(RegionEstimate {
        kind: region.kind,
        alpha: region.alpha,
        components,
        parameter_labels: labels,
    })
}

/// Whether any component contains `x`.
pub fn region_contains(region: &RegionEstimate, x: &DVector<f64>) -> Result<bool, RegionError> {
    for c in &region.components {
        if c.contains(x)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Total volume of the components (overlap, when clusters touch, is counted
/// twice — the harness reports estimated overlap separately).
///
/// Every component must be full-rank: a flat component has no
/// `d`-dimensional volume to report, so summing around it would silently
/// misstate the size of the region. Callers that can encounter flat regions
/// (e.g. constrained models whose posteriors live on a subspace) should treat
/// the error as "volume undefined" rather than as a failure.
pub fn region_volume(region: &RegionEstimate) -> Result<f64, RegionError> {
    let mut total = 0.0;
    for (index, c) in region.components.iter().enumerate() {
        if c.is_degenerate() {
            return Err(RegionError::DegenerateComponent {
                index,
                dim: region.dim(),
            });
        }
        total += c.volume()?;
    }
    Ok(total)
}

/// Posterior mass the region captures: the weight of the particles lying in
/// at least one component.
pub fn enclosed_mass(region: &RegionEstimate, cloud: &ParticleCloud) -> Result<f64, RegionError> {
    if cloud.dim() != region.dim() {
        return Err(RegionError::DimensionMismatch {
            expected: region.dim(),
            got: cloud.dim(),
        });
    }
    let mut mass = 0.0;
    let mut x = DVector::zeros(cloud.dim());
    for (j, &w) in cloud.weights().iter().enumerate() {
        x.copy_from_slice(cloud.particle(j));
        if region_contains(region, &x)? {
            mass += w;
        }
    }
    Ok(mass)
}

/// Enclosing ellipsoid of a raw point set (rows of `points`), robust to rank
/// deficiency: directions in which the points have (relatively) no scatter
/// are projected out, the MVEE is solved in the spanned subspace, and the
/// result is lifted back with a flat shape along the dropped directions.
/// A single point, or a fully collapsed set, yields a point region.
pub fn mvee_of_points(
    points: &DMatrix<f64>,
    params: &MveeParams,
) -> Result<Ellipsoid, RegionError> {
    let m = points.nrows();
    let d = points.ncols();
    if m == 0 {
        return Err(RegionError::EmptyCloud);
    }
    let mut centroid = DVector::zeros(d);
    for i in 0..m {
        for j in 0..d {
            centroid[j] += points[(i, j)];
        }
    }
    centroid /= m as f64;

    let point_region = |centroid: DVector<f64>| -> Result<Ellipsoid, RegionError> {
        Ok(Ellipsoid::new(centroid, DMatrix::zeros(d, d))?)
    };
    if m == 1 {
        return point_region(centroid);
    }

    // Scatter spectrum decides the affine span.
    let mut scatter = DMatrix::zeros(d, d);
    let mut dev = DVector::zeros(d);
    for i in 0..m {
        for j in 0..d {
            dev[j] = points[(i, j)] - centroid[j];
        }
        scatter.ger(1.0, &dev, &dev, 1.0);
    }
    let eigen = scatter.symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return point_region(centroid);
    }
    let cutoff = lambda_max * SPAN_EIGENVALUE_RTOL;
    let kept: Vec<usize> = (0..d)
        .filter(|&i| eigen.eigenvalues[i] > cutoff)
        .collect();
    // Basis of the span (always rotate into it, even at full rank — the
    // MVEE is affine-equivariant and the rotation costs nothing).
    let basis = DMatrix::from_fn(d, kept.len(), |i, j| eigen.eigenvectors[(i, kept[j])]);
    let projected = DMatrix::from_fn(m, kept.len(), |i, j| {
        let mut acc = 0.0;
        for t in 0..d {
            acc += (points[(i, t)] - centroid[t]) * basis[(t, j)];
        }
        acc
    });
    let inner = mvee_capped(
        &PointCloud::new(projected)?,
        params.tolerance,
        params.max_iterations,
    )?;
    let center = &centroid + &basis * inner.center();
    let shape = symmetrized(&basis * inner.shape() * basis.transpose());
    Ok(Ellipsoid::new(center, shape)?)
}

fn gather_points(cloud: &ParticleCloud, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), cloud.dim(), |i, j| {
        cloud.particle(indices[i])[j]
    })
}

fn select_rows(points: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), points.ncols(), |i, j| points[(rows[i], j)])
}

fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::ParticleCloud;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn level(alpha: f64) -> CredibleLevel {
        CredibleLevel::new(alpha).unwrap()
    }

    fn cloud_2d(rows: &[[f64; 2]], weights: Vec<f64>) -> ParticleCloud {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        ParticleCloud::from_parts(flat, 2, weights).unwrap()
    }

    fn gaussian_cloud(n: usize, seed: u64) -> ParticleCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flat = Vec::with_capacity(2 * n);
        for _ in 0..n {
            flat.push(rng.sample::<f64, _>(StandardNormal));
            flat.push(rng.sample::<f64, _>(StandardNormal));
        }
        ParticleCloud::from_parts(flat, 2, vec![1.0; n]).unwrap()
    }

    #[test]
    fn credible_level_validation() {
        assert!(CredibleLevel::new(0.05).is_ok());
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                CredibleLevel::new(bad),
                Err(RegionError::InvalidLevel { .. })
            ));
        }
        assert!((level(0.05).mass() - 0.95).abs() < 1e-15);
    }

    #[test]
    fn hpd_takes_heaviest_particles_first() {
        let cloud = cloud_2d(
            &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
            vec![0.1, 0.4, 0.05, 0.45],
        );
        let hpd = hpd_particle_set(&cloud, level(0.2));
        // Ranked: 3 (0.45), 1 (0.4) → cumulative 0.85 ≥ 0.8.
        assert_eq!(hpd.member_indices, vec![1, 3]);
        assert!((hpd.achieved_mass - 0.85).abs() < 1e-12);
        assert!((hpd.threshold_weight - 0.4).abs() < 1e-12);
    }

    #[test]
    fn hpd_is_minimal_and_breaks_ties_by_index() {
        let cloud = cloud_2d(
            &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
            vec![1.0; 4],
        );
        let hpd = hpd_particle_set(&cloud, level(0.5));
        assert_eq!(hpd.member_indices, vec![0, 1]);
        assert!((hpd.achieved_mass - 0.5).abs() < 1e-12);

        // Minimality: removing the last-ranked member drops below target.
        let cloud = cloud_2d(
            &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![0.5, 0.3, 0.2],
        );
        for alpha in [0.05, 0.25, 0.45] {
            let hpd = hpd_particle_set(&cloud, level(alpha));
            assert!(hpd.achieved_mass >= 1.0 - alpha);
            assert!(hpd.achieved_mass - hpd.threshold_weight < 1.0 - alpha);
        }
        // α = 0.5: the single heaviest particle reaches the target exactly.
        let hpd = hpd_particle_set(&cloud, level(0.5));
        assert_eq!(hpd.member_indices, vec![0]);
    }

    #[test]
    fn pce_matches_gaussian_oracle() {
        // 10⁵ standard-normal particles: the 95% PCE must approximate the
        // disk of squared radius χ²₂(0.95) ≈ 5.99, and must cover ≈95% of
        // fresh draws from the same distribution.
        let cloud = gaussian_cloud(100_000, 5);
        let region = pce_region(&cloud, level(0.05)).unwrap();
        assert_eq!(region.kind(), RegionKind::Pce);
        assert_eq!(region.components().len(), 1);
        let e = &region.components()[0];
        assert!(e.center().norm() < 0.02);
        let z2 = chi2_quantile(0.95, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { z2 } else { 0.0 };
                assert!(
                    (e.shape()[(i, j)] - want).abs() < 0.05 * z2,
                    "shape entry ({i},{j}) = {} vs {want}",
                    e.shape()[(i, j)]
                );
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 20_000;
        let mut inside = 0;
        for _ in 0..n {
            let x = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            if region_contains(&region, &x).unwrap() {
                inside += 1;
            }
        }
        let coverage = f64::from(inside) / f64::from(n);
        assert!(
            (0.94..=0.96).contains(&coverage),
            "fresh-draw coverage {coverage}"
        );
    }

    #[test]
    fn pce_floors_degenerate_directions() {
        // Third coordinate identically zero: the PCE must stay constructible
        // and thin, not crash on a singular covariance.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 500;
        let mut flat = Vec::with_capacity(3 * n);
        for _ in 0..n {
            flat.push(rng.sample::<f64, _>(StandardNormal));
            flat.push(rng.sample::<f64, _>(StandardNormal));
            flat.push(0.0);
        }
        let cloud = ParticleCloud::from_parts(flat, 3, vec![1.0; n]).unwrap();
        let region = pce_region(&cloud, level(0.05)).unwrap();
        let e = &region.components()[0];
        let (eigenvalues, _) = e.eigen_pairs();
        let lmax = eigenvalues.max();
        assert!(eigenvalues.min() > 0.0, "floored eigenvalue must be positive");
        assert!(eigenvalues.min() < 1e-10 * lmax, "floor must stay thin");
        // The mean itself is inside.
        assert!(region_contains(&region, &cloud.posterior_mean()).unwrap());
    }

    #[test]
    fn pce_of_collapsed_cloud_is_a_point() {
        let cloud = cloud_2d(&[[1.5, -2.0], [1.5, -2.0]], vec![0.5, 0.5]);
        let region = pce_region(&cloud, level(0.05)).unwrap();
        let e = &region.components()[0];
        assert!(e.is_degenerate());
        assert!((e.center() - DVector::from_row_slice(&[1.5, -2.0])).norm() < 1e-12);
        assert!(region_contains(&region, e.center()).unwrap());
        assert!(matches!(
            region_volume(&region),
            Err(RegionError::DegenerateComponent { index: 0, dim: 2 })
        ));
    }

    #[test]
    fn mvee_region_encloses_its_hpd_set() {
        let cloud = gaussian_cloud(400, 21);
        let lv = level(0.1);
        let region = mvee_region(&cloud, lv, &MveeParams::default()).unwrap();
        assert_eq!(region.kind(), RegionKind::Mvee);
        let hpd = hpd_particle_set(&cloud, lv);
        let e = &region.components()[0];
        for &j in &hpd.member_indices {
            let x = DVector::from_row_slice(cloud.particle(j));
            assert!(e.contains(&x).unwrap(), "HPD member {j} left outside");
        }
        let mass = enclosed_mass(&region, &cloud).unwrap();
        assert!(mass >= lv.mass() - 1e-12, "enclosed mass {mass}");
    }

    #[test]
    fn mvee_region_of_single_particle_is_point() {
        // One particle dominates: with α = 0.5 the HPD set is that single
        // particle and the region collapses onto it.
        let cloud = cloud_2d(&[[0.3, 0.7], [5.0, 5.0]], vec![0.6, 0.4]);
        let region = mvee_region(&cloud, level(0.5), &MveeParams::default()).unwrap();
        let e = &region.components()[0];
        assert!(e.is_degenerate());
        assert!((e.center() - DVector::from_row_slice(&[0.3, 0.7])).norm() < 1e-12);
    }

    #[test]
    fn mvee_of_points_handles_rank_deficiency() {
        // Twenty points on a line through R³: the ellipsoid must be flat off
        // the line yet contain every point.
        let dir = [1.0, 2.0, -0.5];
        let base = [0.5, -1.0, 2.0];
        let points = DMatrix::from_fn(20, 3, |i, j| base[j] + (i as f64 / 19.0) * dir[j]);
        let e = mvee_of_points(&points, &MveeParams::default()).unwrap();
        assert!(e.is_degenerate());
        let (eigenvalues, _) = e.eigen_pairs();
        let positive = eigenvalues.iter().filter(|&&l| l > 1e-12).count();
        assert_eq!(positive, 1, "line data must give a rank-1 shape");
        for i in 0..20 {
            let x = points.row(i).transpose();
            assert!(e.contains(&x).unwrap(), "point {i} not contained");
        }
        // A flat region has no 3-volume to report.
        let region = RegionEstimate::new(RegionKind::Mvee, level(0.05), vec![e]);
        assert!(matches!(
            region_volume(&region),
            Err(RegionError::DegenerateComponent { index: 0, dim: 3 })
        ));
    }

    #[test]
    fn marginal_region_is_coordinate_shadow() {
        let cloud = gaussian_cloud(50_000, 33);
        let region = pce_region(&cloud, level(0.05))
            .unwrap()
            .with_labels(vec!["x1".into(), "x2".into()])
            .unwrap();
        let marginal = marginal_region(&region, &[1]).unwrap();
        assert_eq!(marginal.dim(), 1);
        assert_eq!(marginal.labels(), Some(&["x2".to_string()][..]));
        // Shadow rule: the 1-d shape is the (1,1) entry of the joint shape.
        let joint = &region.components()[0];
        let shadow = &marginal.components()[0];
        assert!((shadow.shape()[(0, 0)] - joint.shape()[(1, 1)]).abs() < 1e-12);
        assert!((shadow.center()[0] - joint.center()[1]).abs() < 1e-12);
        // Every point of the joint region projects into the shadow: check on
        // boundary samples.
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..200 {
            let x = joint.sample_point(&mut rng);
            let y = DVector::from_row_slice(&[x[1]]);
            assert!(shadow.contains(&y).unwrap());
        }
    }

    #[test]
    fn clustered_region_matches_mvee_when_unimodal() {
        // A radius large enough to connect everything reduces the clustered
        // region to the plain MVEE of the HPD set, bit for bit.
        let cloud = gaussian_cloud(300, 41);
        let lv = level(0.1);
        let params = ClusterParams {
            eps: DbscanEps::Fixed(1e3),
            ..ClusterParams::default()
        };
        let clustered = clustered_region(&cloud, lv, &params).unwrap();
        assert_eq!(clustered.kind(), RegionKind::Clustered);
        assert_eq!(clustered.components().len(), 1);
        let plain = mvee_region(&cloud, lv, &MveeParams::default()).unwrap();
        let a = &clustered.components()[0];
        let b = &plain.components()[0];
        assert_eq!(a.center(), b.center());
        assert_eq!(a.shape(), b.shape());
    }

    #[test]
    fn auto_eps_keeps_even_density_in_one_cluster() {
        // A jitter-free grid has nearest-neighbor distance exactly the
        // spacing, so the automatic radius (twice the median) connects the
        // whole grid into a single cluster.
        let rows: Vec<[f64; 2]> = (0..6)
            .flat_map(|i| (0..6).map(move |j| [0.1 * i as f64, 0.1 * j as f64]))
            .collect();
        let cloud = cloud_2d(&rows, vec![1.0; 36]);
        let lv = level(0.05);
        let clustered = clustered_region(&cloud, lv, &ClusterParams::default()).unwrap();
        assert_eq!(clustered.components().len(), 1);
    }

    #[test]
    fn clustered_region_splits_bimodal_cloud() {
        // Two tight blobs far apart: the clustered region must use two
        // components whose total volume is far below the single MVEE's.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 200;
        let mut rows = Vec::with_capacity(2 * n);
        for center in [[-5.0, 0.0], [5.0, 0.0]] {
            for _ in 0..n {
                rows.push([
                    center[0] + 0.3 * rng.sample::<f64, _>(StandardNormal),
                    center[1] + 0.3 * rng.sample::<f64, _>(StandardNormal),
                ]);
            }
        }
        let cloud = cloud_2d(&rows, vec![1.0; 2 * n]);
        let lv = level(0.05);
        let clustered = clustered_region(&cloud, lv, &ClusterParams::default()).unwrap();
        // The data-driven radius may shave sparse fringes into extra small
        // clusters; what matters is that the two modes are not bridged.
        assert!(clustered.components().len() >= 2);
        let mass = enclosed_mass(&clustered, &cloud).unwrap();
        assert!(mass >= lv.mass() - 1e-12);

        let plain = mvee_region(&cloud, lv, &MveeParams::default()).unwrap();
        let v_clustered = region_volume(&clustered).unwrap();
        let v_plain = region_volume(&plain).unwrap();
        assert!(
            v_clustered < 0.3 * v_plain,
            "clustered volume {v_clustered} vs single MVEE {v_plain}"
        );
        // Each blob center is inside the union; the midpoint is not.
        assert!(region_contains(&clustered, &DVector::from_row_slice(&[-5.0, 0.0])).unwrap());
        assert!(region_contains(&clustered, &DVector::from_row_slice(&[5.0, 0.0])).unwrap());
        assert!(!region_contains(&clustered, &DVector::from_row_slice(&[0.0, 0.0])).unwrap());
    }

    #[test]
    fn clustered_region_absorbs_noise_points() {
        // Two blobs plus one straggler halfway out: the straggler is DBSCAN
        // noise but must still end up inside its nearest component.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut rows = Vec::new();
        for center in [[-4.0, 0.0], [4.0, 0.0]] {
            for _ in 0..50 {
                rows.push([
                    center[0] + 0.2 * rng.sample::<f64, _>(StandardNormal),
                    center[1] + 0.2 * rng.sample::<f64, _>(StandardNormal),
                ]);
            }
        }
        rows.push([-2.0, 0.5]);
        let cloud = cloud_2d(&rows, vec![1.0; 101]);
        // α small enough that all 101 uniform-weight particles are HPD
        // members, the straggler included.
        let lv = level(0.004);
        let region = clustered_region(&cloud, lv, &ClusterParams::default()).unwrap();
        assert!(region.components().len() >= 2);
        let straggler = DVector::from_row_slice(&[-2.0, 0.5]);
        assert!(
            region_contains(&region, &straggler).unwrap(),
            "noise particle left uncovered"
        );
        let mass = enclosed_mass(&region, &cloud).unwrap();
        assert!(mass >= lv.mass() - 1e-12);
    }

    #[test]
    fn region_volume_sums_components() {
        // Two unit disks far apart: volume ≈ 2π.
        let e1 = Ellipsoid::new(
            DVector::from_row_slice(&[0.0, 0.0]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let e2 = Ellipsoid::new(
            DVector::from_row_slice(&[10.0, 0.0]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let region = RegionEstimate::new(RegionKind::Clustered, level(0.05), vec![e1, e2]);
        let v = region_volume(&region).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!(region_contains(&region, &DVector::from_row_slice(&[10.5, 0.0])).unwrap());
        assert!(!region_contains(&region, &DVector::from_row_slice(&[5.0, 0.0])).unwrap());
    }

    #[test]
    fn enclosed_mass_checks_dimensions() {
        let cloud = gaussian_cloud(50, 51);
        let region = pce_region(&cloud, level(0.05)).unwrap();
        let other = ParticleCloud::from_parts(vec![0.0; 9], 3, vec![1.0; 3]).unwrap();
        assert!(matches!(
            enclosed_mass(&region, &other),
            Err(RegionError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn region_kind_round_trips_through_strings() {
        for kind in [RegionKind::Pce, RegionKind::Mvee, RegionKind::Clustered] {
            let s = kind.to_string();
            assert_eq!(s.parse::<RegionKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{s}\""));
            assert_eq!(serde_json::from_str::<RegionKind>(&json).unwrap(), kind);
        }
        assert!(matches!(
            "blob".parse::<RegionKind>(),
            Err(RegionError::UnknownKind { .. })
        ));
    }

    #[test]
    fn labels_must_match_dimension() {
        let cloud = gaussian_cloud(50, 53);
        let region = pce_region(&cloud, level(0.05)).unwrap();
        assert!(matches!(
            region.with_labels(vec!["p".into()]),
            Err(RegionError::LabelCount { expected: 2, got: 1 })
        ));
    }
}
