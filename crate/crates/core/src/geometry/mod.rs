//! Ellipsoids, point sets, convex hulls, and the chi-square quantiles that
//! scale covariance ellipsoids.
//!
//! The central type is [`Ellipsoid`], the set `{x : (x−c)ᵀ A⁻¹ (x−c) ≤ 1}`
//! described by its center `c` and a symmetric positive-semidefinite shape
//! matrix `A`. Degenerate (singular-shape) ellipsoids are representable —
//! they arise as credible regions of posteriors supported on lower-dimensional
//! sets — but their volume is an error rather than zero.
//!
//! [`mvee`] computes minimum-volume enclosing ellipsoids with Khachiyan's
//! barycentric coordinate-descent method; [`convex_hull_2d`] builds planar
//! hulls for visualization; [`chi2_quantile`] lives in [`special`] along with
//! the gamma-function machinery behind ellipsoid volumes.

pub mod mvee;
pub mod special;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

pub use mvee::{mvee, mvee_capped};
pub use special::{chi2_cdf, chi2_quantile, ln_gamma, regularized_gamma_p};

/// Absolute slack admitted by containment tests: a point with quadratic form
/// up to `1 + CONTAINS_TOLERANCE` still counts as inside.
pub const CONTAINS_TOLERANCE: f64 = 1e-9;

/// Relative asymmetry tolerated in shape matrices before they are rejected.
pub const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("shape matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("shape matrix is not positive semidefinite (eigenvalue {eigenvalue:.6e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("weights sum to {sum} instead of 1")]
    WeightSum { sum: f64 },
    #[error("weight {index} is negative ({value})")]
    WeightNegative { index: usize, value: f64 },
    #[error("degenerate hull: {0}")]
    DegenerateHull(&'static str),
    #[error("points span an affine subspace of rank {rank} < {dim}")]
    DegenerateSpan { rank: usize, dim: usize },
    #[error("ellipsoid volume is degenerate (determinant {determinant:.6e})")]
    DegenerateVolume { determinant: f64 },
    #[error("MVEE did not converge after {iterations} iterations (gap {gap:.3e})")]
    MveeDidNotConverge { iterations: usize, gap: f64 },
    #[error("tolerance must be positive and finite, got {value}")]
    InvalidTolerance { value: f64 },
    #[error("probability must lie strictly inside (0, 1), got {value}")]
    InvalidProbability { value: f64 },
    #[error("degrees of freedom must be a positive integer")]
    InvalidDegreesOfFreedom,
    #[error("projection index set is empty")]
    ProjectionEmpty,
    #[error("projection index {index} out of range for dimension {dim}")]
    ProjectionIndexOutOfRange { index: usize, dim: usize },
    #[error("projection index {index} appears more than once")]
    ProjectionDuplicateIndex { index: usize },
}

/// An ellipsoid `{x : (x−c)ᵀ A⁻¹ (x−c) ≤ 1}` with center `c` and symmetric
/// positive-semidefinite shape `A`.
///
/// The eigendecomposition of `A` is computed once at construction and cached;
/// containment tests and volumes work in the eigenbasis, so singular shapes
/// (flat or point-like ellipsoids) are handled exactly.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Ellipsoid {
    /// Builds an ellipsoid, validating that `shape` is square, matches the
    /// center's dimension, is symmetric to within [`SYMMETRY_RTOL`] relative
    /// tolerance, and is positive semidefinite. Tiny negative eigenvalues from
    /// rounding are clamped to zero.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self, GeometryError> {
        let d = center.len();
        if d == 0 {
            return Err(GeometryError::EmptyPointSet);
        }
        if shape.nrows() != d || shape.ncols() != d {
            return Err(GeometryError::DimensionMismatch {
                expected: d,
                got: shape.nrows().max(shape.ncols()),
            });
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("center"));
        }
        if shape.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("shape"));
        }
        let scale = shape.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut asymmetry = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asymmetry = asymmetry.max((shape[(i, j)] - shape[(j, i)]).abs());
            }
        }
        if asymmetry > SYMMETRY_RTOL * scale.max(f64::MIN_POSITIVE) {
            return Err(GeometryError::NotSymmetric {
                asymmetry: asymmetry / scale.max(f64::MIN_POSITIVE),
            });
        }
        let mut sym = shape.clone();
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = avg;
                sym[(j, i)] = avg;
            }
        }
        let eigen = sym.clone().symmetric_eigen();
        let lambda_max = eigen.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
        let negative_tol = 1e-9 * lambda_max.max(0.0) + f64::MIN_POSITIVE;
        let mut eigenvalues = eigen.eigenvalues;
        for v in eigenvalues.iter_mut() {
            if *v < -negative_tol {
                return Err(GeometryError::NotPositiveSemidefinite { eigenvalue: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self {
            center,
            shape: sym,
            eigenvalues,
            eigenvectors: eigen.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// Eigenvalues and eigenvectors of the shape matrix (unordered, as
    /// produced by the symmetric eigensolver).
    pub fn eigen_pairs(&self) -> (DVector<f64>, DMatrix<f64>) {
        (self.eigenvalues.clone(), self.eigenvectors.clone())
    }

    /// True when the shape matrix is singular (some axis has zero extent).
    pub fn is_degenerate(&self) -> bool {
        let lambda_max = self.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
        self.eigenvalues.iter().any(|&v| v <= 0.0) || lambda_max == 0.0
    }

    /// Quadratic form `(x−c)ᵀ A⁻¹ (x−c)`, evaluated in the eigenbasis.
    ///
    /// Along zero-eigenvalue axes the form is 0 if the deviation is within an
    /// absolute tolerance scaled to the ellipsoid's size, `+∞` otherwise.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.center;
        let y = self.eigenvectors.transpose() * diff;
        let lambda_max = self.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
        let flat_tol = 1e-9 * (1.0 + lambda_max.sqrt());
        let mut acc = 0.0;
        for i in 0..y.len() {
            let lambda = self.eigenvalues[i];
            if lambda > 0.0 {
                acc += y[i] * y[i] / lambda;
            } else if y[i].abs() > flat_tol {
                return f64::INFINITY;
            }
        }
        acc
    }

    /// Membership test with absolute slack [`CONTAINS_TOLERANCE`] on the
    /// quadratic form. Errors when the point's dimension does not match.
    pub fn contains(&self, x: &DVector<f64>) -> Result<bool, GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.quadratic_form(x) <= 1.0 + CONTAINS_TOLERANCE)
    }

    /// Lebesgue volume `π^{d/2} / Γ(d/2 + 1) · √det(A)`.
    ///
    /// Errors when the shape is singular or the determinant is not finite.
    pub fn volume(&self) -> Result<f64, GeometryError> {
        let d = self.dim() as f64;
        let mut log_det = 0.0;
        let mut det = 1.0;
        for &lambda in self.eigenvalues.iter() {
            det *= lambda;
            if lambda <= 0.0 {
                return Err(GeometryError::DegenerateVolume { determinant: det });
            }
            log_det += lambda.ln();
        }
        let vol = (0.5 * log_det + (d / 2.0) * std::f64::consts::PI.ln()
            - special::ln_gamma(d / 2.0 + 1.0))
        .exp();
        if !vol.is_finite() {
            return Err(GeometryError::DegenerateVolume { determinant: det });
        }
        Ok(vol)
    }

    /// Orthogonal projection (shadow) onto the coordinates in `coords`:
    /// the sub-center and sub-shape on those coordinates, in the given order.
    pub fn project(&self, coords: &[usize]) -> Result<Ellipsoid, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ProjectionEmpty);
        }
        for (pos, &c) in coords.iter().enumerate() {
            if c >= self.dim() {
                return Err(GeometryError::ProjectionIndexOutOfRange {
                    index: c,
                    dim: self.dim(),
                });
            }
            if coords[..pos].contains(&c) {
                return Err(GeometryError::ProjectionDuplicateIndex { index: c });
            }
        }
        let k = coords.len();
        let center = DVector::from_fn(k, |i, _| self.center[coords[i]]);
        let shape = DMatrix::from_fn(k, k, |i, j| self.shape[(coords[i], coords[j])]);
        Ellipsoid::new(center, shape)
    }

    /// Draws a point uniformly from the ellipsoid's interior.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        use rand_distr::StandardNormal;
        let d = self.dim();
        let mut z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = z.norm();
        if norm > 0.0 {
            z /= norm;
        }
        let radius = rng.random::<f64>().powf(1.0 / d as f64);
        let mut scaled = z * radius;
        for i in 0..d {
            scaled[i] *= self.eigenvalues[i].max(0.0).sqrt();
        }
        &self.center + &self.eigenvectors * scaled
    }
}

/// A finite set of points in `R^d` (one per row), with optional normalized
/// weights.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: DMatrix<f64>,
    weights: Option<DVector<f64>>,
}

impl PointCloud {
    /// Unweighted point set. Errors when empty or containing non-finite
    /// coordinates.
    pub fn new(points: DMatrix<f64>) -> Result<Self, GeometryError> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(GeometryError::EmptyPointSet);
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("points"));
        }
        Ok(Self {
            points,
            weights: None,
        })
    }

    /// Weighted point set; weights must be non-negative and sum to 1 within
    /// 1e-9.
    pub fn with_weights(points: DMatrix<f64>, weights: DVector<f64>) -> Result<Self, GeometryError> {
        let cloud = Self::new(points)?;
        if weights.len() != cloud.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: cloud.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("weights"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if w < 0.0 {
                return Err(GeometryError::WeightNegative { index: i, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GeometryError::WeightSum { sum });
        }
        Ok(Self {
            points: cloud.points,
            weights: Some(weights),
        })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> Option<&DVector<f64>> {
        self.weights.as_ref()
    }

    /// The `i`-th point as an owned column vector.
    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.row(i).transpose()
    }

    /// Squared Euclidean distance between points `i` and `j`.
    pub fn distance_sq(&self, i: usize, j: usize) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.dim() {
            let delta = self.points[(i, k)] - self.points[(j, k)];
            acc += delta * delta;
        }
        acc
    }
}

/// A convex polygon in the plane: vertices in counterclockwise order with no
/// three consecutive vertices collinear.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope2D {
    vertices: Vec<[f64; 2]>,
}

impl Polytope2D {
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Signed area by the shoelace formula (positive for counterclockwise).
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        let mut acc = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            acc += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        acc / 2.0
    }

    /// Point-in-convex-polygon test with absolute slack `tol` on each edge's
    /// half-plane constraint.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let cross = (v[j][0] - v[i][0]) * (p[1] - v[i][1])
                - (v[j][1] - v[i][1]) * (p[0] - v[i][0]);
            if cross < -tol {
                return false;
            }
        }
        true
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull of a planar point set by the monotone chain algorithm.
///
/// Returns the hull in counterclockwise order with collinear interior points
/// dropped. Errors when the cloud is not 2-D, has fewer than 3 distinct
/// points, or is entirely collinear.
pub fn convex_hull_2d(cloud: &PointCloud) -> Result<Polytope2D, GeometryError> {
    if cloud.dim() != 2 {
        return Err(GeometryError::DimensionMismatch {
            expected: 2,
            got: cloud.dim(),
        });
    }
    let mut pts: Vec<[f64; 2]> = (0..cloud.len())
        .map(|i| [cloud.points()[(i, 0)], cloud.points()[(i, 1)]])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateHull("fewer than 3 distinct points"));
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeometryError::DegenerateHull("all points collinear"));
    }
    Ok(Polytope2D { vertices: lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vec2(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        use rand_distr::StandardNormal;
        let m = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        &m * m.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn volume_of_unit_balls() {
        use std::f64::consts::PI;
        let cases = [(1, 2.0), (2, PI), (3, 4.0 * PI / 3.0)];
        for (d, expected) in cases {
            let e = Ellipsoid::new(DVector::zeros(d), DMatrix::identity(d, d)).unwrap();
            assert!(
                (e.volume().unwrap() - expected).abs() < 1e-12 * expected,
                "unit ball volume in d={d}"
            );
        }
    }

    #[test]
    fn volume_of_axis_aligned_ellipse() {
        use std::f64::consts::PI;
        // Semi-axes a=2, b=3: shape diag(4, 9), area = π·a·b = 6π.
        let e = Ellipsoid::new(vec2(0.0, 0.0), DMatrix::from_diagonal(&vec2(4.0, 9.0))).unwrap();
        assert!((e.volume().unwrap() - 6.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn volume_matches_hit_or_miss_oracle() {
        // Monte-Carlo oracle: hit-or-miss sampling in the ellipsoid's
        // bounding box, derived from the eigendecomposition.
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let shape = random_spd(2, &mut rng);
        let e = Ellipsoid::new(vec2(0.3, -0.7), shape).unwrap();
        let (vals, vecs) = e.eigen_pairs();
        let mut half_extent = [0.0_f64; 2];
        for i in 0..2 {
            for j in 0..2 {
                half_extent[i] += (vecs[(i, j)] * vals[j].sqrt()).abs();
            }
        }
        let box_volume = 4.0 * half_extent[0] * half_extent[1];
        let samples = 400_000;
        let mut hits = 0usize;
        for _ in 0..samples {
            let p = vec2(
                e.center()[0] + (2.0 * rng.random::<f64>() - 1.0) * half_extent[0],
                e.center()[1] + (2.0 * rng.random::<f64>() - 1.0) * half_extent[1],
            );
            if e.contains(&p).unwrap() {
                hits += 1;
            }
        }
        let mc = box_volume * hits as f64 / samples as f64;
        let exact = e.volume().unwrap();
        assert!(
            (mc - exact).abs() < 0.01 * exact,
            "MC volume {mc} vs exact {exact}"
        );
    }

    #[test]
    fn volume_scales_with_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [1, 2, 3, 15] {
            let shape = random_spd(d, &mut rng);
            let center = DVector::zeros(d);
            let base = Ellipsoid::new(center.clone(), shape.clone()).unwrap();
            for s in [0.5, 2.0] {
                let scaled = Ellipsoid::new(center.clone(), &shape * (s * s)).unwrap();
                let expected = base.volume().unwrap() * s.powi(d as i32);
                let got = scaled.volume().unwrap();
                assert!(
                    (got - expected).abs() < 1e-9 * expected,
                    "scaling failed in d={d}, s={s}"
                );
            }
        }
    }

    #[test]
    fn containment_on_unit_disk() {
        let e = Ellipsoid::new(vec2(0.0, 0.0), DMatrix::identity(2, 2)).unwrap();
        assert!(e.contains(&vec2(0.999, 0.0)).unwrap());
        assert!(e.contains(&vec2(1.0, 0.0)).unwrap());
        assert!(!e.contains(&vec2(1.1, 0.0)).unwrap());
        assert!(e.contains(&vec2(0.6, 0.6)).unwrap());
        assert!(!e.contains(&vec2(0.8, 0.8)).unwrap());
        assert!(e.contains(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn degenerate_ellipsoid_contains_and_volume() {
        // Zero shape: a point region.
        let e = Ellipsoid::new(vec2(1.0, 2.0), DMatrix::zeros(2, 2)).unwrap();
        assert!(e.is_degenerate());
        assert!(e.contains(&vec2(1.0, 2.0)).unwrap());
        assert!(!e.contains(&vec2(1.1, 2.0)).unwrap());
        assert!(matches!(
            e.volume(),
            Err(GeometryError::DegenerateVolume { .. })
        ));
        // Rank-1 shape: a segment along x.
        let flat =
            Ellipsoid::new(vec2(0.0, 0.0), DMatrix::from_diagonal(&vec2(1.0, 0.0))).unwrap();
        assert!(flat.contains(&vec2(0.9, 0.0)).unwrap());
        assert!(!flat.contains(&vec2(0.9, 0.5)).unwrap());
    }

    #[test]
    fn rejects_invalid_shapes() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(
            Ellipsoid::new(vec2(0.0, 0.0), asym),
            Err(GeometryError::NotSymmetric { .. })
        ));
        let indef = DMatrix::from_diagonal(&vec2(1.0, -0.5));
        assert!(matches!(
            Ellipsoid::new(vec2(0.0, 0.0), indef),
            Err(GeometryError::NotPositiveSemidefinite { .. })
        ));
        let nan = DMatrix::from_diagonal(&vec2(1.0, f64::NAN));
        assert!(Ellipsoid::new(vec2(0.0, 0.0), nan).is_err());
    }

    #[test]
    fn projection_of_unit_sphere() {
        let e = Ellipsoid::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let shadow = e.project(&[0, 2]).unwrap();
        assert_eq!(shadow.dim(), 2);
        assert!((shadow.shape() - DMatrix::identity(2, 2)).norm() < 1e-14);
        assert!(e.project(&[]).is_err());
        assert!(e.project(&[3]).is_err());
        assert!(e.project(&[1, 1]).is_err());
    }

    #[test]
    fn projection_contains_projected_samples() {
        // Points inside an ellipsoid project into its shadow.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let shape = random_spd(4, &mut rng);
        let center = DVector::from_vec(vec![0.5, -1.0, 2.0, 0.0]);
        let e = Ellipsoid::new(center, shape).unwrap();
        let coords = [0usize, 2];
        let shadow = e.project(&coords).unwrap();
        for _ in 0..500 {
            let x = e.sample_point(&mut rng);
            assert!(e.contains(&x).unwrap());
            let proj = DVector::from_vec(coords.iter().map(|&c| x[c]).collect());
            assert!(shadow.contains(&proj).unwrap());
        }
    }

    #[test]
    fn sampled_points_land_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let shape = random_spd(3, &mut rng);
        let e = Ellipsoid::new(DVector::from_vec(vec![1.0, 2.0, 3.0]), shape).unwrap();
        for _ in 0..1000 {
            let x = e.sample_point(&mut rng);
            assert!(e.contains(&x).unwrap());
        }
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = DMatrix::from_row_slice(
            6,
            2,
            &[
                0.0, 0.0, //
                1.0, 0.0, //
                1.0, 1.0, //
                0.0, 1.0, //
                0.5, 0.5, //
                0.25, 0.75,
            ],
        );
        let hull = convex_hull_2d(&PointCloud::new(pts).unwrap()).unwrap();
        assert_eq!(hull.vertices().len(), 4);
        assert!((hull.area() - 1.0).abs() < 1e-14);
        // Counterclockwise orientation means positive signed area.
        assert!(hull.area() > 0.0);
        assert!(hull.contains([0.5, 0.5], 1e-12));
        assert!(!hull.contains([1.5, 0.5], 1e-12));
    }

    #[test]
    fn hull_rejects_degenerate_input() {
        let two = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        assert!(matches!(
            convex_hull_2d(&PointCloud::new(two).unwrap()),
            Err(GeometryError::DegenerateHull(_))
        ));
        let collinear = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            convex_hull_2d(&PointCloud::new(collinear).unwrap()),
            Err(GeometryError::DegenerateHull(_))
        ));
        let three_d = DMatrix::zeros(4, 3);
        assert!(convex_hull_2d(&PointCloud::new(three_d).unwrap()).is_err());
    }

    #[test]
    fn hull_dominates_triangles_and_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let m = 40;
        let pts = DMatrix::from_fn(m, 2, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let hull = convex_hull_2d(&cloud).unwrap();
        let area = hull.area();
        // Hull area dominates the area of any triangle of input points.
        for _ in 0..200 {
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m);
            let k = rng.random_range(0..m);
            let tri = 0.5
                * cross(
                    [pts[(i, 0)], pts[(i, 1)]],
                    [pts[(j, 0)], pts[(j, 1)]],
                    [pts[(k, 0)], pts[(k, 1)]],
                )
                .abs();
            assert!(area + 1e-12 >= tri);
        }
        // Hull of the hull's vertices is the hull itself.
        let verts = hull.vertices();
        let vmat = DMatrix::from_fn(verts.len(), 2, |i, j| verts[i][j]);
        let hull2 = convex_hull_2d(&PointCloud::new(vmat).unwrap()).unwrap();
        assert_eq!(hull.vertices().len(), hull2.vertices().len());
        assert!((hull.area() - hull2.area()).abs() < 1e-12);
    }

    #[test]
    fn point_cloud_validation() {
        assert!(PointCloud::new(DMatrix::zeros(0, 2)).is_err());
        let pts = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let bad_sum = DVector::from_vec(vec![0.7, 0.6]);
        assert!(matches!(
            PointCloud::with_weights(pts.clone(), bad_sum),
            Err(GeometryError::WeightSum { .. })
        ));
        let negative = DVector::from_vec(vec![1.5, -0.5]);
        assert!(matches!(
            PointCloud::with_weights(pts.clone(), negative),
            Err(GeometryError::WeightNegative { .. })
        ));
        let ok = DVector::from_vec(vec![0.25, 0.75]);
        assert!(PointCloud::with_weights(pts, ok).is_ok());
    }
}
