//! Minimum-volume enclosing ellipsoid (MVEE) by Khachiyan's barycentric
//! coordinate-descent method on the lifted point set, with Wolfe–Atwood away
//! steps for fast convergence at tight tolerances.
//!
//! Each point `p_i ∈ R^d` is lifted to `q_i = (p_i; 1)`. The method maintains
//! barycentric weights `u` over the points, tracks `M_i = q_iᵀ X(u)⁻¹ q_i`
//! with `X(u) = Σ u_i q_i q_iᵀ`, and stops when `max_i M_i ≤ (1+ε)(d+1)`.
//! Rank-one updates keep the per-iteration cost at `O(m·d)`; the inverse and
//! the `M` vector are refreshed from scratch periodically (and before
//! declaring convergence) to control drift.
//!
//! The returned ellipsoid has center `c = Σ u_i p_i` and shape
//! `A = d (Σ u_i p_i p_iᵀ − c cᵀ)`, rescaled so the farthest input point lies
//! exactly on the boundary.

use nalgebra::{DMatrix, DVector};

use super::{Ellipsoid, GeometryError, PointCloud};

/// Default termination tolerance ε.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Refresh the factorization and `M` vector every this many rank-one updates.
const REFRESH_INTERVAL: usize = 128;

/// Minimum-volume enclosing ellipsoid with the default iteration cap.
pub fn mvee(points: &PointCloud, tolerance: f64) -> Result<Ellipsoid, GeometryError> {
    mvee_capped(points, tolerance, DEFAULT_MAX_ITERATIONS)
}

/// Minimum-volume enclosing ellipsoid with an explicit iteration cap.
///
/// Errors when the tolerance is invalid, the points fail to affinely span
/// `R^d` (the caller must reduce dimension first), or the cap is reached.
pub fn mvee_capped(
    points: &PointCloud,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Ellipsoid, GeometryError> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(GeometryError::InvalidTolerance { value: tolerance });
    }
    let m = points.len();
    let d = points.dim();
    if m < d + 1 {
        return Err(GeometryError::DegenerateSpan {
            rank: m.saturating_sub(1),
            dim: d,
        });
    }
    check_affine_span(points)?;

    let pts = points.points();
    // Lifted points, one per row: q_i = (p_i; 1).
    let q = DMatrix::from_fn(m, d + 1, |i, j| if j < d { pts[(i, j)] } else { 1.0 });
    let mut u = DVector::repeat(m, 1.0 / m as f64);
    let (mut x_inv, mut mvals) = refresh(&q, &mut u)?;

    let dd = (d + 1) as f64;
    let target = (1.0 + tolerance) * dd;
    let mut iterations = 0usize;
    let mut since_refresh = 0usize;
    let mut g = DVector::zeros(d + 1);
    let mut qj = DVector::zeros(d + 1);
    let mut s = DVector::zeros(m);

    loop {
        let (i_max, m_max) = argmax(&mvals);
        if m_max <= target {
            // Recompute exactly before accepting convergence.
            let (xi, mv) = refresh(&q, &mut u)?;
            x_inv = xi;
            mvals = mv;
            since_refresh = 0;
            let (_, exact_max) = argmax(&mvals);
            if exact_max <= target {
                break;
            }
            continue;
        }
        if iterations >= max_iterations {
            return Err(GeometryError::MveeDidNotConverge {
                iterations,
                gap: m_max / dd - 1.0,
            });
        }
        iterations += 1;

        // Candidate away step: the support point with the smallest M.
        let mut i_min = usize::MAX;
        let mut m_min = f64::INFINITY;
        for i in 0..m {
            if u[i] > 0.0 && mvals[i] < m_min {
                m_min = mvals[i];
                i_min = i;
            }
        }
        let gap_add = m_max - dd;
        let gap_away = dd - m_min;

        // (j, β, γ): the update is u ← β·u + γ·e_j, i.e. X ← β·X + γ·q_j q_jᵀ.
        let (j, beta, gamma) = if gap_add >= gap_away || m_min <= 1.0 + 1e-12 {
            let lambda = gap_add / (dd * (m_max - 1.0));
            (i_max, 1.0 - lambda, lambda)
        } else {
            let lambda_unconstrained = gap_away / (dd * (m_min - 1.0));
            let lambda_drop = u[i_min] / (1.0 - u[i_min]).max(f64::MIN_POSITIVE);
            let lambda = lambda_unconstrained.min(lambda_drop);
            (i_min, 1.0 + lambda, -lambda)
        };

        let m_j = mvals[j];
        let tau = gamma / beta;
        let sigma = 1.0 + tau * m_j;
        if !sigma.is_finite() || sigma.abs() < 1e-9 {
            // The rank-one update would be numerically singular (an away step
            // removing the last independent support); take an add step instead.
            let lambda = gap_add / (dd * (m_max - 1.0));
            apply_update(
                &q, &mut u, &mut x_inv, &mut mvals, &mut g, &mut qj, &mut s, i_max,
                1.0 - lambda, lambda,
            );
        } else {
            apply_update(
                &q, &mut u, &mut x_inv, &mut mvals, &mut g, &mut qj, &mut s, j, beta, gamma,
            );
        }

        since_refresh += 1;
        if since_refresh >= REFRESH_INTERVAL {
            let (xi, mv) = refresh(&q, &mut u)?;
            x_inv = xi;
            mvals = mv;
            since_refresh = 0;
        }
    }

    extract_ellipsoid(points, &u, d)
}

// Takes the solver's scratch buffers individually so the hot loop reuses
// allocations; bundling them into a struct would just rename the problem.
#[allow(clippy::too_many_arguments)]
fn apply_update(
    q: &DMatrix<f64>,
    u: &mut DVector<f64>,
    x_inv: &mut DMatrix<f64>,
    mvals: &mut DVector<f64>,
    g: &mut DVector<f64>,
    qj: &mut DVector<f64>,
    s: &mut DVector<f64>,
    j: usize,
    beta: f64,
    gamma: f64,
) {
    let m = q.nrows();
    // u ← β u + γ e_j; a drop step lands u_j exactly on zero.
    for i in 0..m {
        u[i] *= beta;
    }
    u[j] += gamma;
    if u[j] < 0.0 {
        u[j] = 0.0;
    }

    for k in 0..q.ncols() {
        qj[k] = q[(j, k)];
    }
    g.gemv(1.0, x_inv, qj, 0.0);
    let m_j = mvals[j];
    let tau = gamma / beta;
    let sigma = 1.0 + tau * m_j;
    // s_i = q_iᵀ X⁻¹ q_j.
    s.gemv(1.0, q, g, 0.0);
    for i in 0..m {
        mvals[i] = (mvals[i] - tau * s[i] * s[i] / sigma) / beta;
    }
    // X⁻¹ ← (X⁻¹ − (τ/σ) g gᵀ) / β.
    x_inv.ger(-tau / (sigma * beta), g, g, 1.0 / beta);
}

/// Rebuild `X(u)⁻¹` and the `M` vector from scratch (also renormalizes `u`).
fn refresh(
    q: &DMatrix<f64>,
    u: &mut DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), GeometryError> {
    let m = q.nrows();
    let k = q.ncols();
    let total: f64 = u.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(GeometryError::DegenerateSpan {
            rank: 0,
            dim: k - 1,
        });
    }
    *u /= total;
    let mut weighted = q.clone();
    for i in 0..m {
        let w = u[i];
        for j in 0..k {
            weighted[(i, j)] *= w;
        }
    }
    let mut x = q.transpose() * weighted;
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (x[(i, j)] + x[(j, i)]);
            x[(i, j)] = avg;
            x[(j, i)] = avg;
        }
    }
    let chol = nalgebra::Cholesky::new(x).ok_or(GeometryError::DegenerateSpan {
        rank: k - 1,
        dim: k - 1,
    })?;
    let x_inv = chol.inverse();
    let gmat = q * &x_inv;
    let mvals = DVector::from_fn(m, |i, _| gmat.row(i).dot(&q.row(i)));
    Ok((x_inv, mvals))
}

fn argmax(values: &DVector<f64>) -> (usize, f64) {
    let mut idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    (idx, best)
}

/// Errors unless the points affinely span `R^d` to working precision.
fn check_affine_span(points: &PointCloud) -> Result<(), GeometryError> {
    let m = points.len();
    let d = points.dim();
    let pts = points.points();
    let mut mean = DVector::zeros(d);
    for i in 0..m {
        for j in 0..d {
            mean[j] += pts[(i, j)];
        }
    }
    mean /= m as f64;
    let mut scatter = DMatrix::zeros(d, d);
    let mut diff = DVector::zeros(d);
    for i in 0..m {
        for j in 0..d {
            diff[j] = pts[(i, j)] - mean[j];
        }
        scatter.ger(1.0 / m as f64, &diff, &diff, 1.0);
    }
    let eigen = scatter.symmetric_eigen();
    let lambda_max = eigen.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b));
    let rank = eigen
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-12 * lambda_max && l > 0.0)
        .count();
    if rank < d {
        return Err(GeometryError::DegenerateSpan { rank, dim: d });
    }
    Ok(())
}

/// Center, shape, and boundary rescale from the converged weights.
fn extract_ellipsoid(
    points: &PointCloud,
    u: &DVector<f64>,
    d: usize,
) -> Result<Ellipsoid, GeometryError> {
    let m = points.len();
    let pts = points.points();
    let mut center = DVector::zeros(d);
    for i in 0..m {
        for j in 0..d {
            center[j] += u[i] * pts[(i, j)];
        }
    }
    let mut shape = DMatrix::zeros(d, d);
    let mut diff = DVector::zeros(d);
    for i in 0..m {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..d {
            diff[j] = pts[(i, j)] - center[j];
        }
        shape.ger(u[i], &diff, &diff, 1.0);
    }
    shape *= d as f64;

    let provisional = Ellipsoid::new(center.clone(), shape.clone())?;
    let mut max_q = 0.0_f64;
    for i in 0..m {
        let p = points.point(i);
        let qf = provisional.quadratic_form(&p);
        if !qf.is_finite() {
            return Err(GeometryError::DegenerateSpan { rank: 0, dim: d });
        }
        max_q = max_q.max(qf);
    }
    if max_q <= 0.0 {
        return Err(GeometryError::DegenerateSpan { rank: 0, dim: d });
    }
    Ellipsoid::new(center, shape * max_q)
}
