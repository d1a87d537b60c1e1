//! Density-based clustering of particle sets.
//!
//! A deterministic DBSCAN: points with at least `min_pts` neighbors within
//! `eps` (the point itself included) are core points; clusters are the
//! connected components of the core points under the `eps`-neighborhood
//! relation, grown in index order; non-core points adjacent to a core point
//! join the lowest-numbered such cluster, and everything else is noise.
//!
//! Distances are recomputed on demand instead of materializing an adjacency
//! list, so memory stays `O(n)` while time is `O(n²·d)` — comfortably fast
//! for the few thousand high-density particles a region build hands us.

use std::collections::VecDeque;

use crate::geometry::PointCloud;

use super::RegionError;

/// Neighborhood radius policy for [`dbscan`]-backed region construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DbscanEps {
    /// Twice the median nearest-neighbor distance of the point set
    /// (see [`auto_dbscan_eps`]).
    Auto,
    /// A fixed radius in parameter space.
    Fixed(f64),
}

/// Data-driven neighborhood radius: twice the median (lower median for even
/// counts) of each point's nearest-neighbor distance. Returns 0 when the
/// cloud has fewer than two points; callers must treat a nonpositive radius
/// as "do not cluster".
pub fn auto_dbscan_eps(points: &PointCloud) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut nearest = Vec::with_capacity(n);
    for i in 0..n {
        let mut best = f64::INFINITY;
        for j in 0..n {
            if j != i {
                best = best.min(points.distance_sq(i, j));
            }
        }
        nearest.push(best.sqrt());
    }
    nearest.sort_by(f64::total_cmp);
    2.0 * nearest[(n - 1) / 2]
}

/// Clusters the points, returning one label per point: cluster ids count up
/// from 0 in order of discovery, and noise points get −1.
pub fn dbscan(points: &PointCloud, eps: f64, min_pts: usize) -> Result<Vec<isize>, RegionError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RegionError::InvalidEps { value: eps });
    }
    if min_pts == 0 {
        return Err(RegionError::InvalidMinPts);
    }
    let n = points.len();
    let eps_sq = eps * eps;
    let near = |i: usize, j: usize| points.distance_sq(i, j) <= eps_sq;

    // A point's neighborhood includes itself, so an isolated point has
    // count 1, not 0.
    let mut core = vec![false; n];
    for (i, flag) in core.iter_mut().enumerate() {
        let mut count = 0;
        for j in 0..n {
            if near(i, j) {
                count += 1;
                if count >= min_pts {
                    *flag = true;
                    break;
                }
            }
        }
    }

    let mut labels = vec![-1isize; n];
    let mut next_cluster: isize = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] >= 0 {
            continue;
        }
        labels[start] = next_cluster;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for q in 0..n {
                if core[q] && labels[q] < 0 && near(p, q) {
                    labels[q] = next_cluster;
                    queue.push_back(q);
                }
            }
        }
        next_cluster += 1;
    }

    // Border points: adopt the smallest cluster id among adjacent cores.
    for i in 0..n {
        if core[i] {
            continue;
        }
        for q in 0..n {
            if core[q] && near(i, q) {
                let label = labels[q];
                if labels[i] < 0 || label < labels[i] {
                    labels[i] = label;
                }
            }
        }
    }

    Ok(labels)
}
