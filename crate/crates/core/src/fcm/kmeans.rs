//! Lloyd's K-means, the crisp baseline for the fuzzy runs.

use rand::Rng;

use super::{seeded_rng, FcmError, ProfileMatrix};
use crate::matrix::{squared_euclidean, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    /// Assignments stopped changing before `max_iter`.
    pub converged: bool,
}

impl KMeansResult {
    /// Sum of squared distances from each point to its centroid.
    pub fn inertia(&self, x: &ProfileMatrix) -> f64 {
        self.assignments
            .iter()
            .enumerate()
            .map(|(k, &i)| squared_euclidean(x.row(k), self.centroids.row(i)))
            .sum()
    }
}

/// One D²-weighted draw among undrawn points, uniform when every undrawn
/// point coincides with a drawn one.
fn weighted_draw(rng: &mut impl Rng, nearest: &[f64], taken: &[bool]) -> usize {
    let total: f64 = (0..nearest.len()).filter(|&k| !taken[k]).map(|k| nearest[k]).sum();
    if total > 0.0 {
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for k in (0..nearest.len()).filter(|&k| !taken[k] && nearest[k] > 0.0) {
            pick = Some(k);
            if target < nearest[k] {
                break;
            }
            target -= nearest[k];
        }
        pick.expect("total > 0 implies a candidate")
    } else {
        let free: Vec<usize> = (0..nearest.len()).filter(|&k| !taken[k]).collect();
        free[rng.random_range(0..free.len())]
    }
}

/// `c` distinct points drawn by seeded sampling without replacement.
///
/// Greedy k-means++ seeding: the first point is uniform; each further step
/// draws `2 + ⌊ln c⌋` candidates with probability proportional to squared
/// distance from the nearest point already chosen, and keeps the candidate
/// that most reduces the total of those distances (first drawn on ties).
/// Randomness comes from a ChaCha8 stream seeded with `seed`.
pub fn kmeans_initial_centroids(x: &ProfileMatrix, c: usize, seed: u64) -> Result<Matrix, FcmError> {
    if c < 1 {
        return Err(FcmError::InvalidConfig("cluster count must be at least 1".into()));
    }
    let n = x.len();
    if n < c {
        return Err(FcmError::FewerPointsThanClusters { points: n, clusters: c });
    }
    let trials = 2 + (c as f64).ln().floor() as usize;
    let mut rng = seeded_rng(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    let mut nearest: Vec<f64> = (0..n).map(|k| squared_euclidean(x.row(k), x.row(chosen[0]))).collect();
    while chosen.len() < c {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = weighted_draw(&mut rng, &nearest, &taken);
            let updated: Vec<f64> = (0..n)
                .map(|k| nearest[k].min(squared_euclidean(x.row(k), x.row(cand))))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.1) {
                best = Some((cand, potential, updated));
            }
        }
        let (pick, _, updated) = best.expect("at least one trial");
        taken[pick] = true;
        chosen.push(pick);
        nearest = updated;
    }
    Ok(x.points().select_rows(&chosen))
}

pub fn kmeans_baseline(x: &ProfileMatrix, c: usize, seed: u64, max_iter: usize) -> Result<KMeansResult, FcmError> {
    if max_iter < 1 {
        return Err(FcmError::InvalidConfig("max_iter must be at least 1".into()));
    }
    let initial = kmeans_initial_centroids(x, c, seed)?;
    lloyd(x, initial, max_iter)
}

fn nearest(point: &[f64], centroids: &Matrix) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in centroids.iter_rows().enumerate() {
        let d = squared_euclidean(point, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn assign(x: &ProfileMatrix, centroids: &Matrix) -> Vec<usize> {
    (0..x.len()).map(|k| nearest(x.row(k), centroids)).collect()
}

/// Lloyd iterations from the given centroids.
///
/// Ties go to the lowest centroid index. A cluster left empty after an
/// assignment step is reseeded at the point farthest from its own centroid.
pub fn lloyd(x: &ProfileMatrix, initial: Matrix, max_iter: usize) -> Result<KMeansResult, FcmError> {
    let c = initial.rows();
    if initial.cols() != x.dim() {
        return Err(FcmError::DimensionMismatch(format!(
            "centroids have {} columns, points have {}",
            initial.cols(),
            x.dim()
        )));
    }
    if x.len() < c {
        return Err(FcmError::FewerPointsThanClusters {
            points: x.len(),
            clusters: c,
        });
    }
    let mut centroids = initial;
    let mut assignments = assign(x, &centroids);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        centroids = recompute(x, &mut assignments, &centroids);
        let next = assign(x, &centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    Ok(KMeansResult {
        centroids,
        assignments,
        iterations,
        converged,
    })
}

/// Cluster means for the current assignment, reseeding empty clusters.
/// Reseeded points are moved into their new cluster in `assignments`.
fn recompute(x: &ProfileMatrix, assignments: &mut [usize], previous: &Matrix) -> Matrix {
    let (c, dim) = (previous.rows(), previous.cols());
    let mut sums = Matrix::zeros(c, dim);
    let mut counts = vec![0usize; c];
    for (k, &i) in assignments.iter().enumerate() {
        counts[i] += 1;
        for (s, v) in sums.row_mut(i).iter_mut().zip(x.row(k)) {
            *s += v;
        }
    }
    for (i, &n) in counts.iter().enumerate() {
        if n > 0 {
            sums.row_mut(i).iter_mut().for_each(|s| *s /= n as f64);
        }
    }
    let mut reseeded = vec![false; x.len()];
    for i in 0..c {
        if counts[i] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (k, &j) in assignments.iter().enumerate() {
            // Never strip the last point from a cluster.
            if reseeded[k] || counts[j] <= 1 {
                continue;
            }
            let d = squared_euclidean(x.row(k), sums.row(j));
            if d > far_d {
                far_d = d;
                far = Some(k);
            }
        }
        match far {
            Some(k) => {
                reseeded[k] = true;
                counts[assignments[k]] -= 1;
                counts[i] = 1;
                assignments[k] = i;
                sums.row_mut(i).copy_from_slice(x.row(k));
            }
            None => sums.row_mut(i).copy_from_slice(previous.row(i)),
        }
    }
    sums
}
