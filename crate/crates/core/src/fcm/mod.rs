//! Fuzzy C Means over daily profiles, with a hard K-means baseline.
//!
//! Distances are squared Euclidean. A run starts from a seeded random
//! membership matrix, then alternates centroid and membership updates until
//! the largest membership change drops below the tolerance.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, whose output stream is fixed across platforms.

mod io;
mod kmeans;

pub use io::{
    read_memberships, read_model, write_memberships, write_model, MembershipTable, RunMetadata,
};
pub use kmeans::{kmeans_baseline, kmeans_initial_centroids, lloyd, KMeansResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::DailyProfile;
use crate::matrix::{squared_euclidean, Matrix};

/// Tolerance on membership row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FcmError {
    #[error("fewer points than clusters ({points} points, {clusters} clusters)")]
    FewerPointsThanClusters { points: usize, clusters: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid profile matrix: {0}")]
    InvalidProfiles(String),
    #[error("invalid membership matrix: {0}")]
    InvalidPartition(String),
    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Household profiles stacked as rows, with their ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix {
    household_ids: Vec<String>,
    points: Matrix,
}

impl ProfileMatrix {
    /// Every entry must be finite and lie in [0, 1].
    pub fn new(household_ids: Vec<String>, points: Matrix) -> Result<Self, FcmError> {
        if household_ids.len() != points.rows() {
            return Err(FcmError::DimensionMismatch(format!(
                "{} ids for {} rows",
                household_ids.len(),
                points.rows()
            )));
        }
        if points.cols() == 0 {
            return Err(FcmError::InvalidProfiles("profiles have no columns".into()));
        }
        for (k, row) in points.iter_rows().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(FcmError::InvalidProfiles(format!(
                    "row {} ({}) has value {v} outside [0, 1]",
                    k, household_ids[k]
                )));
            }
        }
        Ok(Self {
            household_ids,
            points,
        })
    }

    /// Rows with generated ids `p0, p1, ...`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, FcmError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let points = Matrix::from_rows(rows, cols)
            .ok_or_else(|| FcmError::DimensionMismatch("rows differ in length".into()))?;
        let ids = (0..rows.len()).map(|k| format!("p{k}")).collect();
        Self::new(ids, points)
    }

    pub fn from_profiles(profiles: &[DailyProfile]) -> Result<Self, FcmError> {
        let rows: Vec<&[f64]> = profiles.iter().map(|p| &p.values[..]).collect();
        let points = Matrix::from_rows(&rows, crate::HOURS).expect("profiles have 24 values");
        Self::new(profiles.iter().map(|p| p.household_id.clone()).collect(), points)
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn household_ids(&self) -> &[String] {
        &self.household_ids
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.points.row(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmConfig {
    pub clusters: usize,
    /// Fuzzifier m > 1.
    pub fuzzifier: f64,
    /// Convergence threshold on the largest absolute membership change.
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        Self {
            clusters: 9,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iter: 300,
            seed: 0,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<(), FcmError> {
        let bad = |m: String| Err(FcmError::InvalidConfig(m));
        if self.clusters < 1 {
            return bad("cluster count must be at least 1".into());
        }
        if !(self.fuzzifier.is_finite() && self.fuzzifier > 1.0) {
            return bad(format!("fuzzifier must be > 1, got {}", self.fuzzifier));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad(format!("tolerance must be > 0, got {}", self.tolerance));
        }
        if self.max_iter < 1 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }
}

/// An n×c membership matrix whose rows are probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    u: Matrix,
}

impl FuzzyPartition {
    /// Checks entries lie in [0, 1] and rows sum to 1 within 1e-9.
    pub fn new(u: Matrix) -> Result<Self, FcmError> {
        for (k, row) in u.iter_rows().enumerate() {
            check_row(row, ROW_SUM_TOLERANCE).map_err(|m| FcmError::InvalidPartition(format!("row {k}: {m}")))?;
        }
        Ok(Self { u })
    }

    pub fn points(&self) -> usize {
        self.u.rows()
    }

    pub fn clusters(&self) -> usize {
        self.u.cols()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        self.u.row(k)
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.u.get(k, i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.u
    }

    pub fn into_matrix(self) -> Matrix {
        self.u
    }
}

/// Checks a membership row: entries in [0, 1], sum within `tolerance` of 1.
pub fn check_row(row: &[f64], tolerance: f64) -> Result<(), String> {
    if row.is_empty() {
        return Err("empty membership row".into());
    }
    if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(format!("membership {v} outside [0, 1]"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(format!("memberships sum to {sum}"));
    }
    Ok(())
}

/// Fitted centroids and run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// c × dim.
    pub centroids: Matrix,
    pub fuzzifier: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Clusters whose total weight vanished on the last centroid update.
    pub empty_clusters: Vec<usize>,
    /// Objective after each iteration.
    pub objective_history: Vec<f64>,
}

impl ClusterModel {
    /// A model made of fixed centroids, e.g. loaded from disk.
    pub fn from_centroids(centroids: Matrix, fuzzifier: f64) -> Self {
        Self {
            centroids,
            fuzzifier,
            objective: 0.0,
            iterations: 0,
            converged: true,
            empty_clusters: Vec::new(),
            objective_history: Vec::new(),
        }
    }

    pub fn clusters(&self) -> usize {
        self.centroids.rows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.cols()
    }
}

/// Random initial partition: each row is c uniform draws on (0, 1]
/// divided by their sum.
pub fn init_partition(n: usize, c: usize, seed: u64) -> Result<FuzzyPartition, FcmError> {
    if c < 1 {
        return Err(FcmError::InvalidConfig("cluster count must be at least 1".into()));
    }
    if n < c {
        return Err(FcmError::FewerPointsThanClusters { points: n, clusters: c });
    }
    let mut rng = seeded_rng(seed);
    let mut u = Matrix::zeros(n, c);
    for k in 0..n {
        let row = u.row_mut(k);
        for v in row.iter_mut() {
            // random::<f64>() is on [0, 1).
            *v = 1.0 - rng.random::<f64>();
        }
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(FuzzyPartition { u })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentroidUpdate {
    pub centroids: Matrix,
    /// Clusters with zero total weight, which kept their previous centroid.
    pub empty: Vec<usize>,
}

/// Each centroid becomes the u^m-weighted mean of all points.
///
/// A cluster whose weights are all zero keeps its centroid from `previous`;
/// without a previous centroid it falls back to the unweighted mean of the
/// points.
pub fn update_centroids(
    x: &ProfileMatrix,
    u: &FuzzyPartition,
    m: f64,
    previous: Option<&Matrix>,
) -> Result<CentroidUpdate, FcmError> {
    let (n, dim, c) = (x.len(), x.dim(), u.clusters());
    if u.points() != n {
        return Err(FcmError::DimensionMismatch(format!(
            "{} membership rows for {} points",
            u.points(),
            n
        )));
    }
    if let Some(prev) = previous {
        if prev.rows() != c || prev.cols() != dim {
            return Err(FcmError::DimensionMismatch(format!(
                "previous centroids are {}x{}, expected {c}x{dim}",
                prev.rows(),
                prev.cols()
            )));
        }
    }
    let mut sums = Matrix::zeros(c, dim);
    let mut weights = vec![0.0; c];
    for k in 0..n {
        let point = x.row(k);
        for (i, weight) in weights.iter_mut().enumerate() {
            let w = u.get(k, i).powf(m);
            if w == 0.0 {
                continue;
            }
            *weight += w;
            for (s, &p) in sums.row_mut(i).iter_mut().zip(point) {
                *s += w * p;
            }
        }
    }
    let mut empty = Vec::new();
    for (i, &weight) in weights.iter().enumerate() {
        if weight > 0.0 {
            for s in sums.row_mut(i) {
                *s /= weight;
            }
        } else {
            empty.push(i);
            let fallback = match previous {
                Some(prev) => prev.row(i).to_vec(),
                None => column_means(x.points()),
            };
            sums.row_mut(i).copy_from_slice(&fallback);
        }
    }
    Ok(CentroidUpdate {
        centroids: sums,
        empty,
    })
}

fn column_means(points: &Matrix) -> Vec<f64> {
    let mut means = vec![0.0; points.cols()];
    for row in points.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = points.rows().max(1) as f64;
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// Membership of one point in each centroid.
///
/// Points sitting exactly on one or more centroids split their membership
/// equally among those centroids. Otherwise memberships are proportional to
/// `D_i^(-1/(m-1))` with `D_i` the squared distance, scaled by the nearest
/// distance first so large exponents cannot overflow.
pub fn membership_row(point: &[f64], centroids: &Matrix, m: f64) -> Vec<f64> {
    let distances: Vec<f64> = centroids.iter_rows().map(|v| squared_euclidean(point, v)).collect();
    let on_centroid = distances.iter().filter(|&&d| d == 0.0).count();
    if on_centroid > 0 {
        let share = 1.0 / on_centroid as f64;
        return distances.iter().map(|&d| if d == 0.0 { share } else { 0.0 }).collect();
    }
    let exponent = 1.0 / (m - 1.0);
    let nearest = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = distances.iter().map(|&d| (nearest / d).powf(exponent)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Recomputes every membership row against fixed centroids.
pub fn update_memberships(x: &ProfileMatrix, centroids: &Matrix, m: f64) -> Result<FuzzyPartition, FcmError> {
    if centroids.rows() == 0 {
        return Err(FcmError::InvalidConfig("no centroids".into()));
    }
    if centroids.cols() != x.dim() {
        return Err(FcmError::DimensionMismatch(format!(
            "centroids have {} columns, points have {}",
            centroids.cols(),
            x.dim()
        )));
    }
    let mut u = Matrix::zeros(x.len(), centroids.rows());
    for k in 0..x.len() {
        u.row_mut(k).copy_from_slice(&membership_row(x.row(k), centroids, m));
    }
    Ok(FuzzyPartition { u })
}

/// J_m = Σ_k Σ_i u[k][i]^m · ‖x_k − v_i‖².
pub fn objective(x: &ProfileMatrix, centroids: &Matrix, u: &FuzzyPartition, m: f64) -> Result<f64, FcmError> {
    if u.points() != x.len() || u.clusters() != centroids.rows() || centroids.cols() != x.dim() {
        return Err(FcmError::DimensionMismatch(format!(
            "points {}x{}, centroids {}x{}, memberships {}x{}",
            x.len(),
            x.dim(),
            centroids.rows(),
            centroids.cols(),
            u.points(),
            u.clusters()
        )));
    }
    let mut total = 0.0;
    for k in 0..x.len() {
        for (i, v) in centroids.iter_rows().enumerate() {
            let w = u.get(k, i).powf(m);
            if w > 0.0 {
                total += w * squared_euclidean(x.row(k), v);
            }
        }
    }
    Ok(total)
}

/// Runs Fuzzy C Means from a seeded random partition.
pub fn run_fcm(x: &ProfileMatrix, cfg: &FcmConfig) -> Result<(ClusterModel, FuzzyPartition), FcmError> {
    cfg.validate()?;
    let start = init_partition(x.len(), cfg.clusters, cfg.seed)?;
    iterate(x, cfg, start)
}

/// Runs Fuzzy C Means starting from memberships against given centroids.
/// `cfg.seed` is unused.
pub fn run_fcm_from_centroids(
    x: &ProfileMatrix,
    cfg: &FcmConfig,
    initial: &Matrix,
) -> Result<(ClusterModel, FuzzyPartition), FcmError> {
    cfg.validate()?;
    if initial.rows() != cfg.clusters {
        return Err(FcmError::DimensionMismatch(format!(
            "{} initial centroids for {} clusters",
            initial.rows(),
            cfg.clusters
        )));
    }
    if x.len() < cfg.clusters {
        return Err(FcmError::FewerPointsThanClusters {
            points: x.len(),
            clusters: cfg.clusters,
        });
    }
    let start = update_memberships(x, initial, cfg.fuzzifier)?;
    iterate(x, cfg, start)
}

fn iterate(
    x: &ProfileMatrix,
    cfg: &FcmConfig,
    start: FuzzyPartition,
) -> Result<(ClusterModel, FuzzyPartition), FcmError> {
    let m = cfg.fuzzifier;
    let mut u = start;
    let mut centroids: Option<Matrix> = None;
    let mut empty = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iteration in 1..=cfg.max_iter {
        iterations = iteration;
        let update = update_centroids(x, &u, m, centroids.as_ref())?;
        if !update.centroids.all_finite() {
            return Err(FcmError::NonFinite { iteration });
        }
        let next = update_memberships(x, &update.centroids, m)?;
        if !next.u.all_finite() {
            return Err(FcmError::NonFinite { iteration });
        }
        let j = objective(x, &update.centroids, &next, m)?;
        if !j.is_finite() {
            return Err(FcmError::NonFinite { iteration });
        }
        history.push(j);
        let delta = next.u.max_abs_diff(&u.u);
        u = next;
        centroids = Some(update.centroids);
        empty = update.empty;
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let model = ClusterModel {
        centroids: centroids.expect("max_iter >= 1"),
        fuzzifier: m,
        objective: *history.last().expect("max_iter >= 1"),
        iterations,
        converged,
        empty_clusters: empty,
        objective_history: history,
    };
    Ok((model, u))
}

/// Per-row argmax; ties go to the lowest cluster index.
pub fn harden(u: &FuzzyPartition) -> Vec<usize> {
    (0..u.points()).map(|k| argmax(u.row(k))).collect()
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(best, bv), (i, &v)| if v > bv { (i, v) } else { (best, bv) })
        .0
}

/// Membership of a new profile against a fixed model.
pub fn membership_of(profile: &[f64], model: &ClusterModel) -> Result<Vec<f64>, FcmError> {
    if model.clusters() == 0 {
        return Err(FcmError::InvalidConfig("model has no centroids".into()));
    }
    if profile.len() != model.dim() {
        return Err(FcmError::DimensionMismatch(format!(
            "profile has {} values, model expects {}",
            profile.len(),
            model.dim()
        )));
    }
    Ok(membership_row(profile, &model.centroids, model.fuzzifier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn points(rows: &[&[f64]]) -> ProfileMatrix {
        ProfileMatrix::from_rows(rows).unwrap()
    }

    fn partition(rows: &[&[f64]]) -> FuzzyPartition {
        FuzzyPartition::new(Matrix::from_rows(rows, rows[0].len()).unwrap()).unwrap()
    }

    /// Literal evaluation of u_ik = 1 / Σ_j (d_ik / d_jk)^(2/(m-1)).
    fn direct_membership(point: &[f64], centroids: &Matrix, m: f64) -> Vec<f64> {
        let d: Vec<f64> = centroids
            .iter_rows()
            .map(|v| point.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .collect();
        (0..d.len())
            .map(|i| 1.0 / (0..d.len()).map(|j| (d[i] / d[j]).powf(2.0 / (m - 1.0))).sum::<f64>())
            .collect()
    }

    #[test]
    fn init_single_cluster_is_all_ones() {
        let u = init_partition(5, 1, 17).unwrap();
        assert!((0..5).all(|k| u.get(k, 0) == 1.0));
    }

    #[test]
    fn init_is_deterministic_and_stochastic() {
        let a = init_partition(3, 2, 42).unwrap();
        let b = init_partition(3, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_partition(3, 2, 43).unwrap());
        for k in 0..3 {
            let row = a.row(k);
            assert!(row.iter().all(|&v| v > 0.0 && v <= 1.0));
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn init_rejects_too_few_points() {
        let err = init_partition(2, 3, 0).unwrap_err();
        assert_eq!(err.to_string(), "fewer points than clusters (2 points, 3 clusters)");
    }

    #[test]
    fn crisp_centroids_are_means() {
        let x = points(&[&[0.0, 0.2], &[0.2, 0.4], &[1.0, 1.0]]);
        let u = partition(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let c = update_centroids(&x, &u, 2.0, None).unwrap();
        assert_abs_diff_eq!(c.centroids.row(0)[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.centroids.row(0)[1], 0.3, epsilon = 1e-15);
        assert_eq!(c.centroids.row(1), &[1.0, 1.0]);
        assert!(c.empty.is_empty());
    }

    #[test]
    fn uniform_memberships_give_global_mean() {
        let x = points(&[&[0.0], &[0.5], &[1.0]]);
        let u = partition(&[&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]]);
        let c = update_centroids(&x, &u, 2.0, None).unwrap();
        assert_abs_diff_eq!(c.centroids.get(0, 0), 0.5, epsilon = 1e-15);
        assert_eq!(c.centroids.row(0), c.centroids.row(1));
    }

    #[test]
    fn weighted_centroid_hand_value() {
        let x = points(&[&[0.0], &[1.0]]);
        let u = partition(&[&[0.9, 0.1], &[0.1, 0.9]]);
        let c = update_centroids(&x, &u, 2.0, None).unwrap();
        // (0.81·0 + 0.01·1) / (0.81 + 0.01)
        assert_abs_diff_eq!(c.centroids.get(0, 0), 0.01 / 0.82, epsilon = 1e-15);
        assert_abs_diff_eq!(c.centroids.get(0, 0), 0.012195, epsilon = 1e-6);
    }

    #[test]
    fn empty_cluster_keeps_previous_centroid() {
        let x = points(&[&[0.0], &[1.0]]);
        let u = partition(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let prev = Matrix::from_vec(2, 1, vec![0.3, 0.7]).unwrap();
        let c = update_centroids(&x, &u, 2.0, Some(&prev)).unwrap();
        assert_eq!(c.empty, vec![1]);
        assert_eq!(c.centroids.get(1, 0), 0.7);
        assert_eq!(c.centroids.get(0, 0), 0.5);
    }

    #[test]
    fn centroid_dimension_mismatch() {
        let x = points(&[&[0.0], &[1.0]]);
        let u = partition(&[&[1.0, 0.0]]);
        assert!(matches!(
            update_centroids(&x, &u, 2.0, None),
            Err(FcmError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn membership_singularity_and_symmetry() {
        let centroids = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(membership_row(&[1.0], &centroids, 2.0), vec![0.0, 1.0]);
        assert_eq!(membership_row(&[0.5], &centroids, 2.0), vec![0.5, 0.5]);
        let twin = Matrix::from_vec(3, 1, vec![0.4, 0.4, 0.9]).unwrap();
        assert_eq!(membership_row(&[0.4], &twin, 2.0), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn membership_hand_value() {
        let centroids = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let u = membership_row(&[0.25], &centroids, 2.0);
        // 1 / (1 + (0.25/0.75)^2) = 0.9
        assert_abs_diff_eq!(u[0], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn membership_large_exponent_does_not_overflow() {
        let centroids = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let u = membership_row(&[1e-9], &centroids, 1.01);
        assert!(u.iter().all(|v| v.is_finite()));
        assert_eq!(u[0], 1.0);
    }

    #[test]
    fn objective_examples() {
        let x = points(&[&[0.0]]);
        let v = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        assert_eq!(objective(&x, &v, &partition(&[&[1.0]]), 2.0).unwrap(), 1.0);

        let x = points(&[&[0.0], &[1.0]]);
        let v = Matrix::from_vec(1, 1, vec![0.5]).unwrap();
        let u = partition(&[&[1.0], &[1.0]]);
        assert_eq!(objective(&x, &v, &u, 2.0).unwrap(), 0.5);

        let x = points(&[&[0.2], &[0.8]]);
        let v = Matrix::from_vec(2, 1, vec![0.2, 0.8]).unwrap();
        let u = partition(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(objective(&x, &v, &u, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_run() {
        let x = points(&[&[0.0, 1.0], &[0.5, 0.5], &[1.0, 0.0], &[0.3, 0.9]]);
        let cfg = FcmConfig {
            clusters: 1,
            ..FcmConfig::default()
        };
        let (model, u) = run_fcm(&x, &cfg).unwrap();
        assert!(model.converged);
        assert!(model.iterations <= 2);
        assert_abs_diff_eq!(model.centroids.get(0, 0), 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(model.centroids.get(0, 1), 0.6, epsilon = 1e-15);
        assert!((0..4).all(|k| u.get(k, 0) == 1.0));
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let x = points(&[&[0.0], &[0.1], &[0.9], &[1.0]]);
        let cfg = FcmConfig {
            clusters: 2,
            seed: 7,
            ..FcmConfig::default()
        };
        let (model, u) = run_fcm(&x, &cfg).unwrap();
        assert!(model.converged);
        let labels = harden(&u);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
    }

    #[test]
    fn run_rejects_bad_config_and_sizes() {
        let x = points(&[&[0.0], &[1.0]]);
        let cfg = FcmConfig {
            clusters: 3,
            ..FcmConfig::default()
        };
        assert!(matches!(run_fcm(&x, &cfg), Err(FcmError::FewerPointsThanClusters { .. })));
        for cfg in [
            FcmConfig { fuzzifier: 1.0, ..FcmConfig::default() },
            FcmConfig { tolerance: 0.0, ..FcmConfig::default() },
            FcmConfig { max_iter: 0, ..FcmConfig::default() },
            FcmConfig { clusters: 0, ..FcmConfig::default() },
        ] {
            assert!(matches!(run_fcm(&x, &cfg), Err(FcmError::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn profile_matrix_validation() {
        assert!(ProfileMatrix::from_rows(&[[1.5]]).is_err());
        assert!(ProfileMatrix::from_rows(&[[f64::NAN]]).is_err());
        assert!(ProfileMatrix::new(vec!["a".into()], Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn harden_examples() {
        let u = partition(&[&[0.1, 0.7, 0.2], &[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0]]);
        assert_eq!(harden(&u), vec![1, 0, 2]);
    }

    #[test]
    fn membership_of_examples() {
        let centroids = Matrix::from_rows(
            &(0..9).map(|i| vec![i as f64 / 8.0, 0.5]).collect::<Vec<_>>(),
            2,
        )
        .unwrap();
        let model = ClusterModel::from_centroids(centroids.clone(), 2.0);
        let u = membership_of(centroids.row(3), &model).unwrap();
        assert_eq!(u, (0..9).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect::<Vec<_>>());

        let single = ClusterModel::from_centroids(Matrix::from_vec(1, 1, vec![0.2]).unwrap(), 2.0);
        assert_eq!(membership_of(&[0.9], &single).unwrap(), vec![1.0]);

        // Nine centroids on a circle around the profile.
        let ring: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 9.0;
                vec![0.5 + 0.3 * t.cos(), 0.5 + 0.3 * t.sin()]
            })
            .collect();
        let model = ClusterModel::from_centroids(Matrix::from_rows(&ring, 2).unwrap(), 2.0);
        for v in membership_of(&[0.5, 0.5], &model).unwrap() {
            assert_abs_diff_eq!(v, 1.0 / 9.0, epsilon = 1e-12);
        }
        assert!(membership_of(&[0.5], &model).is_err());
    }

    #[test]
    fn runs_are_bit_identical() {
        let rows: Vec<Vec<f64>> = (0..20).map(|k| vec![(k as f64 * 0.37) % 1.0, (k as f64 * 0.11) % 1.0]).collect();
        let x = ProfileMatrix::from_rows(&rows).unwrap();
        let cfg = FcmConfig {
            clusters: 4,
            seed: 99,
            ..FcmConfig::default()
        };
        let a = run_fcm(&x, &cfg).unwrap();
        let b = run_fcm(&x, &cfg).unwrap();
        assert_eq!(a, b);
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        (1usize..=10, 1usize..=4, 1usize..=4).prop_flat_map(|(n, c, dim)| {
            (
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, dim), n),
                prop::collection::vec(prop::collection::vec(0.0f64..=1.0, dim), c),
                prop::sample::select(vec![1.1, 1.5, 2.0, 2.5, 3.0]),
            )
        })
    }

    proptest! {
        #[test]
        fn memberships_match_direct_formula((rows, cents, m) in instance()) {
            let x = ProfileMatrix::from_rows(&rows).unwrap();
            let centroids = Matrix::from_rows(&cents, cents[0].len()).unwrap();
            let u = update_memberships(&x, &centroids, m).unwrap();
            for (k, row) in rows.iter().enumerate() {
                if centroids.iter_rows().any(|v| squared_euclidean(row, v) == 0.0) {
                    continue;
                }
                let expected = direct_membership(row, &centroids, m);
                for (i, e) in expected.iter().enumerate() {
                    prop_assert!((u.get(k, i) - e).abs() <= 1e-12, "k={k} i={i} {} vs {e}", u.get(k, i));
                }
            }
        }

        #[test]
        fn memberships_are_row_stochastic((rows, cents, m) in instance()) {
            let x = ProfileMatrix::from_rows(&rows).unwrap();
            let centroids = Matrix::from_rows(&cents, cents[0].len()).unwrap();
            let u = update_memberships(&x, &centroids, m).unwrap();
            for k in 0..u.points() {
                prop_assert!(check_row(u.row(k), ROW_SUM_TOLERANCE).is_ok());
            }
        }

        #[test]
        fn permuting_clusters_permutes_memberships((rows, cents, m) in instance(), seed in any::<u64>()) {
            let x = ProfileMatrix::from_rows(&rows).unwrap();
            let centroids = Matrix::from_rows(&cents, cents[0].len()).unwrap();
            let c = centroids.rows();
            let mut order: Vec<usize> = (0..c).collect();
            let mut rng = seeded_rng(seed);
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);

            let base = update_memberships(&x, &centroids, m).unwrap();
            let permuted = update_memberships(&x, &centroids.select_rows(&order), m).unwrap();
            let expected = base.matrix().select_cols(&order);
            prop_assert!(permuted.matrix().max_abs_diff(&expected) <= 1e-15);

            let hard = harden(&base);
            let hard_perm = harden(&permuted);
            for k in 0..x.len() {
                let row = base.row(k);
                let top = row[hard[k]];
                if row.iter().filter(|&&v| v == top).count() == 1 {
                    prop_assert_eq!(order[hard_perm[k]], hard[k]);
                }
            }
        }

        #[test]
        fn objective_is_monotone_and_centroids_convex(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 4..30),
            c in 1usize..=4,
            m in prop::sample::select(vec![1.5, 2.0, 3.0]),
            seed in any::<u64>(),
        ) {
            let x = ProfileMatrix::from_rows(&rows).unwrap();
            let cfg = FcmConfig { clusters: c, fuzzifier: m, seed, max_iter: 100, ..FcmConfig::default() };
            let (model, u) = run_fcm(&x, &cfg).unwrap();
            for w in model.objective_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
            }
            prop_assert!(model.centroids.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            for k in 0..u.points() {
                prop_assert!(check_row(u.row(k), ROW_SUM_TOLERANCE).is_ok());
            }
        }
    }
}
