//! Representative selection: z-scored feature vectors, k-means, and the
//! member nearest each centroid.

use crate::cmetrics::{feature_vector, DimStats, DynamicMetrics, FeatureVector, MetricsError};
use crate::dataset::SampleRecord;
use crate::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("no vectors to cluster")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("sample {0} has no static metrics")]
    MissingMetrics(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub cluster_index: usize,
    pub member_index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Independent k-means++ restarts; the lowest inertia wins.
    pub n_init: usize,
    pub exec: Execution,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { k: 3, seed: 0, max_iter: 100, n_init: 10, exec: Execution::default() }
    }
}

fn check_dims(vectors: &[Vec<f64>]) -> Result<usize, SelectError> {
    let d = vectors.first().ok_or(SelectError::Empty)?.len();
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != d {
            return Err(SelectError::DimensionMismatch { index: i, expected: d, found: v.len() });
        }
    }
    Ok(d)
}

/// Z-scores every dimension with the population standard deviation.
/// Dimensions without variance become 0 and are marked dropped.
pub fn zscore_normalize(vectors: &[FeatureVector]) -> Result<(Vec<FeatureVector>, Vec<DimStats>), SelectError> {
    let raw: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let d = check_dims(&raw)?;
    let n = raw.len() as f64;
    let stats: Vec<DimStats> = (0..d)
        .map(|j| {
            let mean = raw.iter().map(|v| v[j]).sum::<f64>() / n;
            let var = raw.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n;
            let stddev = var.sqrt();
            DimStats { mean, stddev, dropped: !stddev.is_finite() || stddev <= 0.0 }
        })
        .collect();
    let out = vectors
        .iter()
        .map(|v| FeatureVector {
            values: v.values.iter().zip(&stats).map(|(x, s)| if s.dropped { 0.0 } else { (x - s.mean) / s.stddev }).collect(),
            schema_id: v.schema_id.clone(),
            normalization: Some(stats.clone()),
        })
        .collect();
    Ok((out, stats))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest cluster index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            points[pick].clone()
        } else {
            // fewer distinct points than clusters: the duplicate stays empty
            centroids[0].clone()
        };
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &next));
        }
        centroids.push(next);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], exec: Execution) -> (Vec<usize>, f64) {
    let pairs = exec.map(points, |p| nearest(p, centroids));
    let inertia = pairs.iter().map(|&(_, d)| d).sum();
    (pairs.into_iter().map(|(c, _)| c).collect(), inertia)
}

fn update(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (c, (sum, n)) in sums.into_iter().zip(counts).enumerate() {
        if n > 0 {
            centroids[c] = sum.into_iter().map(|s| s / n as f64).collect();
        }
    }
}

fn lloyd(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, exec: Execution) -> ClusterModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let (mut assignments, mut inertia) = assign(points, &centroids, exec);
    let mut history = vec![inertia];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        update(points, &assignments, &mut centroids);
        let (next, next_inertia) = assign(points, &centroids, exec);
        history.push(next_inertia);
        inertia = next_inertia;
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    if !converged {
        update(points, &assignments, &mut centroids);
        inertia = points.iter().zip(&assignments).map(|(p, &a)| sq_dist(p, &centroids[a])).sum();
        history.push(inertia);
    }
    ClusterModel { k, centroids, assignments, inertia, inertia_history: history, iterations, seed }
}

/// k-means with default options and the given `k` and `seed`.
pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterModel, SelectError> {
    kmeans_with(vectors, &KMeansOptions { k, seed, max_iter, ..Default::default() })
}

pub fn kmeans_with(vectors: &[Vec<f64>], opts: &KMeansOptions) -> Result<ClusterModel, SelectError> {
    check_dims(vectors)?;
    if opts.k == 0 {
        return Err(SelectError::ZeroK);
    }
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..opts.n_init.max(1)).map(|_| master.gen()).collect();
    let runs = opts.exec.map(&seeds, |&s| lloyd(vectors, opts.k, s, opts.max_iter, Execution::Sequential));
    let mut best =
        runs.into_iter().reduce(|best, r| if r.inertia < best.inertia { r } else { best }).expect("at least one restart");
    best.seed = opts.seed;
    Ok(best)
}

/// Distances closer than this count as ties.
const TIE_EPS: f64 = 1e-9;

/// The member nearest each nonempty cluster's centroid.
pub fn pick_representatives(model: &ClusterModel, vectors: &[Vec<f64>]) -> Vec<Representative> {
    let mut best: Vec<Option<Representative>> = vec![None; model.k];
    for (i, (v, &c)) in vectors.iter().zip(&model.assignments).enumerate() {
        let d = sq_dist(v, &model.centroids[c]).sqrt();
        let scale = 1.0f64.max(d);
        match &best[c] {
            Some(r) if d >= r.distance - TIE_EPS * scale => {}
            _ => best[c] = Some(Representative { cluster_index: c, member_index: i, distance: d }),
        }
    }
    best.into_iter().flatten().collect()
}

/// Picks at most `k` diverse submissions of one problem. Uses the
/// `static13+dyn4` schema when every record has dynamic metrics and
/// `static13` otherwise. Results keep input order.
pub fn select_submissions(records: &[SampleRecord], k: usize, seed: u64) -> Result<Vec<SampleRecord>, SelectError> {
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let with_dynamic = records.iter().all(|r| r.dynamic_metrics.is_some());
    let schema = if with_dynamic { crate::cmetrics::SCHEMA_STATIC13_DYN4 } else { crate::cmetrics::SCHEMA_STATIC13 };
    let raw = records
        .iter()
        .map(|r| {
            let s = r.static_metrics.as_ref().ok_or_else(|| SelectError::MissingMetrics(r.id.clone()))?;
            let d = r.dynamic_metrics.unwrap_or(DynamicMetrics::default());
            Ok(feature_vector(s, &d, schema)?)
        })
        .collect::<Result<Vec<_>, SelectError>>()?;
    let (normed, _) = zscore_normalize(&raw)?;
    let points: Vec<Vec<f64>> = normed.into_iter().map(|v| v.values).collect();
    let model = kmeans_with(&points, &KMeansOptions { k, seed, exec: Execution::Sequential, ..Default::default() })?;
    let mut picked: Vec<usize> = pick_representatives(&model, &points).iter().map(|r| r.member_index).collect();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| records[i].clone()).collect())
}
