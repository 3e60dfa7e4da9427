//! Sensitivity-sampled weighted coresets for k-means, the coreset k-means
//! pipeline with closest-centroid lifting, and probe-based coreset checks.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::PointSet;
use crate::kmeans::{assign, d2_sample, kmeans, kmeans_cost, CentroidSet, Clustering, InitStrategy, KMeansOptions, LloydOptions};
use crate::par;
use crate::seeding::{derive_seed, stream_rng};

/// Indices into a point set with positive importance weights. Indices may
/// repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return invalid(format!("weights must be positive and finite, got {w}"));
        }
        Ok(Self { indices, weights })
    }

    /// Every point once with unit weight.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn points(&self, points: &PointSet) -> PointSet {
        points.select(&self.indices)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted cost `Σ ω_s min_c ‖s − c‖²`.
    pub fn cost(&self, points: &PointSet, centroids: &CentroidSet) -> Result<f64> {
        kmeans_cost(&self.points(points), centroids, Some(&self.weights))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let s: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new(s.indices, s.weights)
    }
}

/// `16 (ln k + 2)`.
pub fn sensitivity_alpha(k: usize) -> f64 {
    16.0 * ((k as f64).ln() + 2.0)
}

/// `⌈3 ln(1/δ)⌉` D² rounds.
pub fn default_rounds(delta: f64) -> usize {
    (3.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize
}

/// Sensitivity-based sampling distribution around the best of `t` D²
/// seedings of size `k`.
pub fn sensitivity_distribution(points: &PointSet, k: usize, t: usize, seed: u64) -> Result<Vec<f64>> {
    let n = points.n();
    if t == 0 {
        return invalid("need at least one seeding round");
    }
    let mut best: Option<(f64, CentroidSet)> = None;
    for r in 0..t {
        let idx = d2_sample(points, k, derive_seed(seed, r as u64))?;
        let b = CentroidSet::from_points(points, &idx)?;
        let cost = kmeans_cost(points, &b, None)?;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, b));
        }
    }
    let (cost, b) = best.expect("t >= 1");
    let alpha = sensitivity_alpha(k);
    let (cell, dist) = assign(points, &b);
    let mut size = vec![0usize; k];
    let mut spread = vec![0.0; k];
    for i in 0..n {
        size[cell[i]] += 1;
        spread[cell[i]] += dist[i];
    }
    let phi = cost / n as f64;
    let s: Vec<f64> = par::map_range(n, |i| {
        let l = cell[i];
        let cell_term = 4.0 * n as f64 / size[l] as f64;
        if phi > 0.0 {
            alpha / phi * dist[i] + 2.0 * alpha / (phi * size[l] as f64) * spread[l] + cell_term
        } else {
            // every point sits on a seed: only the cell-size term remains
            cell_term
        }
    });
    let total = par::sum_range(n, |i| s[i]);
    Ok(s.into_iter().map(|v| v / total).collect())
}

/// `m` i.i.d. draws from the sensitivity distribution with weights
/// `1 / (m p_s)`.
pub fn coreset_sample(points: &PointSet, m: usize, k: usize, t: usize, seed: u64) -> Result<WeightedSample> {
    let n = points.n();
    if m == 0 {
        return invalid("coreset size must be at least 1");
    }
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    let p = sensitivity_distribution(points, k, t, derive_seed(seed, 0))?;
    let indices = crate::sketch::iid_sample(&p, m, derive_seed(seed, 1))?;
    let weights = indices.iter().map(|&i| 1.0 / (m as f64 * p[i])).collect();
    WeightedSample::new(indices, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoresetOptions {
    pub m: usize,
    pub t: usize,
    pub n_restarts: usize,
    pub lloyd: LloydOptions,
    pub seed: u64,
}

impl CoresetOptions {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            t: default_rounds(0.1),
            n_restarts: 10,
            lloyd: LloydOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoresetResult {
    pub sample: WeightedSample,
    /// Clustering of the sample by weighted Lloyd-Max.
    pub sample_clustering: Clustering,
    /// Every point assigned to its closest sample centroid; `cost` is the
    /// full-data cost of those centroids.
    pub clustering: Clustering,
}

/// Weighted Lloyd-Max on `sample`, then closest-centroid lifting of all
/// points.
pub fn weighted_kmeans_lift(
    points: &PointSet,
    sample: &WeightedSample,
    k: usize,
    n_restarts: usize,
    lloyd: LloydOptions,
    seed: u64,
) -> Result<(Clustering, Clustering)> {
    if sample.len() < k {
        return invalid(format!("need k <= m, got k = {k}, m = {}", sample.len()));
    }
    let s = sample.points(points);
    let opts = KMeansOptions {
        init: InitStrategy::KMeansPlusPlus,
        n_restarts,
        lloyd,
        seed,
    };
    let on_sample = kmeans(&s, k, Some(&sample.weights), &opts)?;
    let (labels, dist) = assign(points, &on_sample.centroids);
    let cost = par::sum_range(points.n(), |i| dist[i]);
    let lifted = Clustering {
        partition: crate::graph::Partition::new(labels, k)?,
        centroids: on_sample.centroids.clone(),
        cost,
        iterations: on_sample.iterations,
        cost_history: vec![cost],
    };
    Ok((on_sample, lifted))
}

pub fn coreset_kmeans(points: &PointSet, k: usize, opts: &CoresetOptions) -> Result<CoresetResult> {
    if k > opts.m {
        return invalid(format!("need k <= m, got k = {k}, m = {}", opts.m));
    }
    let sample = coreset_sample(points, opts.m, k, opts.t, derive_seed(opts.seed, 0))?;
    let (sample_clustering, clustering) = weighted_kmeans_lift(points, &sample, k, opts.n_restarts, opts.lloyd, derive_seed(opts.seed, 1))?;
    Ok(CoresetResult {
        sample,
        sample_clustering,
        clustering,
    })
}

/// `|f̃(C; S) / f(C; X) − 1|`, or `None` when `f(C; X) = 0`.
pub fn relative_error(sample: &WeightedSample, points: &PointSet, centroids: &CentroidSet) -> Result<Option<f64>> {
    let exact = kmeans_cost(points, centroids, None)?;
    if exact <= 0.0 {
        return Ok(None);
    }
    Ok(Some((sample.cost(points, centroids)? / exact - 1.0).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Means of every partition into at most `k` parts plus grid centroid
    /// sets; `n ≤ 12`, `k ≤ 2`.
    Exhaustive,
    /// `n_probe` candidate sets, alternately D²-sampled from the data and
    /// uniform in its bounding box.
    RandomProbe { n_probe: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoresetCheck {
    /// Largest relative cost error over the evaluated candidates.
    pub eps_hat: f64,
    pub evaluated: usize,
    /// Candidates skipped because their exact cost is zero.
    pub skipped: usize,
}

pub fn coreset_check(sample: &WeightedSample, points: &PointSet, k: usize, mode: CheckMode, seed: u64) -> Result<CoresetCheck> {
    let (n, d) = (points.n(), points.d());
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    let candidates: Vec<CentroidSet> = match mode {
        CheckMode::Exhaustive => {
            if n > 12 || k > 2 {
                return invalid(format!("exhaustive check needs n <= 12 and k <= 2, got n = {n}, k = {k}"));
            }
            exhaustive_candidates(points, k)?
        }
        CheckMode::RandomProbe { n_probe } => {
            let (lo, hi) = bounding_box(points);
            let mut rng = stream_rng(seed, 1);
            (0..n_probe)
                .map(|p| {
                    if p % 2 == 0 {
                        let idx = d2_sample(points, k, derive_seed(seed, p as u64))?;
                        CentroidSet::from_points(points, &idx)
                    } else {
                        let data = (0..k * d)
                            .map(|j| lo[j % d] + (hi[j % d] - lo[j % d]) * rng.random::<f64>())
                            .collect();
                        CentroidSet::new(k, d, data)
                    }
                })
                .collect::<Result<_>>()?
        }
    };
    let errors = par::map_slice(&candidates, |c| relative_error(sample, points, c));
    let mut out = CoresetCheck {
        eps_hat: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for e in errors {
        match e? {
            Some(e) => {
                out.eps_hat = out.eps_hat.max(e);
                out.evaluated += 1;
            }
            None => out.skipped += 1,
        }
    }
    if out.skipped > 0 {
        log::info!("coreset check skipped {} zero-cost candidates", out.skipped);
    }
    Ok(out)
}

fn bounding_box(points: &PointSet) -> (Vec<f64>, Vec<f64>) {
    let d = points.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in points.rows() {
        for c in 0..d {
            lo[c] = lo[c].min(r[c]);
            hi[c] = hi[c].max(r[c]);
        }
    }
    (lo, hi)
}

fn exhaustive_candidates(points: &PointSet, k: usize) -> Result<Vec<CentroidSet>> {
    let (n, d) = (points.n(), points.d());
    let mean = |members: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for &i in members {
            m.iter_mut().zip(points.row(i)).for_each(|(a, b)| *a += b);
        }
        m.iter_mut().for_each(|v| *v /= members.len() as f64);
        m
    };
    let all: Vec<usize> = (0..n).collect();
    let overall = mean(&all);
    let mut out = Vec::new();
    if k == 1 {
        out.push(CentroidSet::new(1, d, overall)?);
    } else {
        // bipartitions with point 0 on the first side
        for mask in 0u32..(1 << (n - 1)) {
            let a: Vec<usize> = (0..n).filter(|&i| i == 0 || mask & (1 << (i - 1)) == 0).collect();
            let b: Vec<usize> = (0..n).filter(|&i| i != 0 && mask & (1 << (i - 1)) != 0).collect();
            let data = if b.is_empty() {
                // k = 2 with a duplicated centroid covers the one-part case
                [overall.clone(), overall.clone()].concat()
            } else {
                [mean(&a), mean(&b)].concat()
            };
            out.push(CentroidSet::new(2, d, data)?);
        }
    }
    // 4 points per axis over the bounding box, all k-subsets
    if d <= 3 {
        let (lo, hi) = bounding_box(points);
        let g = 4usize;
        let grid: Vec<Vec<f64>> = (0..g.pow(d as u32))
            .map(|mut code| {
                (0..d)
                    .map(|c| {
                        let t = (code % g) as f64 / (g - 1) as f64;
                        code /= g;
                        lo[c] + t * (hi[c] - lo[c])
                    })
                    .collect()
            })
            .collect();
        for a in 0..grid.len() {
            if k == 1 {
                out.push(CentroidSet::new(1, d, grid[a].clone())?);
            } else {
                for b in (a + 1)..grid.len() {
                    out.push(CentroidSet::new(2, d, [grid[a].clone(), grid[b].clone()].concat())?);
                }
            }
        }
    }
    Ok(out)
}
