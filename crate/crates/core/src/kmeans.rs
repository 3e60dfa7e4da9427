//! Lloyd-Max k-means with optional point weights, D² sampling and
//! k-means++ initialization.

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Partition, PointSet};
use crate::linalg::sq_dist;
use crate::par;
use crate::seeding::stream_rng;

/// `k` centroids of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl CentroidSet {
    pub fn new(k: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 || d == 0 {
            return invalid("centroid set needs k >= 1 and d >= 1");
        }
        if data.len() != k * d {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                got: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: p / d, col: p % d });
        }
        Ok(Self { k, d, data })
    }

    /// Centroids placed on the given points.
    pub fn from_points(points: &PointSet, idx: &[usize]) -> Result<Self> {
        Self::new(idx.len(), points.d(), points.select(idx).as_slice().to_vec())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn centroid(&self, l: usize) -> &[f64] {
        &self.data[l * self.d..(l + 1) * self.d]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k, self.d, &self.data)
    }

    /// Index and squared distance of the nearest centroid; ties go to the
    /// lowest index.
    #[inline]
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, sq_dist(x, self.centroid(0)));
        for l in 1..self.k {
            let d = sq_dist(x, self.centroid(l));
            if d < best.1 {
                best = (l, d);
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub partition: Partition,
    pub centroids: CentroidSet,
    pub cost: f64,
    /// Lloyd iterations performed by the winning run.
    pub iterations: usize,
    /// Cost after the initial assignment and after every iteration.
    pub cost_history: Vec<f64>,
}

fn check_weights(n: usize, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        if let Some(i) = w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return invalid(format!("weight {i} is not a positive finite number"));
        }
    }
    Ok(())
}

#[inline]
fn weight_at(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// Nearest-centroid labels and squared distances for every point.
pub fn assign(points: &PointSet, centroids: &CentroidSet) -> (Vec<usize>, Vec<f64>) {
    par::map_range(points.n(), |i| centroids.nearest(points.row(i))).into_iter().unzip()
}

/// `Σ_i w_i · min_c ‖x_i − c‖²`, with `w ≡ 1` when no weights are given.
pub fn kmeans_cost(points: &PointSet, centroids: &CentroidSet, weights: Option<&[f64]>) -> Result<f64> {
    if points.d() != centroids.d() {
        return Err(Error::DimensionMismatch {
            expected: points.d(),
            got: centroids.d(),
        });
    }
    check_weights(points.n(), weights)?;
    Ok(par::sum_range(points.n(), |i| {
        weight_at(weights, i) * centroids.nearest(points.row(i)).1
    }))
}

/// Draws an index with probability proportional to `values` (nonnegative,
/// summing to `total > 0`). Zero-valued entries are never returned.
pub(crate) fn draw_proportional<R: Rng + ?Sized>(values: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > 0.0 {
            acc += v;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

/// D² sampling of `m` distinct indices, with an optional weight multiplying
/// each point's probability. The first index is drawn proportionally to
/// the weights (uniformly when unweighted); each later one with probability
/// proportional to `w_i d_i`, `d_i` being the squared distance to the
/// nearest index already chosen. When every remaining `d_i` is zero the
/// draw falls back to uniform over the unchosen points.
pub fn d2_sample_weighted<R: Rng + ?Sized>(points: &PointSet, m: usize, weights: Option<&[f64]>, rng: &mut R) -> Result<Vec<usize>> {
    let n = points.n();
    if m == 0 || m > n {
        return invalid(format!("need 0 < m <= n, got m = {m}, n = {n}"));
    }
    check_weights(n, weights)?;
    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let total_w = par::sum_range(n, |i| w[i]);
    let first = draw_proportional(w, total_w, rng);
    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut dist: Vec<f64> = par::map_range(n, |i| sq_dist(points.row(i), points.row(first)));
    while chosen.len() < m {
        let scores: Vec<f64> = par::map_range(n, |i| if taken[i] { 0.0 } else { w[i] * dist[i] });
        let total = par::sum_range(n, |i| scores[i]);
        let next = if total > 0.0 {
            draw_proportional(&scores, total, rng)
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[next] = true;
        chosen.push(next);
        let c = points.row(next);
        let updated = par::map_range(n, |i| dist[i].min(sq_dist(points.row(i), c)));
        dist = updated;
    }
    Ok(chosen)
}

/// Unweighted D² sampling seeded by `seed`.
pub fn d2_sample(points: &PointSet, m: usize, seed: u64) -> Result<Vec<usize>> {
    d2_sample_weighted(points, m, None, &mut stream_rng(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydOptions {
    pub max_iter: usize,
    /// Stop when the relative cost decrease falls below this.
    pub rel_tol: f64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            rel_tol: 1e-6,
        }
    }
}

/// Weighted per-cluster coordinate sums and weight totals, accumulated in
/// fixed chunk order.
fn cluster_sums(points: &PointSet, labels: &[usize], weights: Option<&[f64]>, k: usize) -> (Vec<f64>, Vec<f64>) {
    let d = points.d();
    par::reduce_range(
        points.n(),
        |range| {
            let mut sums = vec![0.0; k * d];
            let mut mass = vec![0.0; k];
            for i in range {
                let w = weight_at(weights, i);
                let l = labels[i];
                mass[l] += w;
                for (s, x) in sums[l * d..(l + 1) * d].iter_mut().zip(points.row(i)) {
                    *s += w * x;
                }
            }
            (sums, mass)
        },
        |mut a, b| {
            a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
            a
        },
    )
    .unwrap_or_else(|| (vec![0.0; k * d], vec![0.0; k]))
}

/// One Lloyd-Max run from `init`. Weighted updates use weighted barycenters.
/// A centroid left without points is moved onto the point currently
/// farthest from its assigned centroid.
pub fn lloyd_max(points: &PointSet, init: &CentroidSet, weights: Option<&[f64]>, opts: &LloydOptions) -> Result<Clustering> {
    let (n, d, k) = (points.n(), points.d(), init.k());
    if d != init.d() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: init.d(),
        });
    }
    if k > n {
        return invalid(format!("k = {k} exceeds n = {n}"));
    }
    check_weights(n, weights)?;

    let mut centroids = init.clone();
    let (mut labels, mut dist) = assign(points, &centroids);
    let mut cost = par::sum_range(n, |i| weight_at(weights, i) * dist[i]);
    let mut history = vec![cost];
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let (sums, mass) = cluster_sums(points, &labels, weights, k);
        let mut data = sums;
        for l in 0..k {
            if mass[l] > 0.0 {
                data[l * d..(l + 1) * d].iter_mut().for_each(|v| *v /= mass[l]);
            } else {
                let far = (0..n)
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dist[b] >= dist[i] => Some(b),
                        _ => Some(i),
                    })
                    .unwrap_or(0);
                data[l * d..(l + 1) * d].copy_from_slice(points.row(far));
                dist[far] = 0.0;
                log::debug!("cluster {l} empty at iteration {iterations}; re-seeded at point {far}");
            }
        }
        centroids = CentroidSet { k, d, data };
        (labels, dist) = assign(points, &centroids);
        let new_cost = par::sum_range(n, |i| weight_at(weights, i) * dist[i]);
        history.push(new_cost);
        let converged = cost <= 0.0 || (cost - new_cost).abs() < opts.rel_tol * cost;
        cost = new_cost;
        if converged {
            break;
        }
    }

    Ok(Clustering {
        partition: Partition::new(labels, k)?,
        centroids,
        cost,
        iterations,
        cost_history: history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// `k` distinct points chosen uniformly.
    Uniform,
    /// D² sampling of `k` points.
    KMeansPlusPlus,
    Given(CentroidSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub init: InitStrategy,
    pub n_restarts: usize,
    pub lloyd: LloydOptions,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            init: InitStrategy::KMeansPlusPlus,
            n_restarts: 10,
            lloyd: LloydOptions::default(),
            seed: 0,
        }
    }
}

/// Lloyd-Max over `n_restarts` independent initializations; returns the
/// lowest-cost run (ties to the earliest restart).
pub fn kmeans(points: &PointSet, k: usize, weights: Option<&[f64]>, opts: &KMeansOptions) -> Result<Clustering> {
    let n = points.n();
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    if opts.n_restarts == 0 {
        return invalid("n_restarts must be at least 1");
    }
    check_weights(n, weights)?;
    let runs = par::map_range(opts.n_restarts, |r| -> Result<Clustering> {
        let mut rng = stream_rng(opts.seed, r as u64);
        let init = match &opts.init {
            InitStrategy::Uniform => {
                let idx = sample_indices(&mut rng, n, k).into_vec();
                CentroidSet::from_points(points, &idx)?
            }
            InitStrategy::KMeansPlusPlus => {
                let idx = d2_sample_weighted(points, k, weights, &mut rng)?;
                CentroidSet::from_points(points, &idx)?
            }
            InitStrategy::Given(c) => {
                if c.k() != k {
                    return invalid(format!("initial centroid count {} differs from k = {k}", c.k()));
                }
                c.clone()
            }
        };
        lloyd_max(points, &init, weights, &opts.lloyd)
    });
    let mut best: Option<Clustering> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// k-means++ initialization followed by Lloyd-Max, best of `n_restarts`.
pub fn kmeanspp_run(points: &PointSet, k: usize, seed: u64, n_restarts: usize) -> Result<Clustering> {
    kmeans(
        points,
        k,
        None,
        &KMeansOptions {
            init: InitStrategy::KMeansPlusPlus,
            n_restarts,
            lloyd: LloydOptions::default(),
            seed,
        },
    )
}

/// Means of the clusters of `partition`, for scoring a labelling on a
/// different feature set. Empty clusters get the overall mean.
pub fn partition_means(points: &PointSet, partition: &Partition) -> Result<CentroidSet> {
    if partition.n() != points.n() {
        return Err(Error::DimensionMismatch {
            expected: points.n(),
            got: partition.n(),
        });
    }
    let (k, d) = (partition.k(), points.d());
    let (mut sums, mass) = cluster_sums(points, partition.labels(), None, k);
    let (overall, _) = cluster_sums(points, &vec![0; points.n()], None, 1);
    for l in 0..k {
        let row = &mut sums[l * d..(l + 1) * d];
        if mass[l] > 0.0 {
            row.iter_mut().for_each(|v| *v /= mass[l]);
        } else {
            row.iter_mut().zip(&overall).for_each(|(v, o)| *v = o / points.n() as f64);
        }
    }
    CentroidSet::new(k, d, sums)
}
