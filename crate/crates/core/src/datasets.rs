//! Synthetic datasets with ground truth, and partition comparison.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::graph::{Partition, PointSet, SimilarityGraph};
use crate::seeding::stream_rng;

/// Two interleaved half circles of radius 1, `n/2` points each, with
/// isotropic Gaussian noise of standard deviation `noise`.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<(PointSet, Partition)> {
    if n < 2 || !n.is_multiple_of(2) {
        return invalid(format!("two moons needs an even n >= 2, got {n}"));
    }
    if !(noise >= 0.0) {
        return invalid(format!("noise must be nonnegative, got {noise}"));
    }
    let half = n / 2;
    let mut rng = stream_rng(seed, 0);
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for moon in 0..2 {
        for i in 0..half {
            let t = if half == 1 {
                0.0
            } else {
                std::f64::consts::PI * i as f64 / (half - 1) as f64
            };
            let (x, y) = if moon == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            data.push(x);
            data.push(y);
            labels.push(moon);
        }
    }
    if noise > 0.0 {
        for v in &mut data {
            *v += noise * gauss.sample(&mut rng);
        }
    }
    Ok((PointSet::new(n, 2, data)?, Partition::new(labels, 2)?))
}

#[derive(Debug, Clone)]
pub struct SbmSample {
    pub graph: SimilarityGraph,
    pub truth: Partition,
    pub connected: bool,
}

/// Unit-weight stochastic block model with `k` contiguous blocks whose
/// sizes differ by at most one.
pub fn sbm(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<SbmSample> {
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_in < p_out {
        return invalid(format!("need 0 <= p_out <= p_in <= 1, got p_in = {p_in}, p_out = {p_out}"));
    }
    let labels: Vec<usize> = (0..n).map(|i| block_of(i, n, k)).collect();
    let mut rng = stream_rng(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    let graph = SimilarityGraph::from_edges(n, &edges)?;
    let connected = graph.is_connected();
    if !connected {
        log::warn!("stochastic block model sample (seed {seed}) is disconnected");
    }
    Ok(SbmSample {
        graph,
        truth: Partition::new(labels, k)?,
        connected,
    })
}

fn block_of(i: usize, n: usize, k: usize) -> usize {
    let (base, extra) = (n / k, n % k);
    let big = extra * (base + 1);
    if i < big {
        i / (base + 1)
    } else {
        extra + (i - big) / base
    }
}

/// `k` Gaussian blobs in `d` dimensions with centres spaced `separation`
/// apart along the coordinate axes.
pub fn blobs(n: usize, k: usize, d: usize, separation: f64, spread: f64, seed: u64) -> Result<(PointSet, Partition)> {
    if k == 0 || k > n || d == 0 {
        return invalid(format!("need 0 < k <= n and d > 0, got n = {n}, k = {k}, d = {d}"));
    }
    let noise = Normal::new(0.0, spread).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let labels: Vec<usize> = (0..n).map(|i| block_of(i, n, k)).collect();
    let mut data = Vec::with_capacity(n * d);
    for &l in &labels {
        for c in 0..d {
            let centre = if c == l % d { separation * (1 + l / d) as f64 } else { 0.0 };
            data.push(centre + noise.sample(&mut rng));
        }
    }
    Ok((PointSet::new(n, d, data)?, Partition::new(labels, k)?))
}

/// Smallest fraction of points whose labels disagree over all matchings of
/// clusters, found by optimal assignment on the confusion matrix (padded to
/// square when the cluster counts differ).
pub fn misclustering_rate(pred: &Partition, truth: &Partition) -> Result<f64> {
    let n = truth.n();
    if pred.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pred.n(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let size = pred.k().max(truth.k());
    let mut confusion = vec![0i64; size * size];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        confusion[p * size + t] += 1;
    }
    let weights = Matrix::square_from_vec(confusion).expect("square confusion matrix");
    let (matched, _) = kuhn_munkres(&weights);
    Ok(1.0 - matched as f64 / n as f64)
}
