#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use spectral_accel::graph::{PointSet, SimilarityGraph};
use spectral_accel::linalg::orthonormalize;
use spectral_accel::seeding::stream_rng;

/// Erdős–Rényi graph with edge probability `p` and weights in `[0.1, 2)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> SimilarityGraph {
    let mut rng = stream_rng(seed, 101);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    SimilarityGraph::from_edges(n, &edges).unwrap()
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn connected_graph(n: usize, p: f64, seed: u64) -> SimilarityGraph {
    let mut rng = stream_rng(seed, 102);
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i, rng.random_range(0.1..2.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p && !edges.iter().any(|&(a, b, _)| (a, b) == (i, j)) {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    SimilarityGraph::from_edges(n, &edges).unwrap()
}

/// Dense adjacency.
pub fn dense_adjacency(g: &SimilarityGraph) -> DMatrix<f64> {
    g.adjacency().to_dense()
}

pub fn random_points(n: usize, d: usize, seed: u64) -> PointSet {
    let mut rng = stream_rng(seed, 103);
    let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    PointSet::new(n, d, data).unwrap()
}

/// `Q diag(spectrum) Qᵀ` with a random orthogonal `Q`.
pub fn psd_with_spectrum(spectrum: &[f64], seed: u64) -> DMatrix<f64> {
    let n = spectrum.len();
    let mut rng = stream_rng(seed, 104);
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = orthonormalize(&g);
    &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spectrum)) * q.transpose()
}

/// Every labelling of `n` points into exactly `k` nonempty clusters, with
/// the first point always in cluster 0.
pub fn all_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0; n];
    fn rec(i: usize, used: usize, n: usize, k: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            if used == k {
                out.push(labels.clone());
            }
            return;
        }
        // restricted growth strings enumerate each set partition once
        for l in 0..(used + 1).min(k) {
            labels[i] = l;
            rec(i + 1, used.max(l + 1), n, k, labels, out);
        }
    }
    rec(0, 0, n, k, &mut labels, &mut out);
    out
}

/// Maximum-weight matching by exhaustive search.
pub fn max_matching_weight(edges: &[(usize, usize, f64)], n: usize) -> f64 {
    fn rec(edges: &[(usize, usize, f64)], used: &mut [bool]) -> f64 {
        match edges.split_first() {
            None => 0.0,
            Some((&(i, j, w), rest)) => {
                let skip = rec(rest, used);
                if used[i] || used[j] {
                    return skip;
                }
                used[i] = true;
                used[j] = true;
                let take = w + rec(rest, used);
                used[i] = false;
                used[j] = false;
                skip.max(take)
            }
        }
    }
    rec(edges, &mut vec![false; n])
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}
