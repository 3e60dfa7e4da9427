//! k-means-based approximate spectral clustering: points collapse onto `m`
//! k-means representatives, the representatives are clustered spectrally,
//! and labels are lifted back through a correspondence table.

use crate::error::{invalid, Error, Result};
use crate::graph::{Partition, PointSet, SimilarityGraph};
use crate::kmeans::{kmeanspp_run, CentroidSet};
use crate::linalg::sq_dist;
use crate::par;
use crate::pipeline::{exact_spectral_clustering, SpectralOptions, SpectralResult};
use crate::seeding::derive_seed;

/// Maps every point to one of `m` representative points.
#[derive(Debug, Clone)]
pub struct CorrespondenceTable {
    rep_of: Vec<usize>,
    reps: PointSet,
}

impl CorrespondenceTable {
    pub fn new(rep_of: Vec<usize>, reps: PointSet) -> Result<Self> {
        if let Some(&bad) = rep_of.iter().find(|&&r| r >= reps.n()) {
            return invalid(format!("representative index {bad} out of range for m = {}", reps.n()));
        }
        Ok(Self { rep_of, reps })
    }

    /// Representatives are k-means centroids (k-means++ seeding, one run),
    /// numbered in order of first use by the points.
    pub fn build(points: &PointSet, m: usize, seed: u64) -> Result<Self> {
        let clustering = kmeanspp_run(points, m, seed, 1)?;
        let mut partition = clustering.partition;
        let map = partition.canonicalize();
        let d = points.d();
        let mut data = vec![0.0; m * d];
        for (old, &new) in map.iter().enumerate() {
            data[new * d..(new + 1) * d].copy_from_slice(clustering.centroids.centroid(old));
        }
        Self::new(partition.labels().to_vec(), PointSet::new(m, d, data)?)
    }

    pub fn rep_of(&self) -> &[usize] {
        &self.rep_of
    }

    pub fn reps(&self) -> &PointSet {
        &self.reps
    }

    pub fn m(&self) -> usize {
        self.reps.n()
    }

    pub fn n(&self) -> usize {
        self.rep_of.len()
    }

    /// Labels of the points given labels of the representatives.
    pub fn lift(&self, rep_labels: &Partition) -> Result<Partition> {
        if rep_labels.n() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: rep_labels.n(),
            });
        }
        let labels = self.rep_of.iter().map(|&r| rep_labels.labels()[r]).collect();
        Partition::new(labels, rep_labels.k())
    }

    /// Whether each point's representative is a nearest one (within `tol`
    /// in squared distance).
    pub fn is_nearest(&self, points: &PointSet, tol: f64) -> bool {
        let centroids = CentroidSet::new(self.m(), self.reps.d(), self.reps.as_slice().to_vec()).expect("valid representatives");
        (0..points.n()).all(|i| {
            let (_, best) = centroids.nearest(points.row(i));
            sq_dist(points.row(i), self.reps.row(self.rep_of[i])) <= best + tol
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaspOptions {
    pub m: usize,
    /// Parameters of the spectral step on the representatives. `k_nn` is
    /// capped at `m - 1`.
    pub spectral: SpectralOptions,
}

#[derive(Debug, Clone)]
pub struct KaspResult {
    pub table: CorrespondenceTable,
    pub rep_result: SpectralResult,
    pub partition: Partition,
}

pub fn kasp(points: &PointSet, opts: &KaspOptions) -> Result<KaspResult> {
    let (n, k, m) = (points.n(), opts.spectral.k, opts.m);
    if k == 0 || k > m || m > n {
        return invalid(format!("need 0 < k <= m <= n, got k = {k}, m = {m}, n = {n}"));
    }
    if m < 2 {
        return invalid("need at least two representatives");
    }
    let table = CorrespondenceTable::build(points, m, derive_seed(opts.spectral.seed, 0x6b61))?;
    let mut spectral = opts.spectral;
    spectral.k_nn = spectral.k_nn.min(m - 1);
    let (_, rep_result) = exact_spectral_clustering(table.reps(), &spectral)?;
    let mut partition = table.lift(rep_result.partition())?;
    partition.canonicalize();
    Ok(KaspResult {
        table,
        rep_result,
        partition,
    })
}

/// Graph input: each node is represented by its adjacency row.
pub fn kasp_graph(graph: &SimilarityGraph, opts: &KaspOptions) -> Result<KaspResult> {
    kasp(&adjacency_features(graph)?, opts)
}

/// Dense adjacency rows as points.
pub fn adjacency_features(graph: &SimilarityGraph) -> Result<PointSet> {
    let n = graph.n();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let (idx, vals) = graph.adjacency().row(i);
        for (&j, &v) in idx.iter().zip(vals) {
            data[i * n + j] = v;
        }
    }
    PointSet::new(n, n, data)
}

/// Second and fourth moments of the perturbation norms `‖p_i − rep(p_i)‖`.
pub fn perturbation_norms(points: &PointSet, table: &CorrespondenceTable) -> Result<(f64, f64)> {
    let n = points.n();
    if table.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: table.n(),
        });
    }
    if table.reps().d() != points.d() {
        return Err(Error::DimensionMismatch {
            expected: points.d(),
            got: table.reps().d(),
        });
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let sq: Vec<f64> = par::map_range(n, |i| sq_dist(points.row(i), table.reps().row(table.rep_of()[i])));
    let second = par::sum_range(n, |i| sq[i]) / n as f64;
    let fourth = par::sum_range(n, |i| sq[i] * sq[i]) / n as f64;
    Ok((second, fourth))
}
