//! Point sets, similarity graphs, Laplacians and graph-cut objectives.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{gaussian_matrix, sq_dist, CsrMatrix};
use crate::par;

/// `n` feature vectors of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return invalid(format!("point set needs n >= 1 and d >= 1, got n = {n}, d = {d}"));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: p / d, col: p % d });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (n, d) = m.shape();
        Self::new(n, d, (0..n).flat_map(|i| (0..d).map(move |j| m[(i, j)])).collect())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn select(&self, idx: &[usize]) -> PointSet {
        let data = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        PointSet {
            n: idx.len(),
            d: self.d,
            data,
        }
    }

    /// Reads one point per line; a first line that does not parse as numbers
    /// is treated as a header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", line + 1))),
            }
        }
        Self::from_rows(&rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..self.d).map(|j| format!("x{j}")))?;
        for row in self.rows() {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// RBF kernel `exp(−‖a − b‖² / σ²)`.
#[inline]
pub fn rbf(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    (-sq_dist(a, b) / (sigma * sigma)).exp()
}

/// Median pairwise distance over an evenly strided subsample of at most
/// 1000 points. Falls back to 1 when all sampled points coincide.
pub fn default_sigma(points: &PointSet) -> f64 {
    let n = points.n();
    let stride = n.div_ceil(1000).max(1);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let mut dists: Vec<f64> = par::map_range(idx.len(), |a| {
        ((a + 1)..idx.len())
            .map(|b| sq_dist(points.row(idx[a]), points.row(idx[b])).sqrt())
            .collect::<Vec<f64>>()
    })
    .concat();
    if dists.is_empty() {
        return 1.0;
    }
    let mid = dists.len() / 2;
    let (_, m, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

/// Sparse symmetric nonnegative adjacency with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    adjacency: CsrMatrix,
    degrees: Vec<f64>,
}

impl SimilarityGraph {
    /// Validates symmetry, nonnegativity and a zero diagonal.
    pub fn from_adjacency(adjacency: CsrMatrix) -> Result<Self> {
        if adjacency.nrows() != adjacency.ncols() {
            return Err(Error::DimensionMismatch {
                expected: adjacency.nrows(),
                got: adjacency.ncols(),
            });
        }
        for (i, j, v) in adjacency.triplets() {
            if i == j && v != 0.0 {
                return invalid(format!("nonzero diagonal entry at node {i}"));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("invalid weight {v} at ({i}, {j})"));
            }
        }
        if !adjacency.is_symmetric_exact() {
            return invalid("adjacency is not symmetric");
        }
        let degrees = adjacency.row_sums();
        Ok(Self { adjacency, degrees })
    }

    /// Symmetrizes an arbitrary nonnegative edge list as `A + Aᵀ`; self loops
    /// are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t = Vec::with_capacity(2 * edges.len());
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return invalid(format!("edge ({i}, {j}) out of range for n = {n}"));
            }
            if i != j {
                t.push((i, j, w));
                t.push((j, i, w));
            }
        }
        Self::from_adjacency(CsrMatrix::from_triplets(n, n, &t, false))
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency.get(i, j)
    }

    /// Undirected edges `(i, j, w)` with `i < j`, row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency.triplets().filter(|&(i, j, _)| i < j).collect()
    }

    /// Connected-component id per node, numbered by lowest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in self.adjacency.row(u).0 {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn first_isolated(&self) -> Option<usize> {
        self.degrees.iter().position(|&d| d <= 0.0)
    }

    /// Reads `i j w` lines (0-based ids, whitespace separated, `#` comments).
    pub fn read_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::from_edge_list_reader(file, n)
    }

    pub fn from_edge_list_reader<R: BufRead>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `i j w`", lineno + 1)));
            }
            let parse_err = |e: &dyn std::fmt::Display| Error::Parse(format!("line {}: {e}", lineno + 1));
            let i: usize = fields[0].parse().map_err(|e| parse_err(&e))?;
            let j: usize = fields[1].parse().map_err(|e| parse_err(&e))?;
            let w: f64 = fields[2].parse().map_err(|e| parse_err(&e))?;
            max_id = max_id.max(i).max(j);
            edges.push((i, j, w));
        }
        let n = n.unwrap_or(if edges.is_empty() { 0 } else { max_id + 1 });
        Self::from_edges(n, &edges)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# n={}", self.n())?;
        for (i, j, v) in self.edges() {
            writeln!(w, "{i} {j} {v:?}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column-wise top-`k_nn` selection on a kernel column, excluding `skip`.
/// Ties at the cut-off keep the lowest row index.
pub fn top_k_column(values: &[f64], skip: Option<usize>, k_nn: usize) -> Vec<(usize, f64)> {
    let mut cand: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip)
        .map(|(i, &v)| (i, v))
        .collect();
    let by_value = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if cand.len() > k_nn {
        cand.select_nth_unstable_by(k_nn - 1, by_value);
        cand.truncate(k_nn);
    }
    cand.sort_by(by_value);
    cand
}

/// k-nearest-neighbour RBF similarity graph: zero the kernel diagonal, keep
/// the `k_nn` largest entries of each column, then `W = K_sp + K_spᵀ`.
pub fn build_knn_graph(points: &PointSet, sigma: f64, k_nn: usize) -> Result<SimilarityGraph> {
    let n = points.n();
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    if k_nn == 0 || k_nn >= n {
        return invalid(format!("need 0 < k_nn < n, got k_nn = {k_nn}, n = {n}"));
    }
    let columns = par::map_range(n, |j| {
        let col: Vec<f64> = (0..n).map(|i| rbf(points.row(i), points.row(j), sigma)).collect();
        top_k_column(&col, Some(j), k_nn)
    });
    let mut triplets = Vec::with_capacity(2 * n * k_nn);
    for (j, col) in columns.iter().enumerate() {
        for &(i, v) in col {
            triplets.push((i, j, v));
            triplets.push((j, i, v));
        }
    }
    let graph = SimilarityGraph::from_adjacency(CsrMatrix::from_triplets(n, n, &triplets, false))?;
    if let Some(i) = graph.first_isolated() {
        return Err(Error::IsolatedNode(i));
    }
    Ok(graph)
}

/// Dense RBF similarity graph with zero diagonal (no sparsification).
pub fn full_kernel_graph(points: &PointSet, sigma: f64) -> Result<SimilarityGraph> {
    let n = points.n();
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    let rows = par::map_range(n, |i| {
        (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, rbf(points.row(i), points.row(j), sigma)))
            .filter(|&(_, v)| v != 0.0)
            .collect::<Vec<_>>()
    });
    let graph = SimilarityGraph::from_adjacency(CsrMatrix::from_sorted_rows(n, rows))?;
    if let Some(i) = graph.first_isolated() {
        return Err(Error::IsolatedNode(i));
    }
    Ok(graph)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianVariant {
    /// `L = D − W`
    #[default]
    Combinatorial,
    /// `I − D^{-1/2} W D^{-1/2}`
    Normalized,
    /// `I − D^{-1} W`
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    variant: LaplacianVariant,
    matrix: CsrMatrix,
    degrees: Vec<f64>,
}

impl Laplacian {
    pub fn variant(&self) -> LaplacianVariant {
        self.variant
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Degrees of the graph the operator was built from.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.variant != LaplacianVariant::RandomWalk
    }

    /// Upper bound on the largest eigenvalue: 2 for the normalized and
    /// random-walk variants, twice the maximum degree for the combinatorial one.
    pub fn lambda_max_bound(&self) -> f64 {
        match self.variant {
            LaplacianVariant::Combinatorial => 2.0 * self.degrees.iter().copied().fold(0.0, f64::max),
            _ => 2.0,
        }
    }

    /// Wraps a matrix already known to be a combinatorial Laplacian.
    pub fn from_combinatorial(matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let degrees = matrix.diagonal();
        Ok(Self {
            variant: LaplacianVariant::Combinatorial,
            matrix,
            degrees,
        })
    }

    /// Adjacency recovered from the off-diagonal of a combinatorial Laplacian.
    pub fn to_graph(&self) -> Result<SimilarityGraph> {
        if self.variant != LaplacianVariant::Combinatorial {
            return Err(Error::NotCombinatorial);
        }
        let n = self.n();
        let rows = (0..n)
            .map(|i| {
                let (cols, vals) = self.matrix.row(i);
                cols.iter()
                    .zip(vals)
                    .filter(|&(&j, &v)| j != i && v != 0.0)
                    .map(|(&j, &v)| (j, -v))
                    .collect()
            })
            .collect();
        SimilarityGraph::from_adjacency(CsrMatrix::from_sorted_rows(n, rows))
    }
}

/// Builds the requested Laplacian of `graph`.
pub fn laplacian(graph: &SimilarityGraph, variant: LaplacianVariant) -> Result<Laplacian> {
    let n = graph.n();
    let deg = graph.degrees();
    if variant != LaplacianVariant::Combinatorial {
        if let Some(i) = graph.first_isolated() {
            return Err(Error::ZeroDegree(i));
        }
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let rows = par::map_range(n, |i| {
        let (cols, vals) = graph.adjacency().row(i);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(cols.len() + 1);
        let diag = match variant {
            LaplacianVariant::Combinatorial => deg[i],
            _ => 1.0,
        };
        let mut placed = false;
        for (&j, &w) in cols.iter().zip(vals) {
            if !placed && j > i {
                row.push((i, diag));
                placed = true;
            }
            let v = match variant {
                LaplacianVariant::Combinatorial => -w,
                LaplacianVariant::Normalized => -w * inv_sqrt[i] * inv_sqrt[j],
                LaplacianVariant::RandomWalk => -w / deg[i],
            };
            row.push((j, v));
        }
        if !placed {
            row.push((i, diag));
        }
        row
    });
    Ok(Laplacian {
        variant,
        matrix: CsrMatrix::from_sorted_rows(n, rows),
        degrees: deg.to_vec(),
    })
}

/// A hard assignment of `n` nodes to `k` clusters, labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("partition needs k >= 1");
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return invalid(format!("label {bad} out of range for k = {k}"));
        }
        Ok(Self { labels, k })
    }

    /// Accepts labels numbered `1..=k`.
    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        if labels.contains(&0) {
            return invalid("one-based labels must be >= 1");
        }
        Self::new(labels.iter().map(|l| l - 1).collect(), k)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    pub fn has_empty_cluster(&self) -> bool {
        self.sizes().contains(&0)
    }

    /// Relabels clusters in order of first appearance; returns the map
    /// old label → new label.
    pub fn canonicalize(&mut self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        for l in &mut self.labels {
            if map[*l] == usize::MAX {
                map[*l] = next;
                next += 1;
            }
            *l = map[*l];
        }
        for m in &mut map {
            if *m == usize::MAX {
                *m = next;
                next += 1;
            }
        }
        map
    }

    /// Writes `point_id,label` with one-based labels.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["point_id", "label"])?;
        for (i, l) in self.labels.iter().enumerate() {
            w.write_record([i.to_string(), (l + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let id = rec.get(0).unwrap_or("").parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            let l = rec.get(1).unwrap_or("").parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            pairs.push((id, l));
        }
        pairs.sort_unstable();
        let labels: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let k = labels.iter().copied().max().unwrap_or(1);
        Self::from_one_based(&labels, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Cut,
    Rcut,
    Ncut,
}

fn check_partition(graph: &SimilarityGraph, partition: &Partition) -> Result<()> {
    if partition.n() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            got: partition.n(),
        });
    }
    Ok(())
}

/// `½ Σ_ℓ w(V_ℓ, V̄_ℓ) / denom_ℓ` with denominators 1, `|V_ℓ|` or `vol(V_ℓ)`.
pub fn cut_cost(graph: &SimilarityGraph, partition: &Partition, kind: CutKind) -> Result<f64> {
    check_partition(graph, partition)?;
    let labels = partition.labels();
    let mut crossing = vec![0.0; partition.k()];
    for (i, j, w) in graph.adjacency().triplets() {
        if labels[i] != labels[j] {
            crossing[labels[i]] += w;
        }
    }
    let sizes = partition.sizes();
    let mut volumes = vec![0.0; partition.k()];
    for (i, &l) in labels.iter().enumerate() {
        volumes[l] += graph.degrees()[i];
    }
    let mut total = 0.0;
    for l in 0..partition.k() {
        let denom = match kind {
            CutKind::Cut => 1.0,
            CutKind::Rcut => sizes[l] as f64,
            CutKind::Ncut => volumes[l],
        };
        if kind != CutKind::Cut && (sizes[l] == 0 || denom == 0.0) {
            return Err(Error::EmptyCluster(l));
        }
        total += crossing[l] / denom;
    }
    Ok(0.5 * total)
}

/// `trace(Cᵀ L C)` with `C` the size-normalized indicator matrix and `L` the
/// combinatorial Laplacian; equals twice the ratio cut.
pub fn rcut_trace(graph: &SimilarityGraph, partition: &Partition) -> Result<f64> {
    check_partition(graph, partition)?;
    let sizes = partition.sizes();
    if let Some(l) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(l));
    }
    let lap = laplacian(graph, LaplacianVariant::Combinatorial)?;
    let labels = partition.labels();
    let mut quad = vec![0.0; partition.k()];
    for (i, j, v) in lap.matrix().triplets() {
        if labels[i] == labels[j] {
            quad[labels[i]] += v;
        }
    }
    Ok(quad.iter().zip(&sizes).map(|(q, &s)| q / s as f64).sum())
}

/// Random Gaussian projection to `d_out` dimensions, scaled by `1/√d_out`.
pub fn jl_project(points: &PointSet, d_out: usize, seed: u64) -> Result<PointSet> {
    if d_out == 0 || d_out > points.d() {
        return invalid(format!("need 0 < d_out <= d = {}, got {d_out}", points.d()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian_matrix(points.d(), d_out, 1.0 / (d_out as f64).sqrt(), &mut rng);
    PointSet::from_matrix(&(points.to_matrix() * g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen_ascending;
    use rand::Rng;

    pub(crate) fn random_graph(n: usize, p: f64, seed: u64) -> SimilarityGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j, rng.random_range(0.1..1.0)));
                }
            }
        }
        SimilarityGraph::from_edges(n, &edges).unwrap()
    }

    fn blobs8() -> PointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let c = if i < 4 { 0.0 } else { 3.0 };
                vec![c + rng.random::<f64>() * 0.5, c + rng.random::<f64>() * 0.5]
            })
            .collect();
        PointSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn identical_pair_graph() {
        let p = PointSet::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let g = build_knn_graph(&p, 0.7, 1).unwrap();
        assert_eq!(g.adjacency().to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
    }

    #[test]
    fn knn_matches_dense_oracle() {
        let p = blobs8();
        let (n, k_nn, sigma) = (8, 3, 1.3);
        // oracle: dense kernel, zero diagonal, column top-3 (ties lowest index), K_sp + K_spᵀ
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d2: f64 = (0..2).map(|c| (p.row(i)[c] - p.row(j)[c]).powi(2)).sum();
                    k[(i, j)] = (-d2 / (sigma * sigma)).exp();
                }
            }
        }
        let mut ksp = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            order.sort_by(|&a, &b| k[(b, j)].partial_cmp(&k[(a, j)]).unwrap().then(a.cmp(&b)));
            for &i in order.iter().take(k_nn) {
                ksp[(i, j)] = k[(i, j)];
            }
        }
        let expected = &ksp + ksp.transpose();
        let g = build_knn_graph(&p, sigma, k_nn).unwrap();
        assert!((g.adjacency().to_dense() - expected).abs().max() < 1e-15);
        for i in 0..n {
            let nnz = g.adjacency().row(i).0.len();
            assert!((k_nn..=2 * k_nn).contains(&nnz));
        }
        assert!(g.adjacency().is_symmetric_exact());
    }

    #[test]
    fn knn_preconditions() {
        let p = blobs8();
        assert!(build_knn_graph(&p, 0.0, 3).is_err());
        assert!(build_knn_graph(&p, 1.0, 8).is_err());
        assert!(build_knn_graph(&p, 1.0, 0).is_err());
    }

    #[test]
    fn isolated_after_underflow() {
        // kernel underflows to zero for the far point
        let p = PointSet::from_rows(&[vec![0.0], vec![0.1], vec![0.2], vec![1e6]]).unwrap();
        assert!(matches!(build_knn_graph(&p, 1.0, 1), Err(Error::IsolatedNode(3))));
    }

    #[test]
    fn complete_graph_spectrum() {
        let edges: Vec<_> = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j, 1.0))).collect();
        let g = SimilarityGraph::from_edges(4, &edges).unwrap();
        let l = laplacian(&g, LaplacianVariant::Combinatorial).unwrap();
        let (vals, _) = sym_eigen_ascending(&l.matrix().to_dense());
        let expected = [0.0, 4.0, 4.0, 4.0];
        assert!(vals.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn laplacian_variant_invariants() {
        let g = random_graph(10, 0.5, 1);
        let comb = laplacian(&g, LaplacianVariant::Combinatorial).unwrap();
        assert!(comb.matrix().row_sums().iter().all(|s| s.abs() < 1e-12));
        assert!(comb.matrix().triplets().all(|(i, j, v)| i == j || v <= 0.0));
        let (vals, vecs) = sym_eigen_ascending(&comb.matrix().to_dense());
        assert!(vals[0].abs() < 1e-12 && vals[1] > 1e-9);
        let u1 = vecs.column(0);
        assert!(u1.iter().all(|v| (v.abs() - 1.0 / 10f64.sqrt()).abs() < 1e-10));

        let norm = laplacian(&g, LaplacianVariant::Normalized).unwrap();
        assert!(norm.matrix().max_abs_asymmetry() < 1e-15);
        let (nv, _) = sym_eigen_ascending(&norm.matrix().to_dense());
        assert!(nv[nv.len() - 1] <= 2.0 + 1e-12 && nv[0] > -1e-12);

        let rw = laplacian(&g, LaplacianVariant::RandomWalk).unwrap();
        assert!(rw.matrix().row_sums().iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn zero_degree_rejected_for_normalized() {
        let g = SimilarityGraph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(laplacian(&g, LaplacianVariant::Combinatorial).is_ok());
        assert!(matches!(laplacian(&g, LaplacianVariant::Normalized), Err(Error::ZeroDegree(2))));
    }

    #[test]
    fn cuts_hand_cases() {
        let g = SimilarityGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let p = Partition::new(vec![0, 1], 2).unwrap();
        assert_eq!(cut_cost(&g, &p, CutKind::Rcut).unwrap(), 1.0);
        assert_eq!(cut_cost(&g, &p, CutKind::Cut).unwrap(), 1.0);

        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 2.0), (4, 5, 1.0), (3, 5, 1.0)];
        let g = SimilarityGraph::from_edges(6, &edges).unwrap();
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        for kind in [CutKind::Cut, CutKind::Rcut, CutKind::Ncut] {
            assert_eq!(cut_cost(&g, &p, kind).unwrap(), 0.0);
        }
        assert_eq!(rcut_trace(&g, &p).unwrap(), 0.0);

        let empty = Partition::new(vec![0, 0, 0, 0, 0, 0], 2).unwrap();
        assert!(matches!(cut_cost(&g, &empty, CutKind::Rcut), Err(Error::EmptyCluster(1))));
        assert!(cut_cost(&g, &empty, CutKind::Cut).is_ok());
    }

    #[test]
    fn cut_matches_pair_sum_oracle() {
        let g = random_graph(10, 0.4, 2);
        let w = g.adjacency().to_dense();
        for mask in 1u32..(1 << 9) {
            let labels: Vec<usize> = (0..10).map(|i| ((mask << 1) >> i & 1) as usize).collect();
            let p = Partition::new(labels.clone(), 2).unwrap();
            let mut cross = 0.0;
            for i in 0..10 {
                for j in 0..10 {
                    if labels[i] == 0 && labels[j] == 1 {
                        cross += w[(i, j)];
                    }
                }
            }
            let got = cut_cost(&g, &p, CutKind::Cut).unwrap();
            assert!((got - cross).abs() < 1e-12 * cross.max(1.0));
        }
    }

    #[test]
    fn rcut_trace_dense_oracle() {
        let g = random_graph(8, 0.5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let labels: Vec<usize> = (0..8).map(|i| if i < 3 { i } else { rng.random_range(0..3) }).collect();
        let p = Partition::new(labels.clone(), 3).unwrap();
        let l = laplacian(&g, LaplacianVariant::Combinatorial).unwrap().matrix().to_dense();
        let sizes = p.sizes();
        let c = DMatrix::from_fn(8, 3, |i, l| if labels[i] == l { 1.0 / (sizes[l] as f64).sqrt() } else { 0.0 });
        let oracle = (c.transpose() * l * c).trace();
        let got = rcut_trace(&g, &p).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        let rcut = cut_cost(&g, &p, CutKind::Rcut).unwrap();
        assert!((got - 2.0 * rcut).abs() <= 1e-10 * got.abs().max(1e-300));
    }

    #[test]
    fn combinatorial_quadratic_form() {
        let g = random_graph(12, 0.4, 6);
        let l = laplacian(&g, LaplacianVariant::Combinatorial).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lx = l.matrix().mul_vec(&x);
            let quad: f64 = x.iter().zip(&lx).map(|(a, b)| a * b).sum();
            let pairs: f64 = g.adjacency().triplets().map(|(i, j, w)| 0.5 * w * (x[i] - x[j]).powi(2)).sum();
            assert!((quad - pairs).abs() < 1e-12 && quad >= -1e-14);
        }
    }

    #[test]
    fn jl_zero_and_bounds() {
        let p = PointSet::new(3, 4, vec![0.0; 12]).unwrap();
        let q = jl_project(&p, 2, 1).unwrap();
        assert!(q.as_slice().iter().all(|&v| v == 0.0));
        assert!(jl_project(&p, 5, 1).is_err());
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::new(1, 1, vec![f64::NAN]).is_err());
        assert!(PointSet::new(0, 1, vec![]).is_err());
        assert!(PointSet::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        let a = PointSet::from_csv_reader("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        let b = PointSet::from_csv_reader("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.row(1), &[3.0, 4.0]);
        assert!(PointSet::from_csv_reader("1,2\n3,x\n".as_bytes()).is_err());
    }

    #[test]
    fn edge_list_is_symmetrized() {
        let text = "# comment\n0 1 0.5\n1 2 2\n\n";
        let g = SimilarityGraph::from_edge_list_reader(text.as_bytes(), None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.weight(1, 0), 0.5);
        assert_eq!(g.weight(2, 1), 2.0);
        assert_eq!(g.degrees(), &[0.5, 2.5, 2.0]);
        assert!(SimilarityGraph::from_edge_list_reader("0 1\n".as_bytes(), None).is_err());
    }

    #[test]
    fn canonical_labels() {
        let mut p = Partition::new(vec![2, 2, 0, 1, 0], 4).unwrap();
        p.canonicalize();
        assert_eq!(p.labels(), &[0, 0, 1, 2, 1]);
    }
}
