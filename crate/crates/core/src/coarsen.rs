//! Graph coarsening by edge contraction. Each level merges vertex pairs of
//! a matching; Laplacians are reduced as `(P⁺)ᵀ L P⁺` and vectors are lifted
//! back with `P⁺`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigs::EigOptions;
use crate::embed::{spectral_embedding, Embedding, RowNormalization};
use crate::error::{invalid, Error, Result};
use crate::graph::{laplacian, Laplacian, LaplacianVariant, SimilarityGraph};
use crate::kmeans::Clustering;
use crate::linalg::CsrMatrix;
use crate::pipeline::{cluster_embedding, SpectralOptions};
use crate::seeding::stream_rng;

/// Edge potentials for randomized contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// Proportional to the edge weight.
    #[default]
    HeavyEdge,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionMethod {
    Randomized(Potential),
    HeavyEdgeMatching,
}

impl Default for ContractionMethod {
    fn default() -> Self {
        ContractionMethod::Randomized(Potential::HeavyEdge)
    }
}

/// A partition of the vertices of one level into contraction sets,
/// numbered by lowest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseningLevel {
    map: Vec<usize>,
    sets: Vec<Vec<usize>>,
}

impl CoarseningLevel {
    /// Sets from a fine-to-coarse map whose values cover `0..n_coarse`.
    pub fn from_map(map: &[usize]) -> Result<Self> {
        let mut renumber = vec![usize::MAX; map.len()];
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut out = Vec::with_capacity(map.len());
        for (i, &r) in map.iter().enumerate() {
            if r >= map.len() {
                return invalid(format!("set index {r} out of range"));
            }
            if renumber[r] == usize::MAX {
                renumber[r] = sets.len();
                sets.push(Vec::new());
            }
            sets[renumber[r]].push(i);
            out.push(renumber[r]);
        }
        Ok(Self { map: out, sets })
    }

    /// Pairs of a matching; unmatched vertices stay singletons.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut partner = vec![usize::MAX; n];
        for &(a, b) in pairs {
            if a >= n || b >= n || a == b {
                return invalid(format!("invalid pair ({a}, {b}) for n = {n}"));
            }
            if partner[a] != usize::MAX || partner[b] != usize::MAX {
                return invalid(format!("pair ({a}, {b}) overlaps another pair"));
            }
            partner[a] = b;
            partner[b] = a;
        }
        let map: Vec<usize> = (0..n)
            .map(|i| if partner[i] == usize::MAX { i } else { i.min(partner[i]) })
            .collect();
        Self::from_map(&map)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
            sets: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Coarse index of every fine vertex.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn n_fine(&self) -> usize {
        self.map.len()
    }

    pub fn n_coarse(&self) -> usize {
        self.sets.len()
    }

    /// Averaging matrix `P` (`n_coarse × n_fine`).
    pub fn p(&self) -> CsrMatrix {
        let t: Vec<_> = self
            .sets
            .iter()
            .enumerate()
            .flat_map(|(r, s)| s.iter().map(move |&i| (r, i, 1.0 / s.len() as f64)))
            .collect();
        CsrMatrix::from_triplets(self.n_coarse(), self.n_fine(), &t, false)
    }

    /// Membership matrix `P⁺` (`n_fine × n_coarse`).
    pub fn p_plus(&self) -> CsrMatrix {
        let t: Vec<_> = self.map.iter().enumerate().map(|(i, &r)| (i, r, 1.0)).collect();
        CsrMatrix::from_triplets(self.n_fine(), self.n_coarse(), &t, false)
    }

    /// `P⁺ x`: every fine vertex takes the value of its set.
    pub fn lift_vector(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.n_coarse() {
            return Err(Error::DimensionMismatch {
                expected: self.n_coarse(),
                got: coarse.len(),
            });
        }
        Ok(self.map.iter().map(|&r| coarse[r]).collect())
    }

    /// Contracted graph: weights between sets are summed, internal edges
    /// vanish.
    pub fn coarsen_graph(&self, graph: &SimilarityGraph) -> Result<SimilarityGraph> {
        if graph.n() != self.n_fine() {
            return Err(Error::DimensionMismatch {
                expected: self.n_fine(),
                got: graph.n(),
            });
        }
        // upper triangle only, so the mirrored sums are bit-identical
        let upper: Vec<_> = graph
            .edges()
            .into_iter()
            .filter_map(|(i, j, w)| {
                let (r, s) = (self.map[i], self.map[j]);
                (r != s).then(|| (r.min(s), r.max(s), w))
            })
            .collect();
        let summed = CsrMatrix::from_triplets(self.n_coarse(), self.n_coarse(), &upper, false);
        SimilarityGraph::from_edges(self.n_coarse(), &summed.triplets().collect::<Vec<_>>())
    }
}

/// Randomized edge contraction with explicit potentials aligned with
/// `graph.edges()`. Edges are drawn proportionally to their potential among
/// those whose endpoints are both still free.
pub fn randomized_edge_contraction_with(graph: &SimilarityGraph, potentials: &[f64], seed: u64) -> Result<CoarseningLevel> {
    let edges = graph.edges();
    if potentials.len() != edges.len() {
        return Err(Error::DimensionMismatch {
            expected: edges.len(),
            got: potentials.len(),
        });
    }
    if let Some(p) = potentials.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return invalid(format!("edge potentials must be positive, got {p}"));
    }
    // exponential clocks: the order of arrival restricted to any subset of
    // edges is a draw proportional to potential, so scanning by arrival time
    // and skipping blocked edges reproduces the sequential procedure
    let mut rng = stream_rng(seed, 0);
    let mut keyed: Vec<(f64, usize)> = potentials
        .iter()
        .enumerate()
        .map(|(e, &p)| {
            let u: f64 = 1.0 - rng.random::<f64>();
            (-u.ln() / p, e)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    greedy_matching(graph.n(), keyed.iter().map(|&(_, e)| (edges[e].0, edges[e].1)))
}

pub fn randomized_edge_contraction(graph: &SimilarityGraph, potential: Potential, seed: u64) -> Result<CoarseningLevel> {
    let potentials: Vec<f64> = match potential {
        Potential::HeavyEdge => graph.edges().iter().map(|e| e.2).collect(),
        Potential::Uniform => vec![1.0; graph.edge_count()],
    };
    randomized_edge_contraction_with(graph, &potentials, seed)
}

/// Greedy matching over edges by decreasing weight, ties by `(i, j)`.
pub fn heavy_edge_matching(graph: &SimilarityGraph) -> Result<CoarseningLevel> {
    let mut edges = graph.edges();
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    greedy_matching(graph.n(), edges.into_iter().map(|(i, j, _)| (i, j)))
}

fn greedy_matching(n: usize, order: impl Iterator<Item = (usize, usize)>) -> Result<CoarseningLevel> {
    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    for (i, j) in order {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    CoarseningLevel::from_pairs(n, &pairs)
}

/// `(P⁺)ᵀ L P⁺` for a combinatorial Laplacian.
pub fn coarsen_laplacian(lap: &Laplacian, level: &CoarseningLevel) -> Result<Laplacian> {
    if lap.variant() != LaplacianVariant::Combinatorial {
        return Err(Error::NotCombinatorial);
    }
    let coarse = level.coarsen_graph(&lap.to_graph()?)?;
    laplacian(&coarse, LaplacianVariant::Combinatorial)
}

/// Graphs `G_0 … G_c` and the levels between them.
#[derive(Debug, Clone)]
pub struct CoarseningChain {
    graphs: Vec<SimilarityGraph>,
    levels: Vec<CoarseningLevel>,
}

impl CoarseningChain {
    pub fn new(graph: SimilarityGraph) -> Self {
        Self {
            graphs: vec![graph],
            levels: Vec::new(),
        }
    }

    pub fn push(&mut self, level: CoarseningLevel) -> Result<()> {
        let next = level.coarsen_graph(self.coarsest())?;
        self.graphs.push(next);
        self.levels.push(level);
        Ok(())
    }

    pub fn coarsest(&self) -> &SimilarityGraph {
        self.graphs.last().expect("chain holds the input graph")
    }

    pub fn graphs(&self) -> &[SimilarityGraph] {
        &self.graphs
    }

    pub fn levels(&self) -> &[CoarseningLevel] {
        &self.levels
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.n()).collect()
    }

    pub fn laplacians(&self) -> Result<Vec<Laplacian>> {
        self.graphs.iter().map(|g| laplacian(g, LaplacianVariant::Combinatorial)).collect()
    }

    /// Index of the level-0 vertex's set at the coarsest level.
    pub fn coarse_map(&self) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.graphs[0].n()).collect();
        for level in &self.levels {
            map.iter_mut().for_each(|r| *r = level.map()[*r]);
        }
        map
    }

    /// Lifts a coarsest-level vector to level 0.
    pub fn lift(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        let mut v = coarse.to_vec();
        for level in self.levels.iter().rev() {
            v = level.lift_vector(&v)?;
        }
        Ok(v)
    }

    /// Lifts the columns of a coarsest-level matrix.
    pub fn lift_matrix(&self, coarse: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n_c = self.coarsest().n();
        if coarse.nrows() != n_c {
            return Err(Error::DimensionMismatch {
                expected: n_c,
                got: coarse.nrows(),
            });
        }
        let map = self.coarse_map();
        Ok(DMatrix::from_fn(map.len(), coarse.ncols(), |i, c| coarse[(map[i], c)]))
    }
}

/// Repeats single-level contraction until at most `target_m` vertices remain,
/// `max_levels` levels were built, or a level no longer shrinks the graph.
pub fn coarsen(
    graph: &SimilarityGraph,
    target_m: usize,
    max_levels: usize,
    method: ContractionMethod,
    seed: u64,
) -> Result<CoarseningChain> {
    let mut chain = CoarseningChain::new(graph.clone());
    for l in 0..max_levels {
        let current = chain.coarsest();
        if current.n() <= target_m {
            break;
        }
        let level = match method {
            ContractionMethod::Randomized(p) => randomized_edge_contraction(current, p, crate::seeding::derive_seed(seed, l as u64))?,
            ContractionMethod::HeavyEdgeMatching => heavy_edge_matching(current)?,
        };
        if level.n_coarse() == level.n_fine() {
            log::warn!("coarsening stalled at {} vertices: no contractible edges", level.n_fine());
            break;
        }
        chain.push(level)?;
    }
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseOptions {
    pub k: usize,
    pub target_m: usize,
    pub max_levels: usize,
    pub method: ContractionMethod,
    pub n_restarts: usize,
    pub seed: u64,
    pub eig: EigOptions,
}

impl CoarseOptions {
    pub fn new(k: usize, target_m: usize) -> Self {
        Self {
            k,
            target_m,
            max_levels: usize::MAX,
            method: ContractionMethod::default(),
            n_restarts: 10,
            seed: 0,
            eig: EigOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoarseResult {
    pub chain: CoarseningChain,
    /// Lifted coarse eigenvectors.
    pub embedding: Embedding,
    pub clustering: Clustering,
}

/// Coarsens, embeds the coarsest combinatorial Laplacian exactly and lifts
/// the `k` eigenvectors to the input graph.
pub fn coarse_embedding(graph: &SimilarityGraph, opts: &CoarseOptions) -> Result<(CoarseningChain, Embedding)> {
    if opts.k == 0 || opts.target_m < opts.k {
        return invalid(format!("need 0 < k <= target_m, got k = {}, target_m = {}", opts.k, opts.target_m));
    }
    let chain = coarsen(graph, opts.target_m, opts.max_levels, opts.method, opts.seed)?;
    let lap = laplacian(chain.coarsest(), LaplacianVariant::Combinatorial)?;
    let coarse = spectral_embedding(&lap, opts.k, &opts.eig)?;
    let lifted = chain.lift_matrix(coarse.basis())?;
    let mut embedding = Embedding::new(lifted, LaplacianVariant::Combinatorial, RowNormalization::None);
    if let Some(values) = coarse.eigenvalues() {
        embedding = embedding.with_eigenvalues(values.to_vec());
    }
    Ok((chain, embedding))
}

/// Coarse embedding followed by k-means on the lifted rows.
pub fn coarse_spectral_clustering(graph: &SimilarityGraph, opts: &CoarseOptions) -> Result<CoarseResult> {
    let (chain, embedding) = coarse_embedding(graph, opts)?;
    let spectral = SpectralOptions {
        n_restarts: opts.n_restarts,
        seed: opts.seed,
        eig: opts.eig,
        ..SpectralOptions::new(opts.k)
    };
    let clustering = cluster_embedding(&embedding, &spectral)?;
    Ok(CoarseResult {
        chain,
        embedding,
        clustering,
    })
}
