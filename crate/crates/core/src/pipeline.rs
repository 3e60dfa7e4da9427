//! The exact spectral clustering pipeline: similarity graph, Laplacian,
//! eigenvector embedding, k-means on the embedded rows.

use serde::{Deserialize, Serialize};

use crate::eigs::EigOptions;
use crate::embed::{spectral_embedding, Embedding};
use crate::error::Result;
use crate::graph::{build_knn_graph, default_sigma, laplacian, LaplacianVariant, Partition, PointSet, SimilarityGraph};
use crate::kmeans::{kmeans, Clustering, InitStrategy, KMeansOptions, LloydOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    pub k: usize,
    pub k_nn: usize,
    /// Kernel bandwidth; the median pairwise distance when absent.
    pub sigma: Option<f64>,
    pub variant: LaplacianVariant,
    pub n_restarts: usize,
    pub seed: u64,
    pub eig: EigOptions,
}

impl SpectralOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            k_nn: 10,
            sigma: None,
            variant: LaplacianVariant::Combinatorial,
            n_restarts: 10,
            seed: 0,
            eig: EigOptions::default(),
        }
    }

    pub fn kmeans_options(&self) -> KMeansOptions {
        KMeansOptions {
            init: InitStrategy::KMeansPlusPlus,
            n_restarts: self.n_restarts,
            lloyd: LloydOptions::default(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub embedding: Embedding,
    pub clustering: Clustering,
}

impl SpectralResult {
    pub fn partition(&self) -> &Partition {
        &self.clustering.partition
    }
}

/// Clusters the rows of an embedding; labels are renumbered in order of
/// first appearance so that equal partitions compare equal.
pub fn cluster_embedding(embedding: &Embedding, opts: &SpectralOptions) -> Result<Clustering> {
    let points = embedding.to_point_set()?;
    let mut clustering = kmeans(&points, opts.k, None, &opts.kmeans_options())?;
    clustering.partition.canonicalize();
    Ok(clustering)
}

/// Spectral clustering of a given graph.
pub fn graph_spectral_clustering(graph: &SimilarityGraph, opts: &SpectralOptions) -> Result<SpectralResult> {
    let lap = laplacian(graph, opts.variant)?;
    let embedding = spectral_embedding(&lap, opts.k, &opts.eig)?;
    let clustering = cluster_embedding(&embedding, opts)?;
    Ok(SpectralResult { embedding, clustering })
}

/// Spectral clustering of points through the k-NN RBF graph.
pub fn exact_spectral_clustering(points: &PointSet, opts: &SpectralOptions) -> Result<(SimilarityGraph, SpectralResult)> {
    let sigma = opts.sigma.unwrap_or_else(|| default_sigma(points));
    let graph = build_knn_graph(points, sigma, opts.k_nn)?;
    let result = graph_spectral_clustering(&graph, opts)?;
    Ok((graph, result))
}
