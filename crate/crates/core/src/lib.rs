//! Spectral clustering with sampling-based accelerations.

// negated comparisons are how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod coarsen;
pub mod coreset;
pub mod datasets;
pub mod eigs;
pub mod embed;
pub mod error;
pub mod graph;
pub mod gsp;
pub mod kasp;
pub mod kmeans;
pub mod linalg;
pub mod par;
pub mod pipeline;
pub mod seeding;
pub mod sketch;

pub use error::{Error, Result};
pub use graph::{
    build_knn_graph, cut_cost, default_sigma, full_kernel_graph, jl_project, laplacian, rcut_trace, CutKind, Laplacian, LaplacianVariant,
    Partition, PointSet, SimilarityGraph,
};
