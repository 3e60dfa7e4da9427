//! Graph signals: Fourier transform, weighted coherence, node sampling
//! (uniform, leverage score, projective DPP), the least-squares and
//! Tikhonov decoders, and compressive spectral clustering.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigs::EigOptions;
use crate::embed::{
    estimate_lambda_star, random_projection_embedding, spectral_embedding, EigencountOptions, Embedding, ProjectionEntries,
    ProjectionOptions,
};
use crate::error::{invalid, Error, Result};
use crate::graph::{laplacian, Laplacian, LaplacianVariant, Partition, SimilarityGraph};
use crate::kmeans::{kmeans, InitStrategy, KMeansOptions, LloydOptions};
use crate::linalg::{fix_column_signs, orthonormalize, sym_eigen_ascending, sym_eigen_descending, CsrMatrix};
use crate::par;
use crate::seeding::{derive_seed, stream_rng};
use crate::sketch::{iid_sample, leverage_scores};

/// Largest graph for which the full dense eigenbasis is computed.
pub const DENSE_FOURIER_LIMIT: usize = 2048;

/// Full eigenbasis of a symmetric Laplacian, eigenvalues ascending.
pub fn fourier_basis(lap: &Laplacian) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !lap.is_symmetric() {
        return invalid("the graph Fourier basis needs a symmetric Laplacian");
    }
    if lap.n() > DENSE_FOURIER_LIMIT {
        return invalid(format!(
            "dense Fourier basis limited to n <= {DENSE_FOURIER_LIMIT}, got {}",
            lap.n()
        ));
    }
    let (vals, mut vecs) = sym_eigen_ascending(&lap.matrix().to_dense());
    fix_column_signs(&mut vecs);
    Ok((vals.iter().copied().collect(), vecs))
}

/// `Uᵀ z` for an orthonormal (possibly partial) basis `U`.
pub fn graph_fourier(basis: &DMatrix<f64>, signal: &[f64]) -> Result<DVector<f64>> {
    if signal.len() != basis.nrows() {
        return Err(Error::DimensionMismatch {
            expected: basis.nrows(),
            got: signal.len(),
        });
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(basis.tr_mul(&DVector::from_column_slice(signal)))
}

/// `U z̃`.
pub fn inverse_graph_fourier(basis: &DMatrix<f64>, coefficients: &DVector<f64>) -> Result<Vec<f64>> {
    if coefficients.len() != basis.ncols() {
        return Err(Error::DimensionMismatch {
            expected: basis.ncols(),
            got: coefficients.len(),
        });
    }
    Ok((basis * coefficients).iter().copied().collect())
}

/// `max_i p_i^{-1/2} ‖U_kᵀ δ_i‖`; infinite when some `p_i = 0` on a nonzero
/// row.
pub fn weighted_coherence(p: &[f64], u_k: &DMatrix<f64>) -> Result<f64> {
    if p.len() != u_k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u_k.nrows(),
            got: p.len(),
        });
    }
    Ok(u_k
        .row_iter()
        .zip(p)
        .map(|(row, &pi)| {
            let norm = row.norm();
            if norm == 0.0 {
                0.0
            } else if pi > 0.0 {
                norm / pi.sqrt()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Every node once; the degenerate exact setting.
    All,
    Uniform,
    Leverage,
    Dpp,
}

/// Sampled nodes with their correction factors: `1/n` (uniform), the
/// leverage score (leverage) or the DPP marginal (dpp).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub method: SamplingMethod,
    pub indices: Vec<usize>,
    pub corrections: Vec<f64>,
    /// Number of independent DPP draws concatenated; 0 for i.i.d. plans.
    #[serde(default)]
    pub draw_count: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn new(method: SamplingMethod, indices: Vec<usize>, corrections: Vec<f64>, draw_count: usize, seed: u64) -> Result<Self> {
        if indices.len() != corrections.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: corrections.len(),
            });
        }
        if let Some(c) = corrections.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return invalid(format!("corrections must be positive, got {c}"));
        }
        Ok(Self {
            method,
            indices,
            corrections,
            draw_count,
            seed,
        })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new(p.method, p.indices, p.corrections, p.draw_count, p.seed)
    }
}

/// One draw of the projection DPP with marginal kernel `U_k U_kᵀ`
/// (`U_k` orthonormal): exactly `k` distinct nodes. Each step samples a node
/// from the residual diagonal and Gram–Schmidt-updates the residual with the
/// kernel column of that node, `O(nk)` per step.
pub fn sample_projection_dpp<R: Rng + ?Sized>(u_k: &DMatrix<f64>, rng: &mut R) -> Result<Vec<usize>> {
    let (n, k) = u_k.shape();
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    let mut residual: Vec<f64> = u_k.row_iter().map(|r| r.norm_squared()).collect();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = residual.iter().map(|v| v.max(0.0)).sum();
        if !(total > 0.0) {
            return invalid("DPP kernel has rank below k");
        }
        let clamped: Vec<f64> = residual.iter().map(|v| v.max(0.0)).collect();
        let j = crate::kmeans::draw_proportional(&clamped, total, rng);
        let mut c: DVector<f64> = u_k * u_k.row(j).transpose();
        for b in &basis {
            let coef = b[j];
            c.axpy(-coef, b, 1.0);
        }
        let pivot = residual[j];
        c /= pivot.sqrt();
        for (r, v) in residual.iter_mut().zip(c.iter()) {
            *r -= v * v;
        }
        residual[j] = 0.0;
        chosen.push(j);
        basis.push(c);
    }
    Ok(chosen)
}

/// Draws `m` nodes (`All` ignores `m`). Uniform and leverage plans are i.i.d. with replacement;
/// a DPP plan concatenates `m / k` independent draws and needs `m` to be a
/// multiple of `k`.
pub fn sample_nodes(method: SamplingMethod, u_k: &DMatrix<f64>, m: usize, seed: u64) -> Result<SamplingPlan> {
    let (n, k) = u_k.shape();
    if m == 0 && method != SamplingMethod::All {
        return invalid("need at least one sample");
    }
    match method {
        SamplingMethod::All => SamplingPlan::new(method, (0..n).collect(), vec![1.0 / n as f64; n], 0, seed),
        SamplingMethod::Uniform => {
            let mut rng = stream_rng(seed, 0);
            let indices = (0..m).map(|_| rng.random_range(0..n)).collect();
            SamplingPlan::new(method, indices, vec![1.0 / n as f64; m], 0, seed)
        }
        SamplingMethod::Leverage => {
            let p = leverage_scores(u_k);
            let indices = iid_sample(&p, m, seed)?;
            let corrections = indices.iter().map(|&i| p[i]).collect();
            SamplingPlan::new(method, indices, corrections, 0, seed)
        }
        SamplingMethod::Dpp => {
            if m < k || !m.is_multiple_of(k) {
                return invalid(format!("a DPP plan needs m to be a positive multiple of k = {k}, got m = {m}"));
            }
            let draws = m / k;
            let pi: Vec<f64> = u_k.row_iter().map(|r| r.norm_squared()).collect();
            let mut indices = Vec::with_capacity(m);
            for d in 0..draws {
                indices.extend(sample_projection_dpp(u_k, &mut stream_rng(seed, d as u64))?);
            }
            let corrections = indices.iter().map(|&i| pi[i]).collect();
            SamplingPlan::new(method, indices, corrections, draws, seed)
        }
    }
}

fn check_measurements(plan: &SamplingPlan, y: &[f64], n: usize) -> Result<()> {
    if y.len() != plan.m() {
        return Err(Error::DimensionMismatch {
            expected: plan.m(),
            got: y.len(),
        });
    }
    if let Some(&bad) = plan.indices.iter().find(|&&i| i >= n) {
        return invalid(format!("sample index {bad} out of range for n = {n}"));
    }
    Ok(())
}

/// `U_k argmin_α ‖P_S^{-1/2}(M U_k α − y)‖²`.
pub fn decode_least_squares(plan: &SamplingPlan, y: &[f64], u_k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, k) = u_k.shape();
    check_measurements(plan, y, n)?;
    let m = plan.m();
    let scale: Vec<f64> = plan.corrections.iter().map(|c| 1.0 / c.sqrt()).collect();
    let a = DMatrix::from_fn(m, k, |r, c| scale[r] * u_k[(plan.indices[r], c)]);
    let b = DVector::from_fn(m, |r, _| scale[r] * y[r]);
    let svd = a.svd(true, true);
    let top = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * top).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    let alpha = svd.solve(&b, 1e-10 * top).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((u_k * alpha).iter().copied().collect())
}

/// Nondecreasing spectral penalty `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `g(λ) = λ`.
    #[default]
    Linear,
    /// `g(λ) = λ^p`.
    Power(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TikhonovOptions {
    pub gamma: f64,
    pub penalty: Penalty,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for TikhonovOptions {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            penalty: Penalty::Linear,
            tol: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Relative residual in the Jacobi-preconditioned norm.
    pub relative_residual: f64,
    pub converged: bool,
}

fn apply_penalty(lap: &CsrMatrix, penalty: Penalty, x: &[f64]) -> Vec<f64> {
    let power = match penalty {
        Penalty::Linear => 1,
        Penalty::Power(p) => p,
    };
    let mut v = x.to_vec();
    for _ in 0..power {
        v = lap.mul_vec(&v);
    }
    v
}

/// Minimizes `‖P_S^{-1/2}(M w − y)‖² + γ wᵀ g(L) w` by Jacobi-preconditioned
/// conjugate gradients on `(Mᵀ P_S⁻¹ M + γ g(L)) w = Mᵀ P_S⁻¹ y`.
pub fn decode_tikhonov(plan: &SamplingPlan, y: &[f64], lap: &Laplacian, opts: &TikhonovOptions) -> Result<CgOutcome> {
    let n = lap.n();
    check_measurements(plan, y, n)?;
    if !lap.is_symmetric() {
        return invalid("the Tikhonov decoder needs a symmetric Laplacian");
    }
    if !(opts.gamma > 0.0) {
        return invalid(format!("gamma must be positive, got {}", opts.gamma));
    }
    if matches!(opts.penalty, Penalty::Power(0)) {
        return invalid("penalty power must be at least 1");
    }
    let mut sample_diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for ((&i, &c), &v) in plan.indices.iter().zip(&plan.corrections).zip(y) {
        sample_diag[i] += 1.0 / c;
        rhs[i] += v / c;
    }
    let matrix = lap.matrix();
    let apply = |x: &[f64]| -> Vec<f64> {
        let g = apply_penalty(matrix, opts.penalty, x);
        (0..n).map(|i| sample_diag[i] * x[i] + opts.gamma * g[i]).collect()
    };
    let power = match opts.penalty {
        Penalty::Linear => 1,
        Penalty::Power(p) => p as i32,
    };
    let lap_diag = matrix.diagonal();
    let precond: Vec<f64> = (0..n)
        .map(|i| {
            let d = sample_diag[i] + opts.gamma * lap_diag[i].max(0.0).powi(power);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut rz = dot(&r, &z);
    // residuals are measured in the preconditioned norm: the sampled rows
    // carry weights of order 1/p and would otherwise hide the rows that
    // only the penalty reaches
    let rz0 = rz;
    if rz0 == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        });
    }
    let mut p = z.clone();
    let (mut best_x, mut best_res) = (x.clone(), 1.0);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&ap).for_each(|(a, b)| *a -= alpha * b);
        z = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let rz_new = dot(&r, &z);
        let res = (rz_new.max(0.0) / rz0).sqrt();
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= opts.tol {
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
    }
    let converged = best_res <= opts.tol;
    if !converged {
        log::warn!("conjugate gradients stopped after {iterations} iterations at relative residual {best_res:e}");
    }
    Ok(CgOutcome {
        solution: best_x,
        iterations,
        relative_residual: best_res,
        converged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    par::sum_range(a.len(), |i| a[i] * b[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    LeastSquares,
    Tikhonov(TikhonovOptions),
}

/// Where the `U_k` used for sampling, reduced k-means and decoding comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    /// Exact eigenvectors.
    Exact,
    /// Filtered random projection with the cut-off estimated by eigencount;
    /// `U_k` is the top-`k` left singular subspace of the features.
    Compressive { projection_dim: usize, order: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressiveOptions {
    pub k: usize,
    pub m: usize,
    pub method: SamplingMethod,
    pub decoder: Decoder,
    pub source: EmbeddingSource,
    pub variant: LaplacianVariant,
    /// Weight the reduced k-means by the inverse corrections.
    pub weighted: bool,
    pub n_restarts: usize,
    pub seed: u64,
    pub eig: EigOptions,
}

impl CompressiveOptions {
    pub fn new(k: usize, m: usize) -> Self {
        Self {
            k,
            m,
            method: SamplingMethod::Leverage,
            decoder: Decoder::Tikhonov(TikhonovOptions::default()),
            source: EmbeddingSource::Exact,
            variant: LaplacianVariant::Normalized,
            weighted: true,
            n_restarts: 10,
            seed: 0,
            eig: EigOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompressiveResult {
    pub plan: SamplingPlan,
    pub embedding: Embedding,
    /// Labels of the sampled nodes from the reduced k-means.
    pub reduced: Partition,
    /// Decoded indicator vectors, one column per cluster.
    pub decoded: DMatrix<f64>,
    pub partition: Partition,
}

/// Sample, cluster the sampled embedding rows, decode the reduced
/// indicators on the whole graph and assign each node to the cluster whose
/// normalized decoded indicator is largest there.
pub fn compressive_spectral_clustering(graph: &SimilarityGraph, opts: &CompressiveOptions) -> Result<CompressiveResult> {
    let (n, k) = (graph.n(), opts.k);
    if k == 0 || (opts.m < k && opts.method != SamplingMethod::All) || k > n {
        return invalid(format!("need 0 < k <= m and k <= n, got k = {k}, m = {}, n = {n}", opts.m));
    }
    if opts.variant == LaplacianVariant::RandomWalk {
        return invalid("compressive clustering needs a symmetric Laplacian");
    }
    let lap = laplacian(graph, opts.variant)?;
    let (embedding, u_k) = match opts.source {
        EmbeddingSource::Exact => {
            let e = spectral_embedding(&lap, k, &opts.eig)?;
            let u = e.basis().clone();
            (e, u)
        }
        EmbeddingSource::Compressive { projection_dim, order } => {
            let est = estimate_lambda_star(
                &lap,
                k,
                &EigencountOptions {
                    seed: derive_seed(opts.seed, 2),
                    ..EigencountOptions::default()
                },
            )?;
            let e = random_projection_embedding(
                &lap,
                k,
                &ProjectionOptions {
                    m: projection_dim,
                    lambda_star: est.lambda_star,
                    order,
                    entries: ProjectionEntries::Gaussian,
                    seed: derive_seed(opts.seed, 3),
                },
            )?;
            let u = top_left_singular(e.basis(), k)?;
            (e, u)
        }
    };
    let plan = sample_nodes(opts.method, &u_k, opts.m, derive_seed(opts.seed, 0))?;
    let sampled = embedding.to_point_set()?.select(&plan.indices);
    // equal corrections do not change the k-means objective
    let uniform = plan.corrections.iter().all(|&c| c == plan.corrections[0]);
    let weights: Option<Vec<f64>> = (opts.weighted && !uniform).then(|| plan.corrections.iter().map(|c| 1.0 / c).collect());
    let reduced = kmeans(
        &sampled,
        k,
        weights.as_deref(),
        &KMeansOptions {
            init: InitStrategy::KMeansPlusPlus,
            n_restarts: opts.n_restarts,
            lloyd: LloydOptions::default(),
            seed: opts.seed,
        },
    )?
    .partition;
    let indicators: Vec<Vec<f64>> = (0..k)
        .map(|l| reduced.labels().iter().map(|&r| if r == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let decoded_cols: Vec<Result<Vec<f64>>> = par::map_slice(&indicators, |y| match opts.decoder {
        Decoder::LeastSquares => decode_least_squares(&plan, y, &u_k),
        Decoder::Tikhonov(t) => decode_tikhonov(&plan, y, &lap, &t).map(|o| o.solution),
    });
    let mut decoded = DMatrix::zeros(n, k);
    for (l, col) in decoded_cols.into_iter().enumerate() {
        decoded.set_column(l, &DVector::from_vec(col?));
    }
    let norms: Vec<f64> = decoded.column_iter().map(|c| c.norm()).collect();
    let labels: Vec<usize> = (0..n)
        .map(|j| {
            let mut best = (0, f64::NEG_INFINITY);
            for l in 0..k {
                let v = if norms[l] > 0.0 {
                    decoded[(j, l)] / norms[l]
                } else {
                    f64::NEG_INFINITY
                };
                if v > best.1 {
                    best = (l, v);
                }
            }
            best.0
        })
        .collect();
    let mut partition = Partition::new(labels, k)?;
    partition.canonicalize();
    Ok(CompressiveResult {
        plan,
        embedding,
        reduced,
        decoded,
        partition,
    })
}

/// Orthonormal top-`k` left singular vectors of `x`.
fn top_left_singular(x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if x.ncols() < k {
        return Err(Error::RankDeficient {
            rank: x.ncols(),
            required: k,
        });
    }
    let gram = x.transpose() * x;
    let (vals, vecs) = sym_eigen_descending(&gram);
    let top = vals[0].max(0.0);
    if vals[k - 1] <= 1e-12 * top {
        return Err(Error::RankDeficient {
            rank: vals.iter().filter(|&&v| v > 1e-12 * top).count(),
            required: k,
        });
    }
    let mut u = orthonormalize(&(x * vecs.columns(0, k)));
    fix_column_signs(&mut u);
    Ok(u)
}
