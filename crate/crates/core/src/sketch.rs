//! Kernel-stage sketches: Nyström low-rank approximation, Nyström and
//! column-sampling spectral embeddings, and random Fourier features.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::{Embedding, RowNormalization};
use crate::error::{invalid, Error, Result};
use crate::graph::{rbf, top_k_column, LaplacianVariant, PointSet, SimilarityGraph};
use crate::kmeans::draw_proportional;
use crate::linalg::{fix_column_signs, orthonormalize, sym_eigen_descending};
use crate::par;
use crate::seeding::stream_rng;

/// Singular values or eigenvalue magnitudes below this fraction of the
/// largest are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// Column access to a symmetric PSD matrix.
pub trait ColumnAccess: Sync {
    fn dim(&self) -> usize;

    fn column(&self, j: usize) -> Vec<f64>;

    /// Columns `idx` as an `n × |idx|` matrix.
    fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        let cols = par::map_slice(idx, |&j| self.column(j));
        DMatrix::from_fn(self.dim(), idx.len(), |i, c| cols[c][i])
    }
}

impl ColumnAccess for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        DMatrix::column(self, j).iter().copied().collect()
    }
}

/// The full RBF kernel matrix (unit diagonal), evaluated on demand.
#[derive(Debug, Clone, Copy)]
pub struct RbfKernel<'a> {
    pub points: &'a PointSet,
    pub sigma: f64,
}

impl ColumnAccess for RbfKernel<'_> {
    fn dim(&self) -> usize {
        self.points.n()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let pj = self.points.row(j);
        (0..self.points.n()).map(|i| rbf(self.points.row(i), pj, self.sigma)).collect()
    }
}

impl RbfKernel<'_> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        self.columns(&(0..self.dim()).collect::<Vec<_>>())
    }
}

/// `m` distinct indices drawn uniformly from `0..n`, in draw order.
pub fn uniform_sample(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m > n {
        return invalid(format!("need 0 < m <= n, got m = {m}, n = {n}"));
    }
    Ok(sample_indices(&mut stream_rng(seed, 0), n, m).into_vec())
}

/// `m` indices drawn i.i.d. with replacement from the distribution `probs`.
pub fn iid_sample(probs: &[f64], m: usize, seed: u64) -> Result<Vec<usize>> {
    if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return invalid("sampling probabilities must be finite and nonnegative");
    }
    let total = par::sum_range(probs.len(), |i| probs[i]);
    if !(total > 0.0) {
        return invalid("sampling probabilities sum to zero");
    }
    let mut rng = stream_rng(seed, 0);
    Ok((0..m).map(|_| draw_proportional(probs, total, &mut rng)).collect())
}

/// Squared row norms of an orthonormal `n × k` basis, divided by `k`.
pub fn leverage_scores(u: &DMatrix<f64>) -> Vec<f64> {
    let k = u.ncols() as f64;
    u.row_iter().map(|r| r.norm_squared() / k).collect()
}

/// Sampled blocks and the eigendecomposition of the principal block.
#[derive(Debug, Clone)]
pub struct NystromSketch {
    pub indices: Vec<usize>,
    /// `A(S, S)`, taken from the rows `S` of `c`.
    pub b: DMatrix<f64>,
    /// `A(:, S)`.
    pub c: DMatrix<f64>,
    /// Eigenvalues of `b` by decreasing magnitude.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Eigenvalues above `PINV_RTOL` times the largest magnitude.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct NystromApprox {
    pub sketch: NystromSketch,
    pub k: usize,
    /// Orthonormal top-`k` eigenvectors of the rank-`k` approximation.
    pub v_k: DMatrix<f64>,
}

impl NystromApprox {
    fn pinv_part(&self, count: usize) -> DMatrix<f64> {
        let s = &self.sketch;
        let m = s.b.nrows();
        let mut out = DMatrix::zeros(m, m);
        for c in 0..count.min(s.rank) {
            let q = s.eigenvectors.column(c);
            out += (q * q.transpose()) / s.eigenvalues[c];
        }
        out
    }

    /// `C B⁺ Cᵀ` (dense `n × n`).
    pub fn approx(&self) -> DMatrix<f64> {
        let c = &self.sketch.c;
        c * self.pinv_part(self.sketch.rank) * c.transpose()
    }

    /// `C B_k⁺ Cᵀ` (dense `n × n`).
    pub fn approx_k(&self) -> DMatrix<f64> {
        let c = &self.sketch.c;
        c * self.pinv_part(self.k) * c.transpose()
    }
}

/// Nyström approximation from the columns `s` of a PSD matrix.
/// Indices may repeat (sampling with replacement).
pub fn nystrom<A: ColumnAccess + ?Sized>(a: &A, s: &[usize], k: usize) -> Result<NystromApprox> {
    let n = a.dim();
    if k == 0 || s.len() < k {
        return invalid(format!("need 0 < k <= m, got k = {k}, m = {}", s.len()));
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return invalid(format!("sample index {bad} out of range for n = {n}"));
    }
    let c = a.columns(s);
    let b = DMatrix::from_fn(s.len(), s.len(), |r, col| c[(s[r], col)]);
    let (vals, vecs) = sym_eigen_descending(&b);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&x, &y| vals[y].abs().total_cmp(&vals[x].abs()).then(x.cmp(&y)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut eigenvectors = DMatrix::zeros(s.len(), s.len());
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vecs.column(src));
    }
    let top = eigenvalues.first().map_or(0.0, |v| v.abs());
    let rank = eigenvalues.iter().take_while(|v| v.abs() > PINV_RTOL * top).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    let qk = eigenvectors.columns(0, k).into_owned();
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(k, eigenvalues[..k].iter().map(|v| 1.0 / v)));
    let mut v_k = orthonormalize(&(&c * qk * inv));
    fix_column_signs(&mut v_k);
    Ok(NystromApprox {
        sketch: NystromSketch {
            indices: s.to_vec(),
            b,
            c,
            eigenvalues,
            eigenvectors,
            rank,
        },
        k,
        v_k,
    })
}

/// Kernel columns `K(:, S_j)` with the self-similarity entry zeroed and, when
/// `k_nn` is given, only the `k_nn` largest entries of each column kept.
pub fn sampled_kernel_columns(points: &PointSet, s: &[usize], sigma: f64, k_nn: Option<usize>) -> Result<DMatrix<f64>> {
    let n = points.n();
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return invalid(format!("sample index {bad} out of range for n = {n}"));
    }
    let cols = par::map_slice(s, |&j| {
        let pj = points.row(j);
        let mut col: Vec<f64> = (0..n).map(|i| if i == j { 0.0 } else { rbf(points.row(i), pj, sigma) }).collect();
        if let Some(k_nn) = k_nn {
            let kept = top_k_column(&col, Some(j), k_nn.min(n - 1));
            col.iter_mut().for_each(|v| *v = 0.0);
            for (i, v) in kept {
                col[i] = v;
            }
        }
        col
    });
    Ok(DMatrix::from_fn(n, s.len(), |i, c| cols[c][i]))
}

/// Principal block `s(K(S, S))`: zero diagonal, column-wise top-`k_nn`
/// within the block, then symmetrized as `B_sp + B_spᵀ`. Without `k_nn` the
/// block is the kernel restricted to `S` with zero diagonal.
fn sampled_kernel_block(points: &PointSet, s: &[usize], sigma: f64, k_nn: Option<usize>) -> DMatrix<f64> {
    let m = s.len();
    let full = DMatrix::from_fn(m, m, |r, c| {
        if s[r] == s[c] {
            0.0
        } else {
            rbf(points.row(s[r]), points.row(s[c]), sigma)
        }
    });
    match k_nn {
        None => full,
        Some(k_nn) => {
            let mut sp = DMatrix::zeros(m, m);
            for c in 0..m {
                let col: Vec<f64> = full.column(c).iter().copied().collect();
                for (r, v) in top_k_column(&col, Some(c), k_nn.min(m.saturating_sub(1)).max(1)) {
                    sp[(r, c)] = v;
                }
            }
            &sp + sp.transpose()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NystromScOptions {
    pub k: usize,
    pub sigma: f64,
    /// Column-wise sparsification inside the sampled blocks; `None` keeps
    /// every off-diagonal kernel entry.
    pub k_nn: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NystromScOutput {
    pub embedding: Embedding,
    /// Estimated degrees `diag(D_l)` before clamping.
    pub estimated_degrees: Vec<f64>,
    /// Number of estimated degrees that were nonpositive and clamped.
    pub clamped: usize,
}

/// Approximate normalized-Laplacian embedding from sampled kernel blocks.
///
/// 1. `B = s(K(S,S))`, `C = s(K(:,S))`
/// 2. `D_r = diag(B 1)`
/// 3. top-`k` eigenpairs `(Σ_k, Q_k)` of `D_r^{-1/2} B D_r^{-1/2}`
/// 4. `Q̃_k = C D_r^{-1/2} Q_k Σ_k^{-1}`
/// 5. `D_l = diag(Q̃_k Σ_k Q̃_kᵀ 1)`
/// 6. thin-QR orthonormalization of `D_l^{-1/2} Q̃_k`
pub fn nystrom_sc_embedding(points: &PointSet, s: &[usize], opts: &NystromScOptions) -> Result<NystromScOutput> {
    let (n, m, k) = (points.n(), s.len(), opts.k);
    if k == 0 || m < k {
        return invalid(format!("need 0 < k <= m, got k = {k}, m = {m}"));
    }
    let c = sampled_kernel_columns(points, s, opts.sigma, opts.k_nn)?;
    let b = sampled_kernel_block(points, s, opts.sigma, opts.k_nn);
    let dr: Vec<f64> = b.row_iter().map(|r| r.sum()).collect();
    if let Some(i) = dr.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ZeroDegree(s[i]));
    }
    let dr_inv_sqrt: Vec<f64> = dr.iter().map(|d| 1.0 / d.sqrt()).collect();
    let normalized = DMatrix::from_fn(m, m, |r, col| b[(r, col)] * dr_inv_sqrt[r] * dr_inv_sqrt[col]);
    let (vals, vecs) = sym_eigen_descending(&normalized);
    let sigma_k: Vec<f64> = vals.iter().take(k).copied().collect();
    if let Some(&bad) = sigma_k.iter().find(|v| v.abs() <= PINV_RTOL) {
        return invalid(format!("top-{k} eigenvalue {bad:e} of the sampled block is numerically zero"));
    }
    let qk = vecs.columns(0, k).into_owned();
    let mut right = qk;
    for (r, s) in dr_inv_sqrt.iter().enumerate() {
        right.row_mut(r).scale_mut(*s);
    }
    for (col, sv) in sigma_k.iter().enumerate() {
        right.column_mut(col).scale_mut(1.0 / sv);
    }
    let q_tilde = &c * right;
    // Q̃ Σ Q̃ᵀ 1 without forming the n × n product
    let mut t = q_tilde.transpose() * DVector::from_element(n, 1.0);
    t.iter_mut().zip(&sigma_k).for_each(|(v, s)| *v *= s);
    let dl = &q_tilde * t;
    let estimated_degrees: Vec<f64> = dl.iter().copied().collect();
    let mut clamped = 0;
    let mut scaled = q_tilde;
    for (i, &d) in estimated_degrees.iter().enumerate() {
        let d = if d > 0.0 {
            d
        } else {
            clamped += 1;
            1e-12
        };
        scaled.row_mut(i).scale_mut(1.0 / d.sqrt());
    }
    if clamped > 0 {
        log::warn!("{clamped} estimated degrees were nonpositive and clamped to 1e-12");
    }
    let mut u = orthonormalize(&scaled);
    fix_column_signs(&mut u);
    Ok(NystromScOutput {
        embedding: Embedding::new(u, LaplacianVariant::Normalized, RowNormalization::UnitRow),
        estimated_degrees,
        clamped,
    })
}

#[derive(Debug, Clone)]
pub struct ColumnSamplingOutput {
    pub embedding: Embedding,
    /// `√(n/m) Σ_C`, the rescaled singular values (approximate eigenvalues).
    pub scaled_singular_values: Vec<f64>,
    /// Numerical rank of `C`.
    pub rank: usize,
}

/// Column-sampling embedding of an `n × m` block `C`: left singular
/// vectors `C V_C Σ_C⁺`, first `min(k, rank)` columns.
pub fn column_sampling_embedding(c: &DMatrix<f64>, k: usize) -> Result<ColumnSamplingOutput> {
    let (n, m) = c.shape();
    if k == 0 || m < k {
        return invalid(format!("need 0 < k <= m, got k = {k}, m = {m}"));
    }
    // eigendecomposition of the m × m Gram matrix gives V_C and Σ_C²
    let gram = c.transpose() * c;
    let (vals, vecs) = sym_eigen_descending(&gram);
    let singular: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let top = singular.first().copied().unwrap_or(0.0);
    let rank = singular.iter().take_while(|&&s| s > PINV_RTOL.sqrt() * top).count();
    if rank == 0 {
        return Err(Error::RankDeficient { rank, required: k });
    }
    let keep = k.min(rank);
    if keep < k {
        log::warn!("sampled columns have numerical rank {rank} < k = {k}; embedding truncated");
    }
    let mut u = c * vecs.columns(0, keep);
    for (col, s) in singular.iter().take(keep).enumerate() {
        u.column_mut(col).scale_mut(1.0 / s);
    }
    // one re-orthonormalization pass removes the Gram-route rounding
    let mut u = orthonormalize(&u);
    fix_column_signs(&mut u);
    let scale = (n as f64 / m as f64).sqrt();
    Ok(ColumnSamplingOutput {
        embedding: Embedding::new(u, LaplacianVariant::Combinatorial, RowNormalization::None),
        scaled_singular_values: singular.iter().take(keep).map(|s| s * scale).collect(),
        rank,
    })
}

/// Column-sampling embedding of the sparsified kernel.
pub fn cspec_embedding(points: &PointSet, s: &[usize], k: usize, sigma: f64, k_nn: Option<usize>) -> Result<ColumnSamplingOutput> {
    column_sampling_embedding(&sampled_kernel_columns(points, s, sigma, k_nn)?, k)
}

/// Column-sampling embedding of a graph, using the adjacency columns `S`.
pub fn cspec_graph_embedding(graph: &SimilarityGraph, s: &[usize], k: usize) -> Result<ColumnSamplingOutput> {
    let n = graph.n();
    if let Some(&bad) = s.iter().find(|&&i| i >= n) {
        return invalid(format!("sample index {bad} out of range for n = {n}"));
    }
    let a = graph.adjacency();
    let mut c = DMatrix::zeros(n, s.len());
    for (col, &j) in s.iter().enumerate() {
        let (idx, vals) = a.row(j);
        for (&i, &v) in idx.iter().zip(vals) {
            c[(i, col)] = v;
        }
    }
    column_sampling_embedding(&c, k)
}

/// Random Fourier features of the RBF kernel.
#[derive(Debug, Clone)]
pub struct RffMatrix {
    /// `m × d` sampled frequencies.
    pub omega: DMatrix<f64>,
    /// `2m × n` feature matrix; column `i` is `ψ_i`.
    pub psi: DMatrix<f64>,
}

impl RffMatrix {
    pub fn m(&self) -> usize {
        self.omega.nrows()
    }

    /// `ψ_iᵀ ψ_j`, the kernel estimate.
    pub fn kernel_estimate(&self, i: usize, j: usize) -> f64 {
        self.psi.column(i).dot(&self.psi.column(j))
    }
}

/// Frequencies with i.i.d. `N(0, 2/σ²)` entries and features
/// `[cos(Ω p); sin(Ω p)] / √m`.
pub fn rff_features(points: &PointSet, m: usize, sigma: f64, seed: u64) -> Result<RffMatrix> {
    if m == 0 {
        return invalid("need at least one frequency");
    }
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    let (n, d) = (points.n(), points.d());
    let normal = Normal::new(0.0, 2f64.sqrt() / sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = stream_rng(seed, 0);
    let omega = DMatrix::from_fn(m, d, |_, _| normal.sample(&mut rng));
    let scale = 1.0 / (m as f64).sqrt();
    let cols = par::map_range(n, |i| {
        let p = points.row(i);
        let mut col = vec![0.0; 2 * m];
        for f in 0..m {
            let phase: f64 = (0..d).map(|c| omega[(f, c)] * p[c]).sum();
            let (s, c) = phase.sin_cos();
            col[f] = scale * c;
            col[m + f] = scale * s;
        }
        col
    });
    let psi = DMatrix::from_fn(2 * m, n, |r, i| cols[i][r]);
    Ok(RffMatrix { omega, psi })
}

#[derive(Debug, Clone)]
pub struct RffScOutput {
    pub embedding: Embedding,
    pub estimated_degrees: Vec<f64>,
    pub clamped: usize,
    /// Singular values of the degree-normalized feature matrix, decreasing.
    pub singular_values: Vec<f64>,
}

/// Approximate normalized-Laplacian embedding from random Fourier features:
/// degrees `d̂_i = ψ_iᵀ Σ_j ψ_j`, then the top-`k` right singular vectors of
/// `Ψ D̂^{-1/2}`.
pub fn rff_sc_embedding(rff: &RffMatrix, k: usize) -> Result<RffScOutput> {
    let (two_m, n) = rff.psi.shape();
    if k == 0 || k > two_m || k > n {
        return invalid(format!("need 0 < k <= min(2m, n), got k = {k}, 2m = {two_m}, n = {n}"));
    }
    let psi_bar: DVector<f64> = rff.psi.column_sum();
    let degrees: Vec<f64> = (0..n).map(|i| rff.psi.column(i).dot(&psi_bar)).collect();
    let mut clamped = 0;
    let mut normalized = rff.psi.clone();
    for (i, &d) in degrees.iter().enumerate() {
        let d = if d > 0.0 {
            d
        } else {
            clamped += 1;
            1e-12
        };
        normalized.column_mut(i).scale_mut(1.0 / d.sqrt());
    }
    if clamped > 0 {
        log::warn!("{clamped} estimated degrees were nonpositive and clamped to 1e-12");
    }
    // right singular vectors through the smaller of the two Gram matrices
    let (singular, u) = if two_m <= n {
        let gram = &normalized * normalized.transpose();
        let (vals, vecs) = sym_eigen_descending(&gram);
        let singular: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
        check_rank(&singular, k)?;
        let mut u = normalized.transpose() * vecs.columns(0, k);
        for (col, s) in singular.iter().take(k).enumerate() {
            u.column_mut(col).scale_mut(1.0 / s);
        }
        (singular, u)
    } else {
        let gram = normalized.transpose() * &normalized;
        let (vals, vecs) = sym_eigen_descending(&gram);
        let singular: Vec<f64> = vals.iter().take(two_m).map(|v| v.max(0.0).sqrt()).collect();
        check_rank(&singular, k)?;
        (singular, vecs.columns(0, k).into_owned())
    };
    let mut u = orthonormalize(&u);
    fix_column_signs(&mut u);
    Ok(RffScOutput {
        embedding: Embedding::new(u, LaplacianVariant::Normalized, RowNormalization::UnitRow),
        estimated_degrees: degrees,
        clamped,
        singular_values: singular,
    })
}

fn check_rank(singular: &[f64], k: usize) -> Result<()> {
    let top = singular.first().copied().unwrap_or(0.0);
    let rank = singular.iter().take_while(|&&s| s > PINV_RTOL.sqrt() * top).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, required: k });
    }
    Ok(())
}

/// Random orthogonal `n × n` matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormalize(&crate::linalg::gaussian_matrix(n, n, 1.0, rng))
}
