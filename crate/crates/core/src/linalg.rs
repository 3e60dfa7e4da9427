//! Sparse and dense linear-algebra building blocks.
//!
//! Dense work goes through `nalgebra`; sparse matrices use a small
//! compressed-row type with sorted column indices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::par;

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in the
    /// order they appear; entries that end up exactly zero are dropped unless
    /// they sit on the diagonal and `keep_diagonal` is set.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)], keep_diagonal: bool) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in triplets {
            assert!(i < n_rows && j < n_cols, "triplet ({i}, {j}) out of bounds");
            per_row[i].push((j, v));
        }
        let rows = par::map_slice(&per_row, |entries| {
            let mut entries = entries.clone();
            // stable: duplicates keep insertion order for the summation
            entries.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (j, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            merged
        });
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                if v != 0.0 || (keep_diagonal && i == j) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds directly from per-row sorted `(col, value)` lists.
    pub(crate) fn from_sorted_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for &(j, v) in row {
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).filter(|&j| a[(i, j)] != 0.0).map(|j| (j, a[(i, j)])).collect())
            .collect();
        Self::from_sorted_rows(a.ncols(), rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn nrows(&self) -> usize {
        self.n_rows
    }

    pub fn ncols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// Iterates `(row, col, value)` over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_cols];
        for (i, j, v) in self.triplets() {
            rows[j].push((i, v));
        }
        Self::from_sorted_rows(self.n_rows, rows)
    }

    /// Exact structural and bitwise value symmetry.
    pub fn is_symmetric_exact(&self) -> bool {
        self.n_rows == self.n_cols && *self == self.transpose()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Scales entry `(i, j)` by `left[i] * right[j]`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, &l) in left.iter().enumerate().take(self.n_rows) {
            for p in out.indptr[i]..out.indptr[i + 1] {
                out.values[p] *= l * right[out.indices[p]];
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        par::for_each_chunk_mut(&mut y, par::REDUCE_CHUNK, |c, out| {
            let base = c * par::REDUCE_CHUNK;
            for (r, yi) in out.iter_mut().enumerate() {
                let (cols, vals) = self.row(base + r);
                *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            }
        });
        y
    }

    /// `Y = A X` for a dense block, parallel over the columns of `X`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols);
        let cols = par::map_range(x.ncols(), |c| {
            let xc = x.column(c);
            (0..self.n_rows)
                .map(|i| {
                    let (cj, vals) = self.row(i);
                    cj.iter().zip(vals).map(|(&j, &v)| v * xc[j]).sum::<f64>()
                })
                .collect::<Vec<f64>>()
        });
        let mut y = DMatrix::zeros(self.n_rows, x.ncols());
        for (c, col) in cols.into_iter().enumerate() {
            y.column_mut(c).copy_from_slice(&col);
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] = v;
        }
        a
    }
}

/// Symmetric eigendecomposition with eigenvalues ascending. Ties keep the
/// order returned by the underlying solver.
pub fn sym_eigen_ascending(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(a.nrows(), order.len());
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Symmetric eigendecomposition with eigenvalues in decreasing order.
pub fn sym_eigen_descending(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (vals, vecs) = sym_eigen_ascending(a);
    let n = vals.len();
    let values = DVector::from_iterator(n, (0..n).rev().map(|i| vals[i]));
    let mut vectors = DMatrix::zeros(vecs.nrows(), n);
    for c in 0..n {
        vectors.set_column(c, &vecs.column(n - 1 - c));
    }
    (values, vectors)
}

/// Flips each column so that its largest-magnitude entry is positive
/// (ties resolved at the lowest index).
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Orthonormal basis of the column span via thin Householder QR.
pub fn orthonormalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = x.shape();
    if m == 0 {
        return DMatrix::zeros(n, 0);
    }
    let q = x.clone().qr().q();
    q.columns(0, m.min(n)).into_owned()
}

/// Columns `idx` of `x` as a new matrix.
pub fn select_columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), idx.len());
    for (c, &j) in idx.iter().enumerate() {
        out.set_column(c, &x.column(j));
    }
    out
}

/// Rows `idx` of `x` as a new matrix.
pub fn select_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |r, c| x[(idx[r], c)])
}

/// `n × m` matrix of i.i.d. `N(0, std²)` entries, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(n: usize, m: usize, std: f64, rng: &mut R) -> DMatrix<f64> {
    let data: Vec<f64> = (0..n * m).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
    DMatrix::from_vec(n, m, data)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen_ascending(a);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Cosines of the principal angles between the spans of two matrices with
/// orthonormal columns, in decreasing order.
pub fn principal_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let m = a.transpose() * b;
    let sv = m.singular_values();
    let mut v: Vec<f64> = sv.iter().map(|s| s.min(1.0)).collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// Largest principal angle (radians) between two orthonormal bases of equal rank.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let cos = principal_cosines(a, b);
    let min_cos = cos.last().copied().unwrap_or(1.0);
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    min_cos.clamp(-1.0, 1.0).acos()
}

/// Frobenius norm of `A Aᵀ − B Bᵀ` computed without forming `n × n` products.
pub fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // ‖AAᵀ − BBᵀ‖²_F = ‖AᵀA‖² + ‖BᵀB‖² − 2‖AᵀB‖²
    let aa = (a.transpose() * a).norm_squared();
    let bb = (b.transpose() * b).norm_squared();
    let ab = (a.transpose() * b).norm_squared();
    (aa + bb - 2.0 * ab).max(0.0).sqrt()
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
