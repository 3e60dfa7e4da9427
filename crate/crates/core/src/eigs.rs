//! Partial symmetric eigensolver: block Lanczos with full
//! reorthogonalization and thick restarts.
//!
//! Each cycle grows an orthonormal block Krylov basis `V` up to `max_basis`
//! columns, keeps `A V` alongside it, and extracts Ritz pairs from the
//! projected matrix `Vᵀ A V`. On restart the `keep` smallest Ritz vectors are
//! retained and the residuals of the leading ones seed the next block, which
//! is the block form of a Krylov–Schur restart. The block size equals the
//! number of wanted pairs (capped at 16), so eigenvalues of multiplicity up to
//! that size are resolved, as happens for graphs with several components.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{fix_column_signs, gaussian_matrix, sym_eigen_ascending, CsrMatrix};

/// A symmetric linear operator.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;

    /// `A X` for a dense block `X`.
    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;

    fn to_dense(&self) -> DMatrix<f64> {
        self.apply_block(&DMatrix::identity(self.dim(), self.dim()))
    }
}

impl SymOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mul_dense(x)
    }

    fn norm_bound(&self) -> f64 {
        (0..self.nrows())
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        CsrMatrix::to_dense(self)
    }
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn norm_bound(&self) -> f64 {
        self.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigOptions {
    /// Residual tolerance relative to the operator norm bound.
    pub tol: f64,
    pub max_restarts: usize,
    /// Seed of the random starting block.
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_restarts: 2000,
            seed: 0x5eed_1a2c,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, sign-normalized.
    pub vectors: DMatrix<f64>,
    /// `‖A u − λ u‖` per pair.
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
}

/// The `k` smallest eigenpairs of a symmetric operator.
pub fn smallest_eigenpairs<A: SymOperator + ?Sized>(op: &A, k: usize, opts: &EigOptions) -> Result<EigResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    let block = k.min(16);
    let keep = (2 * k + 8).max(24).min(n);
    let max_basis = keep + (4 * block).max(24);
    if max_basis >= n {
        return dense_smallest(op, k);
    }

    let norm = op.norm_bound().max(f64::MIN_POSITIVE);
    let threshold = opts.tol * norm;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis = DMatrix::<f64>::zeros(n, 0);
    let mut image = DMatrix::<f64>::zeros(n, 0);
    let mut seed_block = gaussian_matrix(n, block, 1.0, &mut rng);
    let mut matvecs = 0;
    let mut best_residual = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        while basis.ncols() < max_basis {
            let add = block.min(max_basis - basis.ncols());
            let w = extend_orthonormal(&basis, seed_block.columns(0, add).into_owned(), &mut rng);
            let aw = op.apply_block(&w);
            matvecs += add;
            basis = hcat(&basis, &w);
            image = hcat(&image, &aw);
            seed_block = aw;
        }

        let h = basis.transpose() * &image;
        let (theta, s) = sym_eigen_ascending(&h);
        let s_keep = s.columns(0, keep).into_owned();
        let ritz = &basis * &s_keep;
        let ritz_image = &image * &s_keep;

        let mut residual_block = ritz_image.clone();
        for c in 0..keep {
            let t = theta[c];
            residual_block.column_mut(c).axpy(-t, &ritz.column(c), 1.0);
        }
        let residuals: Vec<f64> = (0..k).map(|c| residual_block.column(c).norm()).collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        best_residual = best_residual.min(worst);

        if worst <= threshold {
            let mut vectors = ritz.columns(0, k).into_owned();
            fix_column_signs(&mut vectors);
            return Ok(EigResult {
                values: theta.iter().take(k).copied().collect(),
                vectors,
                residuals,
                restarts: restart,
                matvecs,
            });
        }

        basis = ritz;
        image = ritz_image;
        seed_block = residual_block.columns(0, block).into_owned();
    }

    Err(Error::NotConverged {
        restarts: opts.max_restarts,
        best_residual,
    })
}

/// Dense fallback: full symmetric eigendecomposition.
pub fn dense_smallest<A: SymOperator + ?Sized>(op: &A, k: usize) -> Result<EigResult> {
    let a = op.to_dense();
    let (vals, vecs) = sym_eigen_ascending(&a);
    let mut vectors = vecs.columns(0, k).into_owned();
    fix_column_signs(&mut vectors);
    let av = &a * &vectors;
    let residuals = (0..k).map(|c| (av.column(c) - vectors.column(c) * vals[c]).norm()).collect();
    Ok(EigResult {
        values: vals.iter().take(k).copied().collect(),
        vectors,
        residuals,
        restarts: 0,
        matvecs: 0,
    })
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows().max(b.nrows()), a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.columns_mut(0, a.ncols()).copy_from(a);
    }
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Orthonormalizes the columns of `w` against `basis` and each other
/// (two passes of Gram–Schmidt). Columns that collapse are replaced by
/// fresh random directions.
fn extend_orthonormal(basis: &DMatrix<f64>, mut w: DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = w.nrows();
    for c in 0..w.ncols() {
        let mut attempts = 0;
        loop {
            let before = w.column(c).norm();
            let mut col = w.column(c).into_owned();
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    let coef = basis.transpose() * &col;
                    col -= basis * coef;
                }
                for p in 0..c {
                    let d = w.column(p).dot(&col);
                    col.axpy(-d, &w.column(p), 1.0);
                }
            }
            let after = col.norm();
            if after > 1e-10 * before && after > 1e-300 {
                w.set_column(c, &(col / after));
                break;
            }
            attempts += 1;
            assert!(attempts < 50, "could not extend an orthonormal basis of dimension {n}");
            let fresh = gaussian_matrix(n, 1, 1.0, rng);
            w.set_column(c, &fresh.column(0));
        }
    }
    w
}
