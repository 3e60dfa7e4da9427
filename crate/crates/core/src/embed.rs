//! Spectral embeddings: exact Laplacian eigenvectors, Chebyshev low-pass
//! filtering, eigencount search for the cut-off and random projection onto
//! the filtered eigenspace.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigs::{smallest_eigenpairs, EigOptions};
use crate::error::{invalid, Error, Result};
use crate::graph::{Laplacian, LaplacianVariant, PointSet};
use crate::linalg::{gaussian_matrix, CsrMatrix};
use crate::par;
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowNormalization {
    None,
    UnitRow,
}

impl RowNormalization {
    /// Unit rows for the normalized Laplacian, raw rows otherwise.
    pub fn for_variant(variant: LaplacianVariant) -> Self {
        match variant {
            LaplacianVariant::Normalized => RowNormalization::UnitRow,
            _ => RowNormalization::None,
        }
    }
}

/// Rows of `features` are the embedded points.
#[derive(Debug, Clone)]
pub struct Embedding {
    basis: DMatrix<f64>,
    features: DMatrix<f64>,
    normalization: RowNormalization,
    source_variant: LaplacianVariant,
    eigenvalues: Option<Vec<f64>>,
}

impl Embedding {
    /// Wraps column vectors `basis` (n × k'), normalizing rows as requested.
    /// Zero rows stay zero.
    pub fn new(basis: DMatrix<f64>, source_variant: LaplacianVariant, normalization: RowNormalization) -> Self {
        let mut features = basis.clone();
        if normalization == RowNormalization::UnitRow {
            for mut row in features.row_iter_mut() {
                let norm = row.norm();
                if norm > 0.0 {
                    row /= norm;
                }
            }
        }
        Self {
            basis,
            features,
            normalization,
            source_variant,
            eigenvalues: None,
        }
    }

    pub fn with_eigenvalues(mut self, values: Vec<f64>) -> Self {
        self.eigenvalues = Some(values);
        self
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Column vectors before row normalization.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn normalization(&self) -> RowNormalization {
        self.normalization
    }

    pub fn source_variant(&self) -> LaplacianVariant {
        self.source_variant
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn to_point_set(&self) -> Result<PointSet> {
        PointSet::from_matrix(&self.features)
    }
}

/// The `k` smallest-eigenvalue eigenvectors of `lap`, rows normalized per
/// the variant. For the random-walk Laplacian the vectors are obtained from
/// the normalized one as `D^{-1/2} v` and scaled to unit length.
pub fn spectral_embedding(lap: &Laplacian, k: usize, opts: &EigOptions) -> Result<Embedding> {
    let n = lap.n();
    if k == 0 || k > n {
        return invalid(format!("need 0 < k <= n, got k = {k}, n = {n}"));
    }
    let variant = lap.variant();
    let (values, basis) = match variant {
        LaplacianVariant::RandomWalk => {
            let sqrt_d: Vec<f64> = lap.degrees().iter().map(|d| d.sqrt()).collect();
            let inv_sqrt_d: Vec<f64> = sqrt_d.iter().map(|s| 1.0 / s).collect();
            let sym = lap.matrix().scale(&sqrt_d, &inv_sqrt_d);
            let res = smallest_eigenpairs(&sym, k, opts)?;
            let mut u = res.vectors;
            for mut col in u.column_iter_mut() {
                col.iter_mut().zip(&inv_sqrt_d).for_each(|(v, s)| *v *= s);
                let norm = col.norm();
                col /= norm;
            }
            (res.values, u)
        }
        _ => {
            let res = smallest_eigenpairs(lap.matrix(), k, opts)?;
            (res.values, res.vectors)
        }
    };
    Ok(Embedding::new(basis, variant, RowNormalization::for_variant(variant)).with_eigenvalues(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterResponse {
    /// `h ≡ 1`.
    AllPass,
    /// `h(λ) = 1` for `λ ≤ λ_*`, 0 above.
    IdealStep,
    /// Step with a raised-cosine transition of width `0.1 λ_*` centred on `λ_*`.
    SmoothedStep,
}

impl FilterResponse {
    pub fn eval(self, lambda: f64, lambda_star: f64) -> f64 {
        match self {
            FilterResponse::AllPass => 1.0,
            FilterResponse::IdealStep => {
                if lambda <= lambda_star {
                    1.0
                } else {
                    0.0
                }
            }
            FilterResponse::SmoothedStep => {
                let half = 0.05 * lambda_star;
                if lambda <= lambda_star - half {
                    1.0
                } else if lambda >= lambda_star + half {
                    0.0
                } else {
                    let t = (lambda - (lambda_star - half)) / (2.0 * half);
                    0.5 * (1.0 + (std::f64::consts::PI * t).cos())
                }
            }
        }
    }
}

/// Degree-`c` Chebyshev approximation of a response on `[0, λ_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    response: FilterResponse,
    order: usize,
    lambda_star: f64,
    lambda_max: f64,
    coeffs: Vec<f64>,
}

impl SpectralFilter {
    /// Coefficients come from Chebyshev–Gauss quadrature of the response.
    /// With `jackson` set they are multiplied by the Jackson damping factors,
    /// which trade a wider transition for the absence of Gibbs overshoot.
    pub fn new(response: FilterResponse, order: usize, lambda_star: f64, lambda_max: f64, jackson: bool) -> Result<Self> {
        if order == 0 {
            return invalid("filter order must be at least 1");
        }
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return invalid(format!("lambda_max must be positive, got {lambda_max}"));
        }
        if !(lambda_star > 0.0 && lambda_star < lambda_max) {
            return Err(Error::CutoffOutOfRange { lambda_star, lambda_max });
        }
        let nodes = (4 * (order + 1)).max(1024);
        let samples: Vec<(f64, f64)> = (0..nodes)
            .map(|q| {
                let theta = std::f64::consts::PI * (q as f64 + 0.5) / nodes as f64;
                let lambda = 0.5 * lambda_max * (theta.cos() + 1.0);
                (theta, response.eval(lambda, lambda_star))
            })
            .collect();
        let mut coeffs: Vec<f64> = (0..=order)
            .map(|j| {
                let s: f64 = samples.iter().map(|&(theta, h)| h * (j as f64 * theta).cos()).sum();
                2.0 * s / nodes as f64
            })
            .collect();
        if jackson {
            let a = std::f64::consts::PI / (order as f64 + 2.0);
            for (j, c) in coeffs.iter_mut().enumerate() {
                let j = j as f64;
                let c2 = order as f64 + 2.0;
                let g = ((1.0 - j / c2) * a.sin() * (j * a).cos() + (j * a).sin() * a.cos() / c2) / a.sin();
                *c *= g;
            }
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("non-finite Chebyshev coefficient");
        }
        Ok(Self {
            response,
            order,
            lambda_star,
            lambda_max,
            coeffs,
        })
    }

    /// Smoothed low-pass filter with Jackson damping.
    pub fn low_pass(lambda_star: f64, order: usize, lambda_max: f64) -> Result<Self> {
        Self::new(FilterResponse::SmoothedStep, order, lambda_star, lambda_max, true)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn response(&self) -> FilterResponse {
        self.response
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Target response at `lambda`.
    pub fn target(&self, lambda: f64) -> f64 {
        self.response.eval(lambda, self.lambda_star)
    }

    /// Polynomial value at `lambda` (Clenshaw recurrence).
    pub fn eval(&self, lambda: f64) -> f64 {
        let x = 2.0 * lambda / self.lambda_max - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + 0.5 * self.coeffs[0]
    }

    /// `sup |p_c − h|` over a uniform grid of `points` values in `[0, λ_max]`.
    pub fn max_error(&self, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let lambda = self.lambda_max * i as f64 / (points - 1) as f64;
                (self.eval(lambda) - self.target(lambda)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `p_c(L) v` for one vector via the three-term recurrence on
/// `L̃ = (2/λ_max) L − I`.
fn chebyshev_column(matrix: &CsrMatrix, filter: &SpectralFilter, v: &[f64]) -> Vec<f64> {
    let scale = 2.0 / filter.lambda_max;
    let shifted = |x: &[f64]| -> Vec<f64> {
        let mut y = matrix.mul_vec(x);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = scale * *yi - xi);
        y
    };
    let c = filter.coeffs();
    let mut out: Vec<f64> = v.iter().map(|x| 0.5 * c[0] * x).collect();
    let mut prev = v.to_vec();
    let mut cur = shifted(v);
    out.iter_mut().zip(&cur).for_each(|(o, t)| *o += c[1] * t);
    for &cj in &c[2..] {
        let mut next = shifted(&cur);
        next.iter_mut().zip(&prev).for_each(|(nx, p)| *nx = 2.0 * *nx - p);
        out.iter_mut().zip(&next).for_each(|(o, t)| *o += cj * t);
        prev = cur;
        cur = next;
    }
    out
}

/// Applies `p_c(L)` to every column of `vectors`, in parallel over columns.
pub fn chebyshev_apply(lap: &Laplacian, filter: &SpectralFilter, vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if vectors.nrows() != lap.n() {
        return Err(Error::DimensionMismatch {
            expected: lap.n(),
            got: vectors.nrows(),
        });
    }
    let cols = par::map_range(vectors.ncols(), |j| {
        chebyshev_column(lap.matrix(), filter, vectors.column(j).as_slice())
    });
    Ok(DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| cols[j][i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigencountOptions {
    /// Probe columns; defaults to `⌈4 k² ln n⌉`.
    pub m_probe: Option<usize>,
    /// Polynomial order; defaults to an order that resolves a transition
    /// band of width `0.1 λ` at each trial `λ`, capped at `max_order`.
    pub order: Option<usize>,
    pub max_order: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for EigencountOptions {
    fn default() -> Self {
        Self {
            m_probe: None,
            order: None,
            max_order: 4000,
            max_steps: 60,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaStarEstimate {
    pub lambda_star: f64,
    /// Eigencount estimate at the returned cut-off.
    pub count: f64,
    pub steps: usize,
    pub m_probe: usize,
}

fn count_order(lambda: f64, lambda_max: f64, opts: &EigencountOptions) -> usize {
    opts.order
        .unwrap_or_else(|| ((40.0 * lambda_max / lambda).ceil() as usize).clamp(32, opts.max_order))
}

/// Eigencount estimate `‖p_c(L) R‖_F²` at cut-off `lambda`, `R` having
/// i.i.d. `N(0, 1/m)` entries.
pub fn eigencount(lap: &Laplacian, lambda: f64, probe: &DMatrix<f64>, order: usize) -> Result<f64> {
    let filter = SpectralFilter::new(FilterResponse::SmoothedStep, order, lambda, lap.lambda_max_bound(), true)?;
    let y = chebyshev_apply(lap, &filter, probe)?;
    Ok(y.norm_squared())
}

/// Dichotomy on `(0, λ_max]` for a cut-off whose estimated eigencount
/// rounds to `k`.
pub fn estimate_lambda_star(lap: &Laplacian, k: usize, opts: &EigencountOptions) -> Result<LambdaStarEstimate> {
    let n = lap.n();
    if k == 0 || k >= n {
        return invalid(format!("need 0 < k < n, got k = {k}, n = {n}"));
    }
    let m_probe = opts
        .m_probe
        .unwrap_or_else(|| (4.0 * (k * k) as f64 * (n as f64).ln()).ceil() as usize)
        .max(1);
    let mut rng = stream_rng(opts.seed, 0);
    let probe = gaussian_matrix(n, m_probe, 1.0 / (m_probe as f64).sqrt(), &mut rng);
    let lambda_max = lap.lambda_max_bound();
    let (mut lo, mut hi) = (0.0, lambda_max);
    for step in 1..=opts.max_steps {
        let mid = 0.5 * (lo + hi);
        let count = eigencount(lap, mid, &probe, count_order(mid, lambda_max, opts))?;
        log::debug!("eigencount step {step}: lambda = {mid:.6e}, count = {count:.3}");
        match count.round() as usize {
            c if c == k => {
                return Ok(LambdaStarEstimate {
                    lambda_star: mid,
                    count,
                    steps: step,
                    m_probe,
                })
            }
            c if c < k => lo = mid,
            _ => hi = mid,
        }
    }
    Err(Error::DichotomyBudget { steps: opts.max_steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionEntries {
    /// `N(0, 1/m)`.
    #[default]
    Gaussian,
    /// `√(3/m) · {−1, 0, +1}` with probabilities `{1/6, 2/3, 1/6}`.
    Sparse,
}

/// `n × m` random matrix with centered i.i.d. entries of variance `1/m`.
pub fn projection_matrix<R: Rng + ?Sized>(n: usize, m: usize, entries: ProjectionEntries, rng: &mut R) -> DMatrix<f64> {
    let scale = 1.0 / (m as f64).sqrt();
    match entries {
        ProjectionEntries::Gaussian => DMatrix::from_fn(n, m, |_, _| scale * rng.sample::<f64, _>(StandardNormal)),
        ProjectionEntries::Sparse => {
            let s = 3f64.sqrt() * scale;
            DMatrix::from_fn(n, m, |_, _| match rng.random_range(0..6u8) {
                0 => -s,
                1 => s,
                _ => 0.0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    pub m: usize,
    pub lambda_star: f64,
    pub order: usize,
    pub entries: ProjectionEntries,
    pub seed: u64,
}

/// Features `p_c(L) R`: a random projection of the low-pass eigenspace,
/// rows normalized per the variant.
pub fn random_projection_embedding(lap: &Laplacian, k: usize, opts: &ProjectionOptions) -> Result<Embedding> {
    if opts.m < k {
        return invalid(format!("projection dimension m = {} is below k = {k}", opts.m));
    }
    let filter = SpectralFilter::low_pass(opts.lambda_star, opts.order, lap.lambda_max_bound())?;
    let r = projection_matrix(lap.n(), opts.m, opts.entries, &mut stream_rng(opts.seed, 0));
    let y = chebyshev_apply(lap, &filter, &r)?;
    Ok(Embedding::new(y, lap.variant(), RowNormalization::for_variant(lap.variant())))
}
