//! Gram matrix, PSD square root and the pair matrix whose singular values are
//! those of the empirical smoothed integral operator.
//!
//! For observations `y_1..y_N` and within-sequence pairs `(t, t+1)`, with
//! `W[i, j] = phi_h(y_i, y_j)` and `M = W^{1/2}`, the empirical operator has
//! the same nonzero singular values as the `N x N` matrix
//!
//! ```text
//! V = (1/n) * M[:, first] * M[second, :]
//! ```
//!
//! where `first`/`second` select the first and second member of every pair
//! (see [`build_pair_operator`]). The `n x n` block product
//! `(1/n) * M[second, second] * M[first, first]` ([`build_v`]) is the same
//! only when the principal blocks of `M` are square roots of the blocks of
//! `W`, which does not hold in general; it is kept as
//! [`PairConstruction::Submatrix`].

mod low_rank;
mod oracle;
mod series;

use faer::{Mat, MatRef, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use low_rank::{low_rank_sqrt, DenseGram, GramSource, LazyGram, LowRankSqrt};
pub use oracle::{quadrature_svd_oracle, QuadratureOperator, UniformGrid};
pub use series::{wrap_angle, DataKind, ObservedSeries};

use crate::error::{Error, Result};
use crate::kernels::CrossGram;

/// Negative eigenvalues down to `-DEFAULT_PSD_TOL * max(1, lambda_max)` are
/// treated as round-off and clamped to zero.
pub const DEFAULT_PSD_TOL: f64 = 1e-12;

/// Largest pair count for which the full SVD of `V` is computed.
pub const FULL_SVD_LIMIT: usize = 4000;

pub const DEFAULT_L_MAX: usize = 10;

/// Point indices (0-based) of the first and second member of every pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSelectors {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl PairSelectors {
    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }
}

/// Pairs `(t, t+1)` inside each sequence; no pair crosses a sequence boundary.
pub fn build_selectors(series: &ObservedSeries) -> PairSelectors {
    let mut first = Vec::with_capacity(series.n_pairs());
    let mut second = Vec::with_capacity(series.n_pairs());
    for (start, len) in series.sequence_ranges() {
        for t in start..start + len - 1 {
            first.push(t);
            second.push(t + 1);
        }
    }
    PairSelectors { first, second }
}

/// `W[i, j] = phi_h(y_i, y_j)` over all points; the upper triangle is computed
/// and mirrored so that `W` is exactly symmetric.
pub fn build_gram<K: CrossGram + ?Sized>(series: &ObservedSeries, kernel: &K) -> Result<Mat<f64>> {
    gram_from_points(series.values(), series.dim(), kernel)
}

/// [`build_gram`] over a bare row-major point buffer.
pub fn gram_from_points<K: CrossGram + ?Sized>(values: &[f64], dim: usize, kernel: &K) -> Result<Mat<f64>> {
    if kernel.dim() != dim || !values.len().is_multiple_of(dim) {
        return Err(Error::Shape(format!(
            "kernel dimension {} does not match data dimension {dim}",
            kernel.dim(),
        )));
    }
    let point = |i: usize| &values[i * dim..(i + 1) * dim];
    let n = values.len() / dim;
    let mut w = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        let yj = point(j);
        for i in 0..=j {
            let v = kernel.phi(point(i), yj);
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "kernel cross product is {v} for points {i} and {j}"
                )));
            }
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

fn check_symmetric(w: MatRef<'_, f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let n = w.nrows();
    let scale = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .fold(1.0f64, |m, (i, j)| m.max(w[(i, j)].abs()));
    for j in 0..n {
        for i in 0..j {
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Shape(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    w[(i, j)],
                    w[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Symmetric PSD square root through a full eigendecomposition.
///
/// Eigenvalues in `[-tol * max(1, lambda_max), 0)` are clamped to zero; anything
/// more negative is reported as [`Error::NotPsd`].
pub fn psd_sqrt(w: MatRef<'_, f64>, tol: f64) -> Result<Mat<f64>> {
    check_symmetric(w)?;
    let n = w.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // eigenvalues come sorted in nondecreasing order
    let lambda_min = s[0];
    let lambda_max = s[n - 1];
    let floor = -tol * lambda_max.max(1.0);
    if lambda_min < floor {
        return Err(Error::NotPsd {
            min_eigenvalue: lambda_min,
            floor,
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&k| s[k] > 0.0).collect();
    // B = U_+ diag(lambda^(1/4)), M = B B^T
    let b = Mat::from_fn(n, keep.len(), |i, c| u[(i, keep[c])] * s[keep[c]].sqrt().sqrt());
    let mut m = &b * b.transpose();
    for j in 0..n {
        for i in 0..j {
            m[(j, i)] = m[(i, j)];
        }
    }
    Ok(m)
}

/// The square-root factor of `W` fed to [`build_v`].
#[derive(Debug, Clone)]
pub enum SqrtFactor {
    Dense(Mat<f64>),
    LowRank(LowRankSqrt),
}

impl SqrtFactor {
    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            SqrtFactor::Dense(m) => m.clone(),
            SqrtFactor::LowRank(lr) => lr.to_dense(),
        }
    }
}

/// A pair matrix, either explicit or as `left * core * right^T`.
#[derive(Debug, Clone)]
pub enum PairMatrix {
    Dense(Mat<f64>),
    Factored {
        left: Mat<f64>,
        core: Mat<f64>,
        right: Mat<f64>,
    },
}

impl PairMatrix {
    pub fn n(&self) -> usize {
        match self {
            PairMatrix::Dense(v) => v.nrows(),
            PairMatrix::Factored { left, .. } => left.nrows(),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            PairMatrix::Dense(v) => v.clone(),
            PairMatrix::Factored { left, core, right } => left * core * right.transpose(),
        }
    }

    /// Leading singular values and the squared Frobenius norm.
    pub fn spectrum(&self, l_max: usize) -> Result<SingularSpectrum> {
        match self {
            PairMatrix::Dense(v) => singular_spectrum(v.as_ref(), l_max),
            PairMatrix::Factored { left, core, right } => {
                if l_max == 0 {
                    return Err(Error::Config("l_max must be at least 1".into()));
                }
                // V = Q1 (R1 core R2^T) Q2^T with orthonormal Q1, Q2
                let r1 = left.qr().thin_R().to_owned();
                let r2 = right.qr().thin_R().to_owned();
                let small = &r1 * core * r2.transpose();
                let frob_sq = frobenius_sq(small.as_ref());
                let mut sigma = small
                    .singular_values()
                    .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
                sigma.truncate(l_max.min(self.n()));
                sigma.resize(l_max.min(self.n()), 0.0);
                Ok(SingularSpectrum {
                    sigma,
                    frob_sq,
                    n_pairs: self.n(),
                })
            }
        }
    }
}

fn gather(m: MatRef<'_, f64>, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// `V = (1/n) M[second, second] M[first, first]`.
pub fn build_v(m: &SqrtFactor, sel: &PairSelectors) -> Result<PairMatrix> {
    let size = match m {
        SqrtFactor::Dense(d) => d.nrows(),
        SqrtFactor::LowRank(lr) => lr.basis().nrows(),
    };
    check_selectors(size, sel)?;
    let n = sel.len();
    let scale = 1.0 / n as f64;
    Ok(match m {
        SqrtFactor::Dense(d) => {
            let a = gather(d.as_ref(), &sel.first);
            let b = gather(d.as_ref(), &sel.second);
            let mut v = &b * &a;
            v *= faer::Scale(scale);
            PairMatrix::Dense(v)
        }
        SqrtFactor::LowRank(lr) => {
            let q = lr.basis();
            let k = q.ncols();
            let left = Mat::from_fn(n, k, |i, c| q[(sel.second[i], c)]);
            let right = Mat::from_fn(n, k, |i, c| q[(sel.first[i], c)]);
            let roots = lr.roots();
            let cross = left.transpose() * &right;
            let core = Mat::from_fn(k, k, |i, j| scale * roots[i] * cross[(i, j)] * roots[j]);
            PairMatrix::Factored { left, core, right }
        }
    })
}

fn check_selectors(size: usize, sel: &PairSelectors) -> Result<()> {
    if sel.is_empty() {
        return Err(Error::Shape("no consecutive pairs".into()));
    }
    if let Some(&bad) = sel.first.iter().chain(&sel.second).find(|&&i| i >= size) {
        return Err(Error::Shape(format!(
            "selector index {bad} out of range for {size} points"
        )));
    }
    Ok(())
}

/// `V = (1/n) M[:, first] M[second, :]`, an `N x N` matrix whose nonzero
/// singular values are those of the empirical smoothed operator.
///
/// With the low-rank factor `M = Q diag(r) Q^T` the result stays factored as
/// `Q core Q^T` with `core = (1/n) diag(r) Q[first, :]^T Q[second, :] diag(r)`.
pub fn build_pair_operator(m: &SqrtFactor, sel: &PairSelectors) -> Result<PairMatrix> {
    let size = match m {
        SqrtFactor::Dense(d) => d.nrows(),
        SqrtFactor::LowRank(lr) => lr.basis().nrows(),
    };
    check_selectors(size, sel)?;
    let n = sel.len();
    let scale = 1.0 / n as f64;
    Ok(match m {
        SqrtFactor::Dense(d) => {
            let a = Mat::from_fn(size, n, |i, t| d[(i, sel.first[t])]);
            let b = Mat::from_fn(n, size, |t, j| d[(sel.second[t], j)]);
            let mut v = &a * &b;
            v *= faer::Scale(scale);
            PairMatrix::Dense(v)
        }
        SqrtFactor::LowRank(lr) => {
            let q = lr.basis();
            let k = q.ncols();
            let qf = Mat::from_fn(n, k, |t, c| q[(sel.first[t], c)]);
            let qs = Mat::from_fn(n, k, |t, c| q[(sel.second[t], c)]);
            let roots = lr.roots();
            let cross = qf.transpose() * &qs;
            let core = Mat::from_fn(k, k, |i, j| scale * roots[i] * cross[(i, j)] * roots[j]);
            PairMatrix::Factored {
                left: q.to_owned(),
                core,
                right: q.to_owned(),
            }
        }
    })
}

/// Leading singular values of the pair matrix together with its squared
/// Frobenius norm, which gives every tail sum without a full SVD.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    /// Nonincreasing, `min(l_max, n)` entries.
    pub sigma: Vec<f64>,
    pub frob_sq: f64,
    /// Number of consecutive pairs behind the matrix; a bare matrix counts
    /// its rows.
    pub n_pairs: usize,
}

fn frobenius_sq(v: MatRef<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..v.ncols() {
        for i in 0..v.nrows() {
            acc += v[(i, j)] * v[(i, j)];
        }
    }
    acc
}

/// Top `min(l_max, n)` singular values and `||V||_F^2`.
///
/// Up to [`FULL_SVD_LIMIT`] rows the full SVD is used; above that a block
/// subspace iteration extracts the leading values only.
pub fn singular_spectrum(v: MatRef<'_, f64>, l_max: usize) -> Result<SingularSpectrum> {
    singular_spectrum_with_limit(v, l_max, FULL_SVD_LIMIT)
}

pub(crate) fn singular_spectrum_with_limit(
    v: MatRef<'_, f64>,
    l_max: usize,
    full_limit: usize,
) -> Result<SingularSpectrum> {
    if l_max == 0 {
        return Err(Error::Config("l_max must be at least 1".into()));
    }
    if v.nrows() != v.ncols() {
        return Err(Error::Shape("pair matrix must be square".into()));
    }
    let n = v.nrows();
    let keep = l_max.min(n);
    let frob_sq = frobenius_sq(v);
    let mut sigma = if n <= full_limit {
        v.singular_values()
            .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?
    } else {
        top_singular_values(v, keep)?
    };
    sigma.truncate(keep);
    Ok(SingularSpectrum {
        sigma,
        frob_sq,
        n_pairs: n,
    })
}

/// Randomized block subspace iteration for the `k` largest singular values.
fn top_singular_values(v: MatRef<'_, f64>, k: usize) -> Result<Vec<f64>> {
    let n = v.nrows();
    let block = (k + 10).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_d5bd);
    let omega: Mat<f64> = Mat::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (v * &omega).qr().compute_thin_Q();
    let mut previous: Vec<f64> = Vec::new();
    for _ in 0..300 {
        let z = (v.transpose() * &q).qr().compute_thin_Q();
        q = (v * &z).qr().compute_thin_Q();
        let projected = q.transpose() * v;
        let mut s = projected
            .singular_values()
            .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
        s.truncate(k);
        let converged = previous.len() == s.len()
            && s.iter()
                .zip(&previous)
                .all(|(a, b)| (a - b).abs() <= 1e-13 * s[0].max(f64::MIN_POSITIVE));
        if converged {
            return Ok(s);
        }
        previous = s;
    }
    Err(Error::Numeric(
        "subspace iteration for the leading singular values did not converge".into(),
    ))
}

/// Where the square root of the Gram matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SqrtMethod {
    /// Full eigendecomposition of the explicit `N x N` Gram matrix.
    Exact,
    /// Rank-`rank` approximation from pivoted columns; `W` is never formed.
    LowRank { rank: usize, tol: f64 },
}

/// Which matrix stands in for the empirical operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairConstruction {
    /// [`build_pair_operator`]: singular values equal the operator's.
    #[default]
    Operator,
    /// [`build_v`]: the `n x n` product of principal blocks of `M`.
    Submatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    pub l_max: usize,
    pub sqrt: SqrtMethod,
    pub psd_tol: f64,
    pub pair: PairConstruction,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            l_max: DEFAULT_L_MAX,
            sqrt: SqrtMethod::Exact,
            psd_tol: DEFAULT_PSD_TOL,
            pair: PairConstruction::Operator,
        }
    }
}

/// Everything built on the way to the spectrum.
#[derive(Debug, Clone)]
pub struct GramArtifacts {
    /// Absent when the low-rank path is used.
    pub w: Option<Mat<f64>>,
    pub m: SqrtFactor,
    pub v: PairMatrix,
    pub selectors: PairSelectors,
    pub h: f64,
}

/// Gram matrix, square root, selectors, pair matrix, spectrum.
pub fn estimate_operator_matrix(
    series: &ObservedSeries,
    kernel: &crate::kernels::KernelSpec,
    opts: &OperatorOptions,
) -> Result<(GramArtifacts, SingularSpectrum)> {
    let selectors = build_selectors(series);
    let (w, m) = match opts.sqrt {
        SqrtMethod::Exact => {
            let w = build_gram(series, kernel)?;
            let m = psd_sqrt(w.as_ref(), opts.psd_tol)?;
            (Some(w), SqrtFactor::Dense(m))
        }
        SqrtMethod::LowRank { rank, tol } => {
            if kernel.dim() != series.dim() {
                return Err(Error::Shape(format!(
                    "kernel dimension {} does not match data dimension {}",
                    kernel.dim(),
                    series.dim()
                )));
            }
            let lr = low_rank_sqrt(&LazyGram::new(series, kernel), rank, tol)?;
            (None, SqrtFactor::LowRank(lr))
        }
    };
    let v = match opts.pair {
        PairConstruction::Operator => build_pair_operator(&m, &selectors)?,
        PairConstruction::Submatrix => build_v(&m, &selectors)?,
    };
    let mut spectrum = v.spectrum(opts.l_max)?;
    spectrum.n_pairs = selectors.len();
    Ok((
        GramArtifacts {
            w,
            m,
            v,
            selectors,
            h: kernel.bandwidth(),
        },
        spectrum,
    ))
}
