//! Low-rank square root of a PSD Gram matrix from greedily pivoted columns.
//!
//! Pivoted Cholesky is the symmetric form of adaptive cross approximation:
//! at each step the column with the largest remaining diagonal is taken, so
//! only `N` diagonal entries and `k` columns of `W` are ever evaluated.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::kernels::CrossGram;
use crate::operator::ObservedSeries;

/// Column access to a symmetric PSD matrix.
pub trait GramSource {
    fn size(&self) -> usize;
    fn diagonal(&self) -> Vec<f64>;
    fn column(&self, j: usize) -> Vec<f64>;
}

/// An explicit matrix.
pub struct DenseGram<'a>(pub MatRef<'a, f64>);

impl GramSource for DenseGram<'_> {
    fn size(&self) -> usize {
        self.0.nrows()
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.0[(i, i)]).collect()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.size()).map(|i| self.0[(i, j)]).collect()
    }
}

/// Gram entries evaluated on demand from the observations.
pub struct LazyGram<'a, K: CrossGram + ?Sized> {
    series: &'a ObservedSeries,
    kernel: &'a K,
}

impl<'a, K: CrossGram + ?Sized> LazyGram<'a, K> {
    pub fn new(series: &'a ObservedSeries, kernel: &'a K) -> Self {
        Self { series, kernel }
    }
}

impl<K: CrossGram + ?Sized> GramSource for LazyGram<'_, K> {
    fn size(&self) -> usize {
        self.series.n_points()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.series
            .points()
            .map(|p| self.kernel.phi(p, p))
            .collect()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let yj = self.series.point(j);
        self.series
            .points()
            .map(|p| self.kernel.phi(p, yj))
            .collect()
    }
}

/// `M ≈ basis * diag(roots) * basis^T` with an orthonormal `N x k` basis.
#[derive(Debug, Clone)]
pub struct LowRankSqrt {
    basis: Mat<f64>,
    roots: Vec<f64>,
    requested_rank: usize,
    residual_trace: f64,
}

impl LowRankSqrt {
    pub fn basis(&self) -> MatRef<'_, f64> {
        self.basis.as_ref()
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn rank(&self) -> usize {
        self.roots.len()
    }

    pub fn requested_rank(&self) -> usize {
        self.requested_rank
    }

    /// `trace(W - L L^T)`, which bounds the nuclear norm of the reconstruction
    /// error of `W` since the residual is PSD.
    pub fn residual_trace(&self) -> f64 {
        self.residual_trace
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let scaled = Mat::from_fn(self.basis.nrows(), self.rank(), |i, c| {
            self.basis[(i, c)] * self.roots[c]
        });
        &scaled * self.basis.transpose()
    }
}

/// Rank-`k` approximation of `W^{1/2}`.
///
/// Pivoting stops early once the largest remaining diagonal entry falls to
/// `tol` times the largest initial one; the returned rank is then smaller
/// than requested and a warning is logged.
pub fn low_rank_sqrt<G: GramSource + ?Sized>(w: &G, k: usize, tol: f64) -> Result<LowRankSqrt> {
    let n = w.size();
    if k == 0 {
        return Err(Error::Config("requested rank must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!(
            "requested rank {k} exceeds the matrix size {n}"
        )));
    }
    let mut diag = w.diagonal();
    if let Some(i) = diag.iter().position(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::Numeric(format!(
            "Gram diagonal entry {i} is {}",
            diag[i]
        )));
    }
    let d0 = diag.iter().cloned().fold(0.0, f64::max);
    // columns of the Cholesky factor, stored column-major
    let mut factor: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let (p, &dp) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if dp <= tol * d0 || dp <= 0.0 {
            break;
        }
        let mut col = w.column(p);
        for prev in &factor {
            let coef = prev[p];
            for (c, l) in col.iter_mut().zip(prev) {
                *c -= coef * l;
            }
        }
        let pivot = dp.sqrt();
        for c in &mut col {
            *c /= pivot;
        }
        for (d, l) in diag.iter_mut().zip(&col) {
            *d = (*d - l * l).max(0.0);
        }
        diag[p] = 0.0;
        factor.push(col);
    }
    let rank = factor.len();
    if rank < k {
        log::warn!("requested rank {k} exceeds the numerical rank; truncated to {rank}");
    }
    let residual_trace = diag.iter().sum();
    if rank == 0 {
        return Ok(LowRankSqrt {
            basis: Mat::zeros(n, 0),
            roots: Vec::new(),
            requested_rank: k,
            residual_trace,
        });
    }
    let l = Mat::from_fn(n, rank, |i, c| factor[c][i]);
    // W ≈ L L^T = Q (R R^T) Q^T = (Q U) Λ (Q U)^T
    let qr = l.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R().to_owned();
    let rrt = &r * r.transpose();
    let evd = rrt
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let basis = &q * evd.U();
    let roots = (0..rank).map(|i| s[i].max(0.0).sqrt()).collect();
    Ok(LowRankSqrt {
        basis,
        roots,
        requested_rank: k,
        residual_trace,
    })
}
