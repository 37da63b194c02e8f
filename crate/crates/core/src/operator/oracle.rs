//! Grid discretization of integral operators, used to check the matrix
//! pipeline against the operator it stands for.
//!
//! An operator with kernel `p(z1, z2)` is discretized on nodes `z_i` with
//! weights `w_i` as `D[i, j] = sqrt(w_i) p(z_i, z_j) sqrt(w_j)`, whose singular
//! values converge to those of the operator.

use std::f64::consts::TAU;

use faer::Mat;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::operator::{DataKind, ObservedSeries};

/// Equispaced quadrature nodes: trapezoid on an interval, or the periodic
/// rule on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UniformGrid {
    pub fn interval(lo: f64, hi: f64, size: usize) -> Self {
        let step = (hi - lo) / (size - 1) as f64;
        let nodes = (0..size).map(|i| lo + step * i as f64).collect();
        let mut weights = vec![step; size];
        weights[0] *= 0.5;
        weights[size - 1] *= 0.5;
        Self { nodes, weights }
    }

    pub fn circle(size: usize) -> Self {
        let step = TAU / size as f64;
        Self {
            nodes: (0..size).map(|i| step * i as f64).collect(),
            weights: vec![step; size],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// An integral operator sampled on a grid.
#[derive(Debug, Clone)]
pub struct QuadratureOperator {
    grid: UniformGrid,
    /// `density[(i, j)] = p(z_i, z_j)`
    density: Mat<f64>,
}

impl QuadratureOperator {
    pub fn from_density<F: Fn(f64, f64) -> f64>(grid: UniformGrid, p: F) -> Self {
        let g = grid.len();
        let density = Mat::from_fn(g, g, |i, j| p(grid.nodes[i], grid.nodes[j]));
        Self { grid, density }
    }

    /// The kernel estimate of the pair density,
    /// `p(z1, z2) = (1/n) sum_t K_h(z1 - y_t) K_h(z2 - y_{t+1})`,
    /// summed over within-sequence pairs.
    pub fn from_series(series: &ObservedSeries, kernel: &KernelSpec, grid: UniformGrid) -> Result<Self> {
        if series.dim() != 1 || kernel.dim() != 1 {
            return Err(Error::Shape("the quadrature oracle handles univariate data only".into()));
        }
        let y = series.values();
        let mut firsts = Vec::new();
        let mut seconds = Vec::new();
        for (start, len) in series.sequence_ranges() {
            for t in start..start + len - 1 {
                firsts.push(y[t]);
                seconds.push(y[t + 1]);
            }
        }
        let n = firsts.len();
        let g = grid.len();
        let k1 = Mat::from_fn(n, g, |t, i| kernel.smoothing(grid.nodes[i] - firsts[t]));
        let k2 = Mat::from_fn(n, g, |t, i| kernel.smoothing(grid.nodes[i] - seconds[t]));
        let mut density = k1.transpose() * &k2;
        density *= faer::Scale(1.0 / n as f64);
        Ok(Self { grid, density })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn density(&self) -> &Mat<f64> {
        &self.density
    }

    /// Discrete `∫∫ p`.
    pub fn total_mass(&self) -> f64 {
        let w = &self.grid.weights;
        let mut mass = 0.0;
        for j in 0..w.len() {
            for i in 0..w.len() {
                mass += w[i] * w[j] * self.density[(i, j)];
            }
        }
        mass
    }

    /// Singular values of the discretized operator, nonincreasing.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let w = &self.grid.weights;
        let g = w.len();
        let d = Mat::from_fn(g, g, |i, j| w[i].sqrt() * self.density[(i, j)] * w[j].sqrt());
        d.singular_values()
            .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))
    }
}

/// Grid half-margin beyond the data range, in bandwidths.
const MARGIN_BANDWIDTHS: f64 = 8.0;

/// Relative change of the leading singular value tolerated between a grid and
/// its refinement.
const RESOLUTION_TOL: f64 = 1e-4;

fn oracle_grid(series: &ObservedSeries, kernel: &KernelSpec, size: usize) -> UniformGrid {
    match kernel.family() {
        KernelFamily::VonMises => UniformGrid::circle(size),
        KernelFamily::Gaussian => {
            let y = series.values();
            let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let margin = MARGIN_BANDWIDTHS * kernel.bandwidth();
            UniformGrid::interval(lo - margin, hi + margin, size)
        }
    }
}

/// Singular values of the empirical smoothed operator computed by quadrature.
///
/// The operator is discretized at `grid_size` and at a doubled grid; if the
/// leading singular value moves by more than `1e-4` relative the grid is
/// declared too coarse. The refined values are returned.
pub fn quadrature_svd_oracle(
    series: &ObservedSeries,
    kernel: &KernelSpec,
    grid_size: usize,
) -> Result<Vec<f64>> {
    if grid_size < 200 {
        return Err(Error::Config(format!(
            "oracle grid needs at least 200 nodes, got {grid_size}"
        )));
    }
    if (series.kind() == DataKind::Circular) != (kernel.family() == KernelFamily::VonMises) {
        return Err(Error::Config(
            "circular data require the von Mises kernel and vice versa".into(),
        ));
    }
    let coarse = QuadratureOperator::from_series(series, kernel, oracle_grid(series, kernel, grid_size))?
        .singular_values()?;
    let fine_size = match kernel.family() {
        KernelFamily::VonMises => 2 * grid_size,
        KernelFamily::Gaussian => 2 * grid_size - 1,
    };
    let fine = QuadratureOperator::from_series(series, kernel, oracle_grid(series, kernel, fine_size))?
        .singular_values()?;
    let change = (coarse[0] - fine[0]).abs() / fine[0].max(f64::MIN_POSITIVE);
    if change > RESOLUTION_TOL {
        return Err(Error::OracleResolution(format!(
            "leading singular value moved by {change:e} between {grid_size} and {fine_size} nodes"
        )));
    }
    Ok(fine)
}
