//! Smoothing kernels, their closed-form cross inner products and bandwidth rules.
//!
//! For a product kernel `K_h^d(u) = prod_j K(u_j / h) / h`, the cross inner
//! product `phi_h(a, b) = ∫ K_h^d(z - a) K_h^d(z - b) dz` is what fills the Gram
//! matrix of the operator pipeline. Both shipped families have closed forms:
//!
//! * Gaussian: `(4 pi h^2)^(-d/2) exp(-|a - b|^2 / (4 h^2))`
//! * von Mises (circular, `kappa = h^-2`):
//!   `I0(2 kappa cos((a - b) / 2)) / (2 pi I0(kappa)^2)`

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{DataKind, ObservedSeries};
use crate::special::bessel_i0e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    VonMises,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::VonMises => "vonmises",
        }
    }
}

/// Anything that can fill a Gram matrix of kernel cross inner products.
///
/// Implement this to plug in a univariate kernel other than the two shipped
/// families; the operator pipeline only needs `phi_h`.
pub trait CrossGram: Sync {
    fn dim(&self) -> usize;

    /// `phi_h(a, b)` for two points of dimension [`CrossGram::dim`].
    fn phi(&self, a: &[f64], b: &[f64]) -> f64;
}

/// A kernel family at a fixed bandwidth and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64, dim: usize) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::Domain(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        if dim == 0 {
            return Err(Error::Domain("kernel dimension must be at least 1".into()));
        }
        if family == KernelFamily::VonMises && dim != 1 {
            return Err(Error::Domain(format!(
                "the von Mises kernel is univariate, got dimension {dim}"
            )));
        }
        Ok(Self {
            family,
            bandwidth,
            dim,
        })
    }

    pub fn gaussian(bandwidth: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth, dim)
    }

    pub fn von_mises(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::VonMises, bandwidth, 1)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// von Mises concentration `h^-2`.
    pub fn concentration(&self) -> f64 {
        self.bandwidth.powi(-2)
    }

    /// The univariate kernel `K(u)`.
    ///
    /// Gaussian: the standard normal density (bandwidth not applied).
    /// von Mises: `exp(kappa cos u) / (2 pi I0(kappa))`, which already
    /// carries the bandwidth through `kappa`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::Domain(format!("kernel argument must be finite, got {u}")));
        }
        Ok(self.eval_unchecked(u))
    }

    fn eval_unchecked(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-0.5 * u * u).exp() / (2.0 * PI).sqrt(),
            KernelFamily::VonMises => {
                let kappa = self.concentration();
                (kappa * (u.cos() - 1.0)).exp() / (2.0 * PI * bessel_i0e(kappa))
            }
        }
    }

    /// The smoothing kernel applied to one coordinate difference:
    /// `K(u / h) / h` for the Gaussian, `K(u)` for the von Mises.
    pub fn smoothing(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => self.eval_unchecked(u / self.bandwidth) / self.bandwidth,
            KernelFamily::VonMises => self.eval_unchecked(u),
        }
    }

    /// Closed form of `phi_h(a, b)`.
    pub fn cross_gram(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != self.dim || b.len() != self.dim {
            return Err(Error::Shape(format!(
                "points of dimension {} and {} for a kernel of dimension {}",
                a.len(),
                b.len(),
                self.dim
            )));
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::Domain("cross_gram arguments must be finite".into()));
        }
        Ok(self.phi_unchecked(a, b))
    }

    fn phi_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let h = self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => {
                let dist_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (4.0 * PI * h * h).powf(-0.5 * self.dim as f64) * (-dist_sq / (4.0 * h * h)).exp()
            }
            KernelFamily::VonMises => {
                let kappa = self.concentration();
                let c = (0.5 * (a[0] - b[0])).cos().abs();
                let arg = 2.0 * kappa * c;
                let i0k = bessel_i0e(kappa);
                // I0(arg) / I0(kappa)^2 = i0e(arg) / i0e(kappa)^2 * exp(arg - 2 kappa)
                bessel_i0e(arg) / (i0k * i0k) * (arg - 2.0 * kappa).exp() / (2.0 * PI)
            }
        }
    }

    /// `||K||_2^2` of the univariate kernel.
    ///
    /// For the Gaussian this is the bandwidth-free constant `1 / (2 sqrt(pi))`;
    /// for the von Mises it depends on the concentration.
    pub fn l2_norm_sq(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => 0.5 / PI.sqrt(),
            KernelFamily::VonMises => {
                let kappa = self.concentration();
                let i0k = bessel_i0e(kappa);
                bessel_i0e(2.0 * kappa) / (2.0 * PI * i0k * i0k)
            }
        }
    }
}

impl CrossGram for KernelSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn phi(&self, a: &[f64], b: &[f64]) -> f64 {
        self.phi_unchecked(a, b)
    }
}

/// Multiplier `kappa` in `h = kappa * n^-beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    /// Silverman-style scale for Gaussian kernels, 1 for von Mises.
    /// See [`silverman_kappa`].
    Auto,
    /// `0.9 prod_j sd_j` on multivariate data; the same as `Auto` for `d = 1`.
    AutoProduct,
    Fixed(f64),
}

/// Bandwidth `h = kappa * n^-beta`, with `n` the number of consecutive pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRule {
    pub beta: f64,
    pub kappa: Kappa,
}

impl BandwidthRule {
    pub fn new(beta: f64, kappa: Kappa) -> Self {
        Self { beta, kappa }
    }

    /// `beta = 1/6` for univariate data, `1/(4 + 2d)` otherwise, automatic `kappa`.
    pub fn default_for(dim: usize) -> Self {
        Self {
            beta: default_beta(dim),
            kappa: Kappa::Auto,
        }
    }

    /// Checks `0 < beta < 1/(2d)` and a positive explicit `kappa`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let upper = 1.0 / (2.0 * dim as f64);
        if !(self.beta > 0.0 && self.beta < upper) {
            return Err(Error::Config(format!(
                "beta = {} is outside the consistency range (0, {upper}) for d = {dim}",
                self.beta
            )));
        }
        if let Kappa::Fixed(k) = self.kappa {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::Config(format!("kappa must be positive, got {k}")));
            }
        }
        Ok(())
    }

    pub fn select(&self, series: &ObservedSeries, family: KernelFamily) -> Result<f64> {
        self.validate(series.dim())?;
        let kappa = match self.kappa {
            Kappa::Fixed(k) => k,
            Kappa::Auto | Kappa::AutoProduct if family == KernelFamily::VonMises => 1.0,
            Kappa::Auto => silverman_kappa(series)?,
            Kappa::AutoProduct => product_kappa(series)?,
        };
        Ok(kappa * (series.n_pairs() as f64).powf(-self.beta))
    }
}

pub fn default_beta(dim: usize) -> f64 {
    if dim == 1 {
        1.0 / 6.0
    } else {
        1.0 / (4.0 + 2.0 * dim as f64)
    }
}

/// `0.9 min(sd, IQR / 1.34)` for univariate data and `0.9 (prod_j sd_j)^{1/d}`
/// otherwise.
///
/// Uses the `n - 1` sample variance and linearly interpolated quartiles. When
/// the interquartile range vanishes while the spread does not, the standard
/// deviation alone is used. The multivariate scale is the geometric mean of
/// the coordinate spreads, so that `h` stays in the units of the data; the
/// plain product is available through [`product_kappa`].
pub fn silverman_kappa(series: &ObservedSeries) -> Result<f64> {
    let sds = coordinate_sds(series)?;
    if series.dim() == 1 {
        let iqr = interquartile_range(series.coordinate(0));
        let scale = if iqr > 0.0 { sds[0].min(iqr / 1.34) } else { sds[0] };
        return Ok(0.9 * scale);
    }
    let log_mean = sds.iter().map(|s| s.ln()).sum::<f64>() / sds.len() as f64;
    Ok(0.9 * log_mean.exp())
}

/// `0.9 prod_j sd_j` for multivariate data, [`silverman_kappa`] for `d = 1`.
pub fn product_kappa(series: &ObservedSeries) -> Result<f64> {
    if series.dim() == 1 {
        return silverman_kappa(series);
    }
    Ok(0.9 * coordinate_sds(series)?.iter().product::<f64>())
}

fn coordinate_sds(series: &ObservedSeries) -> Result<Vec<f64>> {
    if series.kind() == DataKind::Circular {
        return Err(Error::Config(
            "the Silverman scale applies to linear data only".into(),
        ));
    }
    (0..series.dim())
        .map(|j| {
            let sd = sample_sd(&series.coordinate(j));
            if sd > 0.0 {
                Ok(sd)
            } else {
                Err(Error::DegenerateData(format!(
                    "coordinate {j} has zero variance; automatic bandwidth is undefined"
                )))
            }
        })
        .collect()
}

pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Quantile with linear interpolation between order statistics.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn interquartile_range(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    quantile_sorted(&values, 0.75) - quantile_sorted(&values, 0.25)
}
