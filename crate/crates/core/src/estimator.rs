//! Tail statistics, threshold rules and the order estimate itself.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{default_beta, BandwidthRule, Kappa, KernelFamily, KernelSpec};
use crate::operator::{
    estimate_operator_matrix, DataKind, ObservedSeries, OperatorOptions, SingularSpectrum, SqrtMethod,
    DEFAULT_L_MAX, DEFAULT_PSD_TOL, PairConstruction,
};

/// `r_l = sqrt(||V||_F^2 - sum_{j<l} sigma_j^2)` for `l = 1..=l_max`.
///
/// Needs `l_max <= sigma.len() + 1`. Negative differences left by round-off
/// are clamped to zero.
pub fn tail_stats(spec: &SingularSpectrum, l_max: usize) -> Result<Vec<f64>> {
    if l_max > spec.sigma.len() + 1 {
        return Err(Error::Domain(format!(
            "l_max = {l_max} needs at least {} singular values, only {} stored",
            l_max - 1,
            spec.sigma.len()
        )));
    }
    let mut out = Vec::with_capacity(l_max);
    let mut head = 0.0;
    for ell in 0..l_max {
        if ell > 0 {
            head += spec.sigma[ell - 1] * spec.sigma[ell - 1];
        }
        out.push((spec.frob_sq - head).max(0.0).sqrt());
    }
    Ok(out)
}

/// `n^{-1/2} h^{-d} 10^{1-d}`.
pub fn practical_threshold(n: usize, h: f64, d: usize) -> f64 {
    (n as f64).powf(-0.5) * h.powi(-(d as i32)) * 10f64.powi(1 - d as i32)
}

/// How the threshold `tau` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    Practical,
    /// The concentration bound with level `alpha` and a user-supplied mixing
    /// time. When `kernel_l2_sq` is `None` the estimator fills in `||K||_2^2`
    /// of the kernel actually used.
    Theoretical {
        alpha: f64,
        t_mix: f64,
        kernel_l2_sq: Option<f64>,
    },
    Explicit(f64),
}

impl ThresholdRule {
    pub fn theoretical(alpha: f64, t_mix: f64) -> Self {
        ThresholdRule::Theoretical {
            alpha,
            t_mix,
            kernel_l2_sq: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Practical => Ok(()),
            ThresholdRule::Explicit(tau) if tau.is_finite() && tau > 0.0 => Ok(()),
            ThresholdRule::Explicit(tau) => Err(Error::Domain(format!("explicit tau must be positive, got {tau}"))),
            ThresholdRule::Theoretical {
                alpha,
                t_mix,
                kernel_l2_sq,
            } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
                }
                if !(t_mix.is_finite() && t_mix >= 1.0) {
                    return Err(Error::Domain(format!("t_mix must be at least 1, got {t_mix}")));
                }
                match kernel_l2_sq {
                    Some(k) if !(k.is_finite() && k > 0.0) => {
                        Err(Error::Domain(format!("kernel L2 norm must be positive, got {k}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Threshold for `n` pairs at bandwidth `h` in dimension `d`.
    pub fn tau(&self, n: usize, h: f64, d: usize) -> Result<f64> {
        self.validate()?;
        match *self {
            ThresholdRule::Practical => Ok(practical_threshold(n, h, d)),
            ThresholdRule::Explicit(tau) => Ok(tau),
            ThresholdRule::Theoretical { .. } => theoretical_threshold(self, n, h, d),
        }
    }

    fn with_kernel(self, kernel: &KernelSpec) -> Self {
        match self {
            ThresholdRule::Theoretical {
                alpha,
                t_mix,
                kernel_l2_sq: None,
            } => ThresholdRule::Theoretical {
                alpha,
                t_mix,
                kernel_l2_sq: Some(kernel.l2_norm_sq()),
            },
            other => other,
        }
    }
}

/// `n^{-1/2} sqrt((n+1)/n C1) + n^{-1/2} h^{-d} C2` with
/// `C1 = 36 ||K||^{4d} ln(1/alpha) t_mix` and `C2 = ||K||^{2d} sqrt(1 + 8 t_mix)`.
pub fn theoretical_threshold(rule: &ThresholdRule, n: usize, h: f64, d: usize) -> Result<f64> {
    rule.validate()?;
    let ThresholdRule::Theoretical {
        alpha,
        t_mix,
        kernel_l2_sq,
    } = *rule
    else {
        return Err(Error::Config("theoretical threshold needs the theoretical rule".into()));
    };
    let Some(k2) = kernel_l2_sq else {
        return Err(Error::Config("theoretical threshold needs ||K||_2^2".into()));
    };
    let nf = n as f64;
    let c1 = 36.0 * k2.powi(2 * d as i32) * (1.0 / alpha).ln() * t_mix;
    let c2 = k2.powi(d as i32) * (1.0 + 8.0 * t_mix).sqrt();
    Ok(((nf + 1.0) / nf * c1).sqrt() / nf.sqrt() + h.powi(-(d as i32)) * c2 / nf.sqrt())
}

/// `alpha_n = exp(-1 / h^{2d})`.
pub fn consistency_alpha(h: f64, d: usize) -> f64 {
    (-h.powi(-2 * d as i32)).exp()
}

/// `(alpha_n, h_n)` with `h_n = kappa n^{-beta}`.
///
/// The schedule does not look at data, so an automatic `kappa` counts as 1.
pub fn consistency_schedule(n: usize, d: usize, rule: BandwidthRule) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    rule.validate(d)?;
    let kappa = match rule.kappa {
        Kappa::Fixed(k) => k,
        Kappa::Auto | Kappa::AutoProduct => 1.0,
    };
    let h = kappa * (n as f64).powf(-rule.beta);
    Ok((consistency_alpha(h, d), h))
}

/// Result of comparing tail statistics with a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Exceedance {
    pub l_hat: usize,
    pub truncated: bool,
}

/// Counts `r_l > tau`. Ties do not count.
pub fn count_exceedances(r_values: &[f64], tau: f64) -> Exceedance {
    let l_hat = r_values.iter().filter(|&&r| r > tau).count();
    Exceedance {
        l_hat,
        truncated: r_values.last().is_some_and(|&r| r > tau),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Multivariate,
    MaxUnivariate,
}

impl EstimateMethod {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMethod::Multivariate => "multivariate",
            EstimateMethod::MaxUnivariate => "max-univariate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub l_hat: usize,
    /// `r_1, ..., r_{l_max}`.
    pub r_values: Vec<f64>,
    pub tau: f64,
    pub h: f64,
    pub n_pairs: usize,
    pub dim: usize,
    pub family: KernelFamily,
    pub method: EstimateMethod,
    /// `r_{l_max}` still exceeded `tau`, so `l_hat` is only a lower bound.
    pub truncated: bool,
    pub sigma: Vec<f64>,
    pub frob_sq: f64,
    /// One entry per coordinate for the max-of-univariate estimate.
    pub coordinates: Vec<OrderEstimate>,
}

/// Bandwidth choice for the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `h = kappa n^{-beta}`; `beta = None` picks the dimension default.
    Rule { beta: Option<f64>, kappa: Kappa },
    Fixed(f64),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Rule {
            beta: None,
            kappa: Kappa::Auto,
        }
    }
}

impl Bandwidth {
    fn resolve(&self, series: &ObservedSeries, family: KernelFamily) -> Result<f64> {
        match *self {
            Bandwidth::Fixed(h) => Ok(h),
            Bandwidth::Rule { beta, kappa } => {
                let beta = beta.unwrap_or_else(|| default_beta(series.dim()));
                BandwidthRule::new(beta, kappa).select(series, family)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub family: KernelFamily,
    pub bandwidth: Bandwidth,
    pub threshold: ThresholdRule,
    pub l_max: usize,
    pub sqrt: SqrtMethod,
    pub psd_tol: f64,
    pub pair: PairConstruction,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            bandwidth: Bandwidth::default(),
            threshold: ThresholdRule::Practical,
            l_max: DEFAULT_L_MAX,
            sqrt: SqrtMethod::Exact,
            psd_tol: DEFAULT_PSD_TOL,
            pair: PairConstruction::Operator,
        }
    }
}

impl EstimatorConfig {
    /// Von Mises kernel with `h = n^{-1/6}`, for angles.
    pub fn circular() -> Self {
        Self {
            family: KernelFamily::VonMises,
            ..Self::default()
        }
    }
}

/// Order estimate from a spectrum that has already been computed.
pub fn estimate_from_spectrum(spec: &SingularSpectrum, tau: f64, l_max: usize) -> Result<(Vec<f64>, Exceedance)> {
    // beyond the matrix size every tail is exactly empty
    let available = (spec.sigma.len() + 1).min(l_max).min(spec.n_pairs);
    let mut r = tail_stats(spec, available)?;
    r.resize(l_max, 0.0);
    let exceed = count_exceedances(&r, tau);
    Ok((r, exceed))
}

/// Multivariate estimate of the number of hidden states.
pub fn estimate_order(series: &ObservedSeries, config: &EstimatorConfig) -> Result<OrderEstimate> {
    if config.l_max == 0 {
        return Err(Error::Config("l_max must be at least 1".into()));
    }
    let circular = series.kind() == DataKind::Circular;
    if circular != (config.family == KernelFamily::VonMises) {
        return Err(Error::Config(if circular {
            "circular data needs the von Mises kernel".into()
        } else {
            "the von Mises kernel needs circular data".into()
        }));
    }
    config.threshold.validate()?;
    let h = config.bandwidth.resolve(series, config.family)?;
    let kernel = KernelSpec::new(config.family, h, series.dim())?;
    let opts = OperatorOptions {
        l_max: config.l_max,
        sqrt: config.sqrt,
        psd_tol: config.psd_tol,
        pair: config.pair,
    };
    let (_, spec) = estimate_operator_matrix(series, &kernel, &opts)?;
    let n = series.n_pairs();
    let tau = config.threshold.with_kernel(&kernel).tau(n, h, series.dim())?;
    let (r_values, exceed) = estimate_from_spectrum(&spec, tau, config.l_max)?;
    if exceed.truncated {
        log::warn!(
            "r_{} = {} still exceeds tau = {tau}; the estimate is a lower bound",
            config.l_max,
            r_values[config.l_max - 1]
        );
    }
    Ok(OrderEstimate {
        l_hat: exceed.l_hat,
        r_values,
        tau,
        h,
        n_pairs: n,
        dim: series.dim(),
        family: config.family,
        method: EstimateMethod::Multivariate,
        truncated: exceed.truncated,
        sigma: spec.sigma,
        frob_sq: spec.frob_sq,
        coordinates: Vec::new(),
    })
}

/// Largest univariate estimate over the coordinates, each with its own
/// bandwidth scale and the univariate threshold.
pub fn estimate_order_max_univariate(series: &ObservedSeries, config: &EstimatorConfig) -> Result<OrderEstimate> {
    if series.dim() < 2 {
        return Err(Error::Config("max-of-univariate needs d >= 2".into()));
    }
    let per_coordinate: Vec<OrderEstimate> = (0..series.dim())
        .into_par_iter()
        .map(|j| estimate_order(&series.marginal(j)?, config))
        .collect::<Result<_>>()?;
    let best = per_coordinate
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.l_hat.cmp(&b.l_hat).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("at least two coordinates");
    let lead = &per_coordinate[best];
    Ok(OrderEstimate {
        l_hat: lead.l_hat,
        r_values: lead.r_values.clone(),
        tau: lead.tau,
        h: lead.h,
        n_pairs: lead.n_pairs,
        dim: series.dim(),
        family: config.family,
        method: EstimateMethod::MaxUnivariate,
        truncated: per_coordinate.iter().any(|e| e.truncated),
        sigma: lead.sigma.clone(),
        frob_sq: lead.frob_sq,
        coordinates: per_coordinate,
    })
}
