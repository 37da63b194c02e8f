//! Competing order estimator: rank of a trigonometric moment matrix, read off
//! with a regression-based significance rule.

use std::f64::consts::{PI, SQRT_2};

use faer::Mat;

use crate::error::{Error, Result};
use crate::operator::{DataKind, ObservedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rescale {
    /// Rescale unless every value already lies in `[0, 1]`.
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// Number of basis functions.
    pub m: usize,
    /// Number of smallest singular values used in the regression.
    pub m_reg: usize,
    pub tau_factor: f64,
    pub rescale: Rescale,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            m: 20,
            m_reg: 10,
            tau_factor: 1.5,
            rescale: Rescale::Auto,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m_reg > self.m {
            return Err(Error::Config(format!(
                "need 1 <= M_reg <= M, got M = {}, M_reg = {}",
                self.m, self.m_reg
            )));
        }
        if self.m_reg < 2 {
            return Err(Error::Config("the regression needs M_reg >= 2".into()));
        }
        if !(self.tau_factor.is_finite() && self.tau_factor > 0.0) {
            return Err(Error::Config(format!("tau factor must be positive, got {}", self.tau_factor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub l_hat: usize,
    /// All `M` singular values, nonincreasing.
    pub sigma: Vec<f64>,
    /// Regression line evaluated at `j = 1..=M`.
    pub fitted: Vec<f64>,
    pub intercept: f64,
    pub slope: f64,
}

/// `(y - min) / (max - min)` on univariate data.
pub fn scale_to_unit(series: &ObservedSeries) -> Result<ObservedSeries> {
    if series.dim() != 1 {
        return Err(Error::Config("rescaling is defined for univariate data".into()));
    }
    let y = series.values();
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo || !hi.is_finite() {
        return Err(Error::DegenerateData("constant series cannot be rescaled".into()));
    }
    let scaled = y.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect();
    ObservedSeries::from_flat(scaled, 1, series.sequence_lengths().to_vec(), DataKind::Linear)
}

/// `phi_0 = 1`, `phi_k(y) = sqrt(2) cos(pi k y)`.
pub fn cosine_basis(y: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| if k == 0 { 1.0 } else { SQRT_2 * (PI * k as f64 * y).cos() })
        .collect()
}

/// `N[k, l] = (1/n) sum_t phi_k(y_t) phi_l(y_{t+1})` over pairs inside each sequence.
pub fn build_nhat(series: &ObservedSeries, m: usize) -> Result<Mat<f64>> {
    if series.dim() != 1 {
        return Err(Error::Config("the spectral baseline is univariate".into()));
    }
    let features: Vec<Vec<f64>> = series.values().iter().map(|&y| cosine_basis(y, m)).collect();
    let mut nhat = Mat::<f64>::zeros(m, m);
    for (start, len) in series.sequence_ranges() {
        for t in start..start + len - 1 {
            let (a, b) = (&features[t], &features[t + 1]);
            for l in 0..m {
                for k in 0..m {
                    nhat[(k, l)] += a[k] * b[l];
                }
            }
        }
    }
    let n = series.n_pairs() as f64;
    Ok(Mat::from_fn(m, m, |k, l| nhat[(k, l)] / n))
}

/// Significance rule on given singular values.
pub fn spectral_order_from_sigma(sigma: &[f64], config: &SpectralConfig) -> Result<SpectralEstimate> {
    config.validate()?;
    if sigma.len() != config.m {
        return Err(Error::Shape(format!("expected {} singular values, got {}", config.m, sigma.len())));
    }
    // ordinary least squares of sigma_j on j over the M_reg smallest
    let js: Vec<f64> = (config.m - config.m_reg + 1..=config.m).map(|j| j as f64).collect();
    let ys = &sigma[config.m - config.m_reg..];
    let k = js.len() as f64;
    let mean_j = js.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxy: f64 = js.iter().zip(ys).map(|(j, y)| (j - mean_j) * (y - mean_y)).sum();
    let sxx: f64 = js.iter().map(|j| (j - mean_j) * (j - mean_j)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_j;
    let fitted: Vec<f64> = (1..=config.m).map(|j| intercept + slope * j as f64).collect();
    let l_hat = sigma
        .iter()
        .zip(&fitted)
        .take_while(|(s, f)| **s > config.tau_factor * **f)
        .count();
    Ok(SpectralEstimate {
        l_hat,
        sigma: sigma.to_vec(),
        fitted,
        intercept,
        slope,
    })
}

/// Spectral estimate of the order of a univariate series.
pub fn spectral_order(series: &ObservedSeries, config: &SpectralConfig) -> Result<SpectralEstimate> {
    config.validate()?;
    if config.m > series.n_pairs() {
        return Err(Error::Config(format!(
            "M = {} exceeds the number of pairs {}",
            config.m,
            series.n_pairs()
        )));
    }
    let inside_unit = series.values().iter().all(|v| (0.0..=1.0).contains(v));
    let rescale = match config.rescale {
        Rescale::Always => true,
        Rescale::Never => false,
        Rescale::Auto => !inside_unit,
    };
    let nhat = if rescale {
        build_nhat(&scale_to_unit(series)?, config.m)?
    } else {
        build_nhat(series, config.m)?
    };
    let sigma = nhat
        .singular_values()
        .map_err(|e| Error::Numeric(format!("SVD failed: {e:?}")))?;
    spectral_order_from_sigma(&sigma, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(m: usize, m_reg: usize) -> SpectralConfig {
        SpectralConfig {
            m,
            m_reg,
            ..Default::default()
        }
    }

    #[test]
    fn rescale_examples() {
        let s = scale_to_unit(&ObservedSeries::univariate(vec![0.0, 5.0, 10.0]).unwrap()).unwrap();
        assert_eq!(s.values(), &[0.0, 0.5, 1.0]);
        let unit = vec![0.0, 0.25, 1.0, 0.7];
        let s = scale_to_unit(&ObservedSeries::univariate(unit.clone()).unwrap()).unwrap();
        assert_eq!(s.values(), unit.as_slice());
        let flat = ObservedSeries::univariate(vec![2.0; 4]).unwrap();
        assert!(matches!(scale_to_unit(&flat), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn nhat_of_constant_series() {
        let c = 0.3;
        let s = ObservedSeries::univariate(vec![c; 9]).unwrap();
        let n = build_nhat(&s, 5).unwrap();
        let phi = cosine_basis(c, 5);
        for k in 0..5 {
            for l in 0..5 {
                assert!((n[(k, l)] - phi[k] * phi[l]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nhat_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let values: Vec<f64> = (0..401).map(|_| rng.random()).collect();
        let s = ObservedSeries::from_flat(values.clone(), 1, vec![250, 151], DataKind::Linear).unwrap();
        let m = 6;
        let n = build_nhat(&s, m).unwrap();
        let phi = |k: usize, y: f64| if k == 0 { 1.0 } else { 2f64.sqrt() * (PI * k as f64 * y).cos() };
        let pairs: Vec<usize> = (0..400).filter(|&t| t != 249).collect();
        assert_eq!(n[(0, 0)], 1.0);
        for k in 0..m {
            for l in 0..m {
                let mut acc = 0.0;
                for &t in &pairs {
                    acc += phi(k, values[t]) * phi(l, values[t + 1]);
                }
                assert!((n[(k, l)] - acc / pairs.len() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hand_regression_example() {
        let sigma = [10.0, 9.0, 8.0, 0.04, 0.03, 0.02, 0.01];
        let est = spectral_order_from_sigma(&sigma, &config(7, 4)).unwrap();
        assert_eq!(est.l_hat, 3);
        assert!((est.slope + 0.01).abs() < 1e-12 && (est.intercept - 0.08).abs() < 1e-12);
        assert!((est.fitted[3] - 0.04).abs() < 1e-12);
    }

    #[test]
    fn flat_spectrum_has_no_significant_value() {
        let est = spectral_order_from_sigma(&[0.5; 8], &config(8, 4)).unwrap();
        assert_eq!(est.l_hat, 0);
    }

    #[test]
    fn prefix_stops_at_first_insignificant_value() {
        let sigma = [10.0, 0.04, 5.0, 0.03, 0.02, 0.01];
        assert_eq!(spectral_order_from_sigma(&sigma, &config(6, 3)).unwrap().l_hat, 1);
    }

    #[test]
    fn config_errors() {
        assert!(spectral_order_from_sigma(&[1.0, 0.5], &config(2, 1)).is_err());
        assert!(config(4, 5).validate().is_err());
        let s = ObservedSeries::univariate((0..10).map(|i| i as f64).collect()).unwrap();
        assert!(spectral_order(&s, &config(20, 5)).is_err());
    }

    #[test]
    fn separated_states_leave_a_gap_after_the_third_value() {
        // three well separated levels visited in a cycle
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let levels = [0.1, 0.5, 0.9];
        let mut state = 0usize;
        let values: Vec<f64> = (0..3001)
            .map(|_| {
                if rng.random::<f64>() < 0.2 {
                    state = rng.random_range(0..3);
                }
                levels[state] + 0.1 * (rng.random::<f64>() - 0.5)
            })
            .collect();
        let s = ObservedSeries::univariate(values).unwrap();
        let est = spectral_order(&s, &SpectralConfig { rescale: Rescale::Never, ..config(20, 10) }).unwrap();
        assert!(est.sigma[2] > 10.0 * est.sigma[3]);
        // the noise floor decays too, so the prefix may run past the gap
        assert!(est.l_hat >= 3);
    }

    proptest! {
        #[test]
        fn scale_invariance(raw in prop::collection::vec(0.0f64..10.0, 8), c in 0.01f64..100.0) {
            let mut sigma = raw;
            sigma.sort_by(|a, b| b.total_cmp(a));
            let scaled: Vec<f64> = sigma.iter().map(|s| s * c).collect();
            let a = spectral_order_from_sigma(&sigma, &config(8, 4)).unwrap();
            let b = spectral_order_from_sigma(&scaled, &config(8, 4)).unwrap();
            prop_assert!(a.l_hat <= 8);
            // products that land within round-off of the line may flip
            let near_tie = sigma.iter().zip(&a.fitted).any(|(s, f)| (s - 1.5 * f).abs() < 1e-9 * (1.0 + s.abs()));
            if !near_tie {
                prop_assert_eq!(a.l_hat, b.l_hat);
            }
        }

        #[test]
        fn rescaling_preserves_order(v in prop::collection::vec(-50.0f64..50.0, 3..40)) {
            prop_assume!(v.iter().any(|x| *x != v[0]));
            let s = scale_to_unit(&ObservedSeries::univariate(v.clone()).unwrap()).unwrap();
            let u = s.values();
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if v[i] < v[j] {
                        prop_assert!(u[i] <= u[j]);
                    }
                }
            }
            prop_assert!(u.contains(&0.0) && u.contains(&1.0));
        }
    }
}
