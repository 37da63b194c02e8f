//! Stationary finite-state hidden Markov models and the simulation designs
//! used in the experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Normal, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::operator::{wrap_angle, DataKind, ObservedSeries};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const DET_WARN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Noise {
    Gaussian,
    /// Student t with three degrees of freedom, unscaled.
    Student3,
    /// Scale 1.
    Laplace,
    /// Rate 1, not centered.
    Exponential,
}

impl Noise {
    pub const ALL: [Noise; 4] = [Noise::Gaussian, Noise::Student3, Noise::Laplace, Noise::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            Noise::Gaussian => "gaussian",
            Noise::Student3 => "student",
            Noise::Laplace => "laplace",
            Noise::Exponential => "exponential",
        }
    }

    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Noise::Gaussian => rng.sample(StandardNormal),
            Noise::Student3 => StudentT::new(3.0).expect("valid").sample(rng),
            Noise::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Noise::Exponential => rng.sample(Exp1),
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Noise::Gaussian),
            "student" | "student3" | "t3" => Ok(Noise::Student3),
            "laplace" => Ok(Noise::Laplace),
            "exponential" | "exp" => Ok(Noise::Exponential),
            other => Err(Error::Config(format!("unknown noise family '{other}'"))),
        }
    }
}

/// Emission law of one hidden state. Every coordinate of an observation is
/// drawn independently from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmissionSpec {
    /// `location + eps` with `eps` from the noise family.
    Shift { noise: Noise, location: f64 },
    Beta { a: f64, b: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Angle in `[0, 2pi)`.
    VonMises { mean: f64, concentration: f64 },
}

impl EmissionSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EmissionSpec::Shift { location, .. } => location.is_finite(),
            EmissionSpec::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            EmissionSpec::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            EmissionSpec::VonMises { mean, concentration } => {
                mean.is_finite() && concentration > 0.0 && concentration.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid emission parameters {self:?}")))
        }
    }

    pub fn kind(&self) -> DataKind {
        match self {
            EmissionSpec::VonMises { .. } => DataKind::Circular,
            _ => DataKind::Linear,
        }
    }

    fn sampler(&self) -> Sampler {
        match *self {
            EmissionSpec::Shift { noise, location } => Sampler::Shift(noise, location),
            EmissionSpec::Beta { a, b } => Sampler::Beta(Beta::new(a, b).expect("validated")),
            EmissionSpec::Gaussian { mean, sd } => Sampler::Gaussian(Normal::new(mean, sd).expect("validated")),
            EmissionSpec::VonMises { mean, concentration } => Sampler::VonMises(VonMises::new(mean, concentration)),
        }
    }
}

enum Sampler {
    Shift(Noise, f64),
    Beta(Beta<f64>),
    Gaussian(Normal<f64>),
    VonMises(VonMises),
}

impl Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Shift(noise, loc) => loc + noise.sample(rng),
            Sampler::Beta(d) => d.sample(rng),
            Sampler::Gaussian(d) => d.sample(rng),
            Sampler::VonMises(d) => d.sample(rng),
        }
    }
}

/// Best and Fisher's rejection sampler.
struct VonMises {
    mean: f64,
    kappa: f64,
    r: f64,
}

impl VonMises {
    fn new(mean: f64, kappa: f64) -> Self {
        let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
        Self {
            mean,
            kappa,
            r: (1.0 + rho * rho) / (2.0 * rho),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z = (PI * rng.random::<f64>()).cos();
            let f = (1.0 + self.r * z) / (self.r + z);
            let c = self.kappa * (self.r - f);
            let u2: f64 = rng.random();
            if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 >= c {
                let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                return wrap_angle(self.mean + sign * f.clamp(-1.0, 1.0).acos());
            }
        }
    }
}

/// A validated hidden Markov model with its stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    transition: Vec<Vec<f64>>,
    pi: Vec<f64>,
    emissions: Vec<EmissionSpec>,
    dim: usize,
}

impl HmmSpec {
    pub fn new(transition: Vec<Vec<f64>>, emissions: Vec<EmissionSpec>, dim: usize) -> Result<Self> {
        let l = transition.len();
        if l == 0 || emissions.len() != l {
            return Err(Error::Shape(format!(
                "{l} transition rows for {} emission laws",
                emissions.len()
            )));
        }
        if dim == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        check_stochastic(&transition)?;
        for e in &emissions {
            e.validate()?;
        }
        let kind = emissions[0].kind();
        if emissions.iter().any(|e| e.kind() != kind) {
            return Err(Error::Domain("mixing circular and linear emissions".into()));
        }
        if kind == DataKind::Circular && dim != 1 {
            return Err(Error::Domain("circular emissions are univariate".into()));
        }
        let det = determinant(&transition);
        if det.abs() <= DET_WARN {
            log::warn!("transition matrix is singular (|det| = {:.3e}); the order is not identifiable", det.abs());
        }
        let pi = stationary_distribution(&transition)?;
        let residual = stationary_residual(&transition, &pi);
        if residual > STATIONARY_TOL {
            return Err(Error::Numeric(format!("stationary residual {residual:.3e}")));
        }
        Ok(Self {
            transition,
            pi,
            emissions,
            dim,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn emissions(&self) -> &[EmissionSpec] {
        &self.emissions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DataKind {
        self.emissions[0].kind()
    }
}

fn check_stochastic(a: &[Vec<f64>]) -> Result<()> {
    let l = a.len();
    for (i, row) in a.iter().enumerate() {
        if row.len() != l {
            return Err(Error::Shape(format!("transition row {i} has {} entries, expected {l}", row.len())));
        }
        if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::Domain(format!("transition row {i} has a negative or non-finite entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Domain(format!("transition row {i} sums to {s}")));
        }
    }
    Ok(())
}

fn to_mat(a: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(a.len(), a.len(), |i, j| a[i][j])
}

fn determinant(a: &[Vec<f64>]) -> f64 {
    to_mat(a).determinant()
}

fn stationary_residual(a: &[Vec<f64>], pi: &[f64]) -> f64 {
    (0..a.len())
        .map(|j| ((0..a.len()).map(|i| pi[i] * a[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

/// The three-state matrix with `1 - 2 nu` on the diagonal and `nu` elsewhere.
pub fn make_transition_nu(nu: f64) -> Result<Vec<Vec<f64>>> {
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::Domain(format!("nu must lie in (0, 1/2), got {nu}")));
    }
    if (nu - 1.0 / 3.0).abs() < 1e-12 {
        log::warn!("nu = 1/3 makes consecutive observations independent; the order is not identifiable");
    }
    Ok((0..3)
        .map(|i| (0..3).map(|j| if i == j { 1.0 - 2.0 * nu } else { nu }).collect())
        .collect())
}

/// Solves `pi A = pi`, `sum pi = 1` for an irreducible row-stochastic `A`.
pub fn stationary_distribution(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_stochastic(a)?;
    let l = a.len();
    if !is_irreducible(a) {
        return Err(Error::Structure("transition matrix is reducible".into()));
    }
    // (A^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    let system = Mat::from_fn(l, l, |i, j| {
        if i == l - 1 {
            1.0
        } else {
            a[j][i] - if i == j { 1.0 } else { 0.0 }
        }
    });
    let rhs = Mat::from_fn(l, 1, |i, _| if i == l - 1 { 1.0 } else { 0.0 });
    let lu = system.partial_piv_lu();
    let mut pi: Vec<f64> = (0..l).map(|i| lu.solve(&rhs)[(i, 0)].max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let residual = stationary_residual(a, &pi);
    if residual > 1e-12 {
        return Err(Error::Numeric(format!("stationary distribution residual {residual:.3e}")));
    }
    Ok(pi)
}

fn is_irreducible(a: &[Vec<f64>]) -> bool {
    let l = a.len();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; l];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..l {
                let edge = if forward { a[i][j] } else { a[j][i] };
                if edge > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}

/// Observations together with the hidden path that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: ObservedSeries,
    /// Zero-based state labels.
    pub states: Vec<usize>,
}

/// Draws `n_pairs + 1` observations from the stationary chain.
pub fn simulate(spec: &HmmSpec, n_pairs: usize, seed: u64) -> Result<Simulation> {
    if n_pairs == 0 {
        return Err(Error::Domain("need at least one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = WeightedIndex::new(&spec.pi).map_err(|e| Error::Numeric(e.to_string()))?;
    let rows: Vec<WeightedIndex<f64>> = spec
        .transition
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| Error::Numeric(e.to_string())))
        .collect::<Result<_>>()?;
    let samplers: Vec<Sampler> = spec.emissions.iter().map(EmissionSpec::sampler).collect();

    let len = n_pairs + 1;
    let mut states = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len * spec.dim);
    let mut x = initial.sample(&mut rng);
    for t in 0..len {
        if t > 0 {
            x = rows[x].sample(&mut rng);
        }
        states.push(x);
        for _ in 0..spec.dim {
            values.push(samplers[x].sample(&mut rng));
        }
    }
    let series = ObservedSeries::from_flat(values, spec.dim, vec![len], spec.kind())?;
    Ok(Simulation { series, states })
}

/// Parameters of the simulation designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub nu: f64,
    pub delta: f64,
    pub noise: Noise,
    pub dim: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            nu: 0.1,
            delta: 5.0,
            noise: Noise::Gaussian,
            dim: 1,
        }
    }
}

/// Shift model: state 2 moves every coordinate by `+delta`, state 3 by
/// `-delta`, state 1 stays centered.
pub fn shift_emissions(noise: Noise, delta: f64) -> Vec<EmissionSpec> {
    [0.0, delta, -delta]
        .into_iter()
        .map(|location| EmissionSpec::Shift { noise, location })
        .collect()
}

/// Builds a named design. Known names: `beta3`, `gauss3`, `vm3` (which use
/// only `nu`) and `shift`.
pub fn scenario(name: &str, params: &ScenarioParams) -> Result<HmmSpec> {
    let a = make_transition_nu(params.nu)?;
    match name {
        "beta3" => HmmSpec::new(
            a,
            vec![
                EmissionSpec::Beta { a: 12.0, b: 1.0 },
                EmissionSpec::Beta { a: 1.0, b: 12.0 },
                EmissionSpec::Beta { a: 12.0, b: 12.0 },
            ],
            1,
        ),
        "gauss3" => HmmSpec::new(
            a,
            vec![
                EmissionSpec::Gaussian { mean: -6.0, sd: 1.0 },
                EmissionSpec::Gaussian { mean: 6.0, sd: 1.0 },
                EmissionSpec::Gaussian { mean: 0.0, sd: 1.0 },
            ],
            1,
        ),
        "vm3" => HmmSpec::new(
            a,
            (0..3)
                .map(|k| EmissionSpec::VonMises {
                    mean: PI / 2.0 + 2.0 * PI * k as f64 / 3.0,
                    concentration: 10.0,
                })
                .collect(),
            1,
        ),
        "shift" => HmmSpec::new(a, shift_emissions(params.noise, params.delta), params.dim),
        other => Err(Error::Config(format!("unknown scenario '{other}'"))),
    }
}

/// The fixed designs at `nu = 0.1`.
pub fn paper_scenarios() -> Vec<(&'static str, HmmSpec)> {
    let params = ScenarioParams::default();
    ["beta3", "gauss3", "vm3"]
        .into_iter()
        .map(|name| (name, scenario(name, &params).expect("catalog entries are valid")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transition_nu_examples() {
        let a = make_transition_nu(0.1).unwrap();
        for (i, row) in a.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                assert_eq!(p, if i == j { 0.8 } else { 0.1 });
            }
        }
        let a = make_transition_nu(1.0 / 3.0).unwrap();
        assert!(a.iter().flatten().all(|&p| close(p, 1.0 / 3.0, 1e-15)));
        for nu in [0.01, 0.2, 0.49] {
            let a = make_transition_nu(nu).unwrap();
            assert!(a.iter().all(|r| close(r.iter().sum(), 1.0, 1e-15)));
        }
        for bad in [0.0, 0.5, -0.1, f64::NAN] {
            assert!(matches!(make_transition_nu(bad), Err(Error::Domain(_))));
        }
    }

    fn power_iteration(a: &[Vec<f64>]) -> Vec<f64> {
        let l = a.len();
        let mut p = vec![1.0 / l as f64; l];
        for _ in 0..200_000 {
            p = (0..l).map(|j| (0..l).map(|i| p[i] * a[i][j]).sum()).collect();
        }
        p
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&make_transition_nu(0.1).unwrap()).unwrap();
        assert!(pi.iter().all(|&p| close(p, 1.0 / 3.0, 1e-14)));

        let pi = stationary_distribution(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert!(close(pi[0], 2.0 / 3.0, 1e-14) && close(pi[1], 1.0 / 3.0, 1e-14));

        let a = vec![vec![0.7, 0.2, 0.1], vec![0.05, 0.9, 0.05], vec![0.3, 0.3, 0.4]];
        let pi = stationary_distribution(&a).unwrap();
        let expected = [9.0 / 43.0, 30.0 / 43.0, 4.0 / 43.0];
        for (p, e) in pi.iter().zip(power_iteration(&a)).zip(expected) {
            assert!(close(*p.0, p.1, 1e-12) && close(*p.0, e, 1e-12));
        }

        let sticky = vec![vec![0.999, 0.001, 0.0], vec![0.4, 0.5, 0.1], vec![0.0, 0.3, 0.7]];
        let pi = stationary_distribution(&sticky).unwrap();
        let expected = [300.0 / 301.0, 0.75 / 301.0, 0.25 / 301.0];
        for (p, e) in pi.iter().zip(power_iteration(&sticky)).zip(expected) {
            assert!(close(*p.0, p.1, 1e-12) && close(*p.0, e, 1e-12));
        }
        assert!(stationary_residual(&sticky, &pi) <= 1e-12);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let a = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        assert!(matches!(stationary_distribution(&a), Err(Error::Structure(_))));
        let blocks = vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(matches!(stationary_distribution(&blocks), Err(Error::Structure(_))));
    }

    #[test]
    fn spec_validation() {
        let a = make_transition_nu(0.1).unwrap();
        let bad_rows = vec![vec![0.5, 0.6, 0.0], a[1].clone(), a[2].clone()];
        assert!(HmmSpec::new(bad_rows, shift_emissions(Noise::Gaussian, 1.0), 1).is_err());
        assert!(HmmSpec::new(a.clone(), shift_emissions(Noise::Gaussian, 1.0)[..2].to_vec(), 1).is_err());
        let bad_beta = vec![EmissionSpec::Beta { a: 0.0, b: 1.0 }; 3];
        assert!(HmmSpec::new(a.clone(), bad_beta, 1).is_err());
        let vm = vec![EmissionSpec::VonMises { mean: 0.0, concentration: 1.0 }; 3];
        assert!(HmmSpec::new(a.clone(), vm, 2).is_err());
        let spec = HmmSpec::new(a, shift_emissions(Noise::Laplace, 2.0), 3).unwrap();
        assert_eq!((spec.n_states(), spec.dim()), (3, 3));
    }

    #[test]
    fn catalog() {
        let cat = paper_scenarios();
        let names: Vec<_> = cat.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, vec!["beta3", "gauss3", "vm3"]);
        assert_eq!(
            cat[0].1.emissions()[2],
            EmissionSpec::Beta { a: 12.0, b: 12.0 }
        );
        assert_eq!(
            cat[1].1.emissions()[0],
            EmissionSpec::Gaussian { mean: -6.0, sd: 1.0 }
        );
        let EmissionSpec::VonMises { mean, concentration } = cat[2].1.emissions()[1] else {
            panic!("vm3 holds von Mises laws");
        };
        assert!(close(mean, PI / 2.0 + 2.0 * PI / 3.0, 1e-15) && concentration == 10.0);
        assert_eq!(cat[2].1.kind(), DataKind::Circular);
        assert!(scenario("nope", &ScenarioParams::default()).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = scenario("shift", &ScenarioParams { dim: 2, ..Default::default() }).unwrap();
        let a = simulate(&spec, 500, 42).unwrap();
        let b = simulate(&spec, 500, 42).unwrap();
        let c = simulate(&spec, 500, 43).unwrap();
        assert_eq!(a, b);
        assert!(a.series.values().iter().zip(b.series.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.series.values(), c.series.values());
        assert_eq!(a.series.n_points(), 501);
        assert_eq!(a.series.dim(), 2);
        assert_eq!(a.states.len(), 501);
    }

    #[test]
    fn state_frequencies_within_clt_band() {
        // rows equal to pi give independent states, so the iid band is exact
        let pi = [0.5, 0.3, 0.2];
        let spec = HmmSpec::new(vec![pi.to_vec(); 3], shift_emissions(Noise::Gaussian, 1.0), 1).unwrap();
        let n = 100_000;
        let sim = simulate(&spec, n - 1, 7).unwrap();
        for (l, &p) in pi.iter().enumerate() {
            let freq = sim.states.iter().filter(|&&s| s == l).count() as f64 / n as f64;
            let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!(close(freq, p, band), "state {l}: {freq}");
        }
    }

    #[test]
    fn transition_frequencies_within_binomial_band() {
        let a = vec![vec![0.7, 0.2, 0.1], vec![0.05, 0.9, 0.05], vec![0.3, 0.3, 0.4]];
        let spec = HmmSpec::new(a.clone(), shift_emissions(Noise::Gaussian, 1.0), 1).unwrap();
        let sim = simulate(&spec, 100_000, 7).unwrap();
        let mut counts = [0usize; 3];
        let mut trans = [[0usize; 3]; 3];
        for w in sim.states.windows(2) {
            counts[w[0]] += 1;
            trans[w[0]][w[1]] += 1;
        }
        for l in 0..3 {
            for m in 0..3 {
                let p = a[l][m];
                let band = 3.0 * (p * (1.0 - p) / counts[l] as f64).sqrt();
                assert!(close(trans[l][m] as f64 / counts[l] as f64, p, band), "transition {l}->{m}");
            }
        }
    }

    #[test]
    fn stationary_marginal_at_every_time() {
        // chi-square on X_1 and X_4 across independent short chains
        let a = vec![vec![0.7, 0.2, 0.1], vec![0.05, 0.9, 0.05], vec![0.3, 0.3, 0.4]];
        let spec = HmmSpec::new(a, shift_emissions(Noise::Gaussian, 1.0), 1).unwrap();
        let reps = 10_000;
        for t in [0, 3] {
            let mut counts = [0f64; 3];
            for r in 0..reps {
                counts[simulate(&spec, 4, r).unwrap().states[t]] += 1.0;
            }
            let chi2: f64 = (0..3)
                .map(|l| {
                    let e = spec.stationary()[l] * reps as f64;
                    (counts[l] - e).powi(2) / e
                })
                .sum();
            // 99.9% quantile of chi-square with 2 degrees of freedom
            assert!(chi2 < 13.815510557964274, "t = {t}: {chi2}");
        }
    }

    #[test]
    fn shift_means_differ_by_two_delta() {
        let delta = 1.5;
        for noise in [Noise::Gaussian, Noise::Student3, Noise::Laplace] {
            let spec = scenario("shift", &ScenarioParams { noise, delta, ..Default::default() }).unwrap();
            let sim = simulate(&spec, 60_000, 11).unwrap();
            let mean_of = |state: usize| {
                let v: Vec<f64> = sim
                    .states
                    .iter()
                    .zip(sim.series.values())
                    .filter(|(s, _)| **s == state)
                    .map(|(_, y)| *y)
                    .collect();
                (v.iter().sum::<f64>() / v.len() as f64, v.len())
            };
            let (m2, n2) = mean_of(1);
            let (m3, n3) = mean_of(2);
            let var = match noise {
                Noise::Gaussian => 1.0,
                Noise::Student3 => 3.0,
                _ => 2.0,
            };
            // Student t3 has no fourth moment; 5 standard errors keeps the check honest
            let band = 5.0 * (var / n2 as f64 + var / n3 as f64).sqrt();
            assert!(close(m2 - m3, 2.0 * delta, band), "{noise}: {}", m2 - m3);
        }
    }

    #[test]
    fn noise_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let draws = |noise: Noise, rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| noise.sample(rng)).collect() };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
        };
        let lap = draws(Noise::Laplace, &mut rng);
        assert!(close(mean(&lap), 0.0, 0.02) && close(var(&lap), 2.0, 0.05));
        let exp = draws(Noise::Exponential, &mut rng);
        assert!(close(mean(&exp), 1.0, 0.01) && exp.iter().all(|&x| x >= 0.0));
        let mut t3 = draws(Noise::Student3, &mut rng);
        t3.sort_by(f64::total_cmp);
        // upper quartile of t with 3 degrees of freedom
        assert!(close(t3[3 * n / 4], 0.7648923284043453, 0.01));
    }

    #[test]
    fn von_mises_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vm = VonMises::new(PI / 2.0 + 2.0 * PI / 3.0, 10.0);
        let n = 100_000;
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let x = vm.sample(&mut rng);
            assert!((0.0..2.0 * PI).contains(&x));
            c += x.cos();
            s += x.sin();
        }
        let resultant = (c * c + s * s).sqrt() / n as f64;
        let direction = s.atan2(c).rem_euclid(2.0 * PI);
        // I1(10) / I0(10)
        assert!(close(resultant, 0.9485998259548463, 2e-3));
        assert!(close(direction, PI / 2.0 + 2.0 * PI / 3.0, 5e-3));
    }

    #[test]
    fn noise_names_round_trip() {
        for noise in Noise::ALL {
            assert_eq!(noise.name().parse::<Noise>().unwrap(), noise);
        }
        assert!("cauchy".parse::<Noise>().is_err());
    }
}
