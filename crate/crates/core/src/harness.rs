//! Replicated simulation experiments: grid expansion, seeding, parallel
//! execution and table output.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_order, estimate_order_max_univariate, Bandwidth, EstimatorConfig};
use crate::kernels::{Kappa, KernelFamily};
use crate::operator::{DataKind, DEFAULT_L_MAX};
use crate::sim::{scenario, simulate, Noise, ScenarioParams};
use crate::spectral::{spectral_order, Rescale, SpectralConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Multivariate,
    MaxUnivariate,
    Spectral,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Multivariate => "multivariate",
            MethodKind::MaxUnivariate => "max-univariate",
            MethodKind::Spectral => "spectral",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "multivariate" | "operator" | "operator-multivariate" => Ok(MethodKind::Multivariate),
            "max-univariate" | "operator-max-univariate" => Ok(MethodKind::MaxUnivariate),
            "spectral" => Ok(MethodKind::Spectral),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// `M_reg` as a number or relative to `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MRegRule {
    Fixed(usize),
    /// `M / k`
    Fraction(usize),
    /// `M - k`
    Minus(usize),
}

impl MRegRule {
    fn parse(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot read M_reg = '{s}'"));
        if let Some(k) = compact.strip_prefix("M/") {
            let k = k.parse().map_err(|_| bad())?;
            if k == 0 {
                return Err(bad());
            }
            Ok(MRegRule::Fraction(k))
        } else if let Some(k) = compact.strip_prefix("M-") {
            Ok(MRegRule::Minus(k.parse().map_err(|_| bad())?))
        } else {
            Ok(MRegRule::Fixed(compact.parse().map_err(|_| bad())?))
        }
    }

    pub fn resolve(self, m: usize) -> Result<usize> {
        let value = match self {
            MRegRule::Fixed(k) => Some(k),
            MRegRule::Fraction(k) => Some(m / k),
            MRegRule::Minus(k) => m.checked_sub(k),
        };
        match value {
            Some(v) if (2..=m).contains(&v) => Ok(v),
            _ => Err(Error::Config(format!("M_reg rule {self:?} gives no valid value for M = {m}"))),
        }
    }
}

/// One fully specified estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub scenario: String,
    pub method: MethodKind,
    /// `(M, M_reg)` for the spectral method.
    pub spectral: Option<(usize, usize)>,
    pub delta: f64,
    pub nu: f64,
    /// `None` picks the dimension default.
    pub beta: Option<f64>,
    pub d: usize,
    pub n: usize,
    pub noise: Noise,
}

impl GridPoint {
    /// Everything that determines the simulated data; methods and tuning
    /// share it so they are compared on the same samples.
    fn data_key(&self) -> String {
        format!(
            "{}|{:?}|{:?}|{}|{}|{}",
            self.scenario,
            self.delta,
            self.nu,
            self.d,
            self.n,
            self.noise.name()
        )
    }

    pub fn label(&self) -> String {
        match self.spectral {
            Some((m, r)) => format!("spectral(M={m},M_reg={r})"),
            None => self.method.name().to_string(),
        }
    }
}

/// 64-bit FNV-1a.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenarios: Vec<String>,
    pub deltas: Vec<f64>,
    pub nus: Vec<f64>,
    pub betas: Vec<Option<f64>>,
    pub dims: Vec<usize>,
    pub n_list: Vec<usize>,
    pub noises: Vec<Noise>,
    pub methods: Vec<MethodKind>,
    pub m_list: Vec<usize>,
    pub m_reg: Vec<MRegRule>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Concurrent replicates; 0 uses every core.
    pub jobs: usize,
    pub l_max: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenarios: vec!["shift".into()],
            deltas: vec![5.0],
            nus: vec![0.1],
            betas: vec![None],
            dims: vec![1],
            n_list: vec![2000],
            noises: vec![Noise::Gaussian],
            methods: vec![MethodKind::Multivariate],
            m_list: vec![20],
            m_reg: vec![MRegRule::Fixed(5)],
            replicates: 20,
            base_seed: 0,
            jobs: 1,
            l_max: DEFAULT_L_MAX,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<OneOrMany<String>>,
    delta: Option<OneOrMany<f64>>,
    nu: Option<OneOrMany<f64>>,
    beta: Option<OneOrMany<NumberOrText>>,
    d: Option<OneOrMany<usize>>,
    n_list: Option<OneOrMany<usize>>,
    noise: Option<OneOrMany<String>>,
    method: Option<OneOrMany<String>>,
    #[serde(rename = "M")]
    m: Option<OneOrMany<usize>>,
    #[serde(rename = "M_reg")]
    m_reg: Option<OneOrMany<NumberOrText>>,
    replicates: Option<usize>,
    base_seed: Option<u64>,
    jobs: Option<usize>,
    l_max: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = Self::default();
        if let Some(v) = raw.scenario {
            c.scenarios = v.into_vec();
        }
        if let Some(v) = raw.delta {
            c.deltas = v.into_vec();
        }
        if let Some(v) = raw.nu {
            c.nus = v.into_vec();
        }
        if let Some(v) = raw.beta {
            c.betas = v
                .into_vec()
                .into_iter()
                .map(|b| match b {
                    NumberOrText::Int(i) => Ok(Some(i as f64)),
                    NumberOrText::Float(f) => Ok(Some(f)),
                    NumberOrText::Text(t) if t == "auto" => Ok(None),
                    NumberOrText::Text(t) => parse_fraction(&t).map(Some),
                })
                .collect::<Result<_>>()?;
        }
        if let Some(v) = raw.d {
            c.dims = v.into_vec();
        }
        if let Some(v) = raw.n_list {
            c.n_list = v.into_vec();
        }
        if let Some(v) = raw.noise {
            c.noises = v.into_vec().iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = raw.method {
            c.methods = v.into_vec().iter().map(|s| MethodKind::parse(s)).collect::<Result<_>>()?;
        }
        if let Some(v) = raw.m {
            c.m_list = v.into_vec();
        }
        if let Some(v) = raw.m_reg {
            c.m_reg = v
                .into_vec()
                .into_iter()
                .map(|r| match r {
                    NumberOrText::Int(i) if i >= 0 => Ok(MRegRule::Fixed(i as usize)),
                    NumberOrText::Text(t) => MRegRule::parse(&t),
                    _ => Err(Error::Config("M_reg must be a count or an expression in M".into())),
                })
                .collect::<Result<_>>()?;
        }
        if let Some(v) = raw.replicates {
            c.replicates = v;
        }
        if let Some(v) = raw.base_seed {
            c.base_seed = v;
        }
        if let Some(v) = raw.jobs {
            c.jobs = v;
        }
        if let Some(v) = raw.l_max {
            c.l_max = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.l_max == 0 {
            return Err(Error::Config("l_max must be at least 1".into()));
        }
        let lists = [
            ("scenario", self.scenarios.is_empty()),
            ("delta", self.deltas.is_empty()),
            ("nu", self.nus.is_empty()),
            ("beta", self.betas.is_empty()),
            ("d", self.dims.is_empty()),
            ("n_list", self.n_list.is_empty()),
            ("noise", self.noises.is_empty()),
            ("method", self.methods.is_empty()),
        ];
        if let Some((key, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(Error::Config(format!("'{key}' must not be empty")));
        }
        if self.n_list.contains(&0) || self.dims.contains(&0) {
            return Err(Error::Config("n and d must be positive".into()));
        }
        if self.methods.contains(&MethodKind::Spectral) && (self.m_list.is_empty() || self.m_reg.is_empty()) {
            return Err(Error::Config("the spectral method needs M and M_reg".into()));
        }
        self.grid().map(|_| ())
    }

    /// All grid points in a fixed order. Combinations that do not apply
    /// (the spectral method on multivariate data, max-of-univariate on
    /// univariate data, parameters the scenario ignores) are dropped or merged.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for name in &self.scenarios {
            let shift = name == "shift";
            for &delta in &self.deltas {
                for &nu in &self.nus {
                    let params = ScenarioParams {
                        nu,
                        delta,
                        noise: self.noises[0],
                        dim: self.dims[0],
                    };
                    // fail early on unknown names or invalid nu
                    scenario(name, &params)?;
                    for &d in &self.dims {
                        for &n in &self.n_list {
                            for &noise in &self.noises {
                                for &method in &self.methods {
                                    for tuning in self.tunings(method)? {
                                        let (beta, spectral) = tuning;
                                        let d = if shift { d } else { 1 };
                                        if (method == MethodKind::Spectral && d != 1)
                                            || (method == MethodKind::MaxUnivariate && d < 2)
                                        {
                                            continue;
                                        }
                                        let point = GridPoint {
                                            scenario: name.clone(),
                                            method,
                                            spectral,
                                            delta: if shift { delta } else { 0.0 },
                                            nu,
                                            beta,
                                            d,
                                            n,
                                            noise: if shift { noise } else { Noise::Gaussian },
                                        };
                                        let key = format!("{}|{:?}|{:?}", point.data_key(), point.beta, point.label());
                                        if seen.insert(key) {
                                            out.push(point);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::type_complexity)]
    fn tunings(&self, method: MethodKind) -> Result<Vec<(Option<f64>, Option<(usize, usize)>)>> {
        if method != MethodKind::Spectral {
            return Ok(self.betas.iter().map(|&b| (b, None)).collect());
        }
        let mut out = Vec::new();
        for &m in &self.m_list {
            for &rule in &self.m_reg {
                let pair = (m, rule.resolve(m)?);
                if !out.contains(&(None, Some(pair))) {
                    out.push((None, Some(pair)));
                }
            }
        }
        Ok(out)
    }
}

fn parse_fraction(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot read beta = '{text}'"));
    match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => text.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    pub l_hat: Option<usize>,
    pub tau: Option<f64>,
    pub h: Option<f64>,
    pub sigma: Vec<f64>,
    /// Estimation only; simulation is excluded.
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub point: GridPoint,
    pub true_order: usize,
    pub records: Vec<ReplicateRecord>,
}

impl CellResult {
    /// Replicates with `l_hat == k`.
    pub fn count(&self, k: usize) -> usize {
        self.records.iter().filter(|r| r.l_hat == Some(k)).count()
    }

    pub fn count_above(&self, k: usize) -> usize {
        self.records.iter().filter(|r| r.l_hat.is_some_and(|l| l > k)).count()
    }

    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.l_hat.is_none()).count()
    }

    /// Fraction of replicates selecting the true order.
    pub fn success_frequency(&self) -> f64 {
        self.count(self.true_order) as f64 / self.records.len() as f64
    }

    pub fn mean_seconds(&self) -> f64 {
        let ok: Vec<f64> = self.records.iter().filter(|r| r.error.is_none()).map(|r| r.seconds).collect();
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().sum::<f64>() / ok.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub cells: Vec<CellResult>,
    pub replicates: usize,
}

impl ResultTable {
    /// Largest true order over the cells; sets the width of the count columns.
    fn order_columns(&self) -> usize {
        self.cells.iter().map(|c| c.true_order).max().unwrap_or(3)
    }
}

fn run_replicate(point: &GridPoint, base_seed: u64, replicate: usize, l_max: usize) -> ReplicateRecord {
    let seed = base_seed
        .wrapping_add(replicate as u64)
        .wrapping_add(fnv1a(&point.data_key()));
    let mut record = ReplicateRecord {
        replicate,
        seed,
        l_hat: None,
        tau: None,
        h: None,
        sigma: Vec::new(),
        seconds: 0.0,
        error: None,
    };
    let params = ScenarioParams {
        nu: point.nu,
        delta: point.delta,
        noise: point.noise,
        dim: point.d,
    };
    let sim = match scenario(&point.scenario, &params).and_then(|spec| simulate(&spec, point.n, seed)) {
        Ok(sim) => sim,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let series = sim.series;
    let start = Instant::now();
    let outcome = match point.method {
        MethodKind::Spectral => {
            let (m, m_reg) = point.spectral.expect("spectral grid points carry (M, M_reg)");
            let config = SpectralConfig {
                m,
                m_reg,
                tau_factor: 1.5,
                rescale: Rescale::Auto,
            };
            spectral_order(&series, &config).map(|e| (e.l_hat, None, None, e.sigma))
        }
        method => {
            let config = EstimatorConfig {
                family: if series.kind() == DataKind::Circular {
                    KernelFamily::VonMises
                } else {
                    KernelFamily::Gaussian
                },
                bandwidth: Bandwidth::Rule {
                    beta: point.beta,
                    kappa: Kappa::Auto,
                },
                l_max,
                ..Default::default()
            };
            let est = if method == MethodKind::Multivariate {
                estimate_order(&series, &config)
            } else {
                estimate_order_max_univariate(&series, &config)
            };
            est.map(|e| (e.l_hat, Some(e.tau), Some(e.h), e.sigma))
        }
    };
    record.seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((l_hat, tau, h, sigma)) => {
            record.l_hat = Some(l_hat);
            record.tau = tau;
            record.h = h;
            record.sigma = sigma;
        }
        Err(e) => {
            log::warn!("{} replicate {replicate} failed: {e}", point.label());
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Runs every grid point `replicates` times.
///
/// Replicate `r` of a grid point simulates with seed
/// `base_seed + r + fnv1a(data key)`, so the output does not depend on
/// `jobs` and adding grid rows leaves the other rows untouched.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let grid = config.grid()?;
    // threading inside the linear algebra would make results depend on the
    // thread count; replicates are the unit of parallelism instead
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.jobs)))?;
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..config.replicates).map(move |r| (c, r)))
        .collect();
    let records: Vec<ReplicateRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| run_replicate(&grid[c], config.base_seed, r, config.l_max))
            .collect()
    });
    let mut records = records.into_iter();
    let cells = grid
        .into_iter()
        .map(|point| {
            let true_order = scenario(
                &point.scenario,
                &ScenarioParams {
                    nu: point.nu,
                    delta: point.delta,
                    noise: point.noise,
                    dim: point.d,
                },
            )
            .map(|s| s.n_states())
            .unwrap_or(3);
            CellResult {
                point,
                true_order,
                records: records.by_ref().take(config.replicates).collect(),
            }
        })
        .collect();
    Ok(ResultTable {
        cells,
        replicates: config.replicates,
    })
}

/// The spectral tuning grid compared against the operator method.
pub fn comparison_config(scenarios: &[&str], n_list: &[usize], replicates: usize, base_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        scenarios: scenarios.iter().map(|s| s.to_string()).collect(),
        nus: vec![0.1],
        n_list: n_list.to_vec(),
        methods: vec![MethodKind::Multivariate, MethodKind::Spectral],
        m_list: vec![20, 40, 60],
        m_reg: vec![MRegRule::Fixed(5), MRegRule::Fraction(2), MRegRule::Minus(5)],
        replicates,
        base_seed,
        ..Default::default()
    }
}

/// Runs the operator method next to the spectral baseline. When the config
/// lists only operator methods the spectral method is added.
pub fn run_method_comparison(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut config = config.clone();
    if !config.methods.contains(&MethodKind::Spectral) {
        config.methods.push(MethodKind::Spectral);
        if config.m_list.is_empty() || config.m_reg.is_empty() {
            let defaults = comparison_config(&[], &[], 1, 0);
            config.m_list = defaults.m_list;
            config.m_reg = defaults.m_reg;
        }
    }
    run_experiment(&config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            other => Err(Error::Config(format!("unknown table format '{other}'"))),
        }
    }
}

/// Wall time is the only nondeterministic column, so it is opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmitOptions {
    pub include_timing: bool,
}

fn header(k: usize, timing: bool) -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "method", "M", "M_reg", "delta", "nu", "beta", "d", "n", "noise", "replicates"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=k).map(|j| format!("count_{j}")));
    h.push(format!("count_gt{k}"));
    h.push("count_0".into());
    h.push("failed".into());
    h.push("pct_true".into());
    if timing {
        h.push("mean_seconds".into());
    }
    h
}

fn row(cell: &CellResult, k: usize, timing: bool) -> Vec<String> {
    let p = &cell.point;
    let (m, m_reg) = match p.spectral {
        Some((m, r)) => (m.to_string(), r.to_string()),
        None => (String::new(), String::new()),
    };
    let mut r = vec![
        p.scenario.clone(),
        p.method.name().to_string(),
        m,
        m_reg,
        p.delta.to_string(),
        p.nu.to_string(),
        p.beta.map_or_else(|| "auto".to_string(), |b| b.to_string()),
        p.d.to_string(),
        p.n.to_string(),
        p.noise.name().to_string(),
        cell.records.len().to_string(),
    ];
    r.extend((1..=k).map(|j| cell.count(j).to_string()));
    r.push(cell.count_above(k).to_string());
    r.push(cell.count(0).to_string());
    r.push(cell.failed().to_string());
    r.push((100.0 * cell.success_frequency()).to_string());
    if timing {
        r.push(cell.mean_seconds().to_string());
    }
    r
}

/// Renders the table with a fixed column order: grid keys, counts of
/// `l_hat = 1..K`, `l_hat > K`, `l_hat = 0`, failures, percentage of runs
/// selecting the true order `K`, then optionally mean wall time.
pub fn emit_table(table: &ResultTable, format: TableFormat, opts: EmitOptions) -> String {
    let k = table.order_columns();
    let head = header(k, opts.include_timing);
    let rows: Vec<Vec<String>> = table.cells.iter().map(|c| row(c, k, opts.include_timing)).collect();
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&head).expect("writing to memory");
            for r in &rows {
                w.write_record(r).expect("writing to memory");
            }
            String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
            out.push_str(&line(&head));
            let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
            for r in &rows {
                out.push_str(&line(r));
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub d: usize,
    pub method: String,
    pub mean_seconds: f64,
    pub runs: usize,
}

/// Mean estimation time per `(n, d, method)`, pooled over the other keys.
pub fn timing_rows(table: &ResultTable) -> Vec<TimingRow> {
    let mut out: Vec<(TimingRow, f64)> = Vec::new();
    for cell in &table.cells {
        let label = cell.point.label();
        let times: Vec<f64> = cell.records.iter().filter(|r| r.error.is_none()).map(|r| r.seconds).collect();
        let entry = out
            .iter_mut()
            .find(|(t, _)| t.n == cell.point.n && t.d == cell.point.d && t.method == label);
        match entry {
            Some((t, total)) => {
                t.runs += times.len();
                *total += times.iter().sum::<f64>();
            }
            None => out.push((
                TimingRow {
                    n: cell.point.n,
                    d: cell.point.d,
                    method: label,
                    mean_seconds: 0.0,
                    runs: times.len(),
                },
                times.iter().sum(),
            )),
        }
    }
    out.into_iter()
        .map(|(mut t, total)| {
            t.mean_seconds = if t.runs == 0 { f64::NAN } else { total / t.runs as f64 };
            t
        })
        .collect()
}

pub fn timing_report(config: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    Ok(timing_rows(&run_experiment(config)?))
}

pub fn emit_timing(rows: &[TimingRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "d", "method", "mean_seconds", "runs"]).expect("writing to memory");
    for t in rows {
        w.write_record([
            t.n.to_string(),
            t.d.to_string(),
            t.method.clone(),
            t.mean_seconds.to_string(),
            t.runs.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}
