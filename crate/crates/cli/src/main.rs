use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hmm_order::estimator::{
    estimate_order, estimate_order_max_univariate, Bandwidth, EstimatorConfig, OrderEstimate, ThresholdRule,
};
use hmm_order::harness::{
    emit_table, emit_timing, run_experiment, run_method_comparison, timing_rows, EmitOptions, ExperimentConfig,
    TableFormat,
};
use hmm_order::io::{export_diagnostics, load_series, write_series, DatasetDescriptor, Layout};
use hmm_order::kernels::{Kappa, KernelFamily};
use hmm_order::operator::{PairConstruction, SqrtMethod, DEFAULT_L_MAX};
use hmm_order::sim::{scenario, simulate, Noise, ScenarioParams};
use hmm_order::{Error, Result};

#[derive(Parser)]
#[command(name = "hmm-order", version, about = "Estimate the number of hidden states of an HMM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the order of an observed series.
    Estimate(EstimateArgs),
    /// Simulate a series from a catalog scenario.
    Simulate(SimulateArgs),
    /// Run a replicated simulation experiment.
    Experiment(ExperimentArgs),
    /// Compare the operator estimator with the spectral baseline.
    CompareSpectral(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Columns,
    Deg,
    Rad,
    Multiseq,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Vonmises,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    Operator,
    Submatrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "columns")]
    layout: LayoutArg,
    /// Number of value columns (the sequence id column is not counted).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Defaults to von Mises for angles and Gaussian otherwise.
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Bandwidth exponent: `auto`, a number or a fraction such as `1/6`.
    #[arg(long, default_value = "auto")]
    beta: String,
    /// Bandwidth scale: `auto`, `product` or a positive number.
    #[arg(long, default_value = "auto")]
    kappa: String,
    /// Threshold: `auto`, `theoretical` or a positive number.
    #[arg(long, default_value = "auto")]
    tau: String,
    /// Level of the theoretical threshold.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Mixing time for the theoretical threshold.
    #[arg(long)]
    t_mix: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_L_MAX)]
    lmax: usize,
    /// Keep every k-th observation.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Use a rank-k approximation of the Gram matrix square root.
    #[arg(long)]
    low_rank: Option<usize>,
    /// `submatrix` uses the n x n product of principal blocks of W^{1/2}.
    #[arg(long, value_enum, default_value = "operator")]
    pair_matrix: PairArg,
    /// Maximum of the per-coordinate estimates instead of the joint one.
    #[arg(long)]
    max_univariate: bool,
    /// Write the r_ell / tau table here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "shift")]
    scenario: String,
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    /// Number of consecutive pairs; n + 1 points are written.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value = "gaussian")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the hidden state path, one label per line.
    #[arg(long)]
    states: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Concurrent replicates; overrides the config file.
    #[arg(long, env = "HMM_ORDER_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "HMM_ORDER_JOBS")]
    jobs: Option<usize>,
}

fn parse_number(text: &str, what: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot read {what} = '{text}'"));
    let value = match text.split_once('/') {
        Some((a, b)) => {
            a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?
        }
        None => text.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(bad())
    }
}

fn estimator_config(args: &EstimateArgs, circular: bool) -> Result<EstimatorConfig> {
    let family = match args.kernel {
        Some(KernelArg::Gaussian) => KernelFamily::Gaussian,
        Some(KernelArg::Vonmises) => KernelFamily::VonMises,
        None if circular => KernelFamily::VonMises,
        None => KernelFamily::Gaussian,
    };
    let beta = match args.beta.as_str() {
        "auto" => None,
        text => Some(parse_number(text, "beta")?),
    };
    let kappa = match args.kappa.as_str() {
        "auto" => Kappa::Auto,
        "product" => Kappa::AutoProduct,
        text => Kappa::Fixed(parse_number(text, "kappa")?),
    };
    let threshold = match args.tau.as_str() {
        "auto" => ThresholdRule::Practical,
        "theoretical" => {
            let t_mix = args
                .t_mix
                .ok_or_else(|| Error::Config("--tau theoretical needs --t-mix".into()))?;
            ThresholdRule::theoretical(args.alpha, t_mix)
        }
        text => ThresholdRule::Explicit(parse_number(text, "tau")?),
    };
    let sqrt = match args.low_rank {
        Some(rank) => SqrtMethod::LowRank { rank, tol: 1e-12 },
        None => SqrtMethod::Exact,
    };
    Ok(EstimatorConfig {
        family,
        bandwidth: Bandwidth::Rule { beta, kappa },
        threshold,
        l_max: args.lmax,
        sqrt,
        pair: match args.pair_matrix {
            PairArg::Operator => PairConstruction::Operator,
            PairArg::Submatrix => PairConstruction::Submatrix,
        },
        ..Default::default()
    })
}

fn print_estimate(est: &OrderEstimate) {
    println!("L_hat = {}", est.l_hat);
    println!("tau = {:e}", est.tau);
    println!("h = {}", est.h);
    println!("n_pairs = {}", est.n_pairs);
    for (i, r) in est.r_values.iter().enumerate() {
        println!("r_{} = {:e}", i + 1, r);
    }
    if est.truncated {
        println!("warning: r_{} exceeds tau; L_hat is a lower bound", est.r_values.len());
    }
}

fn run_estimate(args: &EstimateArgs) -> Result<()> {
    let layout = match args.layout {
        LayoutArg::Columns => Layout::Columns(args.dim),
        LayoutArg::Deg => Layout::AnglesDegrees,
        LayoutArg::Rad => Layout::AnglesRadians,
        LayoutArg::Multiseq => Layout::MultiSequence(args.dim),
    };
    let circular = matches!(args.layout, LayoutArg::Deg | LayoutArg::Rad);
    let config = estimator_config(args, circular)?;
    let series = load_series(&DatasetDescriptor::new(&args.input, layout).with_stride(args.stride))?;
    let est = if args.max_univariate {
        estimate_order_max_univariate(&series, &config)?
    } else {
        estimate_order(&series, &config)?
    };
    print_estimate(&est);
    if let Some(path) = &args.diagnostics {
        export_diagnostics(&est, path)?;
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let params = ScenarioParams {
        nu: args.nu,
        delta: args.delta,
        noise: args.noise.parse::<Noise>()?,
        dim: args.dim,
    };
    let spec = scenario(&args.scenario, &params)?;
    let sim = simulate(&spec, args.n, args.seed)?;
    write_series(&sim.series, &args.out)?;
    if let Some(path) = &args.states {
        let text: String = sim.states.iter().map(|s| format!("{}\n", s + 1)).collect();
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn load_config(path: &Path, jobs: Option<usize>) -> Result<ExperimentConfig> {
    // a missing or unreadable config file is a configuration problem
    let mut config = ExperimentConfig::from_path(path).map_err(|e| match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        other => other,
    })?;
    if let Some(j) = jobs {
        config.jobs = j;
    }
    Ok(config)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn timing_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".timing.csv");
    out.with_file_name(name)
}

fn run_experiment_cmd(args: &ExperimentArgs) -> Result<()> {
    let config = load_config(&args.config, args.jobs)?;
    let table = run_experiment(&config)?;
    let format = match args.format {
        FormatArg::Csv => TableFormat::Csv,
        FormatArg::Md => TableFormat::Markdown,
    };
    write_text(&args.out, &emit_table(&table, format, EmitOptions::default()))?;
    write_text(&timing_path(&args.out), &emit_timing(&timing_rows(&table)))?;
    let failed: usize = table.cells.iter().map(|c| c.failed()).sum();
    if failed > 0 {
        eprintln!("{failed} replicates failed; see the 'failed' column");
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let config = load_config(&args.config, args.jobs)?;
    let table = run_method_comparison(&config)?;
    write_text(&args.out, &emit_table(&table, TableFormat::Csv, EmitOptions::default()))?;
    for cell in &table.cells {
        println!(
            "{} n={} {}: {:.2}",
            cell.point.scenario,
            cell.point.n,
            cell.point.label(),
            cell.success_frequency()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::CompareSpectral(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
