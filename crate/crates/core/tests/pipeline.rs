use hmm_order::estimator::{estimate_order, estimate_order_max_univariate, EstimatorConfig, ThresholdRule};
use hmm_order::harness::{emit_table, run_experiment, EmitOptions, ExperimentConfig, TableFormat};
use hmm_order::operator::{DataKind, ObservedSeries, PairConstruction, SqrtMethod};
use hmm_order::sim::{scenario, simulate, ScenarioParams};

fn gauss3(n: usize, seed: u64) -> ObservedSeries {
    let spec = scenario("gauss3", &ScenarioParams::default()).unwrap();
    simulate(&spec, n, seed).unwrap().series
}

#[test]
fn well_separated_states_are_found() {
    let s = gauss3(1200, 3);
    let est = estimate_order(&s, &EstimatorConfig::default()).unwrap();
    assert_eq!(est.l_hat, 3, "{:?}", est.r_values);
    assert!(!est.truncated);
    assert_eq!(est.n_pairs, 1200);

    let huge = EstimatorConfig {
        threshold: ThresholdRule::Explicit(1e9),
        ..Default::default()
    };
    assert_eq!(estimate_order(&s, &huge).unwrap().l_hat, 0);
}

#[test]
fn circular_states_are_found() {
    let spec = scenario("vm3", &ScenarioParams::default()).unwrap();
    let s = simulate(&spec, 1200, 8).unwrap().series;
    let est = estimate_order(&s, &EstimatorConfig::circular()).unwrap();
    assert_eq!(est.l_hat, 3, "{:?}", est.r_values);
}

#[test]
fn pooled_sequences_estimate_the_shared_order() {
    let spec = scenario("gauss3", &ScenarioParams::default()).unwrap();
    let seqs: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|k| {
            let s = simulate(&spec, 399, 40 + k).unwrap().series;
            s.points().map(|p| p.to_vec()).collect()
        })
        .collect();
    let pooled = ObservedSeries::from_sequences(&seqs, DataKind::Linear).unwrap();
    assert_eq!(pooled.n_pairs(), 3 * 399);
    let est = estimate_order(&pooled, &EstimatorConfig::default()).unwrap();
    assert_eq!(est.l_hat, 3);
}

#[test]
fn low_rank_agrees_with_exact() {
    let s = gauss3(900, 12);
    let exact = estimate_order(&s, &EstimatorConfig::default()).unwrap();
    let approx = estimate_order(
        &s,
        &EstimatorConfig {
            sqrt: SqrtMethod::LowRank { rank: 150, tol: 1e-12 },
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(exact.l_hat, approx.l_hat);
    for (a, b) in exact.r_values.iter().zip(&approx.r_values).take(4) {
        assert!((a - b).abs() <= 1e-6 * exact.r_values[0], "{a} vs {b}");
    }
}

#[test]
fn both_pair_constructions_run() {
    let s = gauss3(300, 1);
    for pair in [PairConstruction::Operator, PairConstruction::Submatrix] {
        let est = estimate_order(&s, &EstimatorConfig { pair, ..Default::default() }).unwrap();
        assert!(est.l_hat <= 3);
        assert_eq!(est.r_values.len(), 10);
    }
}

#[test]
fn max_univariate_reports_each_coordinate() {
    let spec = scenario("shift", &ScenarioParams { dim: 3, ..Default::default() }).unwrap();
    let s = simulate(&spec, 400, 2).unwrap().series;
    let est = estimate_order_max_univariate(&s, &EstimatorConfig::default()).unwrap();
    assert_eq!(est.coordinates.len(), 3);
    let best = est.coordinates.iter().map(|c| c.l_hat).max().unwrap();
    assert_eq!(est.l_hat, best);
}

#[test]
fn experiment_tables_are_reproducible() {
    let text = r#"
scenario = ["shift", "beta3"]
delta = [3.0, 5.0]
n_list = [150]
method = ["operator", "spectral"]
M = 20
M_reg = ["M/2"]
replicates = 3
base_seed = 77
"#;
    let config = ExperimentConfig::from_toml_str(text).unwrap();
    let a = run_experiment(&ExperimentConfig { jobs: 1, ..config.clone() }).unwrap();
    let b = run_experiment(&ExperimentConfig { jobs: 2, ..config }).unwrap();
    let csv_a = emit_table(&a, TableFormat::Csv, EmitOptions::default());
    assert_eq!(csv_a, emit_table(&b, TableFormat::Csv, EmitOptions::default()));
    // shift at two deltas and beta3 once, each with two methods
    assert_eq!(csv_a.lines().count(), 1 + 6);
    for cell in &a.cells {
        assert_eq!(cell.records.len(), 3);
        assert_eq!(cell.failed(), 0);
    }
}
