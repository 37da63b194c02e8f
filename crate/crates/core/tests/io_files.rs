use std::io::Write;

use hmm_order::io::{layout_of, load_series, write_series, DatasetDescriptor, Layout};
use hmm_order::operator::{DataKind, ObservedSeries};
use hmm_order::sim::{scenario, simulate, ScenarioParams};
use hmm_order::Error;

#[test]
fn hourly_angles_subsample_to_both_readings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wind.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    for t in 0..35064 {
        writeln!(f, "{}", (t * 7) % 360).unwrap();
    }
    drop(f);
    let every6 = load_series(&DatasetDescriptor::new(&path, Layout::AnglesDegrees).with_stride(6)).unwrap();
    assert_eq!(every6.n_points(), 5844);
    let every4 = load_series(&DatasetDescriptor::new(&path, Layout::AnglesDegrees).with_stride(4)).unwrap();
    assert_eq!(every4.n_points(), 8766);
    assert_eq!(every4.kind(), DataKind::Circular);
    assert!(every4.values().iter().all(|v| (0.0..std::f64::consts::TAU).contains(v)));
    // every 4th hour advances the angle by 28 degrees
    assert!((every4.values()[1] - 28f64.to_radians()).abs() < 1e-12);
}

#[test]
fn simulated_files_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (name, dim) in [("shift", 3), ("beta3", 1), ("vm3", 1)] {
        let spec = scenario(name, &ScenarioParams { dim, ..Default::default() }).unwrap();
        let series = simulate(&spec, 300, 5).unwrap().series;
        let path = dir.path().join(format!("{name}.txt"));
        write_series(&series, &path).unwrap();
        let back = load_series(&DatasetDescriptor::new(&path, layout_of(&series))).unwrap();
        assert_eq!(back, series, "{name}");
    }
}

#[test]
fn multi_sequence_files_keep_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let seqs: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|s| (0..5 + s).map(|t| vec![t as f64 + 0.25, -(s as f64)]).collect())
        .collect();
    let series = ObservedSeries::from_sequences(&seqs, DataKind::Linear).unwrap();
    let path = dir.path().join("multi.csv");
    write_series(&series, &path).unwrap();
    let back = load_series(&DatasetDescriptor::new(&path, Layout::MultiSequence(2))).unwrap();
    assert_eq!(back.sequence_lengths(), &[5, 6, 7]);
    assert_eq!(back.n_pairs(), 4 + 5 + 6);
    let strided = load_series(&DatasetDescriptor::new(&path, Layout::MultiSequence(2)).with_stride(2)).unwrap();
    assert_eq!(strided.sequence_lengths(), &[3, 3, 4]);
}

#[test]
fn loader_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.txt");
    assert!(matches!(
        load_series(&DatasetDescriptor::new(&missing, Layout::Columns(1))),
        Err(Error::Io { .. })
    ));
    let path = dir.path().join("x.txt");
    std::fs::write(&path, "1\n2\n").unwrap();
    let err = load_series(&DatasetDescriptor::new(&path, Layout::Columns(1)).with_stride(0)).unwrap_err();
    assert!(err.is_config());
}
