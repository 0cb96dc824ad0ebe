use steerkit::output::{csv_string, json_record};
use steerkit::presets;
use steerkit::runner::{run, RunOptions};
use steerkit::scenario::{Engine, Mode, MonteCarloSettings, Scenario, Sweep, SweepVariable};

fn threads(n: usize) -> RunOptions {
    RunOptions { threads: Some(n), seed: None }
}

#[test]
fn csv_is_identical_across_thread_counts() {
    for s in [presets::fig3a(), presets::oracle(), presets::inset()] {
        let one = csv_string(&run(&s, &threads(1)).unwrap()).unwrap();
        let many = csv_string(&run(&s, &threads(5)).unwrap()).unwrap();
        assert_eq!(one, many, "{:?}", s.name);
    }
}

#[test]
fn monte_carlo_columns_are_seeded_and_thread_independent() {
    let mut s = presets::cross();
    s.sweep = Some(Sweep::linear(SweepVariable::R, 0.5, 1.0, 2));
    s.monte_carlo = Some(MonteCarloSettings { trajectories: 2000, steps: Some(32) });
    s.seed = Some(7);
    let a = csv_string(&run(&s, &threads(1)).unwrap()).unwrap();
    let b = csv_string(&run(&s, &threads(3)).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = csv_string(&run(&s, &RunOptions { threads: Some(2), seed: Some(8) }).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn row_count_matches_sweep_and_failures_are_marked() {
    let mut s = presets::fig3a();
    s.engine = Engine::Both;
    s.sweep = Some(Sweep::linear(SweepVariable::R, 0.0, 1.0, 5));
    let record = run(&s, &RunOptions::default()).unwrap();
    assert_eq!(record.rows.len(), 5);
    assert!(record.rows.iter().all(|r| r.len() == record.columns.len()));
    // the oracle needs a pulse of positive length
    assert!(record.rows[0][1..].iter().all(|v| v.is_nan()));
    assert!(record.rows[1..].iter().all(|r| r.iter().all(|v| v.is_finite())));
    assert_eq!(record.warnings.len(), 3);
    let csv = csv_string(&record).unwrap();
    assert!(csv.contains("# warning point 0"));
    assert!(csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap().contains("NaN"));
}

#[test]
fn csv_header_and_provenance() {
    let s = presets::fig3b();
    let record = run(&s, &RunOptions::default()).unwrap();
    let csv = csv_string(&record).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# steerkit "));
    assert_eq!(lines.next().unwrap(), format!("# scenario sha256 {}", s.digest()));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(csv.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "r (1)");
    assert_eq!(&header[1], "E_mW[n=100] (1)");
    assert_eq!(reader.records().count(), s.sweep.unwrap().points);
}

#[test]
fn curve_starts_at_vacuum_and_dips() {
    let record = run(&presets::fig3a(), &RunOptions::default()).unwrap();
    let e: Vec<f64> = record.rows.iter().map(|r| r[1]).collect();
    assert!((e[0] - 0.5).abs() < 1e-12);
    let min = e.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < 0.1);
    assert!(e[e.len() - 1] > min);
}

#[test]
fn threshold_mode_reports_inset_value() {
    let mut s = presets::inset();
    s.sweep = Some(Sweep::linear(SweepVariable::GammaOverG, 0.1, 0.2, 2));
    let record = run(&s, &RunOptions::default()).unwrap();
    assert!((500.0..=700.0).contains(&record.rows[0][1]));
    assert!(record.rows[1][1] < record.rows[0][1]);
}

#[test]
fn heatmap_has_contour_and_flags() {
    let mut s = presets::fig4();
    s.sweep = Some(Sweep::linear(SweepVariable::R, 0.1, 5.0, 11));
    s.sweep2 = Some(Sweep::linear(SweepVariable::GammaOverG, 0.1, 2.0, 9));
    let record = run(&s, &RunOptions::default()).unwrap();
    assert_eq!(record.rows.len(), 99);
    assert!(record.rows.iter().all(|r| r[3] == f64::from(r[2] < 0.5)));
    let json = json_record(&record);
    assert!(!json["extra"]["contour"]["points"].as_array().unwrap().is_empty());
}

#[test]
fn validation_modes_pass_their_defaults() {
    let oracle = run(&presets::oracle(), &RunOptions::default()).unwrap();
    assert!(oracle.validation.as_ref().unwrap().passed);
    let adiabatic = run(&presets::adiabatic(), &RunOptions::default()).unwrap();
    let v = adiabatic.validation.unwrap();
    assert!(v.passed && v.max_relative < 5e-2);
}

#[test]
fn working_point_needs_physical_params() {
    let mut s = presets::fig3a();
    s.mode = Mode::WorkingPoint;
    s.sweep = None;
    assert!(run(&s, &RunOptions::default()).is_err());
}

#[test]
fn scenario_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.json");
    std::fs::write(&path, presets::fig4().to_json()).unwrap();
    let back = Scenario::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(back, presets::fig4());
}
