use std::fs;

use klopt_harness::output::{read_csv, refit_csv, Cell, Table};
use klopt_harness::{parse_config_str, run_experiment};
use proptest::prelude::*;

const SGD: &str = "[optimize]
function = cosh
box = 2
method = sgd
K = 3000
fit_from = 100
seeds = 3, 1, 2
";

#[test]
fn identical_config_and_seeds_give_byte_identical_csv() {
    let cfg = parse_config_str(SGD).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n == "optimize_000.csv"));
    for n in names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")) {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn refitting_the_persisted_trace_reproduces_the_summary() {
    let cfg = parse_config_str("[dynamics]\nK = 20000\nalpha = 1, 1.5\ntau = 0, 0.9\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(report.points.len(), 4);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    for (i, p) in report.points.iter().enumerate() {
        let fit = p.summary.fit.as_ref().unwrap();
        let refit = refit_csv(&dir.path().join(&p.trace), fit).unwrap();
        let stored = json["points"][i]["summary"]["fitted_slope"].as_f64().unwrap();
        assert!((refit - stored).abs() <= 1e-12, "point {i}: {refit} vs {stored}");
    }
}

#[test]
fn csv_layout() {
    let mut t = Table::new(&["k", "v"]);
    t.push(vec![Cell::Int(1), Cell::Float(0.1)]);
    t.push(vec![Cell::Int(2), Cell::Float(-2.5e-300)]);
    let s = t.to_csv();
    assert_eq!(s, "k,v\n1,1.0000000000000001e-1\n2,-2.5000000000000000e-300\n");
    assert!(!s.contains('\r'));
}

#[test]
fn summary_json_keeps_field_order() {
    let cfg = parse_config_str("[tightness]\nepsilon = 0.5\nK = 2000\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let summary = &text[text.find("\"summary\"").unwrap()..];
    let pos = |k: &str| summary.find(&format!("\"{k}\"")).unwrap_or_else(|| panic!("no {k}"));
    let order = ["fitted_slope", "predicted_slope", "tolerance", "pass", "clamp_events", "wall_time"];
    assert!(order.windows(2).all(|w| pos(w[0]) < pos(w[1])), "{text}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn csv_floats_round_trip_bit_for_bit(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
        let mut t = Table::new(&["x"]);
        for &x in &xs {
            t.push(vec![Cell::Float(x)]);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.write_csv(&path).unwrap();
        let back = &read_csv(&path).unwrap()["x"];
        for (a, b) in xs.iter().zip(back) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
