use std::collections::BTreeMap;
use std::process::Command;

use klopt_harness::acceptance::{exit_code, run_acceptance, AcceptOptions};

fn only(ids: &[u32]) -> AcceptOptions {
    AcceptOptions { only: Some(ids.to_vec()), perturb: BTreeMap::new() }
}

#[test]
fn perturbed_prediction_fails_its_row() {
    let mut opts = only(&[11]);
    opts.perturb.insert(11, 0.5);
    let r = run_acceptance(&opts);
    assert_eq!(r.rows.len(), 1);
    assert!(!r.rows[0].pass);
    assert_ne!(r.exit_code(), 0);
}

#[test]
fn unperturbed_fast_criteria_pass() {
    let r = run_acceptance(&only(&[9, 11]));
    assert_eq!(r.rows.iter().map(|x| x.id).collect::<Vec<_>>(), vec![9, 11]);
    assert!(r.rows.iter().all(|x| x.pass), "{}", r.table(true));
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn empty_filter_runs_nothing_and_exits_zero() {
    let r = run_acceptance(&only(&[]));
    assert!(r.rows.is_empty());
    assert!(r.warnings.iter().any(|w| w.contains("0 criteria")));
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn exit_code_is_nonzero_iff_a_row_fails() {
    let mut rows = run_acceptance(&only(&[9])).rows;
    assert_eq!(exit_code(&rows), 0);
    rows.push(rows[0].clone());
    rows[1].pass = false;
    assert_ne!(exit_code(&rows), 0);
    assert_eq!(exit_code(&[]), 0);
}

fn klopt(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_klopt")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

#[test]
fn cli_exit_codes() {
    let (code, text) = klopt(&["accept", "--only", "9", "--quiet"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("[PASS]  9"), "{text}");

    let (code, text) = klopt(&["accept", "--only="]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("0 criteria"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[dynamics]\nK = 10\nalpha_ = 1\n").unwrap();
    let (code, text) = klopt(&["dynamics", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(text.contains("alpha_"), "{text}");

    let cfg = dir.path().join("t.cfg");
    std::fs::write(&cfg, "[tightness]\nepsilon = 0.2\nK = 20000\nfit_from = 200\n").unwrap();
    let (code, text) = klopt(&["dynamics", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{text}");
    let out = dir.path().join("out");
    let (code, text) = klopt(&["tightness", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("epsilon = 0.2"), "config echo missing: {text}");
    assert!(out.join("summary.json").exists() && out.join("tightness_000.csv").exists());
}

#[test]
fn cli_seed_flag_appends_to_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o.cfg");
    std::fs::write(&cfg, "[optimize]\nfunction = quadratic\nmethod = sgd\nK = 100\nfit_from = 10\nseeds = 1\n").unwrap();
    let out = dir.path().join("out");
    let (_, text) = klopt(&["optimize", "--config", cfg.to_str().unwrap(), "--seed", "7", "--seed", "8", "--out", out.to_str().unwrap()]);
    assert!(text.contains("seeds = 1, 7, 8"), "{text}");
    let json = std::fs::read_to_string(out.join("summary.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["points"][0]["seeds"], serde_json::json!([1, 7, 8]));
}
