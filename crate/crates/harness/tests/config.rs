use klopt_harness::config::Val;
use klopt_harness::{parse_config_str, Kind, Point};
use proptest::prelude::*;

#[test]
fn minimal_dynamics_config_fills_defaults() {
    let cfg = parse_config_str("[dynamics]\nalpha = 1.5\nbeta = 0.5\ntau = 0.9\nK = 1e5\n").unwrap();
    assert_eq!(cfg.kind, Kind::Dynamics);
    assert_eq!(cfg.points.len(), 1);
    let p = &cfg.points[0];
    assert_eq!(p.f("alpha").unwrap(), 1.5);
    assert_eq!(p.u("K").unwrap(), 100_000);
    assert_eq!(p.s("phi").unwrap(), "power");
    assert_eq!(p.f("tolerance").unwrap(), 0.1);
    assert_eq!(p.auto("zeta").unwrap(), None);
    let echo = cfg.echo();
    for line in ["alpha = 1.5", "beta = 0.5", "tau = 0.9", "K = 100000", "phi = power", "zeta = auto"] {
        assert!(echo.contains(line), "echo lacks `{line}`:\n{echo}");
    }
}

#[test]
fn unknown_key_is_named_with_its_line() {
    let err = parse_config_str("[dynamics]\nK = 10\nalpha_ = 1.5\n").unwrap_err().to_string();
    assert!(err.contains("alpha_"), "{err}");
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn alpha_outside_pl_range_is_a_domain_error() {
    let err = parse_config_str("[dynamics]\nK = 10\nalpha = 2.5\n").unwrap_err().to_string();
    assert!(err.contains("alpha = 2.5"), "{err}");
    assert!(err.contains("[1, 2]"), "{err}");
    assert!(err.contains("PŁ"), "{err}");
}

#[test]
fn missing_required_key_and_type_mismatch() {
    let err = format!("{:#}", parse_config_str("[dynamics]\nalpha = 1\n").unwrap_err());
    assert!(err.contains("`K`"), "{err}");
    let err = parse_config_str("[dynamics]\nK = ten\n").unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("`K`"), "{err}");
    let err = parse_config_str("[dynamics]\nK = 10\nphi = cubic\n").unwrap_err().to_string();
    assert!(err.contains("cubic"), "{err}");
}

#[test]
fn structural_errors() {
    assert!(parse_config_str("K = 10\n").unwrap_err().to_string().contains("before any"));
    assert!(parse_config_str("[dynamics]\nK = 10\n[tightness]\n").is_err());
    assert!(parse_config_str("[nope]\n").unwrap_err().to_string().contains("nope"));
    assert!(parse_config_str("[dynamics]\nK = 10\nK = 20\n").unwrap_err().to_string().contains("twice"));
    assert!(parse_config_str("[dynamics]\nK =\n").unwrap_err().to_string().contains("empty"));
    assert!(parse_config_str("[optimize]\nfunction = cosh\nmethod = sgd\nseeds = -1\n").is_err());
}

#[test]
fn stochastic_kinds_need_seeds() {
    let cfg = parse_config_str("[optimize]\nfunction = cosh\nmethod = sgd\n").unwrap();
    assert!(cfg.check_seeds().is_err());
    let cfg = parse_config_str("[optimize]\nfunction = cosh\nmethod = sgd\nseeds = 1, 2\n").unwrap();
    assert_eq!(cfg.seeds, vec![1, 2]);
    cfg.check_seeds().unwrap();
    let cfg = parse_config_str("[dynamics]\nK = 10\n").unwrap();
    cfg.check_seeds().unwrap();
}

#[test]
fn sweeps_expand_to_the_cross_product_in_key_order() {
    let cfg = parse_config_str("[dynamics]\nK = 100\nalpha = 1, 1.5, 2\n# comment\ntau = 0, 0.9 # trailing\n").unwrap();
    assert_eq!(cfg.swept, vec!["alpha".to_string(), "tau".to_string()]);
    assert_eq!(cfg.points.len(), 6);
    let pairs: Vec<(f64, f64)> = cfg.points.iter().map(|p| (p.f("alpha").unwrap(), p.f("tau").unwrap())).collect();
    assert_eq!(pairs, vec![(1.0, 0.0), (1.0, 0.9), (1.5, 0.0), (1.5, 0.9), (2.0, 0.0), (2.0, 0.9)]);
}

#[test]
fn finite_sum_kind_accepts_both_spellings() {
    assert_eq!(parse_config_str("[finite_sum]\nn = 8\n").unwrap().kind, Kind::FiniteSum);
    assert_eq!(parse_config_str("[finite-sum]\nn = 8\n").unwrap().kind, Kind::FiniteSum);
}

proptest! {
    #[test]
    fn alpha_accepted_iff_in_pl_range(alpha in -1.0f64..4.0) {
        let r = Point::defaults(Kind::Dynamics).set("alpha", &alpha.to_string());
        prop_assert_eq!(r.is_ok(), (1.0..=2.0).contains(&alpha));
    }

    #[test]
    fn float_values_round_trip_through_text(x in 1.0f64..2.0) {
        let p = Point::defaults(Kind::Dynamics).set("alpha", &x.to_string()).unwrap();
        prop_assert_eq!(p.values.get("alpha"), Some(&Val::Float(x)));
    }
}
