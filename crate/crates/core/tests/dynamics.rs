use approx::assert_relative_eq;
use klopt_core::dynamics::*;
use klopt_core::klcore::{HSpec, PhiSpec};
use klopt_core::Error;
use proptest::prelude::*;

fn power(alpha: f64, beta: f64, mu: f64, a: f64, d: f64, tau: f64) -> DynamicsParams {
    DynamicsParams::power(alpha, beta, mu, a, d, tau, 1.0).unwrap()
}

/// Default experiment: c₀ = 0.5, ζ from the prediction, inner length from the contraction margin.
fn fitted(alpha: f64, beta: f64, tau: f64, zeta: Option<f64>) -> (f64, f64) {
    let p = power(alpha, beta, 1.0, 1.0, 1.0, tau);
    let pred = corollary1_rate(alpha, beta, tau).unwrap();
    let sched = StepSchedule::PolyDecay { c0: 0.5, zeta: zeta.unwrap_or(pred.zeta) };
    let t = default_inner_length(&p, &sched, pred.predicted_slope, 1000, 100_000, 10_000).unwrap();
    let trace = simulate_with(&p, &sched, 100_000, t).unwrap();
    (fit_loglog_slope(&trace, 1000).unwrap().slope, -pred.predicted_slope)
}

#[test]
fn recursion_step_examples() {
    assert_relative_eq!(recursion_step(&power(2.0, 1.0, 1.0, 0.0, 0.0, 0.0), 1.0, 0.1, 1), 0.9, epsilon = 1e-15);
    assert_relative_eq!(recursion_step(&power(2.0, 1.0, 1.0, 1.0, 1.0, 0.0), 1.0, 0.1, 1), 0.92, epsilon = 1e-15);
    for eta in [1e-3, 0.1, 0.7] {
        assert_eq!(recursion_step(&power(1.5, 0.5, 1.0, 1.0, 0.0, 0.0), 0.0, eta, 1), 0.0);
    }
}

#[test]
fn stationary_point_examples() {
    let p = power(2.0, 1.0, 1.0, 1.0, 2.0, 0.0);
    assert_relative_eq!(stationary_point(&p, 0.25, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
    assert_eq!(stationary_point(&power(1.5, 0.5, 1.0, 0.0, 0.0, 0.0), 0.1, 1).unwrap(), 0.0);

    let q = power(1.0, 1.0, 1.0, 1.0, 1.0, 0.0);
    let ratio = stationary_point(&q, 0.01, 1).unwrap() / stationary_point(&q, 0.0025, 1).unwrap();
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");

    // γ = 2 and μ ≤ aη: the quadratic term never catches the growth term
    let err = stationary_point(&power(2.0, 1.0, 1.0, 1.0, 1.0, 0.0), 1.0, 1);
    assert!(matches!(err, Err(Error::NoStationaryPoint(_))));
}

#[test]
fn noiseless_stationary_point_closed_form() {
    // d = 0: r = (aη/μ)^{α/(2−γ)}
    let (alpha, beta, mu, a, eta) = (1.5, 0.6, 0.8, 2.0, 0.05);
    let p = power(alpha, beta, mu, a, 0.0, 0.0);
    let want = (a * eta / mu).powf(alpha / (2.0 - alpha * beta));
    assert_relative_eq!(stationary_point(&p, eta, 1).unwrap(), want, max_relative = 1e-10);
}

#[test]
fn rate_predictions() {
    let r = corollary1_rate(2.0, 1.0, 0.0).unwrap();
    assert_eq!((r.branch, r.zeta, r.predicted_slope), (RateBranch::I, 1.0, 1.0));
    let r = corollary1_rate(2.0, 1.0, 0.5).unwrap();
    assert_eq!(r.predicted_slope, 1.5);
    let r = corollary1_rate(1.0, 1.0, 0.0).unwrap();
    assert_eq!(r.branch, RateBranch::IIa);
    assert_relative_eq!(r.predicted_slope, 1.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(r.zeta, 2.0 / 3.0, epsilon = 1e-15);
    // γ = 1.1, τ = 0.9 lies past the threshold 1.1/1.5: the branch rule picks ii-b, while the
    // first-branch formula gives the ≈1.0231 quoted for this curve
    let r = corollary1_rate(1.4, 1.1 / 1.4, 0.9).unwrap();
    assert_eq!(r.branch, RateBranch::IIb);
    assert_relative_eq!(r.predicted_slope, 1.4 / 1.5, epsilon = 1e-12);
    assert!((1.4 * 1.9 / 2.6 - 1.0231f64).abs() < 1e-4);
    // past the threshold the batch exponent stops mattering
    let a = corollary1_rate(1.5, 0.5, 3.0).unwrap();
    let b = corollary1_rate(1.5, 0.5, 5.0).unwrap();
    assert_eq!(a.branch, RateBranch::IIb);
    assert_eq!(a.predicted_slope, b.predicted_slope);
    assert_relative_eq!(a.predicted_slope, 1.5 / (4.0 - 1.5 - 0.75), epsilon = 1e-15);
    assert!(corollary1_rate(2.5, 1.0, 0.0).is_err());
    assert!(corollary1_rate(1.5, 1.5, 0.0).is_err());
}

#[test]
fn branches_meet_at_the_threshold() {
    for (alpha, beta) in [(1.0, 1.0), (1.5, 0.5), (1.2, 0.8)] {
        let th = branch_threshold(alpha, beta);
        let lo = corollary1_rate(alpha, beta, th).unwrap();
        let hi = corollary1_rate(alpha, beta, th + 1e-9).unwrap();
        assert!((lo.predicted_slope - hi.predicted_slope).abs() < 1e-6);
        assert!((lo.zeta - hi.zeta).abs() < 1e-6);
    }
}

#[test]
fn batch_sizes() {
    assert_eq!(batch_size(1, 2.0), 1);
    assert_eq!(batch_size(10, 0.0), 1);
    assert_eq!(batch_size(10, 0.5), 3);
    assert_eq!(batch_size(100, 1.0), 100);
}

#[test]
fn geometric_decay_without_noise() {
    let p = power(2.0, 1.0, 1.0, 0.0, 0.0, 0.0);
    let t = simulate(&p, &StepSchedule::Constant { eta: 0.1 }, 200).unwrap();
    for row in &t.rows {
        assert_relative_eq!(row.delta, 0.9f64.powi(row.k as i32), max_relative = 1e-12);
        assert_eq!(row.cum_cost, row.k);
    }
    assert_eq!(t.clamp_events, 0);
}

#[test]
fn simulate_rejects_short_runs() {
    let p = power(2.0, 1.0, 1.0, 0.0, 0.0, 0.0);
    assert!(simulate(&p, &StepSchedule::Constant { eta: 0.1 }, 9).is_err());
}

#[test]
fn descent_guard_clamps_overshoot() {
    let p = power(2.0, 1.0, 1.0, 0.0, 0.0, 0.0);
    let t = simulate(&p, &StepSchedule::Constant { eta: 5.0 }, 20).unwrap();
    assert!(t.clamp_events > 0);
    assert!(t.rows.iter().all(|r| r.delta > 0.0 && r.delta < 1.0));
}

#[test]
fn one_pl_slope() {
    let (got, want) = fitted(1.0, 1.0, 0.0, None);
    assert!((got - want).abs() <= 0.1, "{got} vs {want}");
}

#[test]
fn red_curve_slope() {
    let (got, _) = fitted(1.4, 1.1 / 1.4, 0.9, Some(first_branch_zeta(1.4, 0.9)));
    assert!((got + 1.02).abs() <= 0.1, "{got}");
}

#[test]
fn quadratic_growth_slope() {
    let (got, want) = fitted(2.0, 1.0, 0.0, None);
    assert!((got - want).abs() <= 0.1, "{got} vs {want}");
}

#[test]
fn slope_fits() {
    let rows = |f: &dyn Fn(f64) -> f64| Trace {
        rows: (1..=1000)
            .map(|k| TraceRow { k, delta: f(k as f64), eta: 1.0, batch: 1, cum_cost: k })
            .collect(),
        clamp_events: 0,
    };
    let exact = fit_loglog_slope(&rows(&|k| 5.0 * k.powf(-0.5)), 1).unwrap();
    assert_relative_eq!(exact.slope, -0.5, epsilon = 1e-12);
    assert_relative_eq!(exact.r_squared, 1.0, epsilon = 1e-12);
    let noisy = fit_loglog_slope(&rows(&|k| 5.0 * k.powf(-0.5) * (1.0 + 0.01 * k.sin())), 1).unwrap();
    assert!((noisy.slope + 0.5).abs() <= 0.01);
    let flat = fit_loglog_slope(&rows(&|_| 3.0), 1).unwrap();
    assert!(flat.slope.abs() < 1e-12);
    assert!(fit_loglog_slope(&rows(&|k| k), 960).is_err());
    // zero rows are dropped, not fatal
    let mut z = rows(&|k| 2.0 / k);
    z.rows[10].delta = 0.0;
    assert_relative_eq!(fit_loglog_slope(&z, 1).unwrap().slope, -1.0, epsilon = 1e-12);
}

#[test]
fn tightness_slopes() {
    for (eps, want) in [(0.2, -0.8 / 1.2), (0.8, -0.2 / 1.8), (0.0, -1.0)] {
        let p = TightnessParams::new(1.0, 1.0, eps, 2.0).unwrap();
        assert_relative_eq!(p.optimal_slope(), want, epsilon = 1e-15);
        let t = tightness_simulate(&p, TightnessMode::Greedy, 100_000).unwrap();
        let got = fit_loglog_slope(&t, 1000).unwrap().slope;
        assert!((got - want).abs() <= 0.05, "ε={eps}: {got} vs {want}");
    }
}

#[test]
fn tightness_two_phase_tracks_the_rate() {
    let p = TightnessParams::new(1.0, 1.0, 0.2, 2.0).unwrap();
    let hs: Vec<u64> = (0..12).map(|i| (1000.0 * 1.5f64.powi(i)) as u64).collect();
    let finals = two_phase_final_values(&p, &hs).unwrap();
    let xs: Vec<f64> = finals.iter().map(|(k, _)| *k as f64).collect();
    let ys: Vec<f64> = finals.iter().map(|(_, r)| *r).collect();
    let (slope, _, _) = fit_line(&xs.iter().map(|v| v.ln()).collect::<Vec<_>>(), &ys.iter().map(|v| v.ln()).collect::<Vec<_>>()).unwrap();
    assert!((slope - p.optimal_slope()).abs() <= 0.05, "{slope}");
}

#[test]
fn tightness_guard() {
    assert!(TightnessParams::new(1.0, 1.0, 1.0, 2.0).is_err());
    assert!(TightnessParams::new(1.0, 1.0, 0.2, 1.0).is_err());
    let p = TightnessParams::new(1.0, 1.0, 0.2, 2.0).unwrap();
    let too_big = TightnessMode::Schedule(StepSchedule::Constant { eta: 1.5 });
    assert!(matches!(tightness_simulate(&p, too_big, 100), Err(Error::Domain(_))));
}

#[test]
fn greedy_constant_matches_one_step_optimum() {
    // with the optimal η, r' = r − A·r^{2/(1−ε)}
    let p = TightnessParams::new(0.7, 1.3, 0.3, 2.0).unwrap();
    let t = tightness_simulate(&p, TightnessMode::Greedy, 2).unwrap();
    let r1 = t.rows[0].delta;
    let e = p.epsilon;
    assert_relative_eq!(r1, 1.0 - p.greedy_constant(), max_relative = 1e-12);
    let r2 = r1 * (1.0 - p.greedy_constant() * r1.powf(2.0 / (1.0 - e) - 1.0));
    assert_relative_eq!(t.rows[1].delta, r2, max_relative = 1e-12);
}

#[test]
fn residual_examples() {
    let p = power(2.0, 1.0, 1.0, 0.0, 1.0, 0.0);
    for k in [1, 10, 1000] {
        assert_relative_eq!(theorem1_residual(&p, 1.0 / k as f64, k).unwrap(), 1.0, epsilon = 1e-12);
    }
    let c = 0.8;
    let q = power(2.0, 1.0, 1.0, 1.0, 1.0, 0.0);
    let w = theorem1_residual(&q, c / 1e6, 1_000_000).unwrap();
    assert!((w - c).abs() < 1e-5);
    let z = power(1.5, 0.5, 1.0, 0.0, 0.0, 0.0);
    assert_eq!(theorem1_residual(&z, 0.1, 10).unwrap(), 0.0);
}

#[test]
fn cost_slope_equals_iteration_slope_without_batch_growth() {
    let p = power(1.0, 1.0, 1.0, 1.0, 1.0, 0.0);
    let t = simulate(&p, &StepSchedule::PolyDecay { c0: 0.5, zeta: 2.0 / 3.0 }, 5000).unwrap();
    let a = fit_loglog_slope(&t, 500).unwrap().slope;
    let b = fit_loglog_slope_cost(&t, 500).unwrap().slope;
    assert_eq!(a, b);
}

#[test]
fn cost_slope_is_batch_invariant_below_threshold() {
    // α = β = 1: threshold γ/(4−α−γ) = 0.5, so τ ∈ {0, 0.2} share the cost exponent 1/3
    for tau in [0.0, 0.2] {
        let p = power(1.0, 1.0, 1.0, 1.0, 1.0, tau);
        let pred = corollary1_rate(1.0, 1.0, tau).unwrap();
        let sched = StepSchedule::PolyDecay { c0: 0.5, zeta: pred.zeta };
        let t_in = default_inner_length(&p, &sched, pred.predicted_slope, 1000, 100_000, 10_000).unwrap();
        let t = simulate_with(&p, &sched, 100_000, t_in).unwrap();
        let got = fit_loglog_slope_cost(&t, 1000).unwrap().slope;
        assert!((got + 1.0 / 3.0).abs() <= 0.1, "τ={tau}: {got}");
    }
}

#[test]
fn sample_cost_reports_first_crossing() {
    let p = power(2.0, 1.0, 1.0, 0.0, 0.0, 1.0);
    let t = simulate(&p, &StepSchedule::Constant { eta: 0.5 }, 20).unwrap();
    // δ_k = 2^{−k}, b_k = k
    assert_eq!(sample_cost(&t, 0.1).unwrap(), 1 + 2 + 3 + 4);
    match sample_cost(&t, 1e-300) {
        Err(Error::NotReached { final_value }) => assert_relative_eq!(final_value, 0.5f64.powi(20)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn non_power_kl_functions() {
    let p = DynamicsParams::new(1.0, 1.0, HSpec::Log1p, PhiSpec::SqrtTLog, 0.0, 1.0).unwrap();
    let sched = StepSchedule::PolyDecay { c0: 0.5, zeta: 1.0 };
    let t_in = default_inner_length(&p, &sched, 0.5, 1000, 100_000, 10_000).unwrap();
    let t = simulate_with(&p, &sched, 100_000, t_in).unwrap();
    let got = fit_loglog_slope(&t, 1000).unwrap().slope;
    assert!((got + 0.5).abs() <= 0.1, "{got}");

    let q = DynamicsParams::new(1.0, 1.0, HSpec::power(1.0).unwrap(), PhiSpec::MinLinSqrt, 0.0, 1.0).unwrap();
    let sched = StepSchedule::PolyDecay { c0: 0.5, zeta: 2.0 / 3.0 };
    let t_in = default_inner_length(&q, &sched, 1.0 / 3.0, 1000, 100_000, 10_000).unwrap();
    let t = simulate_with(&q, &sched, 100_000, t_in).unwrap();
    let got = fit_loglog_slope(&t, 1000).unwrap().slope;
    assert!((got + 1.0 / 3.0).abs() <= 0.1, "{got}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stationary_point_is_a_fixed_point(
        alpha in 1.0..2.0f64,
        beta in 0.1..=1.0f64,
        a in 0.0..3.0f64,
        d in 0.01..3.0f64,
        eta in 1e-4..0.1f64,
        b in 1u64..100,
    ) {
        let p = power(alpha, beta, 1.0, a, d, 0.0);
        let r = stationary_point(&p, eta, b).unwrap();
        prop_assert!(r > 0.0);
        let next = recursion_step(&p, r, eta, b);
        prop_assert!((next - r).abs() <= 1e-10 * r, "r={} next={}", r, next);
    }

    #[test]
    fn descent_is_monotone_above_the_fixed_point(
        alpha in 1.0..2.0f64,
        beta in 0.2..=1.0f64,
    ) {
        prop_assume!(alpha * beta < 2.0 - 1e-6);
        let p = power(alpha, beta, 1.0, 1.0, 1.0, 0.0);
        let pred = corollary1_rate(alpha, beta, 0.0).unwrap();
        let sched = StepSchedule::PolyDecay { c0: 0.5, zeta: pred.zeta };
        prop_assert!(p.delta0 > stationary_point(&p, 0.5, 1).unwrap());
        let t = simulate(&p, &sched, 2000).unwrap();
        for w in t.rows.windows(2) {
            prop_assert!(w[1].delta <= w[0].delta * (1.0 + 1e-12));
        }
    }
}
