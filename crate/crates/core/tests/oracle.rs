use std::sync::Arc;

use approx::assert_relative_eq;
use klopt_core::klcore::{HSpec, TestFunction};
use klopt_core::linalg::{dist_sq, norm};
use klopt_core::oracle::*;
use proptest::prelude::*;

fn quad(d: usize) -> Arc<TestFunction> {
    Arc::new(TestFunction::quadratic(1.0, d).unwrap())
}

fn shifted(n: usize) -> Arc<TestFunction> {
    let base = TestFunction::power_abs(1.0, 3.0, 4, 1.0).unwrap();
    Arc::new(TestFunction::finite_sum_shifted(base, n, 0.7, 11).unwrap())
}

#[test]
fn zero_noise_is_exact() {
    let f = quad(3);
    let mut o = GradOracle::new(f.clone(), Noise::AdditiveGaussian { sigma2: 0.0 }, 1).unwrap();
    let x = [1.0, -2.0, 0.5];
    for b in [1, 7, 100] {
        let (g, cost) = o.sample_grad(&x, b).unwrap();
        assert_eq!(g, f.grad(&x));
        assert_eq!(cost, b as u64);
    }
}

#[test]
fn gaussian_batch_variance() {
    let d = 5;
    let f = quad(d);
    let mut o = GradOracle::new(f.clone(), Noise::AdditiveGaussian { sigma2: 1.0 }, 2).unwrap();
    let x = vec![0.3; d];
    let exact = f.grad(&x);
    let trials = 10_000;
    let mut acc = 0.0;
    for _ in 0..trials {
        let (g, _) = o.sample_grad(&x, 100).unwrap();
        acc += dist_sq(&g, &exact);
    }
    let v = acc / trials as f64;
    let want = d as f64 / 100.0;
    assert!(v >= 0.8 * want && v <= 1.2 * want, "variance {v} vs {want}");
}

#[test]
fn gaussian_mean_is_unbiased() {
    let d = 4;
    let f = quad(d);
    let mut o = GradOracle::new(f.clone(), Noise::AdditiveGaussian { sigma2: 2.0 }, 3).unwrap();
    let x = [1.0, 0.0, -1.0, 2.0];
    let n = 100_000;
    let mut mean = vec![0.0; d];
    for _ in 0..n {
        let (g, _) = o.sample_grad(&x, 1).unwrap();
        mean.iter_mut().zip(&g).for_each(|(m, v)| *m += v / n as f64);
    }
    let err = dist_sq(&mean, &f.grad(&x)).sqrt();
    assert!(err <= 3.0 * 2f64.sqrt() * (d as f64 / n as f64).sqrt(), "err {err}");
}

#[test]
fn full_batch_without_replacement_is_exact() {
    let n = 64;
    let f = shifted(n);
    let mut o = GradOracle::new(f.clone(), Noise::FiniteSumSampling { n }, 4)
        .unwrap()
        .with_sampling(Sampling::WithoutReplacement);
    let x = [0.2, -0.1, 0.4, 0.0];
    let (g, cost) = o.sample_grad(&x, n).unwrap();
    assert_eq!(cost, n as u64);
    for (a, b) in g.iter().zip(f.grad(&x)) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(o.sample_grad(&x, n + 1).is_err());
}

#[test]
fn finite_sum_oracle_requires_matching_n() {
    assert!(GradOracle::new(shifted(8), Noise::FiniteSumSampling { n: 9 }, 0).is_err());
    assert!(GradOracle::new(quad(2), Noise::FiniteSumSampling { n: 1 }, 0).is_ok());
    assert!(GradOracle::new(quad(2), Noise::AdditiveGaussian { sigma2: -1.0 }, 0).is_err());
}

#[test]
fn pair_difference_cancels_at_equal_points() {
    let x = [0.5, -0.5, 1.0, 0.25];
    let models: Vec<(Arc<TestFunction>, Noise)> = vec![
        (quad(4), Noise::AdditiveGaussian { sigma2: 3.0 }),
        (quad(4), Noise::MultiplicativeGaussian { s2: 0.5 }),
        (shifted(16), Noise::FiniteSumSampling { n: 16 }),
    ];
    for (f, noise) in models {
        let mut o = GradOracle::new(f, noise, 5).unwrap();
        let s = o.sample_pair_diff(&x, &x, 3).unwrap();
        assert!(s.delta_tilde.iter().all(|&v| v == 0.0));
        assert_eq!(s.cost, 6);
    }
}

#[test]
fn shifted_pair_difference_is_deterministic() {
    let f = shifted(32);
    let mut o = GradOracle::new(f.clone(), Noise::FiniteSumSampling { n: 32 }, 6).unwrap();
    let x = [0.3, 0.1, -0.2, 0.5];
    let y = [-0.1, 0.2, 0.0, 0.4];
    let exact: Vec<f64> = f.grad(&x).iter().zip(f.grad(&y)).map(|(a, b)| a - b).collect();
    for _ in 0..100 {
        let s = o.sample_pair_diff(&x, &y, 4).unwrap();
        assert!(dist_sq(&s.delta_tilde, &exact) < 1e-24);
    }
    let l = f.lipschitz_l();
    let rep = verify_avg_smoothness(&mut o, &x, &y, 1, 10_000, l).unwrap();
    assert!(rep.pass);
    assert!(rep.ratio < 1e-20);
}

#[test]
fn gaussian_pair_difference_has_no_variance() {
    let mut o = GradOracle::new(quad(3), Noise::AdditiveGaussian { sigma2: 1.0 }, 7).unwrap();
    let rep = verify_avg_smoothness(&mut o, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 1, 10_000, 1.0).unwrap();
    assert!(rep.lhs < 1e-24, "lhs {}", rep.lhs);
}

#[test]
fn full_batch_pair_difference_is_exact() {
    let n = 32;
    let f = shifted(n);
    let mut o = GradOracle::new(f, Noise::FiniteSumSampling { n }, 8)
        .unwrap()
        .with_sampling(Sampling::WithoutReplacement);
    let rep = verify_avg_smoothness(&mut o, &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0, 0.3, 0.1], n, 1000, 1.0).unwrap();
    assert!(rep.lhs < 1e-24);
    assert!(rep.ratio < 1e-20);
}

#[test]
fn multiplicative_pair_difference_respects_average_smoothness() {
    let f = Arc::new(TestFunction::power_abs(1.0, 3.0, 3, 2.0).unwrap());
    let mut o = GradOracle::new(f.clone(), Noise::MultiplicativeGaussian { s2: 0.8 }, 9).unwrap();
    let l = o.avg_smoothness_constant();
    let x = [0.5, -0.3, 0.2];
    let y = [0.1, 0.4, -0.6];
    let r1 = verify_avg_smoothness(&mut o, &x, &y, 1, 20_000, l).unwrap();
    assert!(r1.pass && r1.ratio <= 1.0);
    // exact value: (s²/b′)‖Δ‖²
    let delta: Vec<f64> = f.grad(&x).iter().zip(f.grad(&y)).map(|(a, b)| a - b).collect();
    let want = 0.8 * norm(&delta).powi(2);
    assert!((r1.lhs / want - 1.0).abs() < 0.05, "{} vs {want}", r1.lhs);
    let r2 = verify_avg_smoothness(&mut o, &x, &y, 2, 20_000, l).unwrap();
    let halving = r1.lhs / r2.lhs;
    assert!((1.8..=2.2).contains(&halving), "ratio {halving}");
}

#[test]
fn avg_smoothness_rejects_equal_points() {
    let mut o = GradOracle::new(quad(2), Noise::AdditiveGaussian { sigma2: 1.0 }, 0).unwrap();
    assert!(verify_avg_smoothness(&mut o, &[1.0, 1.0], &[1.0, 1.0], 1, 10, 1.0).is_err());
}

#[test]
fn expected_smoothness_checks() {
    let f = quad(3);
    let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, -1.0, 2.0]];
    let mut o = GradOracle::new(f.clone(), Noise::AdditiveGaussian { sigma2: 0.5 }, 10).unwrap();
    let (a, b, c) = o.es_constants();
    assert_eq!((a, b, c), (0.0, 1.0, 1.5));
    let ok = verify_es(&mut o, &pts, a, b, c, HSpec::Zero, 4, 5000).unwrap();
    assert!(ok.pass);
    let bad = verify_es(&mut o, &pts, 0.0, 1.0, 0.0, HSpec::Zero, 4, 5000).unwrap();
    assert!(!bad.pass);
    assert!(verify_es(&mut o, &pts, a, b, c, HSpec::Zero, 4, 999).is_err());

    let g = shifted(40);
    // trace of the empirical shift covariance, from the stored shifts
    let tr: f64 = g.shifts().unwrap().iter().map(|z| z.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / 40.0;
    let mut o = GradOracle::new(g.clone(), Noise::FiniteSumSampling { n: 40 }, 11).unwrap();
    assert_relative_eq!(o.es_constants().2, tr, epsilon = 1e-12);
    let pts = vec![vec![0.1, 0.2, -0.3, 0.0], vec![0.0; 4]];
    assert!(verify_es(&mut o, &pts, 0.0, 1.0, tr, HSpec::Zero, 2, 5000).unwrap().pass);
}

#[test]
fn equal_seeds_give_equal_streams() {
    let mk = || GradOracle::new(quad(2), Noise::AdditiveGaussian { sigma2: 1.0 }, 42).unwrap();
    let (mut a, mut b) = (mk(), mk());
    for _ in 0..50 {
        assert_eq!(a.sample_grad(&[1.0, 2.0], 3).unwrap(), b.sample_grad(&[1.0, 2.0], 3).unwrap());
    }
    let mut c = GradOracle::with_stream(quad(2), Noise::AdditiveGaussian { sigma2: 1.0 }, 42, 1).unwrap();
    assert_ne!(mk().sample_grad(&[1.0, 2.0], 1).unwrap(), c.sample_grad(&[1.0, 2.0], 1).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_is_conserved(calls in proptest::collection::vec((any::<bool>(), 1usize..20), 1..30), seed in any::<u64>()) {
        let f = shifted(20);
        let mut o = GradOracle::new(f, Noise::FiniteSumSampling { n: 20 }, seed).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        let y = [0.0, 0.2, 0.1, 0.4];
        let mut total = 0;
        for (pair, b) in calls {
            total += if pair {
                o.sample_pair_diff(&x, &y, b).unwrap().cost
            } else {
                o.sample_grad(&x, b).unwrap().1
            };
        }
        prop_assert_eq!(o.samples_used(), total);
    }
}
