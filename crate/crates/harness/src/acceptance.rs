//! The acceptance suite: every criterion runs at its stated tolerance and becomes one report
//! row. A criterion that errors is a failing row, not a crash.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Result};
use klopt_core::dynamics::{
    first_branch_zeta, fit_loglog, tightness_simulate, StepSchedule, TightnessMode, TightnessParams,
};
use klopt_core::klcore::{iterate_distance_bound, TestFunction};
use klopt_core::linalg::dist_sq;
use klopt_core::optimizers::{page_step, PagerStage, PagerState};
use klopt_core::oracle::{run_rng, verify_avg_smoothness, GradOracle, Noise};
use klopt_core::rlpg::{exact_policy_gradient, gpomdp_single, sample_trajectory, TabularMdp};
use log::warn;
use rand::Rng;
use serde::Serialize;

use crate::config::{Kind, Point};
use crate::experiments::{run_point, rl_setup, sample_points, PointRun};
use crate::output::slope_pass;
use crate::runner::par_map;

/// Master seed for every random choice the suite makes.
pub const SUITE_SEED: u64 = 20240607;

#[derive(Debug, Clone, Serialize)]
pub struct AcceptRow {
    pub id: u32,
    pub name: String,
    pub predicted: String,
    pub observed: String,
    pub tolerance: String,
    pub pass: bool,
    pub detail: Vec<String>,
    pub wall_time: f64,
    pub budget: f64,
}

impl AcceptRow {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} predicted {} | observed {} | tolerance {} | {:.1}s",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.predicted,
            self.observed,
            self.tolerance,
            self.wall_time
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct AcceptOptions {
    /// run only these criterion ids; `Some(vec![])` runs nothing
    pub only: Option<Vec<u32>>,
    /// added to every predicted slope of the given criterion (self-test hook)
    pub perturb: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptReport {
    pub rows: Vec<AcceptRow>,
    pub warnings: Vec<String>,
}

impl AcceptReport {
    /// 0 iff every row passes.
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.rows)
    }

    pub fn table(&self, details: bool) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            s += &format!("warning: {w}\n");
        }
        for r in &self.rows {
            s += &r.line();
            s.push('\n');
            if details {
                for d in &r.detail {
                    s += &format!("       {d}\n");
                }
            }
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        s += &format!("{} criteria, {} passed, {} failed\n", self.rows.len(), self.rows.len() - failed, failed);
        s
    }
}

pub fn exit_code(rows: &[AcceptRow]) -> i32 {
    if rows.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}

/// A sub-check of a criterion.
struct Check {
    pass: bool,
    text: String,
}

impl Check {
    fn new(pass: bool, text: impl Into<String>) -> Self {
        Check { pass, text: text.into() }
    }

    fn slope(label: &str, fitted: f64, predicted: f64, tol: f64) -> Self {
        Check::new(
            slope_pass(fitted, predicted, tol),
            format!("{label}: fitted {fitted:.4} vs predicted {predicted:.4} (|Δ| {:.4} ≤ {tol})", (fitted - predicted).abs()),
        )
    }
}

struct Outcome {
    predicted: String,
    observed: String,
    tolerance: String,
    checks: Vec<Check>,
}

type CriterionFn = fn(f64) -> Result<Outcome>;

/// (id, name, runtime budget in seconds, body); the body receives the prediction shift.
const CRITERIA: [(u32, &str, f64, CriterionFn); 11] = [
    (1, "dynamics slopes (grid)", 160.0, dynamics_grid),
    (2, "tightness", 30.0, tightness),
    (3, "SGD rate, 1-PL", 120.0, sgd_one_pl),
    (4, "SGD rate, 2-PL", 120.0, sgd_two_pl),
    (5, "PAGER vs SGD online", 300.0, pager_online),
    (6, "PAGER finite-sum vs GD", 300.0, pager_finite_sum),
    (7, "estimator properties", 60.0, estimator),
    (8, "assumption verifiers", 60.0, verifiers),
    (9, "iterate-distance bound", 10.0, distance_bound),
    (10, "RL ordering", 300.0, rl_ordering),
    (11, "non-power KL examples", 30.0, non_power),
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.0).collect()
}

pub fn run_acceptance(opts: &AcceptOptions) -> AcceptReport {
    let mut warnings = Vec::new();
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|c| opts.only.as_ref().is_none_or(|ids| ids.contains(&c.0)))
        .collect();
    if let Some(ids) = &opts.only {
        for id in ids {
            if !CRITERIA.iter().any(|c| c.0 == *id) {
                warnings.push(format!("unknown criterion id {id} ignored"));
            }
        }
    }
    if selected.is_empty() {
        warnings.push("0 criteria selected; nothing to run".to_string());
    }
    for w in &warnings {
        warn!("{w}");
    }
    let rows = selected
        .into_iter()
        .map(|&(id, name, budget, body)| {
            let start = Instant::now();
            let shift = opts.perturb.get(&id).copied().unwrap_or(0.0);
            let result = body(shift);
            let wall_time = start.elapsed().as_secs_f64();
            let mut row = match result {
                Ok(o) => AcceptRow {
                    id,
                    name: name.to_string(),
                    predicted: o.predicted,
                    observed: o.observed,
                    tolerance: o.tolerance,
                    pass: o.checks.iter().all(|c| c.pass),
                    detail: o.checks.iter().map(|c| format!("{} {}", if c.pass { "ok  " } else { "FAIL" }, c.text)).collect(),
                    wall_time,
                    budget,
                },
                Err(e) => AcceptRow {
                    id,
                    name: name.to_string(),
                    predicted: "-".into(),
                    observed: "error".into(),
                    tolerance: "-".into(),
                    pass: false,
                    detail: vec![format!("FAIL {e:#}")],
                    wall_time,
                    budget,
                },
            };
            let note = if wall_time <= budget { "within" } else { "OVER" };
            row.detail.push(format!("runtime {wall_time:.1}s, {note} the {budget:.0}s budget"));
            if wall_time > budget {
                warn!("criterion {id} took {wall_time:.1}s, budget {budget:.0}s");
            }
            row
        })
        .collect();
    AcceptReport { rows, warnings }
}

fn point(kind: Kind, kv: &[(&str, String)]) -> Result<Point> {
    kv.iter().try_fold(Point::defaults(kind), |p, (k, v)| p.set(k, v))
}

fn seeds(n: u64) -> Vec<u64> {
    (1..=n).collect()
}

fn run(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    run_point(p, seeds)
}

fn slope_of(r: &PointRun) -> Result<f64> {
    r.summary.fitted_slope.ok_or_else(|| anyhow!("run has no fitted slope"))
}

fn grid_point(alpha: f64, beta: f64, tau: f64) -> Result<Point> {
    point(
        Kind::Dynamics,
        &[
            ("alpha", alpha.to_string()),
            ("beta", beta.to_string()),
            ("tau", tau.to_string()),
            ("K", "100000".into()),
            ("fit_from", "1000".into()),
        ],
    )
}

fn dynamics_grid(shift: f64) -> Result<Outcome> {
    const PAIRS: [(f64, f64); 5] = [(1.0, 1.0), (1.4, 1.1 / 1.4), (1.5, 0.5), (2.0, 1.0), (1.2, 0.5)];
    let mut jobs = Vec::new();
    for tau in [0.0, 0.9, 2.0] {
        for (a, b) in PAIRS {
            jobs.push(((a, b, tau), grid_point(a, b, tau)?));
        }
    }
    // highlighted curve: first-branch stepsize exponent, slope ≈ −1.02
    let red = grid_point(1.4, 1.1 / 1.4, 0.9)?
        .set("zeta", &first_branch_zeta(1.4, 0.9).to_string())?
        .set("predicted", "-1.02")?;
    jobs.push(((1.4, 1.1 / 1.4, -1.0), red));
    let runs = par_map(jobs, |(key, p)| (key, run(&p, &[])));
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    let mut red_obs = f64::NAN;
    for ((a, b, tau), r) in runs {
        let r = r?;
        let fitted = slope_of(&r)?;
        let pred = r.summary.predicted_slope.unwrap_or(f64::NAN) + shift;
        if tau < 0.0 {
            red_obs = fitted;
            checks.push(Check::slope("highlighted curve α=1.4 γ=1.1 τ=0.9 (first-branch ζ)", fitted, pred, 0.10));
        } else {
            worst = worst.max((fitted - pred).abs());
            let label = format!("α={a} β={b:.4} τ={tau} (T={})", r.summary.metrics.get("inner").copied().unwrap_or(1.0));
            checks.push(Check::slope(&label, fitted, pred, 0.10));
        }
        checks.push(Check::new(true, format!("  curve time {:.2}s (budget 10s)", r.summary.wall_time)));
    }
    Ok(Outcome {
        predicted: format!("rate formula; highlighted {:.2}", -1.02 + shift),
        observed: format!("max |Δ| {worst:.3}; highlighted {red_obs:.3}"),
        tolerance: "±0.10".into(),
        checks,
    })
}

fn tightness(shift: f64) -> Result<Outcome> {
    const K: u64 = 100_000;
    let mut checks = Vec::new();
    let mut obs = Vec::new();
    let mut rng = run_rng(SUITE_SEED, 2);
    for eps in [0.2, 0.8] {
        let params = TightnessParams::new(1.0, 1.0, eps, 2.0)?;
        let theory = params.optimal_slope() + shift;
        let p = point(Kind::Tightness, &[("epsilon", eps.to_string()), ("K", K.to_string()), ("fit_from", "1000".into())])?;
        let greedy_run = run(&p, &[])?;
        let g = slope_of(&greedy_run)?;
        checks.push(Check::slope(&format!("greedy ε={eps}"), g, theory, 0.05));
        // best r_k over the search at every horizon k
        let greedy = tightness_simulate(&params, TightnessMode::Greedy, K)?;
        let cands: Vec<(f64, f64)> =
            (0..100).map(|_| (10f64.powf(rng.random_range(-2.0..0.0)), rng.random_range(0.0..1.5))).collect();
        let traces = par_map(cands, |(c0, zeta)| {
            tightness_simulate(&params, TightnessMode::Schedule(StepSchedule::PolyDecay { c0, zeta }), K)
        });
        let mut env = vec![f64::INFINITY; K as usize];
        let mut below = 0;
        for t in traces {
            let t = t?;
            let mut hit = false;
            for (i, r) in t.rows.iter().enumerate() {
                env[i] = env[i].min(r.delta);
                hit |= r.delta < greedy.rows[i].delta * (1.0 - 1e-9);
            }
            below += hit as usize;
        }
        let ks: Vec<f64> = (1..=K).map(|k| k as f64).collect();
        let env_slope = fit_loglog(&ks, &env, 1000.0)?.slope;
        checks.push(Check::new(
            env_slope >= theory - 0.05,
            format!("search ε={eps}: best-of-100 envelope slope {env_slope:.4} ≥ {theory:.4} − 0.05"),
        ));
        checks.push(Check::new(below == 0, format!("search ε={eps}: {below} candidates dip below the greedy-optimal r_k")));
        obs.push(format!("{g:.3}/{env_slope:.3}"));
    }
    Ok(Outcome {
        predicted: format!("{:.3}, {:.3}", -0.8 / 1.2 + shift, -0.2 / 1.8 + shift),
        observed: format!("greedy/search {}", obs.join(", ")),
        tolerance: "±0.05".into(),
        checks,
    })
}

fn cosh_sgd_point(axis: &str) -> Result<Point> {
    point(
        Kind::Optimize,
        &[
            ("function", "cosh".into()),
            ("box", "2".into()),
            ("method", "sgd".into()),
            ("sigma2", "1".into()),
            ("x0", "1".into()),
            ("K", "100000".into()),
            ("zeta", (2.0f64 / 3.0).to_string()),
            ("fit_axis", axis.into()),
            ("fit_from", "1000".into()),
            ("per_seed", "no".into()),
        ],
    )
}

fn sgd_one_pl(shift: f64) -> Result<Outcome> {
    let s = seeds(20);
    let it = run(&cosh_sgd_point("iter")?, &s)?;
    let cost = run(&cosh_sgd_point("cost")?, &s)?;
    let pred = -1.0 / 3.0 + shift;
    let (a, b) = (slope_of(&it)?, slope_of(&cost)?);
    Ok(Outcome {
        predicted: format!("{pred:.3}"),
        observed: format!("iter {a:.3}, cost {b:.3}"),
        tolerance: "±0.12".into(),
        checks: vec![Check::slope("vs iterations", a, pred, 0.12), Check::slope("vs cumulative cost (τ=0)", b, pred, 0.12)],
    })
}

fn sgd_two_pl(shift: f64) -> Result<Outcome> {
    let s = seeds(1000);
    let mut checks = Vec::new();
    let mut obs = Vec::new();
    for (tau, c0, tol) in [(0.0, 1.0, 0.12), (0.5, 2.0, 0.15)] {
        let p = point(
            Kind::Optimize,
            &[
                ("function", "quadratic".into()),
                ("method", "sgd".into()),
                ("sigma2", "1".into()),
                ("x0", "1".into()),
                ("K", "20000".into()),
                ("c0", c0.to_string()),
                ("zeta", "1".into()),
                ("tau", tau.to_string()),
                ("fit_from", "200".into()),
                ("per_seed", "no".into()),
            ],
        )?;
        let r = run(&p, &s)?;
        let fitted = slope_of(&r)?;
        let pred = -(1.0 + tau) + shift;
        checks.push(Check::slope(&format!("τ={tau}, η_k={c0}/k"), fitted, pred, tol));
        obs.push(format!("{fitted:.3}"));
    }
    Ok(Outcome {
        predicted: format!("{:.2}, {:.2}", -1.0 + shift, -1.5 + shift),
        observed: obs.join(", "),
        tolerance: "±0.12, ±0.15".into(),
        checks,
    })
}

fn pager_online(shift: f64) -> Result<Outcome> {
    let s = seeds(20);
    let p = point(
        Kind::Optimize,
        &[
            ("function", "cosh".into()),
            ("box", "2".into()),
            ("method", "pager".into()),
            ("sigma2", "1".into()),
            ("x0", "1".into()),
            ("stages", "8".into()),
            ("fit_axis", "cost".into()),
            ("fit_from", "1e4".into()),
            ("per_seed", "no".into()),
        ],
    )?;
    let pager = run(&p, &s)?;
    let sgd = run(&cosh_sgd_point("cost")?, &s)?;
    let (a, b) = (slope_of(&pager)?, slope_of(&sgd)?);
    let (pa, pb) = (-0.5 + shift, -1.0 / 3.0 + shift);
    let reach = |r: &PointRun| r.summary.metrics.get("cost_to_target").copied();
    let (ca, cb) = (reach(&pager), reach(&sgd));
    let cost_ok = matches!((ca, cb), (Some(x), Some(y)) if x < y);
    Ok(Outcome {
        predicted: format!("PAGER {pa:.3}, SGD {pb:.3}"),
        observed: format!("PAGER {a:.3}, SGD {b:.3}"),
        tolerance: "±0.12".into(),
        checks: vec![
            Check::slope("PAGER mean gap vs cost", a, pa, 0.12),
            Check::slope("SGD mean gap vs cost", b, pb, 0.12),
            Check::new(cost_ok, format!("cost to ε_f=1e-3: PAGER {ca:?} < SGD {cb:?}")),
        ],
    })
}

fn pager_finite_sum(_shift: f64) -> Result<Outcome> {
    let p = point(Kind::FiniteSum, &[("n", "1024".into()), ("per_seed", "no".into())])?;
    let r = run(&p, &seeds(10))?;
    let m = &r.summary.metrics;
    let ratio = m.get("cost_ratio").copied();
    Ok(Outcome {
        predicted: "PAGER/GD ≤ 0.5".into(),
        observed: ratio.map_or("target not reached".into(), |v| format!("{v:.3}")),
        tolerance: "-".into(),
        checks: vec![Check::new(
            r.summary.pass,
            format!(
                "component gradients to ε_f=1e-4: PAGER mean {:?}, GD {:?}, PAGER runs reaching target {:?}/10",
                m.get("pager_cost_mean"),
                m.get("gd_cost"),
                m.get("pager_runs_reaching_target")
            ),
        )],
    })
}

/// max over coordinates of |mean error| / standard error
fn bias_in_se(sum: &[f64], sumsq: &[f64], n: f64) -> f64 {
    sum.iter()
        .zip(sumsq)
        .map(|(s, q)| {
            let mean = s / n;
            let se = ((q / n - mean * mean) / n).sqrt();
            mean.abs() / se
        })
        .fold(0.0, f64::max)
}

fn estimator(_shift: f64) -> Result<Outcome> {
    const N: usize = 100_000;
    let f = Arc::new(TestFunction::quadratic(1.0, 2)?);
    let mut checks = Vec::new();

    // conditional unbiasedness: g_t unbiased at x_t ⇒ g_{t+1} unbiased at x_{t+1}
    let mut o = GradOracle::new(f.clone(), Noise::AdditiveGaussian { sigma2: 1.0 }, SUITE_SEED)?;
    let mut coin = run_rng(SUITE_SEED, 1);
    let stage = PagerStage::new(0.3, 1, 0.3, 4, 1)?;
    let xt = [1.0, -2.0];
    let (mut sum, mut sq) = (vec![0.0; 2], vec![0.0; 2]);
    for _ in 0..N {
        let (g, _) = o.sample_grad(&xt, 1)?;
        let (next, _) = page_step(&PagerState { x: xt.to_vec(), g }, &stage, &mut o, &mut coin)?;
        for (i, e) in next.g.iter().zip(f.grad(&next.x)).map(|(a, b)| a - b).enumerate() {
            sum[i] += e;
            sq[i] += e * e;
        }
    }
    let z = bias_in_se(&sum, &sq, N as f64);
    checks.push(Check::new(z <= 3.0, format!("unbiasedness: max |bias| = {z:.2} standard errors")));

    // G_{t+1} ≤ (1−p)G_t + ((1−p)𝓛²/b′)R_t + pσ²/(2b), G = E½‖g−∇f‖², R = E½‖Δx‖²
    let mut worst = f64::NEG_INFINITY;
    for noise in [Noise::AdditiveGaussian { sigma2: 0.5 }, Noise::MultiplicativeGaussian { s2: 0.6 }] {
        let mut o = GradOracle::new(f.clone(), noise, SUITE_SEED + 1)?;
        let l = o.avg_smoothness_constant();
        let mut coin = run_rng(SUITE_SEED + 1, 1);
        let stage = PagerStage::new(0.2, 1, 0.25, 8, 2)?;
        let xt = [1.0, 0.5];
        let (mut g_t, mut g_next, mut sq_next, mut r_t, mut var) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..N {
            let (g, _) = o.sample_grad(&xt, 2)?;
            g_t += 0.5 * dist_sq(&g, &f.grad(&xt));
            let (next, _) = page_step(&PagerState { x: xt.to_vec(), g }, &stage, &mut o, &mut coin)?;
            r_t += 0.5 * dist_sq(&next.x, &xt);
            let gx = f.grad(&next.x);
            let e = 0.5 * dist_sq(&next.g, &gx);
            g_next += e;
            sq_next += e * e;
            // single-draw variance of a refresh at x_{t+1}
            var += match noise {
                Noise::AdditiveGaussian { sigma2 } => sigma2 * 2.0,
                Noise::MultiplicativeGaussian { s2 } => s2 * dist_sq(&gx, &[0.0, 0.0]),
                Noise::FiniteSumSampling { .. } => unreachable!(),
            };
        }
        let n = N as f64;
        let (g_t, r_t, g_next, var) = (g_t / n, r_t / n, g_next / n, var / n);
        let se = ((sq_next / n - g_next * g_next) / n).sqrt();
        let p = stage.p;
        let rhs = (1.0 - p) * g_t + (1.0 - p) * l * l / stage.b_prime as f64 * r_t + p * var / (2.0 * stage.b as f64);
        let excess = (g_next - rhs) / se;
        worst = worst.max(excess);
        checks.push(Check::new(
            excess <= 3.0,
            format!("variance recursion ({noise:?}): G_t+1 {g_next:.5} vs bound {rhs:.5} ({excess:.1} SE)"),
        ));
    }
    Ok(Outcome {
        predicted: "bias 0, G_t+1 ≤ bound".into(),
        observed: format!("bias {z:.2} SE, excess {worst:.1} SE"),
        tolerance: "3 SE".into(),
        checks,
    })
}

fn verifiers(_shift: f64) -> Result<Outcome> {
    let fns: [(&str, &[(&str, &str)]); 7] = [
        ("cosh", &[("box", "5"), ("dim", "1"), ("points", "1001")]),
        ("cosh_sin", &[("box", "3"), ("dim", "1"), ("points", "601")]),
        ("quadratic", &[]),
        ("power_abs", &[]),
        ("power_abs", &[("q", "2"), ("c", "0.5")]),
        ("separable_cosh", &[("dim", "2")]),
        ("finite_sum", &[("n", "64")]),
    ];
    let mut checks = Vec::new();
    let (mut pl_min, mut grad_max) = (f64::INFINITY, 0.0f64);
    for (name, extra) in fns {
        let mut p = Point::defaults(Kind::Verify).set("function", name)?;
        for (k, v) in extra {
            p = p.set(k, v)?;
        }
        let r = run(&p, &[SUITE_SEED])?;
        let m = &r.summary.metrics;
        let pl = m["pl_ratio_min"];
        let ge = m["grad_check_max"];
        pl_min = pl_min.min(pl);
        grad_max = grad_max.max(ge);
        checks.push(Check::new(
            r.summary.pass,
            format!(
                "{name} {extra:?}: PL ratio {pl:.6}, grad err {ge:.2e}, ES worst {:.3}, 𝓛 ratio {:.3e}",
                m["es_worst_ratio"], m["avg_smoothness_ratio"]
            ),
        ));
    }
    // an oracle whose pair differences are genuinely noisy
    let f = Arc::new(TestFunction::power_abs(1.0, 3.0, 3, 2.0)?);
    let mut o = GradOracle::new(f, Noise::MultiplicativeGaussian { s2: 0.8 }, SUITE_SEED)?;
    let l = o.avg_smoothness_constant();
    let rep = verify_avg_smoothness(&mut o, &[0.5, -0.3, 0.2], &[0.1, 0.4, -0.6], 1, 20_000, l)?;
    checks.push(Check::new(rep.pass, format!("multiplicative oracle: 𝓛 ratio {:.3}", rep.ratio)));
    Ok(Outcome {
        predicted: "PL ≥ 1−1e-9, grad ≤ 1e-6".into(),
        observed: format!("PL min {pl_min:.6}, grad max {grad_max:.1e}"),
        tolerance: "-".into(),
        checks,
    })
}

fn distance_bound(_shift: f64) -> Result<Outcome> {
    let cases = [
        ("PowerAbs q=3 (α=1.5)", TestFunction::power_abs(1.0, 3.0, 3, 3.0)?, false),
        ("PowerAbs q=2 (α=2)", TestFunction::power_abs(0.5, 2.0, 3, 3.0)?, false),
        ("Quadratic (α=2)", TestFunction::quadratic(1.0, 3)?, true),
    ];
    let pts = sample_points(3, 3.0, 1000, SUITE_SEED);
    let mut checks = Vec::new();
    let mut eq_err: f64 = 0.0;
    for (name, f, exact) in cases {
        let mut worst = f64::NEG_INFINITY;
        let mut err: f64 = 0.0;
        for x in &pts {
            let (lhs, rhs) = iterate_distance_bound(&f, x)?;
            worst = worst.max(lhs - rhs);
            err = err.max((lhs - rhs).abs() / rhs.max(1.0));
        }
        checks.push(Check::new(worst <= 1e-12, format!("{name}: max(dist − bound) = {worst:.3e} over 1000 points")));
        if exact {
            eq_err = err;
            checks.push(Check::new(err <= 1e-10, format!("{name}: equality error {err:.2e}")));
        }
    }
    Ok(Outcome {
        predicted: "dist ≤ bound; equality on quadratic".into(),
        observed: format!("equality error {eq_err:.1e}"),
        tolerance: "1e-10".into(),
        checks,
    })
}

fn rl_ordering(_shift: f64) -> Result<Outcome> {
    let mut checks = Vec::new();
    // GPOMDP against the exact gradient at the starting policy
    let p = Point::defaults(Kind::Rl);
    let setup = rl_setup(&p)?;
    let mdp: &TabularMdp = &setup.mdp;
    let (exact, _) = exact_policy_gradient(mdp, &setup.theta0)?;
    let n = 100_000usize;
    let mut rng = run_rng(SUITE_SEED, 10);
    let (mut sum, mut sq) = (vec![0.0; exact.len()], vec![0.0; exact.len()]);
    for _ in 0..n {
        let g = gpomdp_single(&sample_trajectory(mdp, &setup.theta0, &mut rng), &setup.theta0, mdp.gamma);
        for (i, (v, e)) in g.iter().zip(&exact).enumerate() {
            sum[i] += v - e;
            sq[i] += (v - e) * (v - e);
        }
    }
    let z = bias_in_se(&sum, &sq, n as f64);
    checks.push(Check::new(z <= 3.0, format!("GPOMDP vs exact gradient: max deviation {z:.2} SE at 1e5 trajectories")));

    let r = run(&p, &seeds(10))?;
    let m = &r.summary.metrics;
    let (a, b) = (m.get("pager_trajectories_mean").copied(), m.get("sgd_trajectories_mean").copied());
    checks.push(Check::new(
        r.summary.pass,
        format!("trajectories to 99% of J* = {:.4}: PAGER {a:?} ≤ SGD {b:?} (10-seed means)", setup.j_star),
    ));
    Ok(Outcome {
        predicted: "PAGER ≤ SGD".into(),
        observed: format!("{} vs {}", a.map_or("-".into(), |v| format!("{v:.0}")), b.map_or("-".into(), |v| format!("{v:.0}"))),
        tolerance: "3 SE (GPOMDP)".into(),
        checks,
    })
}

fn non_power(shift: f64) -> Result<Outcome> {
    let sqrt_log = point(
        Kind::Dynamics,
        &[
            ("phi", "sqrt_t_log".into()),
            ("h", "log1p".into()),
            ("zeta", "1".into()),
            ("predicted", (-0.5 + shift).to_string()),
            ("K", "100000".into()),
            ("fit_from", "1000".into()),
        ],
    )?;
    let min_lin = point(
        Kind::Dynamics,
        &[
            ("phi", "min_lin_sqrt".into()),
            ("h", "power".into()),
            ("beta", "1".into()),
            ("zeta", (2.0f64 / 3.0).to_string()),
            ("predicted", (-1.0 / 3.0 + shift).to_string()),
            ("K", "100000".into()),
            ("fit_from", "1000".into()),
        ],
    )?;
    let a = run(&sqrt_log, &[])?;
    let b = run(&min_lin, &[])?;
    let (sa, sb) = (slope_of(&a)?, slope_of(&b)?);
    Ok(Outcome {
        predicted: format!("{:.3}, {:.3}", -0.5 + shift, -1.0 / 3.0 + shift),
        observed: format!("{sa:.3}, {sb:.3}"),
        tolerance: "±0.10".into(),
        checks: vec![
            Check::slope("φ=√(t log(1+t)), h=log(1+t)", sa, -0.5 + shift, 0.10),
            Check::slope("φ=min{t,√t}, h=t (small-δ regime)", sb, -1.0 / 3.0 + shift, 0.10),
        ],
    })
}
