//! One function per experiment kind: build the objects a [`Point`] describes, run every
//! seed, average pointwise and fit.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use klopt_core::dynamics::{
    corollary1_rate, default_inner_length, simulate_with, tightness_simulate, DynamicsParams, RatePrediction,
    StepSchedule, TightnessMode, TightnessParams, Trace,
};
use klopt_core::klcore::{grad_check, grid_1d, iterate_distance_bound, verify_pl, HSpec, PhiSpec, TestFunction};
use klopt_core::linalg::{norm, scale};
use klopt_core::optimizers::{
    build_pager_finite_sum_schedule, build_pager_online_schedule, psi_bar0, run_gd, run_pager, run_sgd_restarts,
    OptRunRecord, PagerStage, ScheduleScales, SgdConfig, G0_BATCH_FACTOR,
};
use klopt_core::oracle::{run_rng, verify_avg_smoothness, verify_es, GradOracle, Noise, Sampling};
use klopt_core::rlpg::{
    estimate_pg_constants, exact_return, optimal_return, run_pg, PgAlgo, PgOptions, PgRow, SoftmaxPolicy, TabularMdp,
};
use rand::Rng;

use crate::config::{Kind, Point};
use crate::output::{Cell, FitSpec, ResultSummary, Table};
use crate::runner::par_map;

/// Everything one sweep point produces.
#[derive(Debug, Clone)]
pub struct PointRun {
    pub summary: ResultSummary,
    /// the averaged (or only) trace; the summary's fit refers to it
    pub main: Table,
    /// additional named traces: per-seed runs, baselines
    pub extra: Vec<(String, Table)>,
}

pub fn run_point(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    p.validate()?;
    let start = Instant::now();
    let mut run = match p.kind {
        Kind::Dynamics => dynamics(p),
        Kind::Tightness => tightness(p),
        Kind::Optimize => optimize(p, seeds),
        Kind::FiniteSum => finite_sum(p, seeds),
        Kind::Rl => rl(p, seeds),
        Kind::Verify => verify(p, seeds),
    }
    .with_context(|| format!("running {} point\n{}", p.kind, p.echo()))?;
    run.summary.wall_time = start.elapsed().as_secs_f64();
    Ok(run)
}

fn first_seed(seeds: &[u64]) -> Result<u64> {
    seeds.first().copied().ok_or_else(|| anyhow!("no seeds given"))
}

fn fit_start(p: &Point, x_last: f64) -> Result<f64> {
    Ok(p.auto("fit_from")?.unwrap_or((x_last / 100.0).max(10.0)))
}

// ---------------------------------------------------------------- dynamics

fn phi_h(p: &Point) -> Result<(PhiSpec, HSpec)> {
    let phi = match p.s("phi")? {
        "power" => PhiSpec::power(p.f("alpha")?, p.f("mu")?)?,
        "min_lin_sqrt" => PhiSpec::MinLinSqrt,
        _ => PhiSpec::SqrtTLog,
    };
    let h = match p.s("h")? {
        "power" => HSpec::power(p.f("beta")?)?,
        "zero" => HSpec::Zero,
        _ => HSpec::Log1p,
    };
    Ok((phi, h))
}

/// Rate prediction when both φ and h are powers.
pub fn dynamics_prediction(p: &Point) -> Result<Option<RatePrediction>> {
    if p.s("phi")? == "power" && p.s("h")? == "power" {
        Ok(Some(corollary1_rate(p.f("alpha")?, p.f("beta")?, p.f("tau")?)?))
    } else {
        Ok(None)
    }
}

fn trace_table(t: &Trace) -> Table {
    let mut tab = Table::new(&["k", "delta", "eta", "batch", "cum_cost"]);
    for r in &t.rows {
        tab.push(vec![Cell::Int(r.k), Cell::Float(r.delta), Cell::Float(r.eta), Cell::Int(r.batch), Cell::Int(r.cum_cost)]);
    }
    tab
}

fn dynamics(p: &Point) -> Result<PointRun> {
    let (phi, h) = phi_h(p)?;
    let tau = p.f("tau")?;
    let params = DynamicsParams::new(p.f("a")?, p.f("d")?, h, phi, tau, p.f("delta0")?)?;
    let pred = dynamics_prediction(p)?;
    let zeta = match (p.auto("zeta")?, pred) {
        (Some(z), _) => z,
        (None, Some(r)) => r.zeta,
        (None, None) => bail!("zeta = auto needs phi = power and h = power; give zeta explicitly"),
    };
    let on_cost = p.s("fit_axis")? == "cost";
    // δ_k decays like k^{−s}; against cost Σb_k ~ k^{1+τ} that is slope −s/(1+τ)
    let predicted = match (p.auto("predicted")?, pred) {
        (Some(v), _) => v,
        (None, Some(r)) if on_cost => -r.predicted_slope / (1.0 + tau),
        (None, Some(r)) => -r.predicted_slope,
        (None, None) => bail!("predicted = auto needs phi = power and h = power; give predicted explicitly"),
    };
    let k_max = p.u("K")?;
    let sched = StepSchedule::PolyDecay { c0: p.f("c0")?, zeta };
    let k_lo = fit_start(p, k_max as f64)?;
    let iter_slope = if on_cost { -predicted * (1.0 + tau) } else { -predicted };
    let inner = match p.auto("inner")? {
        Some(t) => t as u64,
        None => default_inner_length(&params, &sched, iter_slope, k_lo as u64, k_max, p.u("inner_cap")?)?,
    };
    let trace = simulate_with(&params, &sched, k_max, inner)?;
    let main = trace_table(&trace);
    let fit = if on_cost {
        // the window starts at the cost reached at stage k_lo
        let c = trace.rows.iter().find(|r| r.k as f64 >= k_lo).map(|r| r.cum_cost as f64).unwrap_or(k_lo);
        FitSpec::new("cum_cost", "delta", c)
    } else {
        FitSpec::new("k", "delta", k_lo)
    };
    let mut summary = ResultSummary::slope(fit.slope(&main)?, predicted, p.f("tolerance")?, fit);
    summary.clamp_events = trace.clamp_events;
    summary.metrics.insert("inner".into(), inner as f64);
    summary.metrics.insert("zeta".into(), zeta);
    Ok(PointRun { summary, main, extra: vec![] })
}

// ---------------------------------------------------------------- tightness

fn tightness(p: &Point) -> Result<PointRun> {
    let params = TightnessParams::new(p.f("a_prime")?, p.f("c_prime")?, p.f("epsilon")?, p.f("s")?)?;
    let mode = match p.s("mode")? {
        "greedy" => TightnessMode::Greedy,
        "two_phase" => TightnessMode::TwoPhase,
        _ => {
            let zeta = p.auto("zeta")?.unwrap_or(1.0 / (1.0 + params.epsilon));
            TightnessMode::Schedule(StepSchedule::PolyDecay { c0: p.f("c0")?, zeta })
        }
    };
    let k_max = p.u("K")?;
    let trace = tightness_simulate(&params, mode, k_max)?;
    let mut main = Table::new(&["k", "r", "eta"]);
    for r in &trace.rows {
        main.push(vec![Cell::Int(r.k), Cell::Float(r.delta), Cell::Float(r.eta)]);
    }
    let fit = FitSpec::new("k", "r", fit_start(p, k_max as f64)?);
    let summary = ResultSummary::slope(fit.slope(&main)?, params.optimal_slope(), p.f("tolerance")?, fit);
    Ok(PointRun { summary, main, extra: vec![] })
}

// ---------------------------------------------------------------- optimize

/// Test function named by the `function` key.
pub fn build_function(p: &Point) -> Result<TestFunction> {
    let dim = p.u("dim")? as usize;
    let bx = p.f("box")?;
    Ok(match p.s("function")? {
        "cosh" => TestFunction::cosh_1d_on_box(bx)?,
        "cosh_sin" => TestFunction::cosh_sin_nonconvex(bx)?,
        "quadratic" => TestFunction::quadratic(p.f("mu")?, dim)?,
        "power_abs" => TestFunction::power_abs(p.f("c")?, p.f("q")?, dim, bx)?,
        "separable_cosh" => TestFunction::separable(vec![TestFunction::cosh_1d_on_box(bx)?; dim.max(1)])?,
        "finite_sum" => {
            let base = TestFunction::power_abs(p.f("c")?, p.f("q")?, dim, bx)?;
            TestFunction::finite_sum_shifted(base, p.u("n")? as usize, 1.0, 42)?
        }
        other => bail!("unknown function `{other}`"),
    })
}

fn record_table(rec: &OptRunRecord) -> Table {
    let mut t = Table::new(&["iter", "f_gap", "grad_norm", "cum_cost"]);
    for r in &rec.rows {
        t.push(vec![Cell::Int(r.iter), Cell::Float(r.f_gap), Cell::Float(r.grad_norm), Cell::Int(r.cum_cost)]);
    }
    t
}

/// Seed-averaged optimizer runs.
pub struct SeedMean {
    /// pointwise mean of gap, gradient norm and cost, truncated to the shortest run
    pub mean: Table,
    /// per-seed traces, when kept
    pub kept: Vec<(u64, Table)>,
    /// per-seed cost at the first row with gap ≤ target
    pub reach: Vec<Option<u64>>,
}

/// Runs `run` for every seed in parallel chunks and accumulates the pointwise mean in seed
/// order, so the result is independent of the thread count and memory stays bounded.
pub fn seed_mean<F>(seeds: &[u64], keep: bool, target: f64, run: F) -> Result<SeedMean>
where
    F: Fn(u64) -> Result<OptRunRecord> + Sync + Send,
{
    let chunk = 2 * crate::runner::thread_cap();
    let mut sums: Option<Vec<(u64, f64, f64, f64)>> = None;
    let mut kept = Vec::new();
    let mut reach = Vec::with_capacity(seeds.len());
    for part in seeds.chunks(chunk) {
        let recs = par_map(part.to_vec(), |s| run(s).map(|r| (s, r))).into_iter().collect::<Result<Vec<_>>>()?;
        for (seed, rec) in recs {
            reach.push(rec.cost_to_reach(target));
            let acc = sums.get_or_insert_with(|| rec.rows.iter().map(|r| (r.iter, 0.0, 0.0, 0.0)).collect());
            acc.truncate(rec.rows.len());
            for (a, r) in acc.iter_mut().zip(&rec.rows) {
                a.1 += r.f_gap;
                a.2 += r.grad_norm;
                a.3 += r.cum_cost as f64;
            }
            if keep {
                kept.push((seed, record_table(&rec)));
            }
        }
    }
    let m = seeds.len() as f64;
    let mut mean = Table::new(&["iter", "f_gap", "grad_norm", "cum_cost"]);
    for (it, g, gn, c) in sums.unwrap_or_default() {
        mean.push(vec![Cell::Int(it), Cell::Float(g / m), Cell::Float(gn / m), Cell::Float(c / m)]);
    }
    Ok(SeedMean { mean, kept, reach })
}

/// Cost at the first row of `t` whose mean gap is ≤ target.
pub fn cost_to_reach(t: &Table, target: f64) -> Result<Option<f64>> {
    let g = t.column("f_gap")?;
    let c = t.column("cum_cost")?;
    Ok(g.iter().zip(&c).find(|(g, _)| **g <= target).map(|(_, c)| *c))
}

/// Online PAGER schedule for a point's function/oracle pair.
pub fn online_schedule(p: &Point, oracle: &GradOracle, x0: &[f64]) -> Result<Vec<PagerStage>> {
    let f = oracle.func();
    let sigma2 = oracle.variance_bound().ok_or_else(|| anyhow!("PAGER online schedule needs a bounded-variance oracle"))?;
    let mu = p.auto("mu_hat")?.unwrap_or(f.pl().mu);
    let scales = ScheduleScales { b: p.f("scale_b")?, b_prime: p.f("scale_b_prime")?, t: p.f("scale_t")? };
    Ok(build_pager_online_schedule(
        f.pl().alpha,
        mu,
        oracle.avg_smoothness_constant(),
        sigma2,
        psi_bar0(f, x0),
        p.u("stages")? as usize,
        scales,
    )?)
}

fn optimize(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    let f = Arc::new(build_function(p)?);
    let noise = match p.s("noise")? {
        "gaussian" => Noise::AdditiveGaussian { sigma2: p.f("sigma2")? },
        _ => Noise::MultiplicativeGaussian { s2: p.f("s2")? },
    };
    let x0 = vec![p.f("x0")?; f.dim()];
    let alpha = f.pl().alpha;
    let tau = p.f("tau")?;
    let on_cost = p.s("fit_axis")? == "cost";
    let method = p.s("method")?;
    let keep = p.s("per_seed")? == "yes";
    let target = p.f("target")?;
    let (runs, predicted) = match method {
        "gd" => {
            let eta = p.auto("c0")?.unwrap_or(1.0 / f.lipschitz_l());
            let k = p.u("K")?;
            let runs = seed_mean(&[0], false, target, |_| Ok(run_gd(&f, eta, k, &x0)?))?;
            // gap_N = O(N^{−α/(2−α)}) for α < 2, linear for α = 2
            (runs, (alpha < 2.0).then(|| -alpha / (2.0 - alpha)))
        }
        "sgd" => {
            let rate = corollary1_rate(alpha, 1.0, tau)?;
            let cfg = SgdConfig {
                stages: p.u("K")?,
                inner: p.u("inner")?,
                schedule: StepSchedule::PolyDecay {
                    c0: p.auto("c0")?.unwrap_or(0.5 / f.lipschitz_l()),
                    zeta: p.auto("zeta")?.unwrap_or(rate.zeta),
                },
                tau,
            };
            let runs = seed_mean(seeds, keep, target, |seed| {
                let mut o = GradOracle::new(f.clone(), noise, seed)?;
                Ok(run_sgd_restarts(&mut o, &cfg, &x0)?)
            })?;
            let s = rate.predicted_slope;
            (runs, Some(if on_cost { -s / (1.0 + tau) } else { -s }))
        }
        _ => {
            let probe = GradOracle::new(f.clone(), noise, 0)?;
            let stages = online_schedule(p, &probe, &x0)?;
            let g0 = G0_BATCH_FACTOR * stages[0].b_prime;
            let runs = seed_mean(seeds, keep, target, |seed| {
                let mut o = GradOracle::new(f.clone(), noise, seed)?;
                let mut coin = run_rng(seed, 1);
                Ok(run_pager(&mut o, &stages, &x0, g0, &mut coin)?.record)
            })?;
            (runs, on_cost.then_some(-alpha / 2.0))
        }
    };
    let main = runs.mean;
    let predicted = p.auto("predicted")?.or(predicted);
    let x_col = if on_cost { "cum_cost" } else { "iter" };
    let x_last = main.column(x_col)?.last().copied().unwrap_or(1.0);
    let fit = FitSpec::new(x_col, "f_gap", fit_start(p, x_last)?);
    let fitted = fit.slope(&main)?;
    let tol = p.f("tolerance")?;
    let mut summary = match predicted {
        Some(pred) => ResultSummary::slope(fitted, pred, tol, fit),
        None => ResultSummary { fitted_slope: Some(fitted), fit: Some(fit), pass: true, ..Default::default() },
    };
    if let Some(c) = cost_to_reach(&main, target)? {
        summary.metrics.insert("cost_to_target".into(), c);
    }
    summary.metrics.insert("final_gap".into(), main.column("f_gap")?.last().copied().unwrap_or(f64::NAN));
    let extra = runs.kept.into_iter().map(|(s, t)| (format!("seed{s}"), t)).collect();
    Ok(PointRun { summary, main, extra })
}

// ---------------------------------------------------------------- finite sum

/// Start point x0·(e₁ + e₂)/√2 (x0·e₁ in one dimension).
pub fn diagonal_start(dim: usize, factor: f64) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    x[0] = 1.0;
    if dim > 1 {
        x[1] = 1.0;
    }
    let n = norm(&x);
    scale(factor / n, &mut x);
    x
}

/// Finite-sum instance of a point: shifted PowerAbs components.
pub fn finite_sum_function(p: &Point) -> Result<TestFunction> {
    let base = TestFunction::power_abs(p.f("c")?, p.f("q")?, p.u("dim")? as usize, p.f("box")?)?;
    Ok(TestFunction::finite_sum_shifted(base, p.u("n")? as usize, p.f("shift_std")?, p.u("fn_seed")?)?)
}

fn finite_sum(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    let f = Arc::new(finite_sum_function(p)?);
    let n = f.n_components();
    let x0 = diagonal_start(f.dim(), p.f("x0")?);
    let target = p.f("target")?;
    let l = f.lipschitz_l();
    let gd = run_gd(&f, 1.0 / l, p.u("gd_iters")?, &x0)?;
    let gd_cost = gd.cost_to_reach(target);
    let (alpha, mu) = (f.pl().alpha, f.pl().mu);
    let stages = build_pager_finite_sum_schedule(alpha, mu, l, n, psi_bar0(&f, &x0), p.u("stages")? as usize)?;
    let sampling = if p.s("sampling")? == "without" { Sampling::WithoutReplacement } else { Sampling::WithReplacement };
    let runs = seed_mean(seeds, p.s("per_seed")? == "yes", target, |seed| {
        let mut o = GradOracle::new(f.clone(), Noise::FiniteSumSampling { n }, seed)?.with_sampling(sampling);
        let mut coin = run_rng(seed, 1);
        Ok(run_pager(&mut o, &stages, &x0, n as u64, &mut coin)?.record)
    })?;
    let per_seed = &runs.reach;
    let mut summary = ResultSummary { pass: false, ..Default::default() };
    if let Some(c) = gd_cost {
        summary.metrics.insert("gd_cost".into(), c as f64);
    }
    let reached = per_seed.iter().all(Option::is_some);
    summary.metrics.insert("pager_runs_reaching_target".into(), per_seed.iter().flatten().count() as f64);
    if reached && !per_seed.is_empty() {
        let mean = per_seed.iter().flatten().sum::<u64>() as f64 / per_seed.len() as f64;
        summary.metrics.insert("pager_cost_mean".into(), mean);
        if let Some(g) = gd_cost {
            let ratio = mean / g as f64;
            summary.metrics.insert("cost_ratio".into(), ratio);
            summary.pass = ratio <= p.f("ratio")?;
        }
    }
    let mut extra = vec![("gd".to_string(), record_table(&gd))];
    extra.extend(runs.kept.into_iter().map(|(s, t)| (format!("seed{s}"), t)));
    Ok(PointRun { summary, main: runs.mean, extra })
}

// ---------------------------------------------------------------- rl

/// Keeps the first and last rows and about `per_decade` log-spaced rows per decade of `iter`.
pub fn thin_log(rows: &[PgRow], per_decade: f64) -> Vec<PgRow> {
    let mut out = Vec::new();
    let mut next = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let it = r.iter as f64;
        if i == 0 || i + 1 == rows.len() || it >= next {
            out.push(*r);
            next = (it.max(1.0) * 10f64.powf(1.0 / per_decade)).max(it + 1.0);
        }
    }
    out
}

fn pg_table(rows: &[PgRow]) -> Table {
    let mut t = Table::new(&["iter", "j_exact", "cum_trajectories"]);
    for r in rows {
        t.push(vec![Cell::Int(r.iter), Cell::Float(r.j_exact), Cell::Int(r.cum_trajectories)]);
    }
    t
}

/// Trajectories used when J first reaches `target`, if it does.
pub fn trajectories_to_reach(rows: &[PgRow], target: f64) -> Option<u64> {
    rows.iter().find(|r| r.j_exact >= target).map(|r| r.cum_trajectories)
}

pub struct RlSetup {
    pub mdp: TabularMdp,
    pub theta0: SoftmaxPolicy,
    pub j_star: f64,
    pub target: f64,
    pub stages: Vec<PagerStage>,
    pub sigma2: f64,
    pub l_script: f64,
}

pub fn rl_setup(p: &Point) -> Result<RlSetup> {
    let mdp = match p.s("mdp")? {
        "fixture" => TabularMdp::fixture(),
        path => TabularMdp::load(Path::new(path))?,
    };
    let theta0 = SoftmaxPolicy::uniform(mdp.s, mdp.a);
    let (j_star, _) = optimal_return(&mdp);
    let j0 = exact_return(&mdp, &theta0)?;
    let (sigma2, l_script) = estimate_pg_constants(
        &mdp,
        &theta0,
        p.u("const_samples")? as usize,
        p.u("const_pairs")? as usize,
        p.f("const_radius")?,
        p.u("const_seed")?,
    )?;
    let psi = 1.1 * (j_star - j0).max(1e-12);
    let stages = build_pager_online_schedule(
        1.0,
        p.f("mu_hat")?,
        l_script,
        sigma2,
        psi,
        p.u("stages")? as usize,
        ScheduleScales::default(),
    )?;
    let target = j_star - p.f("target_frac")? * j_star.abs();
    Ok(RlSetup { mdp, theta0, j_star, target, stages, sigma2, l_script })
}

fn rl(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    first_seed(seeds)?;
    let s = rl_setup(p)?;
    let algo = p.s("algo")?;
    let pager = PgAlgo::Pager { stages: s.stages.clone() };
    let sgd = PgAlgo::Sgd {
        c0: s.stages[0].eta,
        zeta: p.f("sgd_zeta")?,
        batch: p.u("sgd_batch")?,
        iters: p.u("sgd_iters")?,
    };
    let opts_pager = PgOptions { g0_batch: G0_BATCH_FACTOR * s.stages[0].b_prime, stop_at: Some(s.target), ..Default::default() };
    let opts_sgd = PgOptions { stop_at: Some(s.target), ..Default::default() };
    let mut jobs = Vec::new();
    for &seed in seeds {
        if algo != "sgd" {
            jobs.push(("pager", seed));
        }
        if algo != "pager" {
            jobs.push(("sgd", seed));
        }
    }
    let runs = par_map(jobs, |(name, seed)| -> Result<_> {
        let (a, o) = if name == "pager" { (&pager, &opts_pager) } else { (&sgd, &opts_sgd) };
        Ok((name, seed, run_pg(&s.mdp, a, &s.theta0, seed, o)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut main = Table::new(&["seed", "pager_trajectories", "sgd_trajectories"]);
    let mut means = [0.0f64; 2];
    let mut all_reached = true;
    for &seed in seeds {
        let mut row = vec![Cell::Int(seed)];
        for (j, name) in ["pager", "sgd"].iter().enumerate() {
            let hit = runs
                .iter()
                .find(|(n, s, _)| n == name && *s == seed)
                .map(|(_, _, rows)| trajectories_to_reach(rows, s.target));
            match hit {
                Some(Some(c)) => {
                    means[j] += c as f64 / seeds.len() as f64;
                    row.push(Cell::Int(c));
                }
                Some(None) => {
                    all_reached = false;
                    row.push(Cell::Float(f64::INFINITY));
                }
                None => row.push(Cell::Float(f64::NAN)),
            }
        }
        main.push(row);
    }
    let mut summary = ResultSummary { pass: all_reached, ..Default::default() };
    summary.metrics.insert("j_star".into(), s.j_star);
    summary.metrics.insert("sigma2".into(), s.sigma2);
    summary.metrics.insert("l_script".into(), s.l_script);
    if all_reached {
        if algo != "sgd" {
            summary.metrics.insert("pager_trajectories_mean".into(), means[0]);
        }
        if algo != "pager" {
            summary.metrics.insert("sgd_trajectories_mean".into(), means[1]);
        }
        if algo == "both" {
            summary.pass = means[0] <= means[1];
        }
    }
    let extra = runs.iter().map(|(n, seed, rows)| (format!("{n}_seed{seed}"), pg_table(&thin_log(rows, 200.0)))).collect();
    Ok(PointRun { summary, main, extra })
}

// ---------------------------------------------------------------- verify

/// `count` points uniform in [−r, r]^d (a uniform grid in one dimension).
pub fn sample_points(dim: usize, r: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if dim == 1 {
        return grid_1d(-r, r, count.max(2));
    }
    let mut rng = run_rng(seed, 3);
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-r..=r)).collect()).collect()
}

fn verify(p: &Point, seeds: &[u64]) -> Result<PointRun> {
    let seed = first_seed(seeds)?;
    let f = Arc::new(build_function(p)?);
    let pts = sample_points(f.dim(), p.f("box")?, p.u("points")? as usize, seed);
    let draws = p.u("draws")? as usize;
    let mut main = Table::new(&["point", "pl_ratio", "dist", "dist_bound"]);
    let mut dist_ok = true;
    let mut dist_eq_err: f64 = 0.0;
    for (i, x) in pts.iter().enumerate() {
        let ratio = verify_pl(&f, std::slice::from_ref(x));
        let (d, b) = if f.pl().alpha > 1.0 { iterate_distance_bound(&f, x)? } else { (f64::NAN, f64::NAN) };
        if d.is_finite() {
            dist_ok &= d <= b * (1.0 + 1e-12) + 1e-15;
            dist_eq_err = dist_eq_err.max((d - b).abs());
        }
        main.push(vec![Cell::Int(i as u64), Cell::Float(ratio), Cell::Float(d), Cell::Float(b)]);
    }
    let pl = verify_pl(&f, &pts);
    let grad_err = grad_check(&f, &pts, 1e-5)?;
    let noise = if p.s("function")? == "finite_sum" {
        Noise::FiniteSumSampling { n: f.n_components() }
    } else {
        Noise::AdditiveGaussian { sigma2: p.f("sigma2")? }
    };
    let mut o = GradOracle::new(f.clone(), noise, seed)?;
    let (a, b, c) = o.es_constants();
    let es_pts: Vec<Vec<f64>> = pts.iter().take(20).cloned().collect();
    let es = verify_es(&mut o, &es_pts, a, b, c, HSpec::Zero, 4, draws)?;
    let l_script = o.avg_smoothness_constant();
    let avg = verify_avg_smoothness(&mut o, &pts[0], &pts[pts.len() - 1], 1, draws, l_script)?;
    let mut summary = ResultSummary::default();
    let m = &mut summary.metrics;
    m.insert("pl_ratio_min".into(), pl);
    m.insert("grad_check_max".into(), grad_err);
    m.insert("es_worst_ratio".into(), es.worst_ratio);
    m.insert("avg_smoothness_ratio".into(), avg.ratio);
    if f.pl().alpha > 1.0 {
        m.insert("dist_bound_max_abs_gap".into(), dist_eq_err);
    }
    summary.pass = pl >= 1.0 - 1e-9 && grad_err <= 1e-6 && es.pass && avg.pass && dist_ok;
    Ok(PointRun { summary, main, extra: vec![] })
}
