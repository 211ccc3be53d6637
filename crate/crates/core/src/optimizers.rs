//! Gradient descent, SGD with restarts, the PAGE estimator and PAGER.
//!
//! Every run records `(iter, f_gap, grad_norm, cum_cost)` after each update, starting with
//! the initial point at iteration 0. Costs are in component/stochastic gradient evaluations
//! and always equal the oracle's `samples_used` counter.

use log::warn;
use rand::Rng;
use serde::Serialize;

use crate::dynamics::{batch_size, StepSchedule};
use crate::error::{domain, invalid, Result};
use crate::klcore::TestFunction;
use crate::linalg::{axpy, norm};
use crate::oracle::GradOracle;

/// Lower clamp applied to every refresh probability.
pub const P_MIN: f64 = 1e-6;
/// Safety factor on the initial gap estimate Ψ̄₀.
pub const PSI_MARGIN: f64 = 1.1;
/// ḡ₀ batch as a multiple of the first stage's b′.
pub const G0_BATCH_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptRow {
    pub iter: u64,
    pub f_gap: f64,
    pub grad_norm: f64,
    pub cum_cost: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptRunRecord {
    pub rows: Vec<OptRow>,
    pub seed: u64,
    pub config: String,
}

impl OptRunRecord {
    fn push(&mut self, f: &TestFunction, x: &[f64], iter: u64, cum_cost: u64) {
        self.rows.push(OptRow { iter, f_gap: f.gap(x), grad_norm: norm(&f.grad(x)), cum_cost });
    }

    /// Cumulative cost at the first row with gap ≤ target.
    pub fn cost_to_reach(&self, target: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.f_gap <= target).map(|r| r.cum_cost)
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map(|r| r.f_gap).unwrap_or(f64::NAN)
    }
}

/// Full-gradient descent for `n_iter` steps; each step costs one gradient per component.
pub fn run_gd(f: &TestFunction, eta: f64, n_iter: u64, x0: &[f64]) -> Result<OptRunRecord> {
    check_point(f, x0)?;
    if !(eta > 0.0) {
        return invalid("stepsize must be positive");
    }
    if eta > 1.0 / f.lipschitz_l() * (1.0 + 1e-12) {
        warn!("GD stepsize {eta} exceeds 1/L = {}", 1.0 / f.lipschitz_l());
    }
    let per_step = f.n_components() as u64;
    let mut rec = OptRunRecord { config: format!("gd eta={eta} n={n_iter} f={}", f.name()), ..Default::default() };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; f.dim()];
    rec.push(f, &x, 0, 0);
    for it in 1..=n_iter {
        f.grad_into(&x, &mut g);
        axpy(-eta, &g, &mut x);
        rec.push(f, &x, it, it * per_step);
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgdConfig {
    /// number of stages K
    pub stages: u64,
    /// inner iterations T per stage
    pub inner: u64,
    pub schedule: StepSchedule,
    pub tau: f64,
}

/// Alg. 1: stage k runs T steps at η_k with batch b_k = max(1, ⌊k^τ⌋), warm-started.
pub fn run_sgd_restarts(oracle: &mut GradOracle, cfg: &SgdConfig, x0: &[f64]) -> Result<OptRunRecord> {
    let f = oracle.func_arc();
    check_point(&f, x0)?;
    if cfg.stages == 0 || cfg.inner == 0 {
        return invalid("SGD needs K ≥ 1 and T ≥ 1");
    }
    let mut rec = OptRunRecord {
        config: format!("sgd K={} T={} {:?} tau={} f={}", cfg.stages, cfg.inner, cfg.schedule, cfg.tau, f.name()),
        ..Default::default()
    };
    let mut x = x0.to_vec();
    let mut it = 0;
    rec.push(&f, &x, 0, oracle.samples_used());
    for k in 1..=cfg.stages {
        let eta = cfg.schedule.eta(k)?;
        let b = batch_size(k, cfg.tau) as usize;
        for _ in 0..cfg.inner {
            let (g, _) = oracle.sample_grad(&x, b)?;
            axpy(-eta, &g, &mut x);
            it += 1;
            rec.push(&f, &x, it, oracle.samples_used());
        }
    }
    Ok(rec)
}

/// One restart stage Λ_k = (η, T, p, b, b′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PagerStage {
    pub eta: f64,
    pub t: u64,
    pub p: f64,
    pub b: u64,
    pub b_prime: u64,
}

impl PagerStage {
    /// Validates and normalizes: p clamped to [P_MIN, 1], b raised to at least b′.
    pub fn new(eta: f64, t: u64, p: f64, b: u64, b_prime: u64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return invalid(format!("stage stepsize must be positive, got {eta}"));
        }
        if t == 0 || b_prime == 0 {
            return invalid("stage needs T ≥ 1 and b′ ≥ 1");
        }
        if !(p > 0.0) {
            return invalid(format!("refresh probability must be positive, got {p}"));
        }
        Ok(PagerStage { eta, t, p: p.clamp(P_MIN, 1.0), b: b.max(b_prime), b_prime })
    }

    /// Expected per-iteration cost p·b + 2(1−p)·b′.
    pub fn expected_step_cost(&self) -> f64 {
        self.p * self.b as f64 + 2.0 * (1.0 - self.p) * self.b_prime as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PagerState {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
}

/// x ← x − ηg; then w.p. p a fresh b-batch gradient at the new x, otherwise
/// g ← g + Δ̃(x_new, x_old) with a shared b′-batch. Returns the new state and its cost.
pub fn page_step<R: Rng>(
    state: &PagerState,
    stage: &PagerStage,
    oracle: &mut GradOracle,
    rng: &mut R,
) -> Result<(PagerState, u64)> {
    let mut x = state.x.clone();
    axpy(-stage.eta, &state.g, &mut x);
    let refresh = stage.p >= 1.0 || rng.random::<f64>() < stage.p;
    if refresh {
        let (g, cost) = oracle.sample_grad(&x, stage.b as usize)?;
        Ok((PagerState { x, g }, cost))
    } else {
        let diff = oracle.sample_pair_diff(&x, &state.x, stage.b_prime as usize)?;
        let mut g = state.g.clone();
        axpy(1.0, &diff.delta_tilde, &mut g);
        Ok((PagerState { x, g }, diff.cost))
    }
}

/// Multipliers applied to the b, b′ and T formulas of the online schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleScales {
    pub b: f64,
    pub b_prime: f64,
    pub t: f64,
}

impl Default for ScheduleScales {
    fn default() -> Self {
        ScheduleScales { b: 1.0, b_prime: 1.0, t: 1.0 }
    }
}

/// c = (2−α)/α, the exponent linking gap halvings to stage lengths.
pub fn stage_exponent(alpha: f64) -> f64 {
    (2.0 - alpha) / alpha
}

/// U = 2^{1/c}·c^{−2/c−1} + c^{−1/c}, the constant in r_k ≤ U/(k·b^{1/c})-type bounds for
/// r_{k+1} ≤ r_k(1 − b·r_k^c).
pub fn recursion_constant_u(c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return domain(format!("recursion exponent must be positive, got {c}"));
    }
    Ok(2f64.powf(1.0 / c) * c.powf(-2.0 / c - 1.0) + c.powf(-1.0 / c))
}

fn check_pager_alpha(alpha: f64) -> Result<()> {
    if !(1.0..2.0).contains(&alpha) {
        return domain(format!("PAGER schedules are defined for α ∈ [1, 2), got {alpha}"));
    }
    Ok(())
}

fn ceil_u64(v: f64) -> Result<u64> {
    if !v.is_finite() || v < 0.0 {
        return invalid(format!("schedule quantity is not a finite nonnegative number: {v}"));
    }
    Ok((v.ceil() as u64).max(1))
}

/// Online (bounded-variance) PAGER schedule with the explicit constants of the detailed theorem.
pub fn build_pager_online_schedule(
    alpha: f64,
    mu: f64,
    l_script: f64,
    sigma2: f64,
    psi_bar0: f64,
    stages: usize,
    scales: ScheduleScales,
) -> Result<Vec<PagerStage>> {
    check_pager_alpha(alpha)?;
    if !(mu > 0.0 && l_script > 0.0 && psi_bar0 > 0.0 && sigma2 >= 0.0) {
        return domain("μ, 𝓛 and Ψ̄₀ must be positive and σ² nonnegative");
    }
    let c = stage_exponent(alpha);
    let u = recursion_constant_u(c)?;
    let kappa = l_script / mu;
    let eta = (1.0 / mu) * (1.0 / (2.0 * kappa)).min(alpha / 8.0);
    let em = eta * mu;
    let two_c = 2f64.powf(c);
    (0..stages)
        .map(|k| {
            let pk = 2f64.powi(k as i32);
            let bp = ceil_u64(scales.b_prime * (alpha / (8.0 * em)) * (pk / psi_bar0).powf(c))?;
            let b = ceil_u64(
                scales.b * ((2.0 * two_c * pk) / psi_bar0).powf(2.0 / alpha) * sigma2
                    / (4.0 * mu * eta * eta * l_script * l_script),
            )?;
            let t = ceil_u64(
                scales.t
                    * (2.0 / em)
                    * (2.0 * two_c * (pk * u / psi_bar0 + 2.0 * (em / 2.0).powf(alpha / (2.0 - alpha)))).powf(c),
            )?;
            PagerStage::new(eta, t, 1.0 / (1.0 + bp as f64), b, bp)
        })
        .collect()
}

/// Finite-sum PAGER schedule: p = 1/(n+1), b′ = 1, b = n, increasing stepsizes.
pub fn build_pager_finite_sum_schedule(
    alpha: f64,
    mu: f64,
    l_script: f64,
    n: usize,
    psi_bar0: f64,
    stages: usize,
) -> Result<Vec<PagerStage>> {
    check_pager_alpha(alpha)?;
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if !(mu > 0.0 && l_script > 0.0 && psi_bar0 > 0.0) {
        return domain("μ, 𝓛 and Ψ̄₀ must be positive");
    }
    let c = stage_exponent(alpha);
    let u = recursion_constant_u(c)?;
    let nf = n as f64;
    let eta_cap = 1.0 / (2.0 * nf.sqrt() * l_script);
    (0..stages)
        .map(|k| {
            let pk = 2f64.powi(k as i32);
            let eta = eta_cap.min(alpha / (4.0 * mu * (nf + 1.0)) * (pk / psi_bar0).powf(c));
            let em = eta * mu;
            let t = ceil_u64((1.0 / em) * (u * 2.0 * pk / psi_bar0 + 2.0 * em.powf(alpha / (2.0 - alpha))).powf(c))?;
            PagerStage::new(eta, t, 1.0 / (nf + 1.0), n as u64, 1)
        })
        .collect()
}

/// λ_k = b′/(4η_k(1−p)𝓛²), the weight of the estimator error in the stage Lyapunov function.
pub fn lyapunov_weight(stage: &PagerStage, l_script: f64) -> f64 {
    stage.b_prime as f64 / (4.0 * stage.eta * (1.0 - stage.p) * l_script * l_script)
}

/// Ψ̄₀ = 1.1·(f(x̄₀) − f*).
pub fn psi_bar0(f: &TestFunction, x0: &[f64]) -> f64 {
    PSI_MARGIN * f.gap(x0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PagerRun {
    pub record: OptRunRecord,
    /// (x̄_k, ḡ_k) at the start of each stage followed by the final state
    pub stage_ends: Vec<PagerState>,
}

/// Alg. 2: stages run back to back, carrying (x̄, ḡ) across boundaries.
pub fn run_pager<R: Rng>(
    oracle: &mut GradOracle,
    stages: &[PagerStage],
    x0: &[f64],
    g0_batch: u64,
    rng: &mut R,
) -> Result<PagerRun> {
    let f = oracle.func_arc();
    check_point(&f, x0)?;
    if stages.is_empty() {
        return invalid("PAGER needs at least one stage");
    }
    if g0_batch == 0 {
        return invalid("initial batch must be at least 1");
    }
    let mut rec = OptRunRecord { config: format!("pager stages={} f={}", stages.len(), f.name()), ..Default::default() };
    let (g0, _) = oracle.sample_grad(x0, g0_batch as usize)?;
    let mut state = PagerState { x: x0.to_vec(), g: g0 };
    let mut ends = vec![state.clone()];
    rec.push(&f, &state.x, 0, oracle.samples_used());
    let mut it = 0;
    for st in stages {
        for _ in 0..st.t {
            let (next, _) = page_step(&state, st, oracle, rng)?;
            state = next;
            it += 1;
            rec.push(&f, &state.x, it, oracle.samples_used());
        }
        ends.push(state.clone());
    }
    Ok(PagerRun { record: rec, stage_ends: ends })
}

fn check_point(f: &TestFunction, x: &[f64]) -> Result<()> {
    if x.len() != f.dim() {
        return invalid(format!("start point has dimension {} but f has {}", x.len(), f.dim()));
    }
    Ok(())
}
