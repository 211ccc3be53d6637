//! The scalar recursion that upper-bounds SGD's expected gap,
//!
//! ```text
//! δ' = δ + a·η²·h(δ) − (η/2)·φ²(δ) + d·η²/b,
//! ```
//!
//! evaluated as an equality, plus its stationary points, the predicted decay exponents
//! for power-law KŁ functions, the k-scaled contraction margin, and the tightness recursion
//! whose optimal rate cannot be beaten by any stepsize schedule.

use log::debug;
use serde::Serialize;

use crate::error::{domain, invalid, Error, Result};
use crate::klcore::{HSpec, PhiSpec};

/// Relative tolerance of the stationary-point bisection.
pub const BISECT_RTOL: f64 = 1e-12;
pub const BISECT_MAX_ITER: usize = 200;
/// Minimum usable rows for a slope fit.
pub const MIN_FIT_ROWS: usize = 50;
/// Fraction of the descent-overshoot cap kept by the stepsize guard.
pub const GUARD_SAFETY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsParams {
    pub a: f64,
    pub d: f64,
    pub h: HSpec,
    pub phi: PhiSpec,
    /// batch growth exponent: b_k = max(1, ⌊k^τ⌋)
    pub tau: f64,
    pub delta0: f64,
}

impl DynamicsParams {
    pub fn new(a: f64, d: f64, h: HSpec, phi: PhiSpec, tau: f64, delta0: f64) -> Result<Self> {
        if !(a >= 0.0) || !(d >= 0.0) {
            return domain("a and d must be nonnegative");
        }
        if !(tau >= 0.0) {
            return domain("τ must be nonnegative");
        }
        if !(delta0 > 0.0) {
            return domain("δ₀ must be positive");
        }
        Ok(DynamicsParams { a, d, h, phi, tau, delta0 })
    }

    /// Power-law instance: φ = √(2μ)t^{1/α}, h = t^β.
    pub fn power(alpha: f64, beta: f64, mu: f64, a: f64, d: f64, tau: f64, delta0: f64) -> Result<Self> {
        Self::new(a, d, HSpec::power(beta)?, PhiSpec::power(alpha, mu)?, tau, delta0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepSchedule {
    /// η_k = c0·k^{−ζ}
    PolyDecay { c0: f64, zeta: f64 },
    Constant { eta: f64 },
    /// η_k = (a′(1+ε)r_k/(2c′))^{1/(1−ε)}: the per-step minimizer of the tightness recursion.
    GreedyOptimal { a_prime: f64, c_prime: f64, epsilon: f64 },
}

impl StepSchedule {
    /// Stepsize at stage k ≥ 1 for state-independent schedules.
    pub fn eta(&self, k: u64) -> Result<f64> {
        let eta = match *self {
            StepSchedule::PolyDecay { c0, zeta } => c0 * (k as f64).powf(-zeta),
            StepSchedule::Constant { eta } => eta,
            StepSchedule::GreedyOptimal { .. } => {
                return invalid("the greedy schedule depends on the state; use tightness_simulate")
            }
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return invalid(format!("schedule produced η_{k} = {eta}"));
        }
        Ok(eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: u64,
    pub delta: f64,
    pub eta: f64,
    pub batch: u64,
    pub cum_cost: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// number of stepsize reductions applied by the descent guard
    pub clamp_events: u64,
}

impl Trace {
    pub fn last_delta(&self) -> Option<f64> {
        self.rows.last().map(|r| r.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// b_k = max(1, ⌊k^τ⌋).
pub fn batch_size(k: u64, tau: f64) -> u64 {
    ((k as f64).powf(tau).floor() as u64).max(1)
}

/// One step of the recursion, clamped at zero.
pub fn recursion_step(p: &DynamicsParams, delta: f64, eta: f64, b: u64) -> f64 {
    let next = delta + p.a * eta * eta * p.h.eval(delta) - 0.5 * eta * p.phi.sq(delta)
        + p.d * eta * eta / b as f64;
    next.max(0.0)
}

fn power_exponents(p: &DynamicsParams) -> Option<(f64, f64, f64)> {
    match (p.phi, p.h) {
        (PhiSpec::PowerPL { alpha, mu }, HSpec::Power { beta }) => Some((alpha, beta, mu)),
        (PhiSpec::PowerPL { alpha, mu }, HSpec::Zero) => Some((alpha, 0.0, mu)),
        _ => None,
    }
}

/// Positive root r(η) of a·η·h(t) + d·η/b = φ²(t)/2, the fixed point of the recursion.
pub fn stationary_point(p: &DynamicsParams, eta: f64, b: u64) -> Result<f64> {
    if !(eta > 0.0) || b == 0 {
        return invalid("η must be positive and b ≥ 1");
    }
    let ah = if matches!(p.h, HSpec::Zero) { 0.0 } else { p.a };
    let pw = power_exponents(p);
    if let Some((alpha, beta, mu)) = pw {
        let gamma = alpha * beta;
        if ah > 0.0 && (gamma - 2.0).abs() < 1e-12 {
            if mu <= ah * eta {
                return Err(Error::NoStationaryPoint(format!("γ = 2 needs μ > aη ({mu} ≤ {})", ah * eta)));
            }
            return Ok((p.d * eta / b as f64) / (mu - ah * eta));
        }
        if p.d == 0.0 {
            if ah == 0.0 {
                return Ok(0.0);
            }
            return Ok((ah * eta / mu).powf(alpha / (2.0 - gamma)));
        }
    } else if p.d == 0.0 && ah == 0.0 {
        return Ok(0.0);
    }

    let excess = |t: f64| ah * eta * p.h.eval(t) + p.d * eta / b as f64 - 0.5 * p.phi.sq(t);
    let mut lo = 1e-300_f64;
    let mut hi = match pw {
        Some((alpha, beta, mu)) => {
            let gamma = alpha * beta;
            2.0 * 1f64.max(((ah * eta + p.d * eta / b as f64) / mu).powf(alpha / (2.0 - gamma)))
        }
        None => 2.0,
    };
    let mut grow = 0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::NoStationaryPoint("φ²/2 never overtakes the noise terms".into()));
        }
    }
    if p.d == 0.0 {
        // the root at 0 is trivial; bracket the positive one from the left
        lo = hi;
        while excess(lo) <= 0.0 && lo > 1e-300 {
            lo *= 0.5;
        }
        if excess(lo) <= 0.0 {
            return Ok(0.0);
        }
    }
    for _ in 0..BISECT_MAX_ITER {
        let mid = (lo * hi).sqrt();
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < BISECT_RTOL {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateBranch {
    /// γ = 2
    I,
    /// γ < 2, τ ≤ γ/(4−α−γ)
    IIa,
    /// γ < 2, τ > γ/(4−α−γ)
    IIb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePrediction {
    pub branch: RateBranch,
    /// stepsize decay exponent, η_k = Θ(k^{−ζ})
    pub zeta: f64,
    /// decay exponent of δ_k (positive; δ_k = O(k^{−slope}))
    pub predicted_slope: f64,
}

/// Stepsize exponent and δ_k decay exponent for φ = √(2μ)t^{1/α}, h = t^β, b_k = Θ(k^τ).
pub fn corollary1_rate(alpha: f64, beta: f64, tau: f64) -> Result<RatePrediction> {
    if !(1.0..=2.0).contains(&alpha) {
        return domain(format!("α must lie in [1, 2], got {alpha}"));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return domain(format!("β must lie in (0, 1], got {beta}"));
    }
    if !(tau >= 0.0) {
        return domain(format!("τ must be nonnegative, got {tau}"));
    }
    let gamma = alpha * beta;
    if (gamma - 2.0).abs() < 1e-12 {
        return Ok(RatePrediction { branch: RateBranch::I, zeta: 1.0, predicted_slope: 1.0 + tau });
    }
    Ok(if tau <= branch_threshold(alpha, beta) {
        RatePrediction {
            branch: RateBranch::IIa,
            zeta: first_branch_zeta(alpha, tau),
            predicted_slope: alpha * (tau + 1.0) / (4.0 - alpha),
        }
    } else {
        RatePrediction {
            branch: RateBranch::IIb,
            zeta: (2.0 - gamma) / (4.0 - alpha - gamma),
            predicted_slope: alpha / (4.0 - alpha - gamma),
        }
    })
}

/// γ/(4−α−γ): the batch exponent past which growing batches stop helping.
pub fn branch_threshold(alpha: f64, beta: f64) -> f64 {
    let gamma = alpha * beta;
    gamma / (4.0 - alpha - gamma)
}

/// ζ = (τ+1)/(2−α/2) − τ, the stepsize exponent of the small-batch-growth branch.
pub fn first_branch_zeta(alpha: f64, tau: f64) -> f64 {
    (tau + 1.0) / (2.0 - alpha / 2.0) - tau
}

/// ω_k = k·(η·φ′(r)φ(r) − a·η²·h′(r)) at r = r(η), with b = b_k.
pub fn theorem1_residual(p: &DynamicsParams, eta: f64, k: u64) -> Result<f64> {
    let r = stationary_point(p, eta, batch_size(k, p.tau))?;
    let mut m = eta * 0.5 * p.phi.sq_deriv(r);
    if p.a > 0.0 && !matches!(p.h, HSpec::Zero) {
        m -= p.a * eta * eta * p.h.deriv(r);
    }
    Ok(k as f64 * m)
}

/// Inner length T = ⌈(ζν + 1)/min ω⌉ with the minimum of ω_k taken over a log grid of
/// `[k_lo, k_hi]`; capped at `t_cap`.
pub fn default_inner_length(
    p: &DynamicsParams,
    schedule: &StepSchedule,
    predicted_slope: f64,
    k_lo: u64,
    k_hi: u64,
    t_cap: u64,
) -> Result<u64> {
    let k_lo = k_lo.max(1);
    let k_hi = k_hi.max(k_lo);
    let n = 16;
    let mut w_min = f64::INFINITY;
    for i in 0..=n {
        let k = ((k_lo as f64).ln() + ((k_hi as f64).ln() - (k_lo as f64).ln()) * i as f64 / n as f64)
            .exp()
            .round() as u64;
        w_min = w_min.min(theorem1_residual(p, schedule.eta(k)?, k)?);
    }
    if !(w_min > 0.0) {
        return invalid(format!("contraction margin ω is not positive (min {w_min:e})"));
    }
    let t = ((predicted_slope + 1.0) / w_min).ceil();
    Ok((t as u64).clamp(1, t_cap))
}

/// Largest η the guard allows at δ: the contraction term removes at most a
/// `GUARD_SAFETY` fraction of δ.
fn guard_eta(p: &DynamicsParams, delta: f64) -> f64 {
    GUARD_SAFETY * 2.0 * delta / p.phi.sq(delta)
}

/// Iterate the recursion for k = 1..=K, `inner` steps per stage at (η_k, b_k).
pub fn simulate_with(p: &DynamicsParams, schedule: &StepSchedule, k_max: u64, inner: u64) -> Result<Trace> {
    if k_max < 10 {
        return invalid("simulate needs K ≥ 10");
    }
    if inner == 0 {
        return invalid("inner length must be ≥ 1");
    }
    let mut trace = Trace { rows: Vec::with_capacity(k_max as usize), clamp_events: 0 };
    let mut delta = p.delta0;
    let mut cost: u64 = 0;
    for k in 1..=k_max {
        let eta_k = schedule.eta(k)?;
        let b = batch_size(k, p.tau);
        for _ in 0..inner {
            let mut eta = eta_k;
            if delta > 0.0 && 0.5 * eta * p.phi.sq(delta) > delta {
                eta = guard_eta(p, delta);
                trace.clamp_events += 1;
                debug!("stepsize guard at k={k}: η {eta_k:e} → {eta:e}");
            }
            delta = recursion_step(p, delta, eta, b);
        }
        cost = cost.saturating_add(b.saturating_mul(inner));
        trace.rows.push(TraceRow { k, delta, eta: eta_k, batch: b, cum_cost: cost });
    }
    Ok(trace)
}

/// One recursion step per stage.
pub fn simulate(p: &DynamicsParams, schedule: &StepSchedule, k_max: u64) -> Result<Trace> {
    simulate_with(p, schedule, k_max, 1)
}

/// First index of the default slope-fit window: max(100, 0.2·K).
pub fn default_fit_start(k_max: u64) -> u64 {
    100.max(k_max / 5)
}

/// Least-squares line through (x, y).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return invalid("need at least two paired samples");
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return invalid("abscissae are all equal");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((slope, intercept, r2))
}

/// Log-log fit of (x, y) pairs with x ≥ x_min and y > 0.
pub fn fit_loglog(xs: &[f64], ys: &[f64], x_min: f64) -> Result<SlopeFit> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= x_min && x > 0.0 && y > 0.0 && y.is_finite() {
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    if lx.len() < MIN_FIT_ROWS {
        return invalid(format!("only {} usable rows for the slope fit (need {MIN_FIT_ROWS})", lx.len()));
    }
    let (slope, intercept, r_squared) = fit_line(&lx, &ly)?;
    let lo = lx.iter().cloned().fold(f64::INFINITY, f64::min).exp();
    let hi = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    Ok(SlopeFit { slope, intercept, r_squared, window: (lo, hi) })
}

/// Slope of log δ_k against log k over k ≥ k_min.
pub fn fit_loglog_slope(trace: &Trace, k_min: u64) -> Result<SlopeFit> {
    let xs: Vec<f64> = trace.rows.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = trace.rows.iter().map(|r| r.delta).collect();
    fit_loglog(&xs, &ys, k_min as f64)
}

/// Slope of log δ_k against log cumulative cost over k ≥ k_min.
pub fn fit_loglog_slope_cost(trace: &Trace, k_min: u64) -> Result<SlopeFit> {
    let rows: Vec<&TraceRow> = trace.rows.iter().filter(|r| r.k >= k_min).collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.cum_cost as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    fit_loglog(&xs, &ys, 0.0)
}

/// Cumulative cost at the first row with δ ≤ target.
pub fn sample_cost(trace: &Trace, target_delta: f64) -> Result<u64> {
    trace
        .rows
        .iter()
        .find(|r| r.delta <= target_delta)
        .map(|r| r.cum_cost)
        .ok_or(Error::NotReached { final_value: trace.last_delta().unwrap_or(f64::NAN) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TightnessMode {
    /// constant (1/b′)^{1/(1+ε)} for k < ⌊K/2⌋, then (2/(1+ε)/(a′(s+k−⌊K/2⌋)))^{1/(1+ε)}
    TwoPhase,
    /// per-step optimal η_k = (a′(1+ε)r_k/(2c′))^{1/(1−ε)}
    Greedy,
    /// an arbitrary state-independent schedule
    Schedule(StepSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessParams {
    pub a_prime: f64,
    pub c_prime: f64,
    pub epsilon: f64,
    pub b_prime: f64,
    pub s: f64,
    pub r0: f64,
}

impl TightnessParams {
    pub fn new(a_prime: f64, c_prime: f64, epsilon: f64, s: f64) -> Result<Self> {
        let p = TightnessParams { a_prime, c_prime, epsilon, b_prime: 1.0, s, r0: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return domain(format!("ε′ must lie in [0, 1), got {}", self.epsilon));
        }
        if !(self.s >= 2.0) {
            return domain(format!("s must be at least 2, got {}", self.s));
        }
        if !(self.a_prime > 0.0 && self.c_prime > 0.0 && self.r0 > 0.0) {
            return domain("a′, c′ and r₀ must be positive");
        }
        if !(self.b_prime >= self.a_prime) {
            return domain("the tightness recursion needs a′ ≤ b′");
        }
        Ok(())
    }

    /// A = c′·((1−ε)/(1+ε))·(a′(1+ε)/(2c′))^{2/(1−ε)} of the greedy closed form.
    pub fn greedy_constant(&self) -> f64 {
        let e = self.epsilon;
        self.c_prime * ((1.0 - e) / (1.0 + e)) * (self.a_prime * (1.0 + e) / (2.0 * self.c_prime)).powf(2.0 / (1.0 - e))
    }

    /// −(1−ε)/(1+ε)
    pub fn optimal_slope(&self) -> f64 {
        -(1.0 - self.epsilon) / (1.0 + self.epsilon)
    }
}

/// r_{k+1} = (1 − a′η_k^{1+ε})r_k + c′η_k², k = 0..K−1; row k holds r_k for k = 1..=K.
pub fn tightness_simulate(p: &TightnessParams, mode: TightnessMode, k_max: u64) -> Result<Trace> {
    p.validate()?;
    let e = p.epsilon;
    let half = k_max / 2;
    let eta_cap = 1.0 / p.b_prime;
    let mut r = p.r0;
    let mut trace = Trace { rows: Vec::with_capacity(k_max as usize), clamp_events: 0 };
    for k in 0..k_max {
        let eta = match mode {
            TightnessMode::TwoPhase => {
                let short = (k_max as f64) <= p.b_prime.powf((1.0 - e) / (1.0 + e)) / p.a_prime;
                if k < half || short {
                    (1.0 / p.b_prime).powf(1.0 / (1.0 + e))
                } else {
                    (2.0 / (1.0 + e) / (p.a_prime * (p.s + (k - half) as f64))).powf(1.0 / (1.0 + e))
                }
            }
            TightnessMode::Greedy => (p.a_prime * (1.0 + e) * r / (2.0 * p.c_prime)).powf(1.0 / (1.0 - e)),
            TightnessMode::Schedule(s) => s.eta(k + 1)?,
        };
        if eta > eta_cap * (1.0 + 1e-12) {
            return domain(format!("η_{k} = {eta} violates η ≤ 1/b′ = {eta_cap}"));
        }
        r = (1.0 - p.a_prime * eta.powf(1.0 + e)) * r + p.c_prime * eta * eta;
        trace.rows.push(TraceRow { k: k + 1, delta: r, eta, batch: 1, cum_cost: k + 1 });
    }
    Ok(trace)
}

/// Final values r_K of the two-phase schedule for each horizon K.
pub fn two_phase_final_values(p: &TightnessParams, horizons: &[u64]) -> Result<Vec<(u64, f64)>> {
    horizons
        .iter()
        .map(|&k| {
            let t = tightness_simulate(p, TightnessMode::TwoPhase, k)?;
            Ok((k, t.last_delta().unwrap_or(p.r0)))
        })
        .collect()
}
