//! Tabular MDP policy-gradient testbed.
//!
//! Returns are truncated at horizon H and discounted by γ, exactly as the GPOMDP estimator
//! sums rewards, so exact returns and exact gradients are available for validation.
//! The policy is softmax over a per-state parameter row θ[s, ·].

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::optimizers::PagerStage;
use crate::oracle::run_rng;

/// Above this many (state, action) sequences the exact gradient falls back to finite differences.
pub const ENUMERATION_CAP: u64 = 2_000_000;
pub const FD_STEP: f64 = 1e-6;
const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub s: usize,
    pub a: usize,
    /// P[(s·A + a)·S + s']
    pub p: Vec<f64>,
    /// R[s·A + a]
    pub r: Vec<f64>,
    pub gamma: f64,
    pub rho: Vec<f64>,
    pub h: usize,
}

impl TabularMdp {
    pub fn new(s: usize, a: usize, p: Vec<f64>, r: Vec<f64>, gamma: f64, rho: Vec<f64>, h: usize) -> Result<Self> {
        let m = TabularMdp { s, a, p, r, gamma, rho, h };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (s, a) = (self.s, self.a);
        if s == 0 || a == 0 || self.h == 0 {
            return invalid("S, A and H must be positive");
        }
        if self.p.len() != s * a * s || self.r.len() != s * a || self.rho.len() != s {
            return invalid("table sizes do not match S and A");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return invalid(format!("γ must lie in [0, 1), got {}", self.gamma));
        }
        for row in self.p.chunks(s) {
            if row.iter().any(|&v| !(v >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOL {
                return invalid("every P[s, a, ·] must be a probability vector");
            }
        }
        if self.rho.iter().any(|&v| !(v >= 0.0)) || (self.rho.iter().sum::<f64>() - 1.0).abs() > ROW_TOL {
            return invalid("ρ must be a probability vector");
        }
        if self.r.iter().any(|v| !v.is_finite()) {
            return invalid("rewards must be finite");
        }
        Ok(())
    }

    #[inline]
    pub fn trans(&self, s: usize, a: usize) -> &[f64] {
        let o = (s * self.a + a) * self.s;
        &self.p[o..o + self.s]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.r[s * self.a + a]
    }

    /// Random instance: transition rows and ρ on a 10⁻⁶ grid (exact in 12 significant
    /// digits), rewards uniform on [0, 1) rounded to 6 decimals.
    pub fn generate(s: usize, a: usize, h: usize, gamma: f64, seed: u64) -> Result<Self> {
        let mut rng = run_rng(seed, 0);
        let simplex = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
            let w: Vec<u64> = (0..n).map(|_| rng.random_range(1..=1000u64)).collect();
            let total: u64 = w.iter().sum();
            let mut units: Vec<u64> = w.iter().map(|v| v * 1_000_000 / total).collect();
            let short = 1_000_000 - units.iter().sum::<u64>();
            units[0] += short;
            units.iter().map(|&u| u as f64 / 1e6).collect()
        };
        let mut p = Vec::with_capacity(s * a * s);
        for _ in 0..s * a {
            p.extend(simplex(s, &mut rng));
        }
        let rho = simplex(s, &mut rng);
        let r = (0..s * a).map(|_| (rng.random::<f64>() * 1e6).round() / 1e6).collect();
        Self::new(s, a, p, r, gamma, rho, h)
    }

    /// Plain-text form: `S`, `A`, `H`, `gamma`, `rho` lines, then `P` (S·A rows of S values)
    /// and `R` (S rows of A values), 12 significant digits.
    pub fn to_text(&self) -> String {
        let num = |v: f64| format!("{v:.11e}");
        let mut out = String::new();
        let _ = writeln!(out, "# tabular MDP: P rows indexed by (s, a), columns by s'");
        let _ = writeln!(out, "S {}", self.s);
        let _ = writeln!(out, "A {}", self.a);
        let _ = writeln!(out, "H {}", self.h);
        let _ = writeln!(out, "gamma {}", num(self.gamma));
        let _ = writeln!(out, "rho {}", self.rho.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "));
        let _ = writeln!(out, "P");
        for row in self.p.chunks(self.s) {
            let _ = writeln!(out, "{}", row.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(out, "R");
        for row in self.r.chunks(self.a) {
            let _ = writeln!(out, "{}", row.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Cursor::new(text);
        let s = c.int("S")?;
        let a = c.int("A")?;
        let h = c.int("H")?;
        let (ln, v) = c.header("gamma")?;
        let gamma = *Cursor::nums(ln, &v)?.first().ok_or_else(|| Error::Parse { line: ln, msg: "missing γ".into() })?;
        let (ln, v) = c.header("rho")?;
        let rho = Cursor::nums(ln, &v)?;
        c.header("P")?;
        let p = c.table(s * a, s, "P")?;
        c.header("R")?;
        let r = c.table(s, a, "R")?;
        Self::new(s, a, p, r, gamma, rho, h)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// The frozen S=3, A=2, H=5, γ=0.9 validation instance.
    pub fn fixture() -> Self {
        Self::from_text(FIXTURE_TEXT).expect("committed fixture parses")
    }
}

/// Line cursor over the text MDP format (blank lines and `#` comments skipped).
struct Cursor<'t> {
    lines: Vec<(usize, Vec<&'t str>)>,
    pos: usize,
}

impl<'t> Cursor<'t> {
    fn new(text: &'t str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| (i, l.split_whitespace().collect()))
            .collect();
        Cursor { lines, pos: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'t str>)> {
        let last = self.lines.last().map_or(0, |l| l.0);
        let l = self.lines.get(self.pos).cloned().ok_or_else(|| Error::Parse { line: last, msg: format!("missing {what}") })?;
        self.pos += 1;
        Ok(l)
    }

    fn header(&mut self, key: &str) -> Result<(usize, Vec<&'t str>)> {
        let (ln, toks) = self.next(&format!("`{key}`"))?;
        if toks.first() != Some(&key) {
            return Err(Error::Parse { line: ln, msg: format!("expected `{key}`") });
        }
        Ok((ln, toks[1..].to_vec()))
    }

    fn int(&mut self, key: &str) -> Result<usize> {
        let (ln, v) = self.header(key)?;
        v.first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse { line: ln, msg: format!("`{key}` needs an integer") })
    }

    fn nums(ln: usize, v: &[&str]) -> Result<Vec<f64>> {
        v.iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line: ln, msg: format!("bad number `{s}`") }))
            .collect()
    }

    fn table(&mut self, rows: usize, cols: usize, name: &str) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, toks) = self.next(&format!("{name} row"))?;
            let row = Self::nums(ln, &toks)?;
            if row.len() != cols {
                return Err(Error::Parse { line: ln, msg: format!("{name} row needs {cols} values") });
            }
            out.extend(row);
        }
        Ok(out)
    }
}

/// Contents of `data/fixture_mdp.txt`.
pub const FIXTURE_TEXT: &str = include_str!("../data/fixture_mdp.txt");
/// Seed the fixture was generated from.
pub const FIXTURE_SEED: u64 = 20240607;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftmaxPolicy {
    pub s: usize,
    pub a: usize,
    /// θ[s·A + a]
    pub theta: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn new(s: usize, a: usize, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != s * a {
            return invalid("θ must have S·A entries");
        }
        Ok(SoftmaxPolicy { s, a, theta })
    }

    pub fn uniform(s: usize, a: usize) -> Self {
        SoftmaxPolicy { s, a, theta: vec![0.0; s * a] }
    }

    pub fn probs_into(&self, s: usize, out: &mut [f64]) {
        let row = &self.theta[s * self.a..(s + 1) * self.a];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (o, &t) in out.iter_mut().zip(row) {
            *o = (t - m).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
        }
    }

    pub fn probs(&self, s: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.a];
        self.probs_into(s, &mut p);
        p
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs(s)[a]
    }

    /// Adds ∇_θ log π(a|s) (nonzero only in row s: e_a − π(·|s)) scaled by `w` into `out`.
    pub fn add_score(&self, s: usize, a: usize, w: f64, out: &mut [f64]) {
        let p = self.probs(s);
        let row = &mut out[s * self.a..(s + 1) * self.a];
        for (j, (o, pj)) in row.iter_mut().zip(&p).enumerate() {
            *o += w * ((j == a) as u8 as f64 - pj);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub s: usize,
    pub a: usize,
    pub r: f64,
}

pub type Trajectory = Vec<Step>;

fn check_pair(mdp: &TabularMdp, pol: &SoftmaxPolicy) -> Result<()> {
    if mdp.s != pol.s || mdp.a != pol.a {
        return invalid("policy shape does not match the MDP");
    }
    Ok(())
}

/// J_H(θ) = Σ_{h<H} γ^h ⟨d_h, r_π⟩ by forward propagation of the state distribution.
pub fn exact_return(mdp: &TabularMdp, pol: &SoftmaxPolicy) -> Result<f64> {
    check_pair(mdp, pol)?;
    let (ns, na) = (mdp.s, mdp.a);
    let pis: Vec<Vec<f64>> = (0..ns).map(|s| pol.probs(s)).collect();
    let mut d = mdp.rho.clone();
    let mut j = 0.0;
    let mut disc = 1.0;
    for h in 0..mdp.h {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if d[s] == 0.0 {
                continue;
            }
            for a in 0..na {
                let w = d[s] * pis[s][a];
                j += disc * w * mdp.reward(s, a);
                if h + 1 < mdp.h {
                    for (n, t) in next.iter_mut().zip(mdp.trans(s, a)) {
                        *n += w * t;
                    }
                }
            }
        }
        d = next;
        disc *= mdp.gamma;
    }
    Ok(j)
}

/// How an exact gradient was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GradMethod {
    Enumeration,
    FiniteDifference,
}

/// ∇_θ J_H by summing p(τ)·R(τ)·Σ_h ∇log π(a_h|s_h) over every (state, action) sequence.
/// Falls back to central differences above [`ENUMERATION_CAP`] sequences.
pub fn exact_policy_gradient(mdp: &TabularMdp, pol: &SoftmaxPolicy) -> Result<(Vec<f64>, GradMethod)> {
    check_pair(mdp, pol)?;
    let branching = (mdp.s * mdp.a) as u64;
    let count = branching.checked_pow(mdp.h as u32);
    if count.map_or(true, |c| c > ENUMERATION_CAP) {
        warn!("trajectory enumeration too large; using finite differences");
        return Ok((finite_difference_gradient(mdp, pol, FD_STEP)?, GradMethod::FiniteDifference));
    }
    let pis: Vec<Vec<f64>> = (0..mdp.s).map(|s| pol.probs(s)).collect();
    let mut grad = vec![0.0; mdp.s * mdp.a];
    let mut seq: Vec<(usize, usize)> = Vec::with_capacity(mdp.h);
    enumerate(mdp, pol, &pis, &mut seq, 1.0, &mut grad);
    Ok((grad, GradMethod::Enumeration))
}

fn enumerate(
    mdp: &TabularMdp,
    pol: &SoftmaxPolicy,
    pis: &[Vec<f64>],
    seq: &mut Vec<(usize, usize)>,
    prob: f64,
    grad: &mut [f64],
) {
    if prob == 0.0 {
        return;
    }
    if seq.len() == mdp.h {
        let mut ret = 0.0;
        let mut disc = 1.0;
        for &(s, a) in seq.iter() {
            ret += disc * mdp.reward(s, a);
            disc *= mdp.gamma;
        }
        for &(s, a) in seq.iter() {
            pol.add_score(s, a, prob * ret, grad);
        }
        return;
    }
    for s in 0..mdp.s {
        let ps = match seq.last() {
            None => mdp.rho[s],
            Some(&(s0, a0)) => mdp.trans(s0, a0)[s],
        };
        for a in 0..mdp.a {
            seq.push((s, a));
            enumerate(mdp, pol, pis, seq, prob * ps * pis[s][a], grad);
            seq.pop();
        }
    }
}

/// Central differences of [`exact_return`].
pub fn finite_difference_gradient(mdp: &TabularMdp, pol: &SoftmaxPolicy, step: f64) -> Result<Vec<f64>> {
    let mut p = pol.clone();
    let mut g = vec![0.0; pol.theta.len()];
    for i in 0..g.len() {
        let t = p.theta[i];
        p.theta[i] = t + step;
        let jp = exact_return(mdp, &p)?;
        p.theta[i] = t - step;
        let jm = exact_return(mdp, &p)?;
        p.theta[i] = t;
        g[i] = (jp - jm) / (2.0 * step);
    }
    Ok(g)
}

/// Optimal finite-horizon return max_π J_H by backward induction, together with whether the
/// optimal action per state is the same at every step (so a stationary policy attains it).
pub fn optimal_return(mdp: &TabularMdp) -> (f64, bool) {
    let mut v = vec![0.0; mdp.s];
    let mut first: Option<Vec<usize>> = None;
    let mut stationary = true;
    for _ in 0..mdp.h {
        let mut nv = vec![0.0; mdp.s];
        let mut act = vec![0; mdp.s];
        for s in 0..mdp.s {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.a {
                let q = mdp.reward(s, a) + mdp.gamma * mdp.trans(s, a).iter().zip(&v).map(|(p, x)| p * x).sum::<f64>();
                if q > best {
                    best = q;
                    act[s] = a;
                }
            }
            nv[s] = best;
        }
        match &first {
            None => first = Some(act),
            Some(f) => stationary &= *f == act,
        }
        v = nv;
    }
    (mdp.rho.iter().zip(&v).map(|(p, x)| p * x).sum(), stationary)
}

fn sample_index<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

pub fn sample_trajectory<R: Rng>(mdp: &TabularMdp, pol: &SoftmaxPolicy, rng: &mut R) -> Trajectory {
    let mut s = sample_index(&mdp.rho, rng);
    let mut pi = vec![0.0; mdp.a];
    let mut traj = Vec::with_capacity(mdp.h);
    for h in 0..mdp.h {
        pol.probs_into(s, &mut pi);
        let a = sample_index(&pi, rng);
        traj.push(Step { s, a, r: mdp.reward(s, a) });
        if h + 1 < mdp.h {
            s = sample_index(mdp.trans(s, a), rng);
        }
    }
    traj
}

/// Σ_h γ^h r_h Z_h with Z_h = Σ_{z≤h} ∇log π(a_z|s_z), for a single trajectory.
pub fn gpomdp_single(traj: &Trajectory, pol: &SoftmaxPolicy, gamma: f64) -> Vec<f64> {
    let mut g = vec![0.0; pol.theta.len()];
    // Σ_h γ^h r_h Z_h = Σ_z ∇log π(a_z|s_z)·(Σ_{h≥z} γ^h r_h)
    let mut tail = 0.0;
    let mut tails = vec![0.0; traj.len()];
    let mut disc = gamma.powi(traj.len() as i32 - 1);
    for (z, st) in traj.iter().enumerate().rev() {
        tail += disc * st.r;
        tails[z] = tail;
        disc /= if gamma > 0.0 { gamma } else { 1.0 };
    }
    if gamma == 0.0 {
        tails.iter_mut().enumerate().for_each(|(z, t)| *t = if z == 0 { traj[0].r } else { 0.0 });
    }
    for (st, &w) in traj.iter().zip(&tails) {
        pol.add_score(st.s, st.a, w, &mut g);
    }
    g
}

/// GPOMDP: the average of [`gpomdp_single`] over trajectories sampled from `pol`.
pub fn gpomdp(trajs: &[Trajectory], pol: &SoftmaxPolicy, gamma: f64) -> Result<Vec<f64>> {
    if trajs.is_empty() {
        return invalid("GPOMDP needs at least one trajectory");
    }
    let mut g = vec![0.0; pol.theta.len()];
    for t in trajs {
        for (gi, v) in g.iter_mut().zip(gpomdp_single(t, pol, gamma)) {
            *gi += v;
        }
    }
    let n = trajs.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

/// ω(τ | θ_new, θ_old) = Π_j π_old(a_j|s_j)/π_new(a_j|s_j).
pub fn importance_weight(traj: &Trajectory, theta_new: &SoftmaxPolicy, theta_old: &SoftmaxPolicy) -> f64 {
    traj.iter()
        .map(|st| theta_old.prob(st.s, st.a) / theta_new.prob(st.s, st.a))
        .product()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PgAlgo {
    /// mini-batch GPOMDP ascent, η_k = c0·k^{−ζ}, batch `batch`
    Sgd { c0: f64, zeta: f64, batch: u64, iters: u64 },
    /// constant-parameter PAGE
    Page { stage: PagerStage },
    /// stage-wise restarted PAGE
    Pager { stages: Vec<PagerStage> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgRow {
    pub iter: u64,
    pub j_exact: f64,
    pub cum_trajectories: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgOptions {
    /// importance-weight cap; `None` (the default) leaves weights unclipped
    pub omega_max: Option<f64>,
    /// ḡ₀ batch for PAGE/PAGER (trajectories)
    pub g0_batch: u64,
    /// stop early once J ≥ this value
    pub stop_at: Option<f64>,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions { omega_max: None, g0_batch: 1, stop_at: None }
    }
}

fn sample_batch(mdp: &TabularMdp, pol: &SoftmaxPolicy, n: u64, rng: &mut ChaCha8Rng) -> Vec<Trajectory> {
    (0..n).map(|_| sample_trajectory(mdp, pol, rng)).collect()
}

/// Policy-gradient ascent on J from θ₀; records exact J after every update against the
/// cumulative number of sampled trajectories.
pub fn run_pg(
    mdp: &TabularMdp,
    algo: &PgAlgo,
    theta0: &SoftmaxPolicy,
    seed: u64,
    opts: &PgOptions,
) -> Result<Vec<PgRow>> {
    check_pair(mdp, theta0)?;
    let mut rng = run_rng(seed, 0);
    let mut coin = run_rng(seed, 1);
    let mut pol = theta0.clone();
    let mut used: u64 = 0;
    let mut rows = vec![PgRow { iter: 0, j_exact: exact_return(mdp, &pol)?, cum_trajectories: 0 }];
    let done = |rows: &Vec<PgRow>| opts.stop_at.is_some_and(|t| rows.last().is_some_and(|r| r.j_exact >= t));
    match algo {
        PgAlgo::Sgd { c0, zeta, batch, iters } => {
            if *batch == 0 {
                return invalid("batch must be at least 1");
            }
            for k in 1..=*iters {
                let eta = c0 * (k as f64).powf(-zeta);
                let trajs = sample_batch(mdp, &pol, *batch, &mut rng);
                used += batch;
                let g = gpomdp(&trajs, &pol, mdp.gamma)?;
                pol.theta.iter_mut().zip(&g).for_each(|(t, gi)| *t += eta * gi);
                rows.push(PgRow { iter: k, j_exact: exact_return(mdp, &pol)?, cum_trajectories: used });
                if done(&rows) {
                    break;
                }
            }
        }
        PgAlgo::Page { stage } => {
            run_page_stages(mdp, std::slice::from_ref(stage), &mut pol, &mut rng, &mut coin, &mut used, &mut rows, opts)?
        }
        PgAlgo::Pager { stages } => run_page_stages(mdp, stages, &mut pol, &mut rng, &mut coin, &mut used, &mut rows, opts)?,
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_page_stages(
    mdp: &TabularMdp,
    stages: &[PagerStage],
    pol: &mut SoftmaxPolicy,
    rng: &mut ChaCha8Rng,
    coin: &mut ChaCha8Rng,
    used: &mut u64,
    rows: &mut Vec<PgRow>,
    opts: &PgOptions,
) -> Result<()> {
    if stages.is_empty() {
        return invalid("need at least one stage");
    }
    let g0n = opts.g0_batch.max(1);
    let mut g = gpomdp(&sample_batch(mdp, pol, g0n, rng), pol, mdp.gamma)?;
    *used += g0n;
    let mut it = 0;
    for st in stages {
        for _ in 0..st.t {
            let old = pol.clone();
            pol.theta.iter_mut().zip(&g).for_each(|(t, gi)| *t += st.eta * gi);
            if st.p >= 1.0 || coin.random::<f64>() < st.p {
                g = gpomdp(&sample_batch(mdp, pol, st.b, rng), pol, mdp.gamma)?;
                *used += st.b;
            } else {
                let trajs = sample_batch(mdp, pol, st.b_prime, rng);
                *used += st.b_prime;
                let inv = 1.0 / st.b_prime as f64;
                for t in &trajs {
                    let mut w = importance_weight(t, pol, &old);
                    if let Some(cap) = opts.omega_max {
                        w = w.min(cap);
                    }
                    let gn = gpomdp_single(t, pol, mdp.gamma);
                    let go = gpomdp_single(t, &old, mdp.gamma);
                    for ((gi, a), b) in g.iter_mut().zip(&gn).zip(&go) {
                        *gi += inv * (a - w * b);
                    }
                }
            }
            it += 1;
            rows.push(PgRow { iter: it, j_exact: exact_return(mdp, pol)?, cum_trajectories: *used });
            if opts.stop_at.is_some_and(|t| rows.last().is_some_and(|r| r.j_exact >= t)) {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// Plug-in constants for a PAGER schedule on an MDP: (σ², 𝓛) where σ² is the single-trajectory
/// GPOMDP variance E‖ĝ − ∇J‖² at θ and 𝓛² is the largest observed ratio
/// E‖Δ̃ − Δ‖²/‖θ₁ − θ₂‖² over random perturbations of size `radius`.
pub fn estimate_pg_constants(
    mdp: &TabularMdp,
    pol: &SoftmaxPolicy,
    samples: usize,
    pairs: usize,
    radius: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut rng = run_rng(seed, 7);
    let (exact, _) = exact_policy_gradient(mdp, pol)?;
    let mut var = 0.0;
    for _ in 0..samples {
        let g = gpomdp_single(&sample_trajectory(mdp, pol, &mut rng), pol, mdp.gamma);
        var += g.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    var /= samples as f64;
    let mut l2: f64 = 0.0;
    for _ in 0..pairs {
        let dir: Vec<f64> = (0..pol.theta.len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let new = SoftmaxPolicy::new(
            pol.s,
            pol.a,
            pol.theta.iter().zip(&dir).map(|(t, d)| t + radius * d / nrm).collect(),
        )?;
        let (gn, _) = exact_policy_gradient(mdp, &new)?;
        let delta: Vec<f64> = gn.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let mut acc = 0.0;
        for _ in 0..samples {
            let t = sample_trajectory(mdp, &new, &mut rng);
            let w = importance_weight(&t, &new, pol);
            let a = gpomdp_single(&t, &new, mdp.gamma);
            let b = gpomdp_single(&t, pol, mdp.gamma);
            acc += a.iter().zip(&b).zip(&delta).map(|((x, y), d)| (x - w * y - d).powi(2)).sum::<f64>();
        }
        l2 = l2.max(acc / samples as f64 / (radius * radius));
    }
    Ok((var, l2.sqrt()))
}
