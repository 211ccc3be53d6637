//! KŁ functions φ, noise-growth functions h, and the analytic test-function suite.
//!
//! Every test function carries its minimum value `f_star`, a gradient-Lipschitz constant
//! (on a declared working box where no global constant exists) and the α-PŁ pair (α, μ)
//! under which `‖∇f(x)‖^α ≥ (2μ)^{α/2}(f(x) − f*)` holds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::linalg::{dot, norm, norm_sq};

/// Gaps below this are skipped by [`verify_pl`]: the inequality holds trivially in the limit.
pub const PL_GAP_FLOOR: f64 = 1e-12;

/// PŁ constant of the nonconvex cosh example, taken verbatim.
pub const COSH_SIN_MU: f64 = 5e-5;

/// Default half-width of the working box used to give cosh a gradient-Lipschitz constant.
pub const DEFAULT_BOX_RADIUS: f64 = 5.0;

/// The KŁ function φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PhiSpec {
    /// φ(t) = √(2μ)·t^{1/α}
    PowerPL { alpha: f64, mu: f64 },
    /// φ(t) = min{t, √t}
    MinLinSqrt,
    /// φ(t) = √(t·log(1+t))
    SqrtTLog,
}

impl PhiSpec {
    pub fn power(alpha: f64, mu: f64) -> Result<Self> {
        let pl = PlSpec::new(alpha, mu)?;
        Ok(PhiSpec::PowerPL { alpha: pl.alpha, mu: pl.mu })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("φ is defined on t ≥ 0, got {t}"));
        }
        Ok(self.value(t))
    }

    pub fn deriv(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("φ′ requires t > 0, got {t}"));
        }
        Ok(match *self {
            PhiSpec::PowerPL { alpha, mu } => (2.0 * mu).sqrt() / alpha * t.powf(1.0 / alpha - 1.0),
            // left derivative at the kink
            PhiSpec::MinLinSqrt => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.5 / t.sqrt()
                }
            }
            PhiSpec::SqrtTLog => {
                let l = t.ln_1p();
                (l + t / (1.0 + t)) / (2.0 * (t * l).sqrt())
            }
        })
    }

    /// φ(t) without the domain check (t is assumed ≥ 0).
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            PhiSpec::PowerPL { alpha, mu } => (2.0 * mu).sqrt() * t.powf(1.0 / alpha),
            PhiSpec::MinLinSqrt => t.min(t.sqrt()),
            PhiSpec::SqrtTLog => (t * t.ln_1p()).sqrt(),
        }
    }

    /// φ²(t), evaluated without going through a square root.
    #[inline]
    pub fn sq(&self, t: f64) -> f64 {
        match *self {
            PhiSpec::PowerPL { alpha, mu } => 2.0 * mu * t.powf(2.0 / alpha),
            PhiSpec::MinLinSqrt => (t * t).min(t),
            PhiSpec::SqrtTLog => t * t.ln_1p(),
        }
    }

    /// d/dt φ²(t) = 2φ(t)φ′(t); finite at t = 0 for every variant with α ≤ 2.
    pub fn sq_deriv(&self, t: f64) -> f64 {
        match *self {
            PhiSpec::PowerPL { alpha, mu } => {
                let e = 2.0 / alpha - 1.0;
                if e == 0.0 {
                    2.0 * mu
                } else {
                    2.0 * mu * (2.0 / alpha) * t.powf(e)
                }
            }
            PhiSpec::MinLinSqrt => {
                if t <= 1.0 {
                    2.0 * t
                } else {
                    1.0
                }
            }
            PhiSpec::SqrtTLog => t.ln_1p() + t / (1.0 + t),
        }
    }
}

pub fn phi_eval(spec: &PhiSpec, t: f64) -> Result<f64> {
    spec.eval(t)
}

pub fn phi_deriv(spec: &PhiSpec, t: f64) -> Result<f64> {
    spec.deriv(t)
}

/// Noise-growth function h of the expected-smoothness assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HSpec {
    Zero,
    Power { beta: f64 },
    Log1p,
}

impl HSpec {
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return domain(format!("β must lie in (0, 1], got {beta}"));
        }
        Ok(HSpec::Power { beta })
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            HSpec::Zero => 0.0,
            HSpec::Power { beta } => t.powf(beta),
            HSpec::Log1p => t.ln_1p(),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            HSpec::Zero => 0.0,
            HSpec::Power { beta } => {
                if beta == 1.0 {
                    1.0
                } else {
                    beta * t.powf(beta - 1.0)
                }
            }
            HSpec::Log1p => 1.0 / (1.0 + t),
        }
    }

    /// The exponent β when h is a power (β = 1 counts as linear).
    pub fn beta(&self) -> Option<f64> {
        match *self {
            HSpec::Power { beta } => Some(beta),
            _ => None,
        }
    }
}

/// The α-PŁ pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlSpec {
    pub alpha: f64,
    pub mu: f64,
}

impl PlSpec {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&alpha) {
            return domain(format!("PŁ power α must lie in [1, 2], got {alpha}"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("PŁ constant μ must be positive, got {mu}"));
        }
        Ok(PlSpec { alpha, mu })
    }

    pub fn phi(&self) -> PhiSpec {
        PhiSpec::PowerPL { alpha: self.alpha, mu: self.mu }
    }
}

/// α-PŁ constants of c·|x|^q: α = q/(q−1), μ = c^{2/q}·q²/2.
pub fn pl_params_power_abs(c: f64, q: f64) -> Result<PlSpec> {
    if !(c > 0.0) {
        return domain(format!("c must be positive, got {c}"));
    }
    if !(q > 1.0) {
        return domain(format!("q must exceed 1 (α undefined), got {q}"));
    }
    let alpha = q / (q - 1.0);
    if alpha > 2.0 {
        return domain(format!("q = {q} gives α = {alpha} > 2, outside the PŁ range"));
    }
    PlSpec::new(alpha, c.powf(2.0 / q) * q * q / 2.0)
}

#[derive(Debug, Clone)]
pub enum FnKind {
    /// c·‖x‖^q
    PowerAbs { c: f64, q: f64 },
    /// cosh(x) − 1
    Cosh1D,
    /// cosh(x) + 8·cosh(sin x) − 9
    CoshSinNonconvex,
    /// (1/n)Σ f_i(x_i) over consecutive coordinate blocks
    Separable { parts: Vec<TestFunction>, offsets: Vec<usize> },
    /// f_i(x) = base(x) + ⟨z_i, x⟩ with Σ z_i = 0
    FiniteSumShifted { base: Box<TestFunction>, shifts: Vec<Vec<f64>> },
    /// (μ/2)‖x‖²
    Quadratic { mu: f64 },
}

/// An objective with analytic gradient, known minimum and PŁ parameters.
#[derive(Debug, Clone)]
pub struct TestFunction {
    dim: usize,
    kind: FnKind,
    f_star: f64,
    lipschitz_l: f64,
    pl: PlSpec,
}

impl TestFunction {
    /// c‖x‖^q in `dim` dimensions; L is the Hessian bound c·q(q−1)R^{q−2} on the ball of radius R.
    pub fn power_abs(c: f64, q: f64, dim: usize, box_radius: f64) -> Result<Self> {
        let pl = pl_params_power_abs(c, q)?;
        check_dim(dim)?;
        check_radius(box_radius)?;
        Ok(TestFunction {
            dim,
            kind: FnKind::PowerAbs { c, q },
            f_star: 0.0,
            lipschitz_l: c * q * (q - 1.0) * box_radius.powf(q - 2.0),
            pl,
        })
    }

    pub fn cosh_1d() -> Self {
        Self::cosh_1d_on_box(DEFAULT_BOX_RADIUS).expect("default radius is valid")
    }

    pub fn cosh_1d_on_box(box_radius: f64) -> Result<Self> {
        check_radius(box_radius)?;
        Ok(TestFunction {
            dim: 1,
            kind: FnKind::Cosh1D,
            f_star: 0.0,
            lipschitz_l: box_radius.cosh(),
            pl: PlSpec::new(1.0, 0.5)?,
        })
    }

    pub fn cosh_sin_nonconvex(box_radius: f64) -> Result<Self> {
        check_radius(box_radius)?;
        // |f''| ≤ cosh x + 8·cos²x·cosh(sin x) on the box
        Ok(TestFunction {
            dim: 1,
            kind: FnKind::CoshSinNonconvex,
            f_star: 0.0,
            lipschitz_l: box_radius.cosh() + 8.0 * 1f64.cosh(),
            pl: PlSpec::new(1.0, COSH_SIN_MU)?,
        })
    }

    pub fn quadratic(mu: f64, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(TestFunction {
            dim,
            kind: FnKind::Quadratic { mu },
            f_star: 0.0,
            lipschitz_l: mu,
            pl: PlSpec::new(2.0, mu)?,
        })
    }

    /// Separable composition; see [`separable_compose`].
    pub fn separable(parts: Vec<TestFunction>) -> Result<Self> {
        separable_compose(parts)
    }

    /// Finite sum of `n` shifted copies of `base`. Shifts are Gaussian with standard deviation
    /// `shift_std`, mean-subtracted, and the last one is set to minus the sum of the others so
    /// the sequential sum is exactly zero.
    pub fn finite_sum_shifted(base: TestFunction, n: usize, shift_std: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("finite sum needs n ≥ 1");
        }
        if base.n_components() > 1 {
            return invalid("base of a finite sum must be a single function");
        }
        let d = base.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shifts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); shift_std * z }).collect::<Vec<f64>>())
            .collect();
        let mut mean = vec![0.0; d];
        for z in &shifts {
            for (m, v) in mean.iter_mut().zip(z) {
                *m += v / n as f64;
            }
        }
        for z in shifts.iter_mut() {
            for (v, m) in z.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
        let mut partial = vec![0.0; d];
        for z in &shifts[..n - 1] {
            for (p, v) in partial.iter_mut().zip(z) {
                *p += v;
            }
        }
        shifts[n - 1] = partial.iter().map(|p| -p).collect();
        Ok(TestFunction {
            dim: d,
            f_star: base.f_star,
            lipschitz_l: base.lipschitz_l,
            pl: base.pl,
            kind: FnKind::FiniteSumShifted { base: Box::new(base), shifts },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FnKind {
        &self.kind
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn lipschitz_l(&self) -> f64 {
        self.lipschitz_l
    }

    pub fn pl(&self) -> PlSpec {
        self.pl
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FnKind::PowerAbs { c, q } => format!("power_abs(c={c},q={q},d={})", self.dim),
            FnKind::Cosh1D => "cosh1d".into(),
            FnKind::CoshSinNonconvex => "cosh_sin".into(),
            FnKind::Separable { parts, .. } => format!("separable(n={})", parts.len()),
            FnKind::FiniteSumShifted { base, shifts } => {
                format!("finite_sum(n={},base={})", shifts.len(), base.name())
            }
            FnKind::Quadratic { mu } => format!("quadratic(mu={mu},d={})", self.dim),
        }
    }

    /// Number of components f_i (1 unless this is a finite sum).
    pub fn n_components(&self) -> usize {
        match &self.kind {
            FnKind::FiniteSumShifted { shifts, .. } => shifts.len(),
            _ => 1,
        }
    }

    pub fn shifts(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            FnKind::FiniteSumShifted { shifts, .. } => Some(shifts),
            _ => None,
        }
    }

    /// (1/n)Σ‖z_i‖², the exact trace of the shift covariance; zero for non-finite-sums.
    pub fn shift_variance(&self) -> f64 {
        match self.shifts() {
            Some(z) => z.iter().map(|v| norm_sq(v)).sum::<f64>() / z.len() as f64,
            None => 0.0,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            FnKind::PowerAbs { c, q } => c * norm(x).powf(*q),
            FnKind::Cosh1D => x[0].cosh() - 1.0,
            FnKind::CoshSinNonconvex => x[0].cosh() + 8.0 * x[0].sin().cosh() - 9.0,
            FnKind::Separable { parts, offsets } => {
                let n = parts.len() as f64;
                parts
                    .iter()
                    .zip(offsets)
                    .map(|(p, &o)| p.value(&x[o..o + p.dim]))
                    .sum::<f64>()
                    / n
            }
            FnKind::FiniteSumShifted { base, .. } => base.value(x),
            FnKind::Quadratic { mu } => 0.5 * mu * norm_sq(x),
        }
    }

    pub fn gap(&self, x: &[f64]) -> f64 {
        self.value(x) - self.f_star
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.grad_into(x, &mut g);
        g
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            FnKind::PowerAbs { c, q } => {
                let r = norm(x);
                if r == 0.0 {
                    out.fill(0.0);
                } else {
                    let s = c * q * r.powf(q - 2.0);
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o = s * xi;
                    }
                }
            }
            FnKind::Cosh1D => out[0] = x[0].sinh(),
            FnKind::CoshSinNonconvex => {
                let v = x[0];
                out[0] = v.sinh() + 8.0 * v.cos() * v.sin().sinh();
            }
            FnKind::Separable { parts, offsets } => {
                let n = parts.len() as f64;
                for (p, &o) in parts.iter().zip(offsets) {
                    let blk = &mut out[o..o + p.dim];
                    p.grad_into(&x[o..o + p.dim], blk);
                    for v in blk.iter_mut() {
                        *v /= n;
                    }
                }
            }
            FnKind::FiniteSumShifted { base, .. } => base.grad_into(x, out),
            FnKind::Quadratic { mu } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = mu * xi;
                }
            }
        }
    }

    /// f_i(x); for non-finite-sums the single component is f itself.
    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        match &self.kind {
            FnKind::FiniteSumShifted { base, shifts } => base.value(x) + dot(&shifts[i], x),
            _ => self.value(x),
        }
    }

    pub fn component_grad_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.grad_into(x, out);
        if let FnKind::FiniteSumShifted { shifts, .. } = &self.kind {
            for (o, z) in out.iter_mut().zip(&shifts[i]) {
                *o += z;
            }
        }
    }

    /// Distance to the minimizer set; every function in the suite is minimized only at the origin.
    pub fn dist_to_argmin(&self, x: &[f64]) -> f64 {
        norm(x)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return invalid("dimension must be positive");
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("working box radius must be positive, got {r}"));
    }
    Ok(())
}

/// f(x) = (1/n)Σ f_i(x_i) on concatenated blocks. PŁ power must be common; μ = μ_min/n.
pub fn separable_compose(parts: Vec<TestFunction>) -> Result<TestFunction> {
    if parts.is_empty() {
        return invalid("separable composition needs at least one part");
    }
    let alpha = parts[0].pl.alpha;
    if parts.iter().any(|p| (p.pl.alpha - alpha).abs() > 1e-12) {
        return invalid("separable parts must share the PŁ power α");
    }
    let n = parts.len() as f64;
    let mu_min = parts.iter().map(|p| p.pl.mu).fold(f64::INFINITY, f64::min);
    let l_max = parts.iter().map(|p| p.lipschitz_l).fold(0.0, f64::max);
    let f_star = parts.iter().map(|p| p.f_star).sum::<f64>() / n;
    let mut offsets = Vec::with_capacity(parts.len());
    let mut dim = 0;
    for p in &parts {
        offsets.push(dim);
        dim += p.dim;
    }
    Ok(TestFunction {
        dim,
        f_star,
        lipschitz_l: l_max / n,
        pl: PlSpec::new(alpha, mu_min / n)?,
        kind: FnKind::Separable { parts, offsets },
    })
}

/// min over points of ‖∇f‖^α / ((2μ)^{α/2}(f − f*)); points with gap below
/// [`PL_GAP_FLOOR`] are skipped. Returns +∞ when every point is skipped.
pub fn verify_pl(f: &TestFunction, points: &[Vec<f64>]) -> f64 {
    let PlSpec { alpha, mu } = f.pl;
    let scale = (2.0 * mu).powf(alpha / 2.0);
    points
        .iter()
        .filter_map(|x| {
            let gap = f.gap(x);
            if gap < PL_GAP_FLOOR {
                return None;
            }
            Some(norm(&f.grad(x)).powf(alpha) / (scale * gap))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max relative error |g − ĝ| / max(1, |g|, |ĝ|) between the analytic gradient and central differences.
pub fn grad_check(f: &TestFunction, points: &[Vec<f64>], step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return domain("finite-difference step must be positive");
    }
    let mut worst: f64 = 0.0;
    let mut xp = vec![0.0; f.dim];
    for x in points {
        let g = f.grad(x);
        xp.copy_from_slice(x);
        for i in 0..f.dim {
            xp[i] = x[i] + step;
            let fp = f.value(&xp);
            xp[i] = x[i] - step;
            let fm = f.value(&xp);
            xp[i] = x[i];
            let fd = (fp - fm) / (2.0 * step);
            let err = (g[i] - fd).abs() / 1f64.max(g[i].abs()).max(fd.abs());
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// Both sides of dist(x, X*) ≤ (α/(α−1))·(1/√(2μ))·(f(x) − f*)^{(α−1)/α}.
pub fn iterate_distance_bound(f: &TestFunction, x: &[f64]) -> Result<(f64, f64)> {
    let PlSpec { alpha, mu } = f.pl;
    if alpha <= 1.0 {
        return domain("the iterate-distance bound needs α > 1");
    }
    let gap = f.gap(x).max(0.0);
    let rhs = alpha / (alpha - 1.0) / (2.0 * mu).sqrt() * gap.powf((alpha - 1.0) / alpha);
    Ok((f.dist_to_argmin(x), rhs))
}

/// 1-D grid of `n` points spanning [lo, hi], as single-coordinate points.
pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![lo]];
    }
    (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sq_deriv_matches_product_rule() {
        for phi in [PhiSpec::PowerPL { alpha: 1.3, mu: 0.7 }, PhiSpec::MinLinSqrt, PhiSpec::SqrtTLog] {
            for t in [0.1, 0.5, 2.0, 7.0] {
                let want = 2.0 * phi.value(t) * phi.deriv(t).unwrap();
                assert!((phi.sq_deriv(t) - want).abs() < 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn shifts_sum_to_exact_zero() {
        let base = TestFunction::quadratic(1.0, 3).unwrap();
        let f = TestFunction::finite_sum_shifted(base, 17, 2.0, 9).unwrap();
        let mut s = vec![0.0; 3];
        for z in f.shifts().unwrap() {
            for (a, b) in s.iter_mut().zip(z) {
                *a += b;
            }
        }
        assert_eq!(s, vec![0.0; 3]);
    }
}
