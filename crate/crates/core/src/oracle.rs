//! Stochastic gradient oracles with cost accounting.
//!
//! An oracle wraps a [`TestFunction`] and a noise model. Every query is charged to
//! `samples_used` in units of component/stochastic gradient evaluations, so traces can be
//! plotted against computational cost. Randomness comes from a ChaCha stream keyed by
//! (master seed, run index); equal keys give identical query streams.

use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::klcore::{HSpec, TestFunction};
use crate::linalg::{dist_sq, norm_sq};

/// Independent RNG stream for logical run `stream` under `seed`.
pub fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Noise {
    /// g = ∇f + ξ, ξ ~ N(0, σ²I) per component draw (σ² is per-coordinate variance).
    AdditiveGaussian { sigma2: f64 },
    /// g = ∇f_i for uniformly sampled components of a finite sum with `n` terms.
    FiniteSumSampling { n: usize },
    /// g = (1 + s·ξ)∇f, ξ ~ N(0, 1). Not one of the assumption-defining models; it is the
    /// simplest oracle whose pair differences carry genuine noise.
    MultiplicativeGaussian { s2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sampling {
    WithReplacement,
    /// Requires b ≤ n; with b = n the query returns the exact full gradient.
    WithoutReplacement,
}

/// Output of a shared-randomness gradient-difference query.
#[derive(Debug, Clone)]
pub struct PairDiffSample {
    pub delta_tilde: Vec<f64>,
    /// 2·b′ component-gradient evaluations
    pub cost: u64,
}

pub struct GradOracle {
    func: Arc<TestFunction>,
    noise: Noise,
    sampling: Sampling,
    rng: ChaCha8Rng,
    samples_used: u64,
}

impl GradOracle {
    pub fn new(func: Arc<TestFunction>, noise: Noise, seed: u64) -> Result<Self> {
        Self::with_stream(func, noise, seed, 0)
    }

    pub fn with_stream(func: Arc<TestFunction>, noise: Noise, seed: u64, stream: u64) -> Result<Self> {
        match noise {
            Noise::AdditiveGaussian { sigma2 } if !(sigma2 >= 0.0) => {
                return invalid(format!("σ² must be nonnegative, got {sigma2}"))
            }
            Noise::MultiplicativeGaussian { s2 } if !(s2 >= 0.0) => {
                return invalid(format!("s² must be nonnegative, got {s2}"))
            }
            Noise::FiniteSumSampling { n } if n != func.n_components() || n == 0 => {
                return invalid(format!(
                    "finite-sum sampling over n = {n} needs a finite sum with that many components (have {})",
                    func.n_components()
                ))
            }
            _ => {}
        }
        Ok(GradOracle {
            func,
            noise,
            sampling: Sampling::WithReplacement,
            rng: run_rng(seed, stream),
            samples_used: 0,
        })
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn func(&self) -> &TestFunction {
        &self.func
    }

    pub fn func_arc(&self) -> Arc<TestFunction> {
        self.func.clone()
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn samples_used(&self) -> u64 {
        self.samples_used
    }

    /// Expected-smoothness constants (A, B, C) for a single draw: E‖g‖² ≤ 2A·h + B‖∇f‖² + C/b.
    pub fn es_constants(&self) -> (f64, f64, f64) {
        let d = self.func.dim() as f64;
        match self.noise {
            Noise::AdditiveGaussian { sigma2 } => (0.0, 1.0, sigma2 * d),
            Noise::FiniteSumSampling { .. } => (0.0, 1.0, self.func.shift_variance()),
            Noise::MultiplicativeGaussian { s2 } => (0.0, 1.0 + s2, 0.0),
        }
    }

    /// Total single-draw variance bound E‖g − ∇f‖² ≤ σ², when the model has one.
    pub fn variance_bound(&self) -> Option<f64> {
        match self.noise {
            Noise::AdditiveGaussian { sigma2 } => Some(sigma2 * self.func.dim() as f64),
            Noise::FiniteSumSampling { .. } => Some(self.func.shift_variance()),
            Noise::MultiplicativeGaussian { .. } => None,
        }
    }

    /// A valid average-smoothness constant 𝓛 (pair-difference variance ≤ 𝓛²‖x−y‖²/b′).
    pub fn avg_smoothness_constant(&self) -> f64 {
        match self.noise {
            Noise::AdditiveGaussian { .. } | Noise::FiniteSumSampling { .. } => self.func.lipschitz_l(),
            Noise::MultiplicativeGaussian { s2 } => s2.sqrt() * self.func.lipschitz_l(),
        }
    }

    fn gauss(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn draw_indices(&mut self, n: usize, b: usize) -> Result<Vec<usize>> {
        match self.sampling {
            Sampling::WithReplacement => Ok((0..b).map(|_| self.rng.random_range(0..n)).collect()),
            Sampling::WithoutReplacement => {
                if b > n {
                    return invalid(format!("cannot draw {b} of {n} components without replacement"));
                }
                Ok(index::sample(&mut self.rng, n, b).into_vec())
            }
        }
    }

    /// Mean of `b` stochastic gradients at x; cost b.
    pub fn sample_grad(&mut self, x: &[f64], b: usize) -> Result<(Vec<f64>, u64)> {
        if b == 0 {
            return invalid("batch size must be at least 1");
        }
        let mut g = self.func.grad(x);
        let bf = b as f64;
        match self.noise {
            Noise::AdditiveGaussian { sigma2 } => {
                // the mean of b iid N(0, σ²) draws is drawn from its exact law N(0, σ²/b)
                let sd = (sigma2 / bf).sqrt();
                for gi in g.iter_mut() {
                    *gi += sd * self.gauss();
                }
            }
            Noise::MultiplicativeGaussian { s2 } => {
                let m = 1.0 + (s2 / bf).sqrt() * self.gauss();
                for gi in g.iter_mut() {
                    *gi *= m;
                }
            }
            Noise::FiniteSumSampling { n } => {
                let idx = self.draw_indices(n, b)?;
                let shifts = self.func.shifts().expect("checked at construction");
                for &i in &idx {
                    for (gi, z) in g.iter_mut().zip(&shifts[i]) {
                        *gi += z / bf;
                    }
                }
            }
        }
        self.samples_used += b as u64;
        Ok((g, b as u64))
    }

    /// Δ̃(x, y): the same sampled ξ batch of size b′ evaluated at both points; cost 2b′.
    pub fn sample_pair_diff(&mut self, x: &[f64], y: &[f64], b_prime: usize) -> Result<PairDiffSample> {
        if b_prime == 0 {
            return invalid("b′ must be at least 1");
        }
        let gx = self.func.grad(x);
        let gy = self.func.grad(y);
        let bf = b_prime as f64;
        let delta_tilde = match self.noise {
            Noise::AdditiveGaussian { sigma2 } => {
                let sd = (sigma2 / bf).sqrt();
                gx.iter()
                    .zip(&gy)
                    .map(|(a, b)| {
                        let xi = sd * self.gauss();
                        (a + xi) - (b + xi)
                    })
                    .collect()
            }
            Noise::MultiplicativeGaussian { s2 } => {
                let m = 1.0 + (s2 / bf).sqrt() * self.gauss();
                gx.iter().zip(&gy).map(|(a, b)| m * a - m * b).collect()
            }
            Noise::FiniteSumSampling { n } => {
                let idx = self.draw_indices(n, b_prime)?;
                let shifts = self.func.shifts().expect("checked at construction");
                let mut out = vec![0.0; gx.len()];
                for &i in &idx {
                    for ((o, (a, b)), z) in out.iter_mut().zip(gx.iter().zip(&gy)).zip(&shifts[i]) {
                        *o += ((a + z) - (b + z)) / bf;
                    }
                }
                out
            }
        };
        let cost = 2 * b_prime as u64;
        self.samples_used += cost;
        Ok(PairDiffSample { delta_tilde, cost })
    }

    /// Raw access to the oracle's stream for auxiliary draws (coin flips) that must stay in sync.
    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsReport {
    pub pass: bool,
    /// max over points of (Monte-Carlo E‖g‖²) / RHS
    pub worst_ratio: f64,
}

/// Monte-Carlo check of E‖g‖² ≤ 2A·h(f−f*) + B‖∇f‖² + C/b at each point.
#[allow(clippy::too_many_arguments)]
pub fn verify_es(
    oracle: &mut GradOracle,
    points: &[Vec<f64>],
    a: f64,
    b_coef: f64,
    c: f64,
    h: HSpec,
    batch: usize,
    trials: usize,
) -> Result<EsReport> {
    if trials < 1000 {
        return invalid("expected-smoothness verification needs at least 10³ trials");
    }
    let slack = 1.0 + 3.0 / (trials as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for x in points {
        let f = oracle.func().clone();
        let mut acc = 0.0;
        for _ in 0..trials {
            let (g, _) = oracle.sample_grad(x, batch)?;
            acc += norm_sq(&g);
        }
        let est = acc / trials as f64;
        let rhs = 2.0 * a * h.eval(f.gap(x).max(0.0)) + b_coef * norm_sq(&f.grad(x)) + c / batch as f64;
        let ratio = if rhs > 0.0 {
            est / rhs
        } else if est > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
        if est > rhs * slack {
            pass = false;
        }
    }
    Ok(EsReport { pass, worst_ratio: worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgSmoothReport {
    pub pass: bool,
    /// empirical E‖Δ̃ − Δ‖²
    pub lhs: f64,
    /// lhs / ((𝓛²/b′)‖x − y‖²)
    pub ratio: f64,
}

/// Monte-Carlo check of E‖Δ̃(x,y) − Δ(x,y)‖² ≤ (𝓛²/b′)‖x − y‖².
pub fn verify_avg_smoothness(
    oracle: &mut GradOracle,
    x: &[f64],
    y: &[f64],
    b_prime: usize,
    trials: usize,
    l_script: f64,
) -> Result<AvgSmoothReport> {
    let d2 = dist_sq(x, y);
    if d2 == 0.0 {
        return invalid("x = y: the average-smoothness ratio is undefined");
    }
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let f = oracle.func_arc();
    let exact: Vec<f64> = f.grad(x).iter().zip(f.grad(y)).map(|(a, b)| a - b).collect();
    let mut acc = 0.0;
    for _ in 0..trials {
        let s = oracle.sample_pair_diff(x, y, b_prime)?;
        acc += dist_sq(&s.delta_tilde, &exact);
    }
    let lhs = acc / trials as f64;
    let bound = l_script * l_script / b_prime as f64 * d2;
    let ratio = lhs / bound;
    Ok(AvgSmoothReport { pass: lhs <= bound * (1.0 + 3.0 / (trials as f64).sqrt()), lhs, ratio })
}
