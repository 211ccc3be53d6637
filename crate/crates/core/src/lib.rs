//! Numerical core of the KŁ optimization lab.
//!
//! * [`klcore`] — KŁ functions φ, noise-growth functions h, analytic test functions.
//! * [`oracle`] — stochastic gradient oracles with cost accounting and Monte-Carlo verifiers.
//! * [`dynamics`] — the scalar recursion governing SGD, stationary points, rate predictions.
//! * [`optimizers`] — GD, SGD with restarts, the PAGE estimator and PAGER.
//! * [`rlpg`] — tabular MDPs, exact returns/gradients, GPOMDP and variance-reduced policy gradient.

pub mod dynamics;
pub mod klcore;
pub mod optimizers;
pub mod oracle;
pub mod rlpg;
mod error;
pub mod linalg;

pub use error::{Error, Result};
