//! Numerical optimization of fitness over continuous strategy families:
//! softmax-parameterized kernels and a 1-D linear-Gaussian backend.
//!
//! The optimizer is plain gradient descent with a halving line search. It is
//! deterministic and single-threaded; independent runs can go in parallel.

mod gaussian;
mod simplex;

pub use gaussian::{
    gaussian_buco_chain, gaussian_elbo_optimize, gaussian_free_energy, gaussian_invert,
    gaussian_kl, Gaussian1D, GaussianChain, GaussianElboResult, LinearGaussianKernel,
};
pub use simplex::{
    autoencoder_gradient, autoencoder_objective, optimize_autoencoder, optimize_fitness,
    FamilyResult, SimplexFamily,
};

use crate::error::{Error, Result};

/// Sufficient-decrease constant for the line search. At one half a step on a
/// quadratic never overshoots past the minimizer along the gradient, which
/// rules out steps that bounce between mirror points for almost no gain.
const ARMIJO: f64 = 0.5;

/// Whether larger or smaller fitness is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    Analytic,
    /// Central differences with this step.
    FiniteDifference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub max_iters: usize,
    /// Stop once an accepted step improves the objective by less than this.
    pub tol: f64,
    /// Initial trial step of each line search.
    pub step: f64,
    pub max_halvings: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            max_iters: 5000,
            tol: 1e-10,
            step: 1.0,
            max_halvings: 30,
        }
    }
}

/// Outcome of a descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub params: Vec<f64>,
    /// Objective at the start and after every accepted step, in the caller's
    /// orientation: non-increasing when minimizing, non-decreasing when
    /// maximizing.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl OptimResult {
    pub fn final_value(&self) -> f64 {
        *self
            .trace
            .last()
            .expect("trace starts with the initial value")
    }
}

/// Gradient descent with backtracking from `x0`.
///
/// Each iteration tries `x − t·∇f` for `t = step, step/2, …` and takes the
/// first trial that lowers the objective by at least half the first-order
/// prediction `t·|∇f|²` (the Armijo condition). Runs stop when the gain
/// falls below `tol`, when no trial helps (a numerical stationary point), or
/// after `max_iters` iterations.
pub fn minimize(
    f: impl Fn(&[f64]) -> Result<f64>,
    grad: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: Vec<f64>,
    sense: Sense,
    config: &OptimConfig,
) -> Result<OptimResult> {
    let s = sense.sign();
    let objective = |x: &[f64]| f(x).map(|v| s * v);
    let mut x = x0;
    let mut fx = objective(&x)?;
    if !fx.is_finite() {
        return Err(Error::DivergedFitness(format!(
            "fitness {} at the initial point",
            s * fx
        )));
    }
    let mut trace = vec![s * fx];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        iterations += 1;
        let g: Vec<f64> = grad(&x)?.into_iter().map(|v| s * v).collect();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedFitness("non-finite gradient".to_string()));
        }
        if g.iter().all(|&v| v == 0.0) {
            converged = true;
            break;
        }
        let slope: f64 = g.iter().map(|v| v * v).sum();
        let mut t = config.step;
        let mut accepted = None;
        let mut any_finite = false;
        for _ in 0..=config.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let ft = objective(&trial)?;
            if ft.is_finite() {
                any_finite = true;
                if ft < fx && ft <= fx - ARMIJO * t * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((next, fn_)) = accepted else {
            if !any_finite {
                return Err(Error::DivergedFitness(
                    "fitness is infinite at every line-search probe".to_string(),
                ));
            }
            converged = true;
            break;
        };
        let gain = fx - fn_;
        x = next;
        fx = fn_;
        trace.push(s * fx);
        if gain < config.tol {
            converged = true;
            break;
        }
    }
    Ok(OptimResult {
        params: x,
        trace,
        iterations,
        converged,
    })
}

/// Central finite-difference gradient.
pub fn finite_difference(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}
