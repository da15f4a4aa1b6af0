use std::f64::consts::PI;

use super::{minimize, OptimConfig, OptimResult, Sense};
use crate::error::{Error, Result};

/// A normal distribution on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "N({mean}, {variance}) needs a finite mean and positive variance"
            )));
        }
        Ok(Gaussian1D { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * PI * self.variance).ln() - d * d / (2.0 * self.variance)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }
}

/// The channel `x ↦ N(a·x + b, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianKernel {
    pub slope: f64,
    pub intercept: f64,
    pub noise_variance: f64,
}

impl LinearGaussianKernel {
    pub fn new(slope: f64, intercept: f64, noise_variance: f64) -> Result<Self> {
        if !slope.is_finite()
            || !intercept.is_finite()
            || !(noise_variance > 0.0 && noise_variance.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "linear-Gaussian kernel ({slope}, {intercept}, {noise_variance}) is invalid"
            )));
        }
        Ok(LinearGaussianKernel {
            slope,
            intercept,
            noise_variance,
        })
    }

    /// The output distribution at input `x`.
    pub fn at(&self, x: f64) -> Gaussian1D {
        Gaussian1D {
            mean: self.slope * x + self.intercept,
            variance: self.noise_variance,
        }
    }

    pub fn log_density(&self, y: f64, x: f64) -> f64 {
        self.at(x).log_density(y)
    }

    /// `k∘π = N(a·μ + b, a²·v + σ²)`.
    pub fn pushforward(&self, prior: &Gaussian1D) -> Gaussian1D {
        Gaussian1D {
            mean: self.slope * prior.mean + self.intercept,
            variance: self.slope * self.slope * prior.variance + self.noise_variance,
        }
    }

    /// `self` then `next`.
    pub fn then(&self, next: &LinearGaussianKernel) -> LinearGaussianKernel {
        LinearGaussianKernel {
            slope: next.slope * self.slope,
            intercept: next.slope * self.intercept + next.intercept,
            noise_variance: next.slope * next.slope * self.noise_variance + next.noise_variance,
        }
    }

    /// The conjugate Bayesian inverse `k†_π`, itself linear-Gaussian in the
    /// observation.
    pub fn invert(&self, prior: &Gaussian1D) -> LinearGaussianKernel {
        let (a, b, s2) = (self.slope, self.intercept, self.noise_variance);
        let post_var = 1.0 / (1.0 / prior.variance + a * a / s2);
        LinearGaussianKernel {
            slope: post_var * a / s2,
            intercept: post_var * (prior.mean / prior.variance - a * b / s2),
            noise_variance: post_var,
        }
    }
}

/// Posterior of `x` given `y` under `x ∼ prior`, `y ∼ k(x)`.
pub fn gaussian_invert(prior: &Gaussian1D, k: &LinearGaussianKernel, y: f64) -> Gaussian1D {
    let (a, b, s2) = (k.slope, k.intercept, k.noise_variance);
    let precision = 1.0 / prior.variance + a * a / s2;
    let variance = 1.0 / precision;
    Gaussian1D {
        mean: variance * (prior.mean / prior.variance + a * (y - b) / s2),
        variance,
    }
}

/// `D_KL(p ‖ q)` in closed form.
pub fn gaussian_kl(p: &Gaussian1D, q: &Gaussian1D) -> f64 {
    let d = p.mean - q.mean;
    0.5 * (q.variance / p.variance).ln() + (p.variance + d * d) / (2.0 * q.variance) - 0.5
}

/// `E_{x∼q}[−ln p_k(y|x)] + D_KL(q ‖ prior)` with the expectation in closed
/// form.
pub fn gaussian_free_energy(
    q: &Gaussian1D,
    prior: &Gaussian1D,
    k: &LinearGaussianKernel,
    y: f64,
) -> f64 {
    let (a, s2) = (k.slope, k.noise_variance);
    let r = y - a * q.mean - k.intercept;
    0.5 * (2.0 * PI * s2).ln() + (r * r + a * a * q.variance) / (2.0 * s2) + gaussian_kl(q, prior)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianElboResult {
    pub q: Gaussian1D,
    pub run: OptimResult,
}

/// Minimizes the free energy over `q = N(m, e^s)` by gradient descent on
/// `(m, s)`, starting from `init`.
pub fn gaussian_elbo_optimize(
    prior: &Gaussian1D,
    k: &LinearGaussianKernel,
    y: f64,
    init: &Gaussian1D,
    config: &OptimConfig,
) -> Result<GaussianElboResult> {
    let q_of = |p: &[f64]| Gaussian1D::new(p[0], p[1].exp());
    let objective = |p: &[f64]| Ok(gaussian_free_energy(&q_of(p)?, prior, k, y));
    let (a, b, s2) = (k.slope, k.intercept, k.noise_variance);
    let grad = |p: &[f64]| {
        let (m, v) = (p[0], p[1].exp());
        let dm = -a * (y - a * m - b) / s2 + (m - prior.mean) / prior.variance;
        let ds = v * (a * a / (2.0 * s2) - 1.0 / (2.0 * v) + 1.0 / (2.0 * prior.variance));
        Ok(vec![dm, ds])
    };
    let run = minimize(
        objective,
        grad,
        vec![init.mean, init.variance.ln()],
        Sense::Minimize,
        config,
    )?;
    Ok(GaussianElboResult {
        q: q_of(&run.params)?,
        run,
    })
}

/// Two routes to the posterior on `x` after observing `z` through
/// `x → y → z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChain {
    /// `k1†_π ∘ k2†_{k1∘π}` applied to `z`.
    pub composite: Gaussian1D,
    /// `(k2∘k1)†_π` at `z`.
    pub direct: Gaussian1D,
}

impl GaussianChain {
    pub fn deviation(&self) -> f64 {
        (self.composite.mean - self.direct.mean)
            .abs()
            .max((self.composite.variance - self.direct.variance).abs())
    }
}

pub fn gaussian_buco_chain(
    prior: &Gaussian1D,
    k1: &LinearGaussianKernel,
    k2: &LinearGaussianKernel,
    z: f64,
) -> GaussianChain {
    let middle = k1.pushforward(prior);
    let over_y = k2.invert(&middle).at(z);
    let composite = k1.invert(prior).pushforward(&over_y);
    let direct = k1.then(k2).invert(prior).at(z);
    GaussianChain { composite, direct }
}
