//! Fitness functions for the standard statistical games. Every expectation
//! over feedback is an exact sum over the feedback's support, so terms with
//! zero feedback weight never contribute, even when they are infinite.

use std::fmt;
use std::sync::Arc;

use super::context::GameContext;
use super::free_energy::{free_energy, Divergence};
use super::game::{Fitness, StatGame};
use crate::error::{Error, Result};
use crate::inversion::invert;
use crate::lens::BayesianLens;
use crate::markov::{Dist, Effect, FiniteSpace, Kernel, Side};
use crate::para::ParamLens;
use crate::weight::Weight;

/// The monotone function applied to densities in likelihood games.
#[derive(Clone)]
pub enum Transform {
    Log,
    Identity,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Transform {
    pub fn apply(&self, p: f64) -> f64 {
        match self {
            Transform::Log => {
                if p == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    p.ln()
                }
            }
            Transform::Identity => p,
            Transform::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Log => f.write_str("Log"),
            Transform::Identity => f.write_str("Identity"),
            Transform::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// `Σ_{y ∈ supp(fb)} fb(y)·g(y)`.
pub fn expect_over<W: Weight>(
    fb: &Dist<W>,
    mut g: impl FnMut(usize) -> Result<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for y in fb.support() {
        total += fb.weight_at(y).to_f64() * g(y)?;
    }
    Ok(total)
}

/// Maximum `f`-likelihood: `E_{k(π)}[f ∘ p_π]` for the state lens of `state`.
pub fn mle_fitness<W: Weight>(state: &Dist<W>, transform: Transform) -> Fitness<W> {
    let lens = BayesianLens::from_state(state);
    let density: Vec<f64> = state.weights().iter().map(W::to_f64).collect();
    Arc::new(move |ctx: &GameContext<W>| {
        let fb = ctx.feedback(&lens)?;
        expect_over(&fb, |x| Ok(transform.apply(density[x])))
    })
}

pub fn mle_game<W: Weight>(state: &Dist<W>, transform: Transform) -> StatGame<W> {
    StatGame::from_parts(
        BayesianLens::from_state(state),
        mle_fitness(state, transform),
    )
}

/// Parameterized maximum `f`-likelihood for `l : (I,I) → (X,X)` with
/// parameters `(Ω, Θ)`: `E_{efb}[f ∘ p_{l∘π_Ω}]`, with `π_Ω` the parameter
/// marginal of the context prior.
pub fn param_mle_fitness<W: Weight>(l: &ParamLens<W>, transform: Transform) -> Result<Fitness<W>> {
    if !l.dom_fwd().is_unit() {
        return Err(Error::InvalidParameter(format!(
            "likelihood games need a state-shaped lens, found domain {}",
            l.dom_fwd()
        )));
    }
    let lens = l.lens().clone();
    Ok(Arc::new(move |ctx: &GameContext<W>| {
        let model = ctx.prior_marginal()?.pushforward(lens.forward())?;
        let fb = ctx.feedback(&lens)?;
        expect_over(&fb, |x| Ok(transform.apply(model.weight_at(x).to_f64())))
    }))
}

pub fn param_mle_game<W: Weight>(l: &ParamLens<W>, transform: Transform) -> Result<StatGame<W>> {
    Ok(StatGame::from_parts(
        l.lens().clone(),
        param_mle_fitness(l, transform)?,
    ))
}

/// `E_{y∼efb}[D(c'_π(y), c†_π(y))]`: how far the lens's update is from the
/// exact posterior at the observations the context produces.
pub fn bayes_inference_fitness<W: Weight>(
    lens: &BayesianLens<W>,
    divergence: Divergence,
) -> Fitness<W> {
    let lens = lens.clone();
    Arc::new(move |ctx: &GameContext<W>| {
        let pi = ctx.prior_marginal()?;
        let fb = ctx.feedback(&lens)?;
        let q = lens.update(&pi)?;
        let exact = invert(lens.forward(), &pi)?;
        expect_over(&fb, |y| {
            divergence.eval(&q.row_dist(y)?, &exact.posterior_at(y)?)
        })
    })
}

pub fn bayes_inference_game<W: Weight>(
    lens: &BayesianLens<W>,
    divergence: Divergence,
) -> StatGame<W> {
    StatGame::from_parts(lens.clone(), bayes_inference_fitness(lens, divergence))
}

/// `E_{y∼efb}[F_D(c'_π(y), c, π, y)]`.
pub fn autoencoder_fitness<W: Weight>(
    lens: &BayesianLens<W>,
    divergence: Divergence,
) -> Fitness<W> {
    let lens = lens.clone();
    Arc::new(move |ctx: &GameContext<W>| {
        let pi = ctx.prior_marginal()?;
        let fb = ctx.feedback(&lens)?;
        let q = lens.update(&pi)?;
        expect_over(&fb, |y| {
            free_energy(&q.row_dist(y)?, lens.forward(), &pi, y, divergence)
        })
    })
}

pub fn autoencoder_game<W: Weight>(lens: &BayesianLens<W>, divergence: Divergence) -> StatGame<W> {
    StatGame::from_parts(lens.clone(), autoencoder_fitness(lens, divergence))
}

/// Parameterized autoencoder for `l : (X,X) → (Y,Y)` with parameters
/// `(Ω, Θ)`: the free energy of the `X`-marginal of the update against
/// `c|π_Ω = c∘(π_Ω ⊗ id_X)` and the prior's `X`-marginal.
pub fn param_autoencoder_fitness<W: Weight>(
    l: &ParamLens<W>,
    divergence: Divergence,
) -> Fitness<W> {
    let lens = l.lens().clone();
    let omega = l.param_fwd().clone();
    let x = l.dom_fwd().clone();
    let drop_theta = Kernel::discard(l.param_bwd()).tensor(&Kernel::identity(l.cod_bwd()));
    Arc::new(move |ctx: &GameContext<W>| {
        let joint = ctx.prior_marginal()?;
        let pi_omega = joint.marginal(&omega, Side::Left)?;
        let pi_x = joint.marginal(&x, Side::Right)?;
        let given = pi_omega
            .as_kernel()
            .tensor(&Kernel::identity(&x))
            .then(lens.forward())?;
        let q = lens.update(&joint)?.then(&drop_theta)?;
        let fb = ctx.feedback(&lens)?;
        expect_over(&fb, |y| {
            free_energy(&q.row_dist(y)?, &given, &pi_x, y, divergence)
        })
    })
}

pub fn param_autoencoder_game<W: Weight>(l: &ParamLens<W>, divergence: Divergence) -> StatGame<W> {
    StatGame::from_parts(l.lens().clone(), param_autoencoder_fitness(l, divergence))
}

/// A loss `l : Y⊗X → [0, ∞]`. Unlike an [`Effect`] it may take the value
/// `+∞`, which `−ln p_c` does wherever `c(y|x) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loss {
    obs: FiniteSpace,
    latent: FiniteSpace,
    values: Vec<f64>,
}

impl Loss {
    /// `values` indexed by `(y, x)` lexicographically.
    pub fn new(obs: FiniteSpace, latent: FiniteSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != obs.len() * latent.len() {
            return Err(Error::InvalidParameter(format!(
                "{} loss values for {}⊗{}",
                values.len(),
                obs,
                latent
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "loss values must lie in [0, ∞]".into(),
            ));
        }
        Ok(Loss {
            obs,
            latent,
            values,
        })
    }

    pub fn from_effect<W: Weight>(effect: &Effect<W>, latent: &FiniteSpace) -> Result<Self> {
        let obs = effect
            .space()
            .strip_suffix(latent)
            .ok_or_else(|| Error::NotAProductSpace {
                space: effect.space().label(),
                factor: latent.label(),
            })?;
        Self::new(
            obs,
            latent.clone(),
            effect.values().iter().map(W::to_f64).collect(),
        )
    }

    /// `l(y, x) = −ln p_c(y|x)`.
    pub fn neg_log_density<W: Weight>(c: &Kernel<W>) -> Result<Self> {
        let (nx, ny) = (c.dom().len(), c.cod().len());
        let mut values = vec![0.0; nx * ny];
        for x in 0..nx {
            for (y, w) in c.row(x)?.iter().enumerate() {
                values[y * nx + x] = -crate::inversion::ln_weight(w);
            }
        }
        Self::new(c.cod().clone(), c.dom().clone(), values)
    }

    /// `l(y, x) = (u(y) − v(x))²` for numeric labels `u` and `v`.
    pub fn squared_error(
        obs: FiniteSpace,
        latent: FiniteSpace,
        obs_values: &[f64],
        latent_values: &[f64],
    ) -> Result<Self> {
        if obs_values.len() != obs.len() || latent_values.len() != latent.len() {
            return Err(Error::InvalidParameter(
                "one numeric value per outcome".into(),
            ));
        }
        let values = obs_values
            .iter()
            .flat_map(|u| latent_values.iter().map(move |v| (u - v) * (u - v)))
            .collect();
        Self::new(obs, latent, values)
    }

    pub fn obs(&self) -> &FiniteSpace {
        &self.obs
    }

    pub fn latent(&self) -> &FiniteSpace {
        &self.latent
    }

    pub fn value(&self, y: usize, x: usize) -> f64 {
        self.values[y * self.latent.len() + x]
    }
}

/// `E_{y∼efb}[E_{x∼c'_π(y)}[l(y,x)] + D(c'_π(y), π)]`.
pub fn generalized_bayes_fitness<W: Weight>(
    lens: &BayesianLens<W>,
    loss: Loss,
    divergence: Divergence,
) -> Result<Fitness<W>> {
    loss.obs.expect_eq(lens.bwd_dom())?;
    loss.latent.expect_eq(lens.bwd_cod())?;
    let lens = lens.clone();
    Ok(Arc::new(move |ctx: &GameContext<W>| {
        let pi = ctx.prior_marginal()?;
        let fb = ctx.feedback(&lens)?;
        let q = lens.update(&pi)?;
        expect_over(&fb, |y| {
            let qy = q.row_dist(y)?;
            let mut expected = 0.0;
            for x in qy.support() {
                expected += qy.weight_at(x).to_f64() * loss.value(y, x);
            }
            Ok(expected + divergence.eval(&qy, &pi)?)
        })
    }))
}

pub fn generalized_bayes_game<W: Weight>(
    lens: &BayesianLens<W>,
    loss: Loss,
    divergence: Divergence,
) -> Result<StatGame<W>> {
    Ok(StatGame::from_parts(
        lens.clone(),
        generalized_bayes_fitness(lens, loss, divergence)?,
    ))
}
