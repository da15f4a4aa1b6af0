use super::{finite_difference, minimize, GradientMode, OptimConfig, OptimResult, Sense};
use crate::error::{Error, Result};
use crate::games::{autoencoder_game, Divergence, GameContext, StatGame};
use crate::inversion::ln_weight;
use crate::lens::BayesianLens;
use crate::markov::{Dist, FiniteSpace, Kernel};

/// Logit floor used when seeding a family from a kernel with zero entries.
const LOGIT_FLOOR: f64 = -50.0;

/// A kernel `obs ⇸ space` parameterized by one softmax logit row per
/// observation. With `obs = I` it is a single state on `space`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexFamily {
    obs: FiniteSpace,
    space: FiniteSpace,
    logits: Vec<f64>,
}

impl SimplexFamily {
    pub fn new(obs: FiniteSpace, space: FiniteSpace, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != obs.len() * space.len() {
            return Err(Error::InvalidParameter(format!(
                "{} logits for {} rows of {} outcomes",
                logits.len(),
                obs.len(),
                space.len()
            )));
        }
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter("logits must be finite".into()));
        }
        Ok(SimplexFamily { obs, space, logits })
    }

    /// All-zero logits: every row uniform.
    pub fn uniform(obs: &FiniteSpace, space: &FiniteSpace) -> Self {
        SimplexFamily {
            obs: obs.clone(),
            space: space.clone(),
            logits: vec![0.0; obs.len() * space.len()],
        }
    }

    /// Logits `ln k(x|y)`, with zero probabilities floored.
    pub fn from_kernel(k: &Kernel<f64>) -> Result<Self> {
        let mut logits = Vec::with_capacity(k.dom().len() * k.cod().len());
        for y in 0..k.dom().len() {
            logits.extend(k.row(y)?.iter().map(|p| ln_weight(p).max(LOGIT_FLOOR)));
        }
        Self::new(k.dom().clone(), k.cod().clone(), logits)
    }

    pub fn obs(&self) -> &FiniteSpace {
        &self.obs
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn with_logits(&self, logits: &[f64]) -> Result<Self> {
        Self::new(self.obs.clone(), self.space.clone(), logits.to_vec())
    }

    /// Softmax of row `y`.
    pub fn row(&self, y: usize) -> Vec<f64> {
        let n = self.space.len();
        softmax(&self.logits[y * n..(y + 1) * n])
    }

    pub fn kernel(&self) -> Result<Kernel<f64>> {
        let rows = (0..self.obs.len()).map(|y| self.row(y)).collect();
        Kernel::new(self.obs.clone(), self.space.clone(), rows)
    }

    /// The state of a family over `I`.
    pub fn state(&self) -> Result<Dist<f64>> {
        if !self.obs.is_unit() {
            return Err(Error::InvalidParameter(format!(
                "a family indexed by {} is not a single state",
                self.obs
            )));
        }
        Dist::new(self.space.clone(), self.row(0))
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Best family found and the run that found it.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyResult {
    pub family: SimplexFamily,
    pub run: OptimResult,
}

/// Optimizes a game's fitness at a fixed context over a simplex family, with
/// central finite-difference gradients of step `h`. `build` turns each
/// candidate family into the game to score.
pub fn optimize_fitness(
    build: impl Fn(&SimplexFamily) -> Result<StatGame<f64>>,
    ctx: &GameContext<f64>,
    init: &SimplexFamily,
    sense: Sense,
    h: f64,
    config: &OptimConfig,
) -> Result<FamilyResult> {
    let objective = |z: &[f64]| build(&init.with_logits(z)?)?.evaluate(ctx);
    let run = minimize(
        objective,
        |z| finite_difference(objective, z, h),
        init.logits.clone(),
        sense,
        config,
    )?;
    Ok(FamilyResult {
        family: init.with_logits(&run.params)?,
        run,
    })
}

/// The KL autoencoder fitness of the lens `(c, family)`, whose backward
/// channel is the family's kernel at every prior.
pub fn autoencoder_objective(
    c: &Kernel<f64>,
    ctx: &GameContext<f64>,
    family: &SimplexFamily,
) -> Result<f64> {
    autoencoder_game(&candidate(c, family)?, Divergence::Kl).evaluate(ctx)
}

fn candidate(c: &Kernel<f64>, family: &SimplexFamily) -> Result<BayesianLens<f64>> {
    Ok(BayesianLens::with_constant_backward(
        c.clone(),
        family.kernel()?,
    ))
}

/// Exact gradient of [`autoencoder_objective`] in the logits:
/// `∂F/∂z_{y,j} = e(y)·q_j·(g_j − Σ_x q_x g_x)` with
/// `g_x = ln q_x − ln(c(y|x)·π(x))` and `e` the feedback. Every `c(y|x)·π(x)`
/// on the feedback's support must be positive.
pub fn autoencoder_gradient(
    c: &Kernel<f64>,
    ctx: &GameContext<f64>,
    family: &SimplexFamily,
) -> Result<Vec<f64>> {
    let pi = ctx.prior_marginal()?;
    let fb = ctx.feedback(&candidate(c, family)?)?;
    let nx = family.space.len();
    let mut grad = vec![0.0; family.logits.len()];
    for y in fb.support() {
        let e = *fb.weight_at(y);
        let q = family.row(y);
        let g: Vec<f64> = (0..nx)
            .map(|x| Ok(q[x].ln() - (c.row(x)?[y] * pi.weight_at(x)).ln()))
            .collect::<Result<_>>()?;
        let mean: f64 = q.iter().zip(&g).map(|(a, b)| a * b).sum();
        for j in 0..nx {
            grad[y * nx + j] = e * q[j] * (g[j] - mean);
        }
    }
    Ok(grad)
}

/// Fits the backward channel of a KL autoencoder game with fixed forward
/// channel `c`.
pub fn optimize_autoencoder(
    c: &Kernel<f64>,
    ctx: &GameContext<f64>,
    init: &SimplexFamily,
    mode: GradientMode,
    config: &OptimConfig,
) -> Result<FamilyResult> {
    let objective = |z: &[f64]| autoencoder_objective(c, ctx, &init.with_logits(z)?);
    let run = match mode {
        GradientMode::Analytic => minimize(
            objective,
            |z| autoencoder_gradient(c, ctx, &init.with_logits(z)?),
            init.logits.clone(),
            Sense::Minimize,
            config,
        )?,
        GradientMode::FiniteDifference(h) => minimize(
            objective,
            |z| finite_difference(objective, z, h),
            init.logits.clone(),
            Sense::Minimize,
            config,
        )?,
    };
    Ok(FamilyResult {
        family: init.with_logits(&run.params)?,
        run,
    })
}
