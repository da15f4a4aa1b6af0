use std::fmt;
use std::sync::Arc;

use super::context::{
    local_ctx_left, local_ctx_right, local_ctx_seq_first, local_ctx_seq_second, GameContext,
};
use crate::error::Result;
use crate::lens::BayesianLens;
use crate::markov::FiniteSpace;
use crate::weight::Weight;

/// Fitness values live in `ℝ ∪ {±∞}` under addition.
pub type FitnessValue = f64;

pub type Fitness<W> = Arc<dyn Fn(&GameContext<W>) -> Result<FitnessValue> + Send + Sync>;

/// A lens paired with a fitness function on its contexts.
#[derive(Clone)]
pub struct StatGame<W> {
    lens: BayesianLens<W>,
    fitness: Fitness<W>,
}

impl<W: Weight> StatGame<W> {
    pub fn new(
        lens: BayesianLens<W>,
        fitness: impl Fn(&GameContext<W>) -> Result<FitnessValue> + Send + Sync + 'static,
    ) -> Self {
        StatGame {
            lens,
            fitness: Arc::new(fitness),
        }
    }

    pub fn from_parts(lens: BayesianLens<W>, fitness: Fitness<W>) -> Self {
        StatGame { lens, fitness }
    }

    /// `(id, 0)`.
    pub fn identity(x: &FiniteSpace, a: &FiniteSpace) -> Self {
        Self::new(BayesianLens::identity(x, a), |_| Ok(0.0))
    }

    /// The unit game on `(I, I)`.
    pub fn unit() -> Self {
        Self::new(BayesianLens::unit(), |_| Ok(0.0))
    }

    pub fn lens(&self) -> &BayesianLens<W> {
        &self.lens
    }

    pub fn fitness(&self) -> &Fitness<W> {
        &self.fitness
    }

    /// Fitness at a context, after checking it fits the lens.
    pub fn evaluate(&self, ctx: &GameContext<W>) -> Result<FitnessValue> {
        ctx.check_lens(&self.lens)?;
        (self.fitness)(ctx)
    }

    /// `self` then `next`: the composite fitness scores `self` at the
    /// pulled-back context and `next` at the pushed-forward one.
    pub fn then(&self, next: &StatGame<W>) -> Result<StatGame<W>> {
        let lens = self.lens.then(&next.lens)?;
        let (f, g) = (self.clone(), next.clone());
        Ok(Self::new(lens, move |ctx| {
            let first = f.evaluate(&local_ctx_seq_first(ctx, &g.lens)?)?;
            let second = g.evaluate(&local_ctx_seq_second(ctx, &f.lens)?)?;
            Ok(first + second)
        }))
    }

    /// Parallel product: each factor is scored at its 2-local context.
    pub fn tensor(&self, other: &StatGame<W>) -> StatGame<W> {
        let lens = self.lens.tensor(&other.lens);
        let (f, g) = (self.clone(), other.clone());
        Self::new(lens, move |ctx| {
            let left = f.evaluate(&local_ctx_left(ctx, &g.lens)?)?;
            let right = g.evaluate(&local_ctx_right(ctx, &f.lens)?)?;
            Ok(left + right)
        })
    }
}

impl<W: Weight> fmt::Debug for StatGame<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StatGame({:?})", self.lens)
    }
}

pub fn game_compose<W: Weight>(f: &StatGame<W>, g: &StatGame<W>) -> Result<StatGame<W>> {
    f.then(g)
}

pub fn game_tensor<W: Weight>(f: &StatGame<W>, g: &StatGame<W>) -> StatGame<W> {
    f.tensor(g)
}
