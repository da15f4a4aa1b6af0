use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lens::BayesianLens;
use crate::markov::{Dist, FiniteSpace, Kernel, Side};
use crate::weight::Weight;

pub type ContinuationFn<W> = Arc<dyn Fn(&Dist<W>) -> Result<Dist<W>> + Send + Sync>;

/// The environment's response: a pure map from states on `input` to states
/// on `output`. In a context with residual `(M, N)` for a lens with forward
/// codomain `Y` and backward domain `B`, `input = M⊗Y` and `output = N⊗B`.
#[derive(Clone)]
pub struct Continuation<W> {
    input: FiniteSpace,
    output: FiniteSpace,
    f: ContinuationFn<W>,
}

impl<W: Weight> Continuation<W> {
    pub fn new(
        input: FiniteSpace,
        output: FiniteSpace,
        f: impl Fn(&Dist<W>) -> Result<Dist<W>> + Send + Sync + 'static,
    ) -> Self {
        Continuation {
            input,
            output,
            f: Arc::new(f),
        }
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        Self::new(space.clone(), space.clone(), |d| Ok(d.clone()))
    }

    /// Ignores the prediction.
    pub fn constant(input: &FiniteSpace, state: Dist<W>) -> Self {
        Self::new(input.clone(), state.space().clone(), move |_| {
            Ok(state.clone())
        })
    }

    /// Postcomposition with a kernel: `ρ ↦ k∘ρ`.
    pub fn kernel(k: Kernel<W>) -> Self {
        Self::new(k.dom().clone(), k.cod().clone(), move |d| d.pushforward(&k))
    }

    /// `id_M ⊗ σ` for an outcome permutation `σ` of `Y`, sending outcome `i`
    /// to `perm[i]`.
    pub fn relabel(residual: &FiniteSpace, y: &FiniteSpace, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; y.len()];
        if perm.len() != y.len()
            || perm
                .iter()
                .any(|&p| p >= y.len() || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidParameter(format!(
                "{perm:?} is not a permutation of the {} outcomes of {y}",
                y.len()
            )));
        }
        let perm = perm.to_vec();
        let sigma = Kernel::deterministic(y, y, move |i| perm[i]);
        Ok(Self::kernel(Kernel::identity(residual).tensor(&sigma)))
    }

    /// Replays observed counts as their empirical distribution, whatever the
    /// prediction.
    pub fn empirical(input: &FiniteSpace, obs: &FiniteSpace, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if counts.len() != obs.len() || total == 0 {
            return Err(Error::InvalidParameter(format!(
                "need one count per outcome of {obs} and at least one observation"
            )));
        }
        let weights = counts.iter().map(|&c| W::from_ratio(c, total)).collect();
        Ok(Self::constant(input, Dist::new(obs.clone(), weights)?))
    }

    /// Drops the residual and returns the predicted `Y`-marginal as the
    /// observation, so the feedback is the model evidence.
    pub fn resample_from_evidence(residual: &FiniteSpace, y: &FiniteSpace) -> Self {
        let y2 = y.clone();
        Self::new(residual.tensor(y), y.clone(), move |rho| {
            rho.marginal(&y2, Side::Right)
        })
    }

    pub fn input(&self) -> &FiniteSpace {
        &self.input
    }

    pub fn output(&self) -> &FiniteSpace {
        &self.output
    }

    pub fn apply(&self, state: &Dist<W>) -> Result<Dist<W>> {
        self.input.expect_eq(state.space())?;
        let out = (self.f)(state)?;
        self.output.expect_eq(out.space())?;
        Ok(out)
    }

    /// `ρ ↦ after(self(before(ρ)))`, spaces taken from the arguments.
    fn wrap(&self, input: FiniteSpace, before: Kernel<W>, after: Kernel<W>) -> Continuation<W> {
        let inner = self.clone();
        let output = after.cod().clone();
        Self::new(input, output, move |rho| {
            inner.apply(&rho.pushforward(&before)?)?.pushforward(&after)
        })
    }
}

impl<W> fmt::Debug for Continuation<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Continuation({} → {})", self.input, self.output)
    }
}

/// A chosen representative of a context: residual `(M, N)`, a prior on
/// `M⊗X` and a continuation `M⊗Y → N⊗B`.
#[derive(Clone)]
pub struct GameContext<W> {
    residual_fwd: FiniteSpace,
    residual_bwd: FiniteSpace,
    prior: Dist<W>,
    continuation: Continuation<W>,
    // X, Y and B, recovered by stripping the residual.
    dom: FiniteSpace,
    prediction: FiniteSpace,
    observation: FiniteSpace,
}

impl<W: Weight> GameContext<W> {
    pub fn new(
        residual_fwd: FiniteSpace,
        residual_bwd: FiniteSpace,
        prior: Dist<W>,
        continuation: Continuation<W>,
    ) -> Result<Self> {
        let strip = |space: &FiniteSpace, residual: &FiniteSpace| {
            space
                .strip_prefix(residual)
                .ok_or_else(|| Error::NotAProductSpace {
                    space: space.label(),
                    factor: residual.label(),
                })
        };
        let dom = strip(prior.space(), &residual_fwd)?;
        let prediction = strip(continuation.input(), &residual_fwd)?;
        let observation = strip(continuation.output(), &residual_bwd)?;
        Ok(GameContext {
            residual_fwd,
            residual_bwd,
            prior,
            continuation,
            dom,
            prediction,
            observation,
        })
    }

    /// A context with trivial residual `(I, I)`.
    pub fn simple(prior: Dist<W>, continuation: Continuation<W>) -> Self {
        let dom = prior.space().clone();
        let prediction = continuation.input().clone();
        let observation = continuation.output().clone();
        GameContext {
            residual_fwd: FiniteSpace::unit(),
            residual_bwd: FiniteSpace::unit(),
            prior,
            continuation,
            dom,
            prediction,
            observation,
        }
    }

    pub fn residual_fwd(&self) -> &FiniteSpace {
        &self.residual_fwd
    }

    pub fn residual_bwd(&self) -> &FiniteSpace {
        &self.residual_bwd
    }

    /// The prior on `M⊗X`.
    pub fn prior(&self) -> &Dist<W> {
        &self.prior
    }

    pub fn continuation(&self) -> &Continuation<W> {
        &self.continuation
    }

    /// `X`.
    pub fn dom(&self) -> &FiniteSpace {
        &self.dom
    }

    /// `Y`.
    pub fn prediction(&self) -> &FiniteSpace {
        &self.prediction
    }

    /// `B`.
    pub fn observation(&self) -> &FiniteSpace {
        &self.observation
    }

    /// The prior with the residual marginalized out.
    pub fn prior_marginal(&self) -> Result<Dist<W>> {
        self.prior.marginal(&self.dom, Side::Right)
    }

    pub fn check_lens(&self, lens: &BayesianLens<W>) -> Result<()> {
        self.dom.expect_eq(lens.fwd_dom())?;
        self.prediction.expect_eq(lens.fwd_cod())?;
        self.observation.expect_eq(lens.bwd_dom())
    }

    /// `(id_M ⊗ forward)∘prior` on `M⊗Y`.
    pub fn prediction_of(&self, lens: &BayesianLens<W>) -> Result<Dist<W>> {
        self.check_lens(lens)?;
        let widened = Kernel::identity(&self.residual_fwd).tensor(lens.forward());
        self.prior.pushforward(&widened)
    }

    /// The observation the environment returns to `lens`: the continuation
    /// applied to the prediction, marginalized onto `B`.
    pub fn feedback(&self, lens: &BayesianLens<W>) -> Result<Dist<W>> {
        let out = self.continuation.apply(&self.prediction_of(lens)?)?;
        out.marginal(&self.observation, Side::Right)
    }
}

impl<W: Weight> fmt::Debug for GameContext<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameContext")
            .field("residual", &(&self.residual_fwd, &self.residual_bwd))
            .field("prior", &self.prior)
            .field("continuation", &self.continuation)
            .finish()
    }
}

/// `feedback(π, lens, k)` with the context as the pair `(π, k)`.
pub fn feedback<W: Weight>(ctx: &GameContext<W>, lens: &BayesianLens<W>) -> Result<Dist<W>> {
    ctx.feedback(lens)
}

/// `g*`: the context for `f` induced by a context for `f ; g`. The prior is
/// kept; the continuation runs `g` forward, calls the outer continuation, then
/// pulls the observation back through `g`'s update at the predicted state.
pub fn local_ctx_seq_first<W: Weight>(
    ctx: &GameContext<W>,
    g: &BayesianLens<W>,
) -> Result<GameContext<W>> {
    ctx.prediction.expect_eq(g.fwd_cod())?;
    ctx.observation.expect_eq(g.bwd_dom())?;
    let (m, n) = (ctx.residual_fwd.clone(), ctx.residual_bwd.clone());
    let y = g.fwd_dom().clone();
    let outer = ctx.continuation.clone();
    let g = g.clone();
    let push = Kernel::identity(&m).tensor(g.forward());
    let id_n = Kernel::identity(&n);
    let input = m.tensor(&y);
    let output = n.tensor(g.bwd_cod());
    let continuation = Continuation::new(input, output, move |rho| {
        let update = g.update(&rho.marginal(&y, Side::Right)?)?;
        let out = outer.apply(&rho.pushforward(&push)?)?;
        out.pushforward(&id_n.tensor(&update))
    });
    GameContext::new(m, n, ctx.prior.clone(), continuation)
}

/// `f_*`: the context for `g` induced by a context for `f ; g`. The prior is
/// pushed through `f`; the continuation is kept.
pub fn local_ctx_seq_second<W: Weight>(
    ctx: &GameContext<W>,
    f: &BayesianLens<W>,
) -> Result<GameContext<W>> {
    ctx.dom.expect_eq(f.fwd_dom())?;
    let push = Kernel::identity(&ctx.residual_fwd).tensor(f.forward());
    GameContext::new(
        ctx.residual_fwd.clone(),
        ctx.residual_bwd.clone(),
        ctx.prior.pushforward(&push)?,
        ctx.continuation.clone(),
    )
}

/// Left 2-local context: the context for `f` obtained from a context for
/// `f ⊗ filler` by moving the filler's ports next to the residual, running
/// the filler forward on the prior, and absorbing `(Y', B')` into the
/// residual. The filler's backward channel is never consulted.
pub fn local_ctx_left<W: Weight>(
    ctx: &GameContext<W>,
    filler: &BayesianLens<W>,
) -> Result<GameContext<W>> {
    let split = |space: &FiniteSpace, right: &FiniteSpace| {
        space
            .strip_suffix(right)
            .ok_or_else(|| Error::NotAProductSpace {
                space: space.label(),
                factor: right.label(),
            })
    };
    let x = split(&ctx.dom, filler.fwd_dom())?;
    let y = split(&ctx.prediction, filler.fwd_cod())?;
    let b = split(&ctx.observation, filler.bwd_dom())?;
    let (m, n) = (&ctx.residual_fwd, &ctx.residual_bwd);
    let (x2, y2, b2) = (filler.fwd_dom(), filler.fwd_cod(), filler.bwd_dom());

    // M⊗X⊗X' → M⊗X'⊗X → M⊗Y'⊗X
    let to_front = move_last_forward(m.arity(), x.arity(), x2.arity());
    let prior = ctx.prior.permute(&to_front)?.pushforward(
        &Kernel::identity(m)
            .tensor(filler.forward())
            .tensor(&Kernel::identity(&x)),
    )?;

    // M⊗Y'⊗Y → M⊗Y⊗Y' → (k) → N⊗B⊗B' → N⊗B'⊗B
    let before = Kernel::permutation(
        &FiniteSpace::product([m, y2, &y]),
        &move_last_forward(m.arity(), y2.arity(), y.arity()),
    )?;
    let after = Kernel::permutation(
        &FiniteSpace::product([n, &b, b2]),
        &move_last_forward(n.arity(), b.arity(), b2.arity()),
    )?;
    let continuation = ctx.continuation.wrap(before.dom().clone(), before, after);
    GameContext::new(m.tensor(y2), n.tensor(b2), prior, continuation)
}

/// Right 2-local context: the context for `filler`'s partner on the right,
/// obtained by running `f` forward on the prior and absorbing `(Y, B)` into
/// the residual. No reordering is needed.
pub fn local_ctx_right<W: Weight>(
    ctx: &GameContext<W>,
    f: &BayesianLens<W>,
) -> Result<GameContext<W>> {
    let x2 = ctx
        .dom
        .strip_prefix(f.fwd_dom())
        .ok_or_else(|| Error::NotAProductSpace {
            space: ctx.dom.label(),
            factor: f.fwd_dom().label(),
        })?;
    let (m, n) = (&ctx.residual_fwd, &ctx.residual_bwd);
    let push = Kernel::identity(m)
        .tensor(f.forward())
        .tensor(&Kernel::identity(&x2));
    GameContext::new(
        m.tensor(f.fwd_cod()),
        n.tensor(f.bwd_dom()),
        ctx.prior.pushforward(&push)?,
        ctx.continuation.clone(),
    )
}

/// Atom permutation `P⊗L⊗R → P⊗R⊗L` given atom counts.
fn move_last_forward(p: usize, l: usize, r: usize) -> Vec<usize> {
    (0..p).chain(p + l..p + l + r).chain(p..p + l).collect()
}
