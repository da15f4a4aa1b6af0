//! Random games and contexts shared by the integration tests.
#![allow(dead_code)]

use statgame::games::{
    autoencoder_game, bayes_inference_game, generalized_bayes_game, Continuation, Divergence,
    GameContext, Loss, StatGame,
};
use statgame::lens::{exact_lens, BayesianLens};
use statgame::markov::FiniteSpace;
use statgame::random::InstanceRng;
use statgame::weight::Weight;

/// A lens `(X,X) ↬ (Y,Y)` with a strictly positive forward channel, either
/// exact or with a fixed positive backward kernel.
pub fn lens<W: Weight>(g: &mut InstanceRng, x: &FiniteSpace, y: &FiniteSpace) -> BayesianLens<W> {
    let c = g.kernel(x, y, true);
    if g.coin() {
        exact_lens(&c)
    } else {
        BayesianLens::with_constant_backward(c, g.kernel(y, x, true))
    }
}

/// One of the inference games on a random lens.
pub fn game<W: Weight>(g: &mut InstanceRng, x: &FiniteSpace, y: &FiniteSpace) -> StatGame<W> {
    let l = lens(g, x, y);
    match g.size(0, 4) {
        0 => bayes_inference_game(&l, Divergence::Kl),
        1 => bayes_inference_game(&l, Divergence::TotalVariation),
        2 => autoencoder_game(&l, Divergence::Kl),
        3 => autoencoder_game(&l, Divergence::TotalVariation),
        _ => {
            let loss = Loss::neg_log_density(l.forward()).unwrap();
            generalized_bayes_game(&l, loss, Divergence::Kl).unwrap()
        }
    }
}

/// A closed context on `(X, Y)`: positive prior and a positive kernel
/// continuation `Y ⇸ Y`.
pub fn context<W: Weight>(g: &mut InstanceRng, x: &FiniteSpace, y: &FiniteSpace) -> GameContext<W> {
    GameContext::simple(g.dist(x, true), Continuation::kernel(g.kernel(y, y, true)))
}

/// Spaces `S0_, S1_, …` with sizes in `2..=max`.
pub fn spaces(g: &mut InstanceRng, n: usize, max: usize) -> Vec<FiniteSpace> {
    (0..n).map(|i| g.space(&format!("S{i}_"), 2, max)).collect()
}

/// The contexts a sequential composite `f ; h` hands its factors, written out
/// directly for a context without residuals: `f` sees the prior and the
/// continuation `ρ ↦ h†_ρ ∘ k(h∘ρ)`, `h` sees `f∘π` and `k` itself.
pub fn hand_expanded<W: Weight>(
    ctx: &GameContext<W>,
    f: &BayesianLens<W>,
    h: &BayesianLens<W>,
) -> (GameContext<W>, GameContext<W>) {
    let prior = ctx.prior().clone();
    let k = ctx.continuation().clone();
    let h2 = h.clone();
    let pulled = Continuation::new(h.fwd_dom().clone(), h.bwd_cod().clone(), move |rho| {
        let observed = k.apply(&rho.pushforward(h2.forward())?)?;
        observed.pushforward(&h2.update(rho)?)
    });
    let first = GameContext::simple(prior.clone(), pulled);
    let second = GameContext::simple(
        prior.pushforward(f.forward()).unwrap(),
        ctx.continuation().clone(),
    );
    (first, second)
}
