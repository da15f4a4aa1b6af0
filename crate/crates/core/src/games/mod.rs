//! Statistical games: lenses paired with fitness functions on their
//! contexts, composed sequentially through 1-local contexts and in parallel
//! through 2-local ones.

mod context;
mod fitness;
mod free_energy;
mod game;

pub use context::{
    feedback, local_ctx_left, local_ctx_right, local_ctx_seq_first, local_ctx_seq_second,
    Continuation, ContinuationFn, GameContext,
};
pub use fitness::{
    autoencoder_fitness, autoencoder_game, bayes_inference_fitness, bayes_inference_game,
    expect_over, generalized_bayes_fitness, generalized_bayes_game, mle_fitness, mle_game,
    param_autoencoder_fitness, param_autoencoder_game, param_mle_fitness, param_mle_game, Loss,
    Transform,
};
pub use free_energy::{
    check_eubo, expected_surprisal, free_energy, helmholtz_decomposition, Divergence, EuboReport,
    Helmholtz,
};
pub use game::{game_compose, game_tensor, Fitness, FitnessValue, StatGame};
