//! Seeded scenario generation.
//!
//! Instance `i` of a scenario with seed `s` is drawn from
//! `InstanceRng::for_instance(s, i)`: ChaCha8 seeded with `s` on stream `i`.
//! Probability weights are multiples of `1/64` renormalized by their total.
//! Continuous parameters of `vae-1d` instances are uniform in
//! `[−2, 2]` (prior mean, slope, intercept), `[0.1, 4]` (prior and noise
//! variances) and `[−3, 3]` (the observation).

use serde_json::{json, Value};

use statgame::inversion::invert;
use statgame::markov::serial::{dist_to_json, kernel_to_json, space_to_json};
use statgame::markov::{Dist, FiniteSpace, Kernel};
use statgame::random::InstanceRng;
use statgame::weight::{Rational, Weight};

use crate::scenario::{
    ComposeInstance, FreeEnergyInstance, GaussianSpec, Kind, LinearGaussianSpec, OptimizerSpec,
    VaeSpec,
};

pub const MEAN_RANGE: (f64, f64) = (-2.0, 2.0);
pub const VARIANCE_RANGE: (f64, f64) = (0.1, 4.0);
pub const OBSERVATION_RANGE: (f64, f64) = (-3.0, 3.0);

fn space(label: &str, n: usize) -> FiniteSpace {
    FiniteSpace::range(label, n).expect("sizes are validated to be positive")
}

/// Sizes for one random instance: each drawn from `1..=max`.
pub fn draw_sizes(g: &mut InstanceRng, max: &[usize]) -> Vec<usize> {
    max.iter().map(|&m| g.size(1, m)).collect()
}

pub fn draw_compose<W: Weight>(g: &mut InstanceRng, sizes: &[usize]) -> ComposeInstance<W> {
    let (x, y, z) = (
        space("X", sizes[0]),
        space("Y", sizes[1]),
        space("Z", sizes[2]),
    );
    ComposeInstance {
        c: g.kernel(&x, &y, false),
        d: g.kernel(&y, &z, false),
        prior: g.dist(&x, false),
    }
}

/// A positive model with a random observation. One draw in four uses the
/// exact posterior as `q`, so the equality case of the bound is exercised.
pub fn draw_free_energy<W: Weight>(g: &mut InstanceRng, sizes: &[usize]) -> FreeEnergyInstance<W> {
    let (x, y) = (space("X", sizes[0]), space("Y", sizes[1]));
    let c: Kernel<W> = g.kernel(&x, &y, true);
    let prior: Dist<W> = g.dist(&x, true);
    let obs = g.size(0, y.len() - 1);
    let q = if g.size(0, 3) == 0 {
        invert(&c, &prior)
            .and_then(|inv| inv.posterior_at(obs))
            .expect("positive models have full evidence")
    } else {
        g.dist(&x, false)
    };
    FreeEnergyInstance {
        q,
        c,
        prior,
        y: obs,
    }
}

/// The raw parts of a game instance: a positive forward channel, either the
/// exact inverse or a fixed positive backward kernel, and a positive prior.
/// The context feeds the prediction straight back.
pub struct GameParts<W> {
    pub forward: Kernel<W>,
    pub backward: Option<Kernel<W>>,
    pub prior: Dist<W>,
}

impl<W: Weight> GameParts<W> {
    pub fn lens_json(&self) -> Value {
        match &self.backward {
            None => json!({"tag": "exact", "forward": kernel_to_json(&self.forward)}),
            Some(b) => json!({
                "tag": "fixed",
                "forward": kernel_to_json(&self.forward),
                "backward": kernel_to_json(b),
            }),
        }
    }

    pub fn context_json(&self) -> Value {
        json!({
            "residual": [],
            "prior": dist_to_json(&self.prior),
            "continuation": {"name": "identity"},
        })
    }
}

pub fn draw_game<W: Weight>(
    g: &mut InstanceRng,
    sizes: &[usize],
    exact: Option<bool>,
) -> GameParts<W> {
    let (x, y) = (space("X", sizes[0]), space("Y", sizes[1]));
    let forward = g.kernel(&x, &y, true);
    let exact = exact.unwrap_or_else(|| g.coin());
    let backward = (!exact).then(|| g.kernel(&y, &x, true));
    GameParts {
        forward,
        backward,
        prior: g.dist(&x, true),
    }
}

pub fn draw_vae(g: &mut InstanceRng) -> VaeSpec {
    let mut real = |(lo, hi): (f64, f64)| g.real(lo, hi);
    VaeSpec {
        prior: GaussianSpec {
            mean: real(MEAN_RANGE),
            variance: real(VARIANCE_RANGE),
        },
        kernel: LinearGaussianSpec {
            slope: real(MEAN_RANGE),
            intercept: real(MEAN_RANGE),
            noise_variance: real(VARIANCE_RANGE),
        },
        y: real(OBSERVATION_RANGE),
        init: None,
    }
}

/// Size parameters of `statgame generate`.
#[derive(Debug, Clone, Default)]
pub struct SizeParams {
    pub spaces: Option<Vec<usize>>,
    pub instances: Option<usize>,
    pub heads: Option<u64>,
    pub flips: Option<u64>,
}

/// How many spaces an instance of `kind` involves, if any.
pub fn arity(kind: Kind) -> Option<usize> {
    match kind {
        Kind::ComposeCheck => Some(3),
        Kind::EuboCheck | Kind::HelmholtzCheck | Kind::GenbayesCoincidence | Kind::GamePipeline => {
            Some(2)
        }
        Kind::CoinMle | Kind::Vae1d => None,
    }
}

const DEFAULT_INSTANCES: usize = 10;
const DEFAULT_SIZE: usize = 3;

fn check_size_params(kind: Kind, p: &SizeParams) -> Result<(), String> {
    match (arity(kind), &p.spaces) {
        (None, Some(_)) => return Err(format!("--spaces does not apply to {kind}")),
        (Some(n), Some(s)) if s.len() != n => {
            return Err(format!("{kind} needs {n} space sizes, got {}", s.len()))
        }
        (_, Some(s)) if s.contains(&0) => return Err("space sizes must be positive".into()),
        _ => {}
    }
    let coin = kind == Kind::CoinMle;
    if !coin && (p.heads.is_some() || p.flips.is_some()) {
        return Err(format!(
            "--heads and --flips only apply to coin-mle, not {kind}"
        ));
    }
    if p.instances.is_some() && matches!(kind, Kind::CoinMle | Kind::GamePipeline) {
        return Err(format!(
            "{kind} scenarios hold a single game; drop --instances"
        ));
    }
    Ok(())
}

/// A deterministic scenario document for `kind`.
///
/// Generated games run the optimizer longer and to a finer gain than the
/// defaults: posterior rows with little evidence get proportionally small
/// gradients, and the default stopping rule leaves them short of a `1e-4`
/// total-variation match on some draws.
pub fn generate(kind: Kind, seed: u64, p: &SizeParams) -> Result<Value, String> {
    check_size_params(kind, p)?;
    let sizes = p
        .spaces
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_SIZE; arity(kind).unwrap_or(0)]);
    let n = p.instances.unwrap_or(DEFAULT_INSTANCES);
    let each = |f: &dyn Fn(&mut InstanceRng) -> Value| -> Vec<Value> {
        (0..n)
            .map(|i| f(&mut InstanceRng::for_instance(seed, i as u64)))
            .collect()
    };
    let payload = match kind {
        Kind::ComposeCheck => json!({"instances": each(&|g| {
            let inst = draw_compose::<Rational>(g, &sizes);
            json!({
                "c": kernel_to_json(&inst.c),
                "d": kernel_to_json(&inst.d),
                "prior": dist_to_json(&inst.prior),
            })
        })}),
        Kind::EuboCheck | Kind::HelmholtzCheck => json!({"instances": each(&|g| {
            let inst = draw_free_energy::<Rational>(g, &sizes);
            json!({
                "q": dist_to_json(&inst.q),
                "c": kernel_to_json(&inst.c),
                "prior": dist_to_json(&inst.prior),
                "y": inst.c.cod().outcome_label(inst.y),
            })
        })}),
        Kind::GenbayesCoincidence => json!({"instances": each(&|g| {
            let parts = draw_game::<Rational>(g, &sizes, None);
            json!({"lens": parts.lens_json(), "context": parts.context_json()})
        })}),
        Kind::GamePipeline => {
            let parts =
                draw_game::<Rational>(&mut InstanceRng::for_instance(seed, 0), &sizes, Some(true));
            json!({
                "lens": parts.lens_json(),
                "context": parts.context_json(),
                "fitness": {"kind": "autoencoder", "divergence": "kl"},
                "optimizer": OptimizerSpec {
                    max_iters: 50_000,
                    tol: 1e-14,
                    ..OptimizerSpec::default()
                },
            })
        }
        Kind::CoinMle => coin_payload(p.heads.unwrap_or(7), p.flips.unwrap_or(10))?,
        Kind::Vae1d => json!({
            "instances": each(&|g| serde_json::to_value(draw_vae(g)).expect("plain numbers")),
        }),
    };
    Ok(json!({
        "id": format!("{kind}-{seed}"),
        "kind": kind,
        "seed": seed,
        "mode": if kind == Kind::Vae1d || kind == Kind::CoinMle { "float" } else { "rational" },
        "payload": payload,
    }))
}

/// `heads` out of `flips` replayed as the empirical distribution on a coin.
fn coin_payload(heads: u64, flips: u64) -> Result<Value, String> {
    if flips == 0 || heads > flips {
        return Err(format!(
            "need 0 ≤ heads ≤ flips and flips > 0, got {heads}/{flips}"
        ));
    }
    let coin = FiniteSpace::new("Coin", ["H", "T"]).expect("two distinct outcomes");
    Ok(json!({
        "outcomes": space_to_json(&coin),
        "context": {
            "prior": dist_to_json(&Dist::<Rational>::unit()),
            "continuation": {
                "name": "empirical-replay",
                "args": {"counts": {"H": heads, "T": flips - heads}},
            },
        },
        "optimizer": OptimizerSpec::default(),
        "tolerance": 1e-3,
    }))
}
