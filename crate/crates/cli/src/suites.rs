//! The verification suites behind each scenario kind.
//!
//! Decoding problems surface as [`ParseError`]s (exit code 2). Anything that
//! goes wrong while checking an instance that decoded fine is a failed check.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use statgame::games::{
    autoencoder_fitness, autoencoder_game, bayes_inference_fitness, bayes_inference_game,
    check_eubo, free_energy, generalized_bayes_fitness, generalized_bayes_game,
    helmholtz_decomposition, mle_game, Divergence, GameContext, Loss, StatGame,
};
use statgame::inversion::{invert, total_variation};
use statgame::lens::{buco_deviation, verify_buco, BayesianLens};
use statgame::markov::serial::{field, space_from_json, ParseError};
use statgame::markov::{Dist, FiniteSpace, Kernel};
use statgame::optim::{
    gaussian_elbo_optimize, gaussian_invert, optimize_autoencoder, optimize_fitness, FamilyResult,
    GradientMode, OptimResult, Sense, SimplexFamily,
};
use statgame::random::InstanceRng;
use statgame::weight::{Rational, Weight};
use statgame::Error;

use crate::generate::{draw_compose, draw_free_energy, draw_game, draw_sizes, draw_vae};
use crate::scenario::{
    compose_instance, context_from_json, counts_of, free_energy_instance, game_instance,
    lens_from_json, typed, Batch, CoinPayload, DivergenceName, FitnessKind, FitnessSpec,
    GamePayload, LossSpec, Mode, OptimizerSpec, Parsed, Ports, RandomBlock, Scenario, VaePayload,
    VaeSpec,
};

/// Default tolerance of float-mode identities.
const IDENTITY_TOL: f64 = 1e-12;
/// Central-difference step for fitness gradients.
const FD_STEP: f64 = 1e-5;
/// Largest space size drawn by a random block without `max_sizes`.
const DEFAULT_MAX_SIZE: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Fitness traces of the optimization runs, one per instance.
pub type Traces = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The arithmetic actually used; optimizing suites always run in float.
    pub mode: Mode,
    pub instances: usize,
    pub checks: Vec<Check>,
    pub max_deviation: f64,
    pub iterations: Option<usize>,
    pub final_fitness: Option<f64>,
    pub traces: Traces,
}

impl Outcome {
    fn checks_only(mode: Mode, instances: usize, checks: Vec<Check>, max_deviation: f64) -> Self {
        Outcome {
            mode,
            instances,
            checks,
            max_deviation,
            iterations: None,
            final_fitness: None,
            traces: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub instances: Option<usize>,
}

pub fn run(s: &Scenario, opts: &RunOptions) -> Parsed<Outcome> {
    use crate::scenario::Kind::*;
    let seed = opts.seed.unwrap_or(s.seed);
    let mode = opts.mode.unwrap_or(s.mode);
    let n = opts.instances;
    let p = &s.payload;
    match (s.kind, mode) {
        (ComposeCheck, Mode::Rational) => compose::<Rational>(p, seed, n, mode),
        (ComposeCheck, Mode::Float) => compose::<f64>(p, seed, n, mode),
        (EuboCheck, Mode::Rational) => eubo::<Rational>(p, seed, n, mode),
        (EuboCheck, Mode::Float) => eubo::<f64>(p, seed, n, mode),
        (HelmholtzCheck, Mode::Rational) => helmholtz::<Rational>(p, seed, n, mode),
        (HelmholtzCheck, Mode::Float) => helmholtz::<f64>(p, seed, n, mode),
        (GenbayesCoincidence, Mode::Rational) => genbayes::<Rational>(p, seed, n, mode),
        (GenbayesCoincidence, Mode::Float) => genbayes::<f64>(p, seed, n, mode),
        (CoinMle, _) => coin_mle(p),
        (Vae1d, _) => vae(p, seed, n),
        (GamePipeline, _) => game_pipeline(p, mode),
    }
}

fn payload_path(i: usize) -> String {
    format!("$.payload.instances[{i}]")
}

/// Explicit instances followed by the seeded random ones. A `--instances`
/// override replaces the random count, adding a random block if needed.
fn collect<T: Send>(
    explicit: &[Value],
    random: Option<&RandomBlock>,
    count: Option<usize>,
    seed: u64,
    arity: usize,
    parse: impl Fn(&Value, &str) -> Parsed<T>,
    draw: impl Fn(&mut InstanceRng, &[usize]) -> T + Sync,
) -> Parsed<Vec<T>> {
    let mut out = explicit
        .iter()
        .enumerate()
        .map(|(i, v)| parse(v, &payload_path(i)))
        .collect::<Parsed<Vec<T>>>()?;
    let max = match random.and_then(|r| r.max_sizes.clone()) {
        Some(m) if m.len() != arity || m.contains(&0) => {
            return Err(ParseError::new(
                "$.payload.random.max_sizes",
                format!("expected {arity} positive sizes"),
            ))
        }
        Some(m) => m,
        None => vec![DEFAULT_MAX_SIZE; arity],
    };
    let n = count.or(random.map(|r| r.count)).unwrap_or(0);
    let drawn: Vec<T> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = InstanceRng::for_instance(seed, i);
            let sizes = draw_sizes(&mut g, &max);
            draw(&mut g, &sizes)
        })
        .collect();
    out.extend(drawn);
    if out.is_empty() {
        return Err(ParseError::new(
            "$.payload",
            "no instances: give \"instances\", a \"random\" block or --instances",
        ));
    }
    Ok(out)
}

/// Per-instance results of several named checks, each a pass flag and a
/// deviation.
fn tally(names: &[&str], results: &[statgame::Result<Vec<(bool, f64)>>]) -> (Vec<Check>, f64) {
    let total = results.len();
    let first_error = results
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.as_ref().err().map(|e| format!("; instance {i}: {e}")))
        .unwrap_or_default();
    let mut overall = 0.0f64;
    let checks = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let mut passed = 0;
            let mut max = 0.0f64;
            for (pass, dev) in results.iter().flatten().map(|r| r[k]) {
                passed += usize::from(pass);
                max = max.max(dev);
            }
            overall = overall.max(max);
            Check::new(
                name,
                passed == total,
                format!("{passed}/{total} instances, max deviation {max:.3e}{first_error}"),
            )
        })
        .collect();
    (checks, overall)
}

/// `|a − b|`, zero when both are the same infinity.
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn tolerance<W: Weight>(given: Option<f64>) -> f64 {
    given.unwrap_or(if W::EXACT { 0.0 } else { IDENTITY_TOL })
}

fn compose<W: Weight>(p: &Value, seed: u64, n: Option<usize>, mode: Mode) -> Parsed<Outcome> {
    let b: Batch = typed(p, "$.payload")?;
    let items = collect(
        &b.instances,
        b.random.as_ref(),
        n,
        seed,
        3,
        compose_instance::<W>,
        draw_compose::<W>,
    )?;
    let tol = tolerance::<W>(b.tolerance);
    let results: Vec<_> = items
        .par_iter()
        .map(|i| {
            let dev = buco_deviation(&i.c, &i.d, &i.prior)?;
            Ok(vec![(verify_buco(&i.c, &i.d, &i.prior, tol)?, dev)])
        })
        .collect();
    let (checks, max) = tally(&["optical-composition"], &results);
    Ok(Outcome::checks_only(mode, items.len(), checks, max))
}

fn eubo<W: Weight>(p: &Value, seed: u64, n: Option<usize>, mode: Mode) -> Parsed<Outcome> {
    let b: Batch = typed(p, "$.payload")?;
    let items = collect(
        &b.instances,
        b.random.as_ref(),
        n,
        seed,
        2,
        free_energy_instance::<W>,
        draw_free_energy::<W>,
    )?;
    let tol = b.tolerance.unwrap_or(IDENTITY_TOL);
    let results: Vec<_> = items
        .par_iter()
        .map(|i| {
            let r = check_eubo(&i.q, &i.c, &i.prior, i.y, tol)?;
            let below = (r.neg_log_evidence - r.free_energy).max(0.0);
            let tight = r.gap().abs() < tol;
            Ok(vec![
                (r.deviation <= tol, r.deviation),
                (below <= tol, below),
                (tight == (r.kl_to_exact < tol), 0.0),
            ])
        })
        .collect();
    let (checks, max) = tally(
        &["free-energy-identity", "evidence-bound", "tight-iff-exact"],
        &results,
    );
    Ok(Outcome::checks_only(mode, items.len(), checks, max))
}

fn helmholtz<W: Weight>(p: &Value, seed: u64, n: Option<usize>, mode: Mode) -> Parsed<Outcome> {
    let b: Batch = typed(p, "$.payload")?;
    let items = collect(
        &b.instances,
        b.random.as_ref(),
        n,
        seed,
        2,
        free_energy_instance::<W>,
        draw_free_energy::<W>,
    )?;
    let tol = b.tolerance.unwrap_or(IDENTITY_TOL);
    let results: Vec<_> = items
        .par_iter()
        .map(|i| {
            let f = free_energy(&i.q, &i.c, &i.prior, i.y, Divergence::Kl)?;
            let h = helmholtz_decomposition(&i.q, &i.c, &i.prior, i.y)?;
            let dev = gap(f, h.free_energy());
            Ok(vec![(dev <= tol, dev)])
        })
        .collect();
    let (checks, max) = tally(&["energy-minus-entropy"], &results);
    Ok(Outcome::checks_only(mode, items.len(), checks, max))
}

fn genbayes<W: Weight>(p: &Value, seed: u64, n: Option<usize>, mode: Mode) -> Parsed<Outcome> {
    let b: Batch = typed(p, "$.payload")?;
    let items = collect(
        &b.instances,
        b.random.as_ref(),
        n,
        seed,
        2,
        game_instance::<W>,
        |g, sizes| {
            let parts = draw_game::<W>(g, sizes, None);
            let lens = match parts.backward {
                None => BayesianLens::exact(&parts.forward),
                Some(k) => BayesianLens::with_constant_backward(parts.forward, k),
            };
            let ctx = GameContext::simple(
                parts.prior,
                statgame::games::Continuation::identity(lens.fwd_cod()),
            );
            (lens, ctx)
        },
    )?;
    let tol = b.tolerance.unwrap_or(IDENTITY_TOL);
    let results: Vec<_> = items
        .par_iter()
        .map(|(lens, ctx)| {
            let loss = Loss::neg_log_density(lens.forward())?;
            let g = generalized_bayes_fitness(lens, loss, Divergence::Kl)?(ctx)?;
            let a = autoencoder_fitness(lens, Divergence::Kl)(ctx)?;
            let dev = gap(g, a);
            Ok(vec![(dev <= tol, dev)])
        })
        .collect();
    let (checks, max) = tally(&["genbayes-equals-autoencoder"], &results);
    Ok(Outcome::checks_only(mode, items.len(), checks, max))
}

fn monotone(trace: &[f64], sense: Sense) -> bool {
    trace.windows(2).all(|w| match sense {
        Sense::Minimize => w[1] <= w[0],
        Sense::Maximize => w[1] >= w[0],
    })
}

fn monotone_check(run: &OptimResult, sense: Sense) -> Check {
    Check::new(
        "trace-monotone",
        monotone(&run.trace, sense),
        format!(
            "{} iterations, {}",
            run.iterations,
            if run.converged {
                "converged"
            } else {
                "stopped at the iteration cap"
            }
        ),
    )
}

/// The starting family: uniform, or logits in `[−1, 1]` drawn from the
/// optimizer's seed.
fn initial_family(obs: &FiniteSpace, space: &FiniteSpace, spec: &OptimizerSpec) -> SimplexFamily {
    match spec.seed {
        None => SimplexFamily::uniform(obs, space),
        Some(seed) => {
            let mut g = InstanceRng::new(seed);
            let logits = (0..obs.len() * space.len())
                .map(|_| g.real(-1.0, 1.0))
                .collect();
            SimplexFamily::new(obs.clone(), space.clone(), logits).expect("one logit per entry")
        }
    }
}

fn coin_mle(p: &Value) -> Parsed<Outcome> {
    let c: CoinPayload = typed(p, "$.payload")?;
    let coin = space_from_json(&c.outcomes, "$.payload.outcomes")?;
    let ports = Ports {
        dom: FiniteSpace::unit(),
        prediction: coin.clone(),
        observation: coin.clone(),
    };
    let ctx: GameContext<f64> = context_from_json(&c.context, "$.payload.context", &ports)?;
    let config = c.optimizer.config("$.payload.optimizer")?;
    // The log-likelihood E_e[ln p] is maximized by p = e, so the closed-form
    // estimate is the replayed frequencies, read straight from the counts.
    let cont = &c.context["continuation"];
    let oracle: Vec<f64> = if cont["name"] == "empirical-replay" {
        let counts = counts_of(
            field(cont, "args", "$.payload.context.continuation")?,
            "$.payload.context.continuation.args",
            &coin,
        )?;
        let total: u64 = counts.iter().sum();
        counts.iter().map(|&k| k as f64 / total as f64).collect()
    } else {
        let uniform = BayesianLens::from_state(&Dist::uniform(&coin));
        ctx.feedback(&uniform)
            .map_err(|e| ParseError::new("$.payload.context", e))?
            .weights()
            .to_vec()
    };
    let init = initial_family(&FiniteSpace::unit(), &coin, &c.optimizer);
    let tol = c.tolerance.unwrap_or(1e-3);
    let run = optimize_fitness(
        |f| Ok(mle_game(&f.state()?, statgame::games::Transform::Log)),
        &ctx,
        &init,
        Sense::Maximize,
        FD_STEP,
        &config,
    );
    let r = match run {
        Ok(r) => r,
        Err(e) => return Ok(failed_run(Mode::Float, &e)),
    };
    let theta = r
        .family
        .state()
        .map(|s| s.weights().to_vec())
        .unwrap_or_default();
    let dev = theta
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let shown: Vec<String> = (0..coin.len())
        .map(|i| {
            format!(
                "{}: {:.6} (closed form {:.6})",
                coin.outcome_label(i),
                theta[i],
                oracle[i]
            )
        })
        .collect();
    let checks = vec![
        Check::new("mle-matches-closed-form", dev <= tol, shown.join(", ")),
        monotone_check(&r.run, Sense::Maximize),
    ];
    Ok(Outcome {
        mode: Mode::Float,
        instances: 1,
        checks,
        max_deviation: dev,
        iterations: Some(r.run.iterations),
        final_fitness: Some(r.run.final_value()),
        traces: vec![r.run.trace],
    })
}

fn failed_run(mode: Mode, e: &Error) -> Outcome {
    Outcome::checks_only(
        mode,
        1,
        vec![Check::new("optimizer-runs", false, e.to_string())],
        f64::INFINITY,
    )
}

fn vae(p: &Value, seed: u64, n: Option<usize>) -> Parsed<Outcome> {
    let v: VaePayload = typed(p, "$.payload")?;
    let config = v.optimizer.config("$.payload.optimizer")?;
    let items = collect(
        &v.instances,
        v.random.as_ref(),
        n,
        seed,
        0,
        |value, path| typed::<VaeSpec>(value, path)?.build(path),
        |g, _| draw_vae(g).build("$").expect("drawn parameters are valid"),
    )?;
    let tight_tol = v.tolerance.unwrap_or(1e-6);
    let moment_tol = v.moment_tolerance.unwrap_or(1e-4);
    let runs: Vec<_> = items
        .par_iter()
        .map(|i| {
            let r = gaussian_elbo_optimize(&i.prior, &i.kernel, i.y, &i.init, &config)?;
            let exact = gaussian_invert(&i.prior, &i.kernel, i.y);
            let surprisal = -i.kernel.pushforward(&i.prior).log_density(i.y);
            let moments = (r.q.mean - exact.mean)
                .abs()
                .max((r.q.variance - exact.variance).abs());
            let below = r
                .run
                .trace
                .iter()
                .map(|f| surprisal - f)
                .fold(0.0, f64::max);
            let tight = (r.run.final_value() - surprisal).abs();
            Ok((
                vec![
                    (moments <= moment_tol, moments),
                    (tight <= tight_tol, tight),
                    (below <= IDENTITY_TOL, below),
                    (monotone(&r.run.trace, Sense::Minimize), 0.0),
                ],
                r.run,
            ))
        })
        .collect();
    let results: Vec<statgame::Result<Vec<(bool, f64)>>> = runs
        .iter()
        .map(|r| r.as_ref().map(|(c, _)| c.clone()).map_err(Clone::clone))
        .collect();
    let (checks, max) = tally(
        &[
            "posterior-recovered",
            "bound-tight-at-optimum",
            "evidence-bound",
            "trace-monotone",
        ],
        &results,
    );
    let done: Vec<&OptimResult> = runs.iter().flatten().map(|(_, r)| r).collect();
    Ok(Outcome {
        mode: Mode::Float,
        instances: items.len(),
        checks,
        max_deviation: max,
        iterations: done.iter().map(|r| r.iterations).max(),
        final_fitness: match done.as_slice() {
            [only] if items.len() == 1 => Some(only.final_value()),
            _ => None,
        },
        traces: done.iter().map(|r| r.trace.clone()).collect(),
    })
}

fn build_game<W: Weight>(
    lens: &BayesianLens<W>,
    spec: &FitnessSpec,
) -> statgame::Result<StatGame<W>> {
    let d = spec.divergence.divergence();
    match spec.kind {
        FitnessKind::Mle => {
            if !lens.fwd_dom().is_unit() {
                return Err(Error::InvalidParameter(format!(
                    "likelihood games need a lens out of the unit space, found {}",
                    lens.fwd_dom()
                )));
            }
            Ok(mle_game(
                &lens.forward().row_dist(0)?,
                spec.transform.transform(),
            ))
        }
        FitnessKind::Bayes => Ok(bayes_inference_game(lens, d)),
        FitnessKind::Autoencoder => Ok(autoencoder_game(lens, d)),
        FitnessKind::Genbayes => generalized_bayes_game(lens, spec.loss.loss(lens)?, d),
    }
}

/// Whether the backward channel runs `Y ⇸ X` against a forward `X ⇸ Y`.
fn square<W: Weight>(lens: &BayesianLens<W>) -> bool {
    lens.bwd_dom() == lens.fwd_cod() && lens.bwd_cod() == lens.fwd_dom()
}

/// `E_{y∼efb}[−ln p_{c∘π}(y)]`.
fn expected_surprisal<W: Weight>(
    lens: &BayesianLens<W>,
    ctx: &GameContext<W>,
) -> statgame::Result<f64> {
    let fb = ctx.feedback(lens)?;
    let evidence = ctx.prior_marginal()?.pushforward(lens.forward())?;
    Ok(fb
        .support()
        .into_iter()
        .map(|y| fb.weight_at(y).to_f64() * -evidence.weight_at(y).to_f64().ln())
        .sum())
}

/// Fitness identities that hold whatever the lens and context.
fn identities<W: Weight>(
    lens: &BayesianLens<W>,
    ctx: &GameContext<W>,
    spec: &FitnessSpec,
    value: f64,
) -> statgame::Result<Vec<(Check, f64)>> {
    let kl = spec.divergence == DivergenceName::Kl;
    let mut out = Vec::new();
    match spec.kind {
        FitnessKind::Autoencoder if kl && square(lens) => {
            let bayes = bayes_inference_fitness(lens, Divergence::Kl)(ctx)?;
            let s = expected_surprisal(lens, ctx)?;
            let dev = gap(value - bayes, s);
            out.push((
                Check::new(
                    "autoencoder-minus-inference-is-surprisal",
                    dev <= IDENTITY_TOL,
                    format!("deviation {dev:.3e}"),
                ),
                dev,
            ));
        }
        FitnessKind::Genbayes if kl && spec.loss == LossSpec::NegLogDensity => {
            let a = autoencoder_fitness(lens, Divergence::Kl)(ctx)?;
            let dev = gap(value, a);
            out.push((
                Check::new(
                    "genbayes-equals-autoencoder",
                    dev <= IDENTITY_TOL,
                    format!("deviation {dev:.3e}"),
                ),
                dev,
            ));
        }
        FitnessKind::Bayes => {
            let below = (-value).max(0.0);
            out.push((
                Check::new(
                    "inference-fitness-nonnegative",
                    below <= IDENTITY_TOL,
                    format!("fitness {value:.12}"),
                ),
                below,
            ));
        }
        _ => {}
    }
    Ok(out)
}

struct Evaluated<W> {
    lens: BayesianLens<W>,
    ctx: GameContext<W>,
    checks: Vec<Check>,
    value: Option<f64>,
    max_deviation: f64,
}

fn evaluate_game<W: Weight>(p: &GamePayload) -> Parsed<Evaluated<W>> {
    let lens: BayesianLens<W> = lens_from_json(&p.lens, "$.payload.lens")?;
    let ctx: GameContext<W> =
        context_from_json(&p.context, "$.payload.context", &Ports::of(&lens))?;
    let game =
        build_game(&lens, &p.fitness).map_err(|e| ParseError::new("$.payload.fitness", e))?;
    let mut checks = Vec::new();
    let mut max_deviation = 0.0f64;
    let value = match game.evaluate(&ctx) {
        Ok(v) => {
            checks.push(Check::new(
                "fitness-defined",
                !v.is_nan(),
                format!("fitness {v:.12}"),
            ));
            match identities(&lens, &ctx, &p.fitness, v) {
                Ok(found) => {
                    for (c, dev) in found {
                        max_deviation = max_deviation.max(dev);
                        checks.push(c);
                    }
                }
                Err(e) => checks.push(Check::new("fitness-identities", false, e.to_string())),
            }
            if let Some(x) = p.expect {
                let dev = gap(v, x.fitness);
                max_deviation = max_deviation.max(dev);
                checks.push(Check::new(
                    "expected-fitness",
                    dev <= x.tol,
                    format!("fitness {v:.12}, expected {:.12}", x.fitness),
                ));
            }
            Some(v)
        }
        Err(e) => {
            checks.push(Check::new("fitness-defined", false, e.to_string()));
            None
        }
    };
    Ok(Evaluated {
        lens,
        ctx,
        checks,
        value,
        max_deviation,
    })
}

fn strictly_positive(k: &Kernel<f64>, pi: &Dist<f64>) -> bool {
    pi.weights().iter().all(|&w| w > 0.0)
        && (0..k.dom().len()).all(|x| k.row(x).is_ok_and(|r| r.iter().all(|&w| w > 0.0)))
}

/// Fits the strategy: the state of a likelihood game, otherwise a
/// backward channel with the forward channel held fixed.
fn optimize_game(
    e: &Evaluated<f64>,
    spec: &FitnessSpec,
    opt: &OptimizerSpec,
) -> Parsed<statgame::Result<(FamilyResult, Sense)>> {
    let config = opt.config("$.payload.optimizer")?;
    let (lens, ctx) = (&e.lens, &e.ctx);
    if spec.kind == FitnessKind::Mle {
        let init = initial_family(&FiniteSpace::unit(), lens.fwd_cod(), opt);
        let transform = spec.transform;
        let run = optimize_fitness(
            |f| Ok(mle_game(&f.state()?, transform.transform())),
            ctx,
            &init,
            Sense::Maximize,
            FD_STEP,
            &config,
        );
        return Ok(run.map(|r| (r, Sense::Maximize)));
    }
    let init = initial_family(lens.bwd_dom(), lens.bwd_cod(), opt);
    let c = lens.forward();
    let analytic = spec.kind == FitnessKind::Autoencoder
        && spec.divergence == DivergenceName::Kl
        && square(lens)
        && ctx
            .prior_marginal()
            .is_ok_and(|pi| strictly_positive(c, &pi));
    let run = if analytic {
        optimize_autoencoder(c, ctx, &init, GradientMode::Analytic, &config)
    } else {
        optimize_fitness(
            |f| {
                build_game(
                    &BayesianLens::with_constant_backward(c.clone(), f.kernel()?),
                    spec,
                )
            },
            ctx,
            &init,
            Sense::Minimize,
            FD_STEP,
            &config,
        )
    };
    Ok(run.map(|r| (r, Sense::Minimize)))
}

/// Largest total-variation distance between the fitted backward channel and
/// the exact posterior over the feedback's support.
fn posterior_distance(e: &Evaluated<f64>, family: &SimplexFamily) -> statgame::Result<f64> {
    let pi = e.ctx.prior_marginal()?;
    let exact = invert(e.lens.forward(), &pi)?;
    let learned = family.kernel()?;
    let fb = e.ctx.feedback(&e.lens)?;
    let mut worst = 0.0f64;
    for y in fb.support() {
        worst = worst.max(total_variation(
            &learned.row_dist(y)?,
            &exact.posterior_at(y)?,
        )?);
    }
    Ok(worst)
}

fn game_pipeline(p: &Value, mode: Mode) -> Parsed<Outcome> {
    let g: GamePayload = typed(p, "$.payload")?;
    let Some(opt) = g.optimizer else {
        let (checks, dev, value) = match mode {
            Mode::Rational => {
                let e = evaluate_game::<Rational>(&g)?;
                (e.checks, e.max_deviation, e.value)
            }
            Mode::Float => {
                let e = evaluate_game::<f64>(&g)?;
                (e.checks, e.max_deviation, e.value)
            }
        };
        let mut out = Outcome::checks_only(mode, 1, checks, dev);
        out.final_fitness = value;
        return Ok(out);
    };
    let mut e = evaluate_game::<f64>(&g)?;
    let (r, sense) = match optimize_game(&e, &g.fitness, &opt)? {
        Ok(found) => found,
        Err(err) => {
            let mut out = failed_run(Mode::Float, &err);
            out.checks.splice(0..0, e.checks);
            return Ok(out);
        }
    };
    let mut checks = std::mem::take(&mut e.checks);
    checks.push(monotone_check(&r.run, sense));
    let mut max_deviation = e.max_deviation;
    let recoverable = matches!(
        g.fitness.kind,
        FitnessKind::Bayes | FitnessKind::Autoencoder
    ) || (g.fitness.kind == FitnessKind::Genbayes
        && g.fitness.loss == LossSpec::NegLogDensity);
    if recoverable && g.fitness.divergence == DivergenceName::Kl && square(&e.lens) {
        let tol = g.tolerance.unwrap_or(1e-4);
        match posterior_distance(&e, &r.family) {
            Ok(tv) => {
                max_deviation = max_deviation.max(tv);
                checks.push(Check::new(
                    "posterior-recovered",
                    tv <= tol,
                    format!("max total variation {tv:.3e}"),
                ));
            }
            Err(err) => checks.push(Check::new("posterior-recovered", false, err.to_string())),
        }
    }
    Ok(Outcome {
        mode: Mode::Float,
        instances: 1,
        checks,
        max_deviation,
        iterations: Some(r.run.iterations),
        final_fitness: Some(r.run.final_value()),
        traces: vec![r.run.trace],
    })
}
