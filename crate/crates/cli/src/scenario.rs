//! Scenario files: a JSON envelope naming a suite, plus a payload whose shape
//! depends on the suite.
//!
//! ```json
//! {"id": "buco", "kind": "compose-check", "seed": 42, "mode": "rational",
//!  "payload": {"random": {"count": 200}}}
//! ```
//!
//! Every decoding failure is reported as a [`ParseError`] whose path starts at
//! the document root, e.g. `$.payload.instances[3].c.rows.1`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use statgame::games::{Continuation, Divergence, GameContext, Loss, Transform};
use statgame::lens::{exact_lens, BayesianLens};
use statgame::markov::serial::{
    dist_from_json, field, kernel_from_json, space_from_json, ParseError,
};
use statgame::markov::{Dist, FiniteSpace, Kernel};
use statgame::optim::{Gaussian1D, LinearGaussianKernel, OptimConfig};
use statgame::weight::Weight;

pub type Parsed<T> = Result<T, ParseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    ComposeCheck,
    EuboCheck,
    HelmholtzCheck,
    GenbayesCoincidence,
    CoinMle,
    #[serde(rename = "vae-1d")]
    #[value(name = "vae-1d")]
    Vae1d,
    GamePipeline,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ComposeCheck => "compose-check",
            Kind::EuboCheck => "eubo-check",
            Kind::HelmholtzCheck => "helmholtz-check",
            Kind::GenbayesCoincidence => "genbayes-coincidence",
            Kind::CoinMle => "coin-mle",
            Kind::Vae1d => "vae-1d",
            Kind::GamePipeline => "game-pipeline",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Arithmetic used for weights: exact rationals or `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Rational,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    id: Option<String>,
    kind: Kind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    payload: Value,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub kind: Kind,
    pub seed: u64,
    pub mode: Mode,
    pub payload: Value,
}

impl Scenario {
    pub fn load(path: &Path) -> Parsed<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParseError::new("$", format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| ParseError::new("$", format!("invalid JSON: {e}")))?;
        let env: Envelope = typed(&value, "$")?;
        let id = env.id.unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| env.kind.name().to_string())
        });
        Ok(Scenario {
            id,
            kind: env.kind,
            seed: env.seed,
            mode: env.mode,
            payload: env.payload,
        })
    }
}

/// Deserializes `v` into `T`, reporting failures at `path` extended by the
/// location inside `v`. A missing (null) object decodes as `{}`.
pub fn typed<T: DeserializeOwned>(v: &Value, path: &str) -> Parsed<T> {
    let empty = Value::Object(Default::default());
    let v = if v.is_null() { &empty } else { v };
    serde_path_to_error::deserialize(v).map_err(|e| {
        let inner = e.path().to_string();
        let full = if inner == "." {
            path.to_string()
        } else if inner.starts_with('[') {
            format!("{path}{inner}")
        } else {
            format!("{path}.{inner}")
        };
        ParseError::new(&full, e.into_inner())
    })
}

pub fn at(path: &str, key: &str) -> String {
    format!("{path}.{key}")
}

fn located<T>(path: &str, r: statgame::Result<T>) -> Parsed<T> {
    r.map_err(|e| ParseError::new(path, e))
}

fn kernel_at<W: Weight>(v: &Value, key: &str, path: &str) -> Parsed<Kernel<W>> {
    kernel_from_json(field(v, key, path)?, &at(path, key))
}

fn dist_at<W: Weight>(v: &Value, key: &str, path: &str) -> Parsed<Dist<W>> {
    dist_from_json(field(v, key, path)?, &at(path, key))
}

fn expect_space(found: &FiniteSpace, want: &FiniteSpace, path: &str) -> Parsed<()> {
    located(path, want.expect_eq(found))
}

/// Explicit instances plus an optional block of seeded random ones.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Batch {
    #[serde(default)]
    pub instances: Vec<Value>,
    pub random: Option<RandomBlock>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBlock {
    pub count: usize,
    /// Upper bounds on the sizes of the spaces involved; each size is drawn
    /// uniformly from `1..=max`.
    pub max_sizes: Option<Vec<usize>>,
}

/// `(c, d, π)` for the optical composition check.
pub struct ComposeInstance<W> {
    pub c: Kernel<W>,
    pub d: Kernel<W>,
    pub prior: Dist<W>,
}

pub fn compose_instance<W: Weight>(v: &Value, path: &str) -> Parsed<ComposeInstance<W>> {
    let c: Kernel<W> = kernel_at(v, "c", path)?;
    let d: Kernel<W> = kernel_at(v, "d", path)?;
    let prior: Dist<W> = dist_at(v, "prior", path)?;
    expect_space(d.dom(), c.cod(), &at(&at(path, "d"), "dom"))?;
    expect_space(prior.space(), c.dom(), &at(&at(path, "prior"), "space"))?;
    Ok(ComposeInstance { c, d, prior })
}

/// `(q, c, π, y)` for the free-energy checks.
pub struct FreeEnergyInstance<W> {
    pub q: Dist<W>,
    pub c: Kernel<W>,
    pub prior: Dist<W>,
    pub y: usize,
}

pub fn free_energy_instance<W: Weight>(v: &Value, path: &str) -> Parsed<FreeEnergyInstance<W>> {
    let q: Dist<W> = dist_at(v, "q", path)?;
    let c: Kernel<W> = kernel_at(v, "c", path)?;
    let prior: Dist<W> = dist_at(v, "prior", path)?;
    expect_space(prior.space(), c.dom(), &at(&at(path, "prior"), "space"))?;
    expect_space(q.space(), c.dom(), &at(&at(path, "q"), "space"))?;
    let ypath = at(path, "y");
    let label = field(v, "y", path)?
        .as_str()
        .ok_or_else(|| ParseError::new(&ypath, "expected an outcome label"))?;
    let y = located(&ypath, c.cod().index_of(label))?;
    Ok(FreeEnergyInstance { q, c, prior, y })
}

/// Lenses: `{"tag": "exact", "forward": kernel}` for `(c, c†)`, or
/// `{"tag": "fixed", "forward": kernel, "backward": kernel}` for a backward
/// kernel that ignores the prior.
pub fn lens_from_json<W: Weight>(v: &Value, path: &str) -> Parsed<BayesianLens<W>> {
    let tpath = at(path, "tag");
    let tag = field(v, "tag", path)?
        .as_str()
        .ok_or_else(|| ParseError::new(&tpath, "expected a string"))?;
    let forward: Kernel<W> = kernel_at(v, "forward", path)?;
    match tag {
        "exact" => Ok(exact_lens(&forward)),
        "fixed" => {
            let backward = kernel_at(v, "backward", path)?;
            Ok(BayesianLens::with_constant_backward(forward, backward))
        }
        other => Err(ParseError::new(
            &tpath,
            format!("unknown lens tag {other:?}, expected \"exact\" or \"fixed\""),
        )),
    }
}

/// Names of the serializable continuations.
pub const CONTINUATIONS: [&str; 5] = [
    "identity",
    "constant-state",
    "label-permutation",
    "empirical-replay",
    "resample-from-evidence",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContinuationSpec {
    name: String,
    #[serde(default)]
    args: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PermArgs {
    perm: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CountArgs {
    counts: BTreeMap<String, u64>,
}

/// The spaces a context must wire up: the lens's forward domain and
/// codomain, and the backward domain its feedback lands in.
pub struct Ports {
    pub dom: FiniteSpace,
    pub prediction: FiniteSpace,
    pub observation: FiniteSpace,
}

impl Ports {
    pub fn of<W: Weight>(lens: &BayesianLens<W>) -> Self {
        Ports {
            dom: lens.fwd_dom().clone(),
            prediction: lens.fwd_cod().clone(),
            observation: lens.bwd_dom().clone(),
        }
    }
}

/// Empirical-replay counts keyed by outcome label, in outcome order.
pub fn counts_of(v: &Value, path: &str, obs: &FiniteSpace) -> Parsed<Vec<u64>> {
    let args: CountArgs = typed(v, path)?;
    let mut counts = vec![0; obs.len()];
    for (label, n) in &args.counts {
        let p = at(&at(path, "counts"), label);
        counts[located(&p, obs.index_of(label))?] = *n;
    }
    Ok(counts)
}

fn continuation_from_json<W: Weight>(
    v: &Value,
    path: &str,
    m: &FiniteSpace,
    n: &FiniteSpace,
    ports: &Ports,
) -> Parsed<Continuation<W>> {
    let spec: ContinuationSpec = typed(v, path)?;
    let input = m.tensor(&ports.prediction);
    let output = n.tensor(&ports.observation);
    let apath = at(path, "args");
    match spec.name.as_str() {
        "identity" => Ok(Continuation::identity(&input)),
        "constant-state" => {
            let state: Dist<W> = dist_at(&spec.args, "state", &apath)?;
            expect_space(state.space(), &output, &at(&at(&apath, "state"), "space"))?;
            Ok(Continuation::constant(&input, state))
        }
        "label-permutation" => {
            let args: PermArgs = typed(&spec.args, &apath)?;
            let y = &ports.prediction;
            let perm = args
                .perm
                .iter()
                .enumerate()
                .map(|(i, l)| located(&format!("{apath}.perm[{i}]"), y.index_of(l)))
                .collect::<Parsed<Vec<_>>>()?;
            located(&at(&apath, "perm"), Continuation::relabel(m, y, &perm))
        }
        "empirical-replay" => {
            let counts = counts_of(&spec.args, &apath, &output)?;
            located(&apath, Continuation::empirical(&input, &output, &counts))
        }
        "resample-from-evidence" => {
            if !n.is_unit() {
                return Err(ParseError::new(
                    path,
                    "resample-from-evidence needs a trivial backward residual",
                ));
            }
            Ok(Continuation::resample_from_evidence(m, &ports.prediction))
        }
        other => Err(ParseError::new(
            &at(path, "name"),
            format!(
                "unknown continuation {other:?}, expected one of {}",
                CONTINUATIONS.join(", ")
            ),
        )),
    }
}

/// `{"residual": [] | [M, N], "prior": dist on M⊗X, "continuation": ..}`.
pub fn context_from_json<W: Weight>(
    v: &Value,
    path: &str,
    ports: &Ports,
) -> Parsed<GameContext<W>> {
    let rpath = at(path, "residual");
    let (m, n) = match v.get("residual") {
        None => (FiniteSpace::unit(), FiniteSpace::unit()),
        Some(Value::Array(r)) if r.is_empty() => (FiniteSpace::unit(), FiniteSpace::unit()),
        Some(Value::Array(r)) if r.len() == 2 => (
            space_from_json(&r[0], &format!("{rpath}[0]"))?,
            space_from_json(&r[1], &format!("{rpath}[1]"))?,
        ),
        Some(_) => {
            return Err(ParseError::new(
                &rpath,
                "expected [] or a pair [M, N] of residual spaces",
            ))
        }
    };
    let prior: Dist<W> = dist_at(v, "prior", path)?;
    expect_space(
        prior.space(),
        &m.tensor(&ports.dom),
        &at(&at(path, "prior"), "space"),
    )?;
    let cont = continuation_from_json(
        field(v, "continuation", path)?,
        &at(path, "continuation"),
        &m,
        &n,
        ports,
    )?;
    let ctx = located(path, GameContext::new(m, n, prior, cont))?;
    expect_space(
        ctx.observation(),
        &ports.observation,
        &at(path, "continuation"),
    )?;
    Ok(ctx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    Mle,
    Bayes,
    Autoencoder,
    Genbayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceName {
    #[default]
    Kl,
    Tv,
}

impl DivergenceName {
    pub fn divergence(self) -> Divergence {
        match self {
            DivergenceName::Kl => Divergence::Kl,
            DivergenceName::Tv => Divergence::TotalVariation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformName {
    #[default]
    Log,
    Identity,
}

impl TransformName {
    pub fn transform(self) -> Transform {
        match self {
            TransformName::Log => Transform::Log,
            TransformName::Identity => Transform::Identity,
        }
    }
}

/// Generalized-Bayes loss: `"neg-log-density"` of the forward channel, or
/// `{"values": [[l(y, x) for x] for y]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSpec {
    #[default]
    NegLogDensity,
    Values(Vec<Vec<f64>>),
}

impl LossSpec {
    pub fn loss<W: Weight>(&self, lens: &BayesianLens<W>) -> statgame::Result<Loss> {
        match self {
            LossSpec::NegLogDensity => Loss::neg_log_density(lens.forward()),
            LossSpec::Values(rows) => Loss::new(
                lens.bwd_dom().clone(),
                lens.bwd_cod().clone(),
                rows.iter().flatten().copied().collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessSpec {
    pub kind: FitnessKind,
    #[serde(default)]
    pub divergence: DivergenceName,
    #[serde(default)]
    pub transform: TransformName,
    #[serde(default)]
    pub loss: LossSpec,
}

/// `{"max_iters", "tol", "step", "seed"}`. Without a seed the search starts
/// from the uniform family; with one, from logits drawn in `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub max_iters: usize,
    pub tol: f64,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let c = OptimConfig::default();
        OptimizerSpec {
            max_iters: c.max_iters,
            tol: c.tol,
            step: c.step,
            seed: None,
        }
    }
}

impl OptimizerSpec {
    pub fn config(&self, path: &str) -> Parsed<OptimConfig> {
        if !(self.tol >= 0.0 && self.step > 0.0 && self.step.is_finite()) {
            return Err(ParseError::new(
                path,
                "tol must be non-negative and step positive",
            ));
        }
        Ok(OptimConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            step: self.step,
            ..OptimConfig::default()
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub fitness: f64,
    #[serde(default = "default_expect_tol")]
    pub tol: f64,
}

fn default_expect_tol() -> f64 {
    1e-12
}

/// A single game in a single context, optionally optimized.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GamePayload {
    pub lens: Value,
    pub context: Value,
    pub fitness: FitnessSpec,
    pub expect: Option<Expect>,
    pub optimizer: Option<OptimizerSpec>,
    /// Allowed total-variation distance between the optimized backward
    /// channel and the exact posterior.
    pub tolerance: Option<f64>,
}

/// A lens with its context, as used by the coincidence check.
pub fn game_instance<W: Weight>(
    v: &Value,
    path: &str,
) -> Parsed<(BayesianLens<W>, GameContext<W>)> {
    let lens = lens_from_json(field(v, "lens", path)?, &at(path, "lens"))?;
    let ctx = context_from_json(
        field(v, "context", path)?,
        &at(path, "context"),
        &Ports::of(&lens),
    )?;
    Ok((lens, ctx))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinPayload {
    pub outcomes: Value,
    pub context: Value,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGaussianSpec {
    pub slope: f64,
    pub intercept: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaeSpec {
    pub prior: GaussianSpec,
    pub kernel: LinearGaussianSpec,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<GaussianSpec>,
}

pub struct VaeInstance {
    pub prior: Gaussian1D,
    pub kernel: LinearGaussianKernel,
    pub y: f64,
    pub init: Gaussian1D,
}

impl VaeSpec {
    pub fn build(&self, path: &str) -> Parsed<VaeInstance> {
        let gaussian = |g: &GaussianSpec, key: &str| {
            located(&at(path, key), Gaussian1D::new(g.mean, g.variance))
        };
        let prior = gaussian(&self.prior, "prior")?;
        let init = match &self.init {
            Some(g) => gaussian(g, "init")?,
            None => prior,
        };
        let k = &self.kernel;
        let kernel = located(
            &at(path, "kernel"),
            LinearGaussianKernel::new(k.slope, k.intercept, k.noise_variance),
        )?;
        if !self.y.is_finite() {
            return Err(ParseError::new(&at(path, "y"), "expected a finite number"));
        }
        Ok(VaeInstance {
            prior,
            kernel,
            y: self.y,
            init,
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaePayload {
    #[serde(default)]
    pub instances: Vec<Value>,
    pub random: Option<RandomBlock>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    /// Allowed `|F(q*) + ln p(y)|`.
    pub tolerance: Option<f64>,
    /// Allowed error in the optimized mean and variance.
    pub moment_tolerance: Option<f64>,
}
