//! Exact Bayesian inversion of finite kernels, and the divergence and
//! evidence quantities built on it. Logarithms are natural throughout.

use crate::error::{Error, Result};
use crate::markov::{joint_of_model, Dist, FiniteSpace, Kernel};
use crate::weight::Weight;

/// The Bayesian inverse `c†_π : Y ⇸ X` together with the evidence `c∘π`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult<W> {
    /// Defined exactly on the support of `evidence`; other rows are undefined.
    pub posterior: Kernel<W>,
    pub evidence: Dist<W>,
    /// Observations (by index into the codomain) with zero evidence.
    pub unsupported: Vec<usize>,
}

impl<W: Weight> InversionResult<W> {
    pub fn posterior_at(&self, y: usize) -> Result<Dist<W>> {
        self.posterior.row_dist(y)
    }

    pub fn posterior_for(&self, y: &str) -> Result<Dist<W>> {
        self.posterior.at(y)
    }

    pub fn unsupported_labels(&self) -> Vec<String> {
        self.unsupported
            .iter()
            .map(|&y| self.evidence.space().outcome_label(y))
            .collect()
    }
}

/// Bayes' rule on a finite generative model:
/// `c†_π(x|y) = c(y|x)·π(x) / Σ_x' c(y|x')·π(x')` wherever the evidence is
/// positive.
pub fn invert<W: Weight>(c: &Kernel<W>, pi: &Dist<W>) -> Result<InversionResult<W>> {
    c.dom().expect_eq(pi.space())?;
    let (nx, ny) = (c.dom().len(), c.cod().len());
    let mut columns: Vec<Vec<W>> = vec![vec![W::zero(); nx]; ny];
    let mut evidence = vec![W::zero(); ny];
    for (x, px) in pi.weights().iter().enumerate() {
        if px.is_zero() {
            continue;
        }
        for (y, w) in c.row(x)?.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let joint = px.clone() * w.clone();
            evidence[y] = evidence[y].clone() + joint.clone();
            columns[y][x] = joint;
        }
    }
    let mut unsupported = Vec::new();
    let rows = columns
        .into_iter()
        .zip(&evidence)
        .enumerate()
        .map(|(y, (col, ev))| {
            if ev.is_zero() {
                unsupported.push(y);
                None
            } else {
                Some(col.into_iter().map(|j| j / ev.clone()).collect())
            }
        })
        .collect();
    let posterior = Kernel::partial(c.cod().clone(), c.dom().clone(), rows)?;
    let evidence = Dist::new(c.cod().clone(), evidence)?;
    Ok(InversionResult {
        posterior,
        evidence,
        unsupported,
    })
}

/// Largest entrywise gap between `joint(π, c)` (transposed onto `Y⊗X`) and
/// `joint(c∘π, inv)`.
pub fn bayes_equation_deviation<W: Weight>(
    c: &Kernel<W>,
    pi: &Dist<W>,
    inv: &Kernel<W>,
) -> Result<f64> {
    let (lhs, rhs) = bayes_equation_sides(c, pi, inv)?;
    lhs.max_deviation(&rhs)
}

/// Whether `inv` is a Bayesian inverse of `c` with respect to `π`: the two
/// joints on `Y⊗X` agree (exactly for rationals, within `tol` for floats).
pub fn check_bayes_equation<W: Weight>(
    c: &Kernel<W>,
    pi: &Dist<W>,
    inv: &Kernel<W>,
    tol: f64,
) -> Result<bool> {
    let (lhs, rhs) = bayes_equation_sides(c, pi, inv)?;
    Ok(lhs.approx_eq(&rhs, tol))
}

fn bayes_equation_sides<W: Weight>(
    c: &Kernel<W>,
    pi: &Dist<W>,
    inv: &Kernel<W>,
) -> Result<(Dist<W>, Dist<W>)> {
    if inv.dom() != c.cod() || inv.cod() != c.dom() {
        return Err(Error::mismatch(
            format!("{} ⇸ {}", c.cod(), c.dom()),
            format!("{} ⇸ {}", inv.dom(), inv.cod()),
        ));
    }
    let forward = joint_of_model(pi, c)?.pushforward(&Kernel::swap(c.dom(), c.cod()))?;
    let evidence = pi.pushforward(c)?;
    let backward = joint_of_model(&evidence, inv)?;
    Ok((forward, backward))
}

/// `D_KL(α ‖ β) = Σ α(x)·ln(α(x)/β(x))`, with `0·ln 0 = 0` and `+∞` when `α`
/// charges an outcome `β` does not.
pub fn kl_divergence<W: Weight>(alpha: &Dist<W>, beta: &Dist<W>) -> Result<f64> {
    alpha.space().expect_eq(beta.space())?;
    let mut total = 0.0;
    for (a, b) in alpha.weights().iter().zip(beta.weights()) {
        if a.is_zero() {
            continue;
        }
        if b.is_zero() {
            return Ok(f64::INFINITY);
        }
        total += a.to_f64() * a.ln_ratio(b);
    }
    Ok(total.max(0.0))
}

/// Total variation distance `½ Σ |α(x) − β(x)|`.
pub fn total_variation<W: Weight>(alpha: &Dist<W>, beta: &Dist<W>) -> Result<f64> {
    alpha.space().expect_eq(beta.space())?;
    let sum: f64 = alpha
        .weights()
        .iter()
        .zip(beta.weights())
        .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
        .sum();
    Ok(0.5 * sum)
}

/// Shannon entropy in nats.
pub fn entropy<W: Weight>(alpha: &Dist<W>) -> f64 {
    alpha
        .weights()
        .iter()
        .filter(|w| !w.is_zero())
        .map(|w| {
            let p = w.to_f64();
            -p * p.ln()
        })
        .sum()
}

/// `ln (c∘π)(y)`; `−∞` when `y` has no evidence.
pub fn log_evidence<W: Weight>(pi: &Dist<W>, c: &Kernel<W>, y: usize) -> Result<f64> {
    let evidence = pi.pushforward(c)?;
    check_index(c.cod(), y)?;
    Ok(ln_weight(evidence.weight_at(y)))
}

pub(crate) fn check_index(space: &FiniteSpace, index: usize) -> Result<()> {
    if index < space.len() {
        Ok(())
    } else {
        Err(Error::UnknownOutcome {
            space: space.label(),
            outcome: format!("#{index}"),
        })
    }
}

pub(crate) fn ln_weight<W: Weight>(w: &W) -> f64 {
    if w.is_zero() {
        f64::NEG_INFINITY
    } else {
        w.ln_ratio(&W::one())
    }
}
