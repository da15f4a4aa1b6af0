use std::fmt;

use super::kernel::Kernel;
use super::space::FiniteSpace;
use crate::error::{Error, Result};
use crate::weight::{Normalization, Weight};

/// Which factor of a binary product to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A normalized distribution (a state `I ⇸ X`) over a finite space.
#[derive(Clone, PartialEq)]
pub struct Dist<W> {
    space: FiniteSpace,
    weights: Vec<W>,
}

impl<W: Weight> Dist<W> {
    /// Validates nonnegativity and total mass. Float weights within the
    /// renormalization band are rescaled; anything else off one is rejected.
    pub fn new(space: FiniteSpace, weights: Vec<W>) -> Result<Self> {
        let weights = normalize_row(&space, weights)?;
        Ok(Dist { space, weights })
    }

    /// Builds from `(outcome label, weight)` pairs; absent outcomes get zero.
    pub fn from_labelled<'a>(
        space: FiniteSpace,
        pairs: impl IntoIterator<Item = (&'a str, W)>,
    ) -> Result<Self> {
        let mut weights = vec![W::zero(); space.len()];
        for (label, w) in pairs {
            let i = space.index_of(label)?;
            weights[i] = weights[i].clone() + w;
        }
        Self::new(space, weights)
    }

    pub fn dirac(space: &FiniteSpace, outcome: &str) -> Result<Self> {
        let i = space.index_of(outcome)?;
        Ok(Self::dirac_at(space, i))
    }

    pub fn dirac_at(space: &FiniteSpace, index: usize) -> Self {
        assert!(index < space.len(), "outcome index out of range");
        let mut weights = vec![W::zero(); space.len()];
        weights[index] = W::one();
        Dist {
            space: space.clone(),
            weights,
        }
    }

    pub fn uniform(space: &FiniteSpace) -> Self {
        let n = space.len() as u64;
        Dist {
            space: space.clone(),
            weights: vec![W::from_ratio(1, n); space.len()],
        }
    }

    /// The unique state on the unit space.
    pub fn unit() -> Self {
        Self::dirac_at(&FiniteSpace::unit(), 0)
    }

    pub(crate) fn from_parts_unchecked(space: FiniteSpace, weights: Vec<W>) -> Self {
        debug_assert_eq!(space.len(), weights.len());
        Dist { space, weights }
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn weight_at(&self, index: usize) -> &W {
        &self.weights[index]
    }

    pub fn weight(&self, outcome: &str) -> Result<&W> {
        Ok(&self.weights[self.space.index_of(outcome)?])
    }

    /// Indices of outcomes with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_labels(&self) -> Vec<String> {
        self.support()
            .into_iter()
            .map(|i| self.space.outcome_label(i))
            .collect()
    }

    /// Pushes this state through a kernel: `c∘π`.
    pub fn pushforward(&self, kernel: &Kernel<W>) -> Result<Dist<W>> {
        kernel.dom().expect_eq(&self.space)?;
        let mut out = vec![W::zero(); kernel.cod().len()];
        for (x, px) in self.weights.iter().enumerate() {
            if px.is_zero() {
                continue;
            }
            let row = kernel.row(x)?;
            for (o, w) in out.iter_mut().zip(row) {
                if !w.is_zero() {
                    *o = o.clone() + px.clone() * w.clone();
                }
            }
        }
        Dist::new(kernel.cod().clone(), out)
    }

    /// Independent product `π⊗ρ`.
    pub fn tensor(&self, other: &Dist<W>) -> Dist<W> {
        let mut weights = Vec::with_capacity(self.weights.len() * other.weights.len());
        for a in &self.weights {
            for b in &other.weights {
                weights.push(a.clone() * b.clone());
            }
        }
        Dist {
            space: self.space.tensor(&other.space),
            weights,
        }
    }

    /// Marginal of a state on a product space. `factor` names the kept factor:
    /// with [`Side::Left`] this state must live on `factor ⊗ R`, with
    /// [`Side::Right`] on `L ⊗ factor`.
    pub fn marginal(&self, factor: &FiniteSpace, side: Side) -> Result<Dist<W>> {
        let not_product = || Error::NotAProductSpace {
            space: self.space.label(),
            factor: factor.label(),
        };
        let (left, right) = match side {
            Side::Left => (
                factor.clone(),
                self.space.strip_prefix(factor).ok_or_else(not_product)?,
            ),
            Side::Right => (
                self.space.strip_suffix(factor).ok_or_else(not_product)?,
                factor.clone(),
            ),
        };
        let (nl, nr) = (left.len(), right.len());
        let mut out = vec![W::zero(); factor.len()];
        for (i, w) in self.weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let k = match side {
                Side::Left => i / nr,
                Side::Right => i % nr,
            };
            out[k] = out[k].clone() + w.clone();
        }
        debug_assert!(nl * nr == self.weights.len());
        Ok(Dist {
            space: factor.clone(),
            weights: out,
        })
    }

    /// Relabels along an atom permutation (new atom `i` is old atom `perm[i]`).
    pub fn permute(&self, perm: &[usize]) -> Result<Dist<W>> {
        let kernel = Kernel::permutation(&self.space, perm)?;
        self.pushforward(&kernel)
    }

    /// The state as a kernel out of the unit space.
    pub fn as_kernel(&self) -> Kernel<W> {
        Kernel::constant(&FiniteSpace::unit(), self)
    }

    pub fn approx_eq(&self, other: &Dist<W>, tol: f64) -> bool {
        self.space == other.space
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.close(b, tol))
    }

    /// Largest absolute weight difference, in `f64`.
    pub fn max_deviation(&self, other: &Dist<W>) -> Result<f64> {
        self.space.expect_eq(&other.space)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max))
    }

    pub fn to_f64(&self) -> Dist<f64> {
        Dist {
            space: self.space.clone(),
            weights: self.weights.iter().map(Weight::to_f64).collect(),
        }
    }
}

pub(crate) fn normalize_row<W: Weight>(space: &FiniteSpace, weights: Vec<W>) -> Result<Vec<W>> {
    if weights.len() != space.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for space {} with {} outcomes",
            weights.len(),
            space.label(),
            space.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(Error::InvalidDistribution(format!(
            "negative or NaN weight {w:?} on {}",
            space.label()
        )));
    }
    let total = weights.iter().cloned().fold(W::zero(), |a, b| a + b);
    match W::check_total(&total) {
        Normalization::Accept => Ok(weights),
        Normalization::Renormalize => Ok(weights.into_iter().map(|w| w / total.clone()).collect()),
        Normalization::Reject => Err(Error::InvalidDistribution(format!(
            "weights on {} sum to {}",
            space.label(),
            total.to_json()
        ))),
    }
}

impl<W: fmt::Debug> fmt::Debug for Dist<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (i, w) in self.weights.iter().enumerate() {
            m.entry(&self.space.outcome_label(i), w);
        }
        m.finish()
    }
}
