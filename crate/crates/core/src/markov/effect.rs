use super::dist::Dist;
use super::kernel::Kernel;
use super::space::FiniteSpace;
use crate::error::{Error, Result};
use crate::weight::Weight;

/// A finite nonnegative function on a space (an effect `X ⇸ I`). No
/// normalization constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect<W> {
    space: FiniteSpace,
    values: Vec<W>,
}

impl<W: Weight> Effect<W> {
    pub fn new(space: FiniteSpace, values: Vec<W>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::InvalidParameter(format!(
                "{} effect values for {} outcomes of {}",
                values.len(),
                space.len(),
                space.label()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| v.is_negative() || !v.to_f64().is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "effect value {v:?} is not finite and nonnegative"
            )));
        }
        Ok(Effect { space, values })
    }

    pub fn constant(space: &FiniteSpace, value: W) -> Result<Self> {
        Self::new(space.clone(), vec![value; space.len()])
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn values(&self) -> &[W] {
        &self.values
    }

    pub fn value(&self, outcome: &str) -> Result<&W> {
        Ok(&self.values[self.space.index_of(outcome)?])
    }

    /// Rebuilds the kernel `X ⇸ Y` from a density on `X⊗Y`.
    pub fn to_kernel(&self, dom: &FiniteSpace) -> Result<Kernel<W>> {
        let cod = self
            .space
            .strip_prefix(dom)
            .ok_or_else(|| Error::NotAProductSpace {
                space: self.space.label(),
                factor: dom.label(),
            })?;
        let n = cod.len();
        let rows = self.values.chunks(n).map(<[W]>::to_vec).collect();
        Kernel::new(dom.clone(), cod, rows)
    }
}

/// The density `p_c(x, y) = c(y|x)` of a kernel, with respect to counting
/// measure, as an effect on `X⊗Y`.
pub fn density<W: Weight>(c: &Kernel<W>) -> Result<Effect<W>> {
    let mut values = Vec::with_capacity(c.dom().len() * c.cod().len());
    for x in 0..c.dom().len() {
        values.extend_from_slice(c.row(x)?);
    }
    Ok(Effect {
        space: c.dom().tensor(c.cod()),
        values,
    })
}

/// `E_{ω∼π}[p]`, the validity of `p` in state `π`.
pub fn expectation<W: Weight>(pi: &Dist<W>, p: &Effect<W>) -> Result<W> {
    pi.space().expect_eq(&p.space)?;
    Ok(pi
        .weights()
        .iter()
        .zip(&p.values)
        .fold(W::zero(), |acc, (w, v)| acc + w.clone() * v.clone()))
}
