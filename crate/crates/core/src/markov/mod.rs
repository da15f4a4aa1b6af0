//! Finite stochastic channels: the copy–discard category on finite spaces.
//!
//! Composition is the Chapman–Kolmogorov sum, tensor is the independent
//! product, and every kernel is causal (rows are normalized), so the unit
//! space is terminal.

mod dist;
mod effect;
mod kernel;
pub mod serial;
mod space;

pub use dist::{Dist, Side};
pub use effect::{density, expectation, Effect};
pub use kernel::{compose_kernels, tensor_kernels, Kernel};
pub use space::{Atom, FiniteSpace};

use crate::error::{Error, Result};
use crate::weight::Weight;

pub fn dirac<W: Weight>(space: &FiniteSpace, outcome: &str) -> Result<Dist<W>> {
    Dist::dirac(space, outcome)
}

pub fn copy<W: Weight>(space: &FiniteSpace) -> Kernel<W> {
    Kernel::copy(space)
}

pub fn discard<W: Weight>(space: &FiniteSpace) -> Kernel<W> {
    Kernel::discard(space)
}

pub fn marginal<W: Weight>(omega: &Dist<W>, factor: &FiniteSpace, side: Side) -> Result<Dist<W>> {
    omega.marginal(factor, side)
}

/// The joint state `ω(x, y) = c(y|x)·π(x)` on `X⊗Y` of a generative model.
///
/// Rows of `c` are only read where `π` has mass, so partial kernels are fine
/// as long as they are defined on the support of `π`.
pub fn joint_of_model<W: Weight>(pi: &Dist<W>, c: &Kernel<W>) -> Result<Dist<W>> {
    c.dom().expect_eq(pi.space())?;
    let ny = c.cod().len();
    let mut weights = vec![W::zero(); pi.space().len() * ny];
    for (x, px) in pi.weights().iter().enumerate() {
        if px.is_zero() {
            continue;
        }
        let row = c.row(x)?;
        for (y, w) in row.iter().enumerate() {
            weights[x * ny + y] = px.clone() * w.clone();
        }
    }
    Dist::new(pi.space().tensor(c.cod()), weights)
}

/// Largest entrywise difference between the joints `(π, c)` and `(π, d)`.
pub fn joint_deviation<W: Weight>(c: &Kernel<W>, d: &Kernel<W>, pi: &Dist<W>) -> Result<f64> {
    check_parallel(c, d)?;
    joint_of_model(pi, c)?.max_deviation(&joint_of_model(pi, d)?)
}

/// Whether `c` and `d` are `π`-almost-equal: their joints with `π` agree,
/// exactly in rational mode and within `tol` per entry for floats.
pub fn almost_equal<W: Weight>(
    c: &Kernel<W>,
    d: &Kernel<W>,
    pi: &Dist<W>,
    tol: f64,
) -> Result<bool> {
    check_parallel(c, d)?;
    Ok(joint_of_model(pi, c)?.approx_eq(&joint_of_model(pi, d)?, tol))
}

fn check_parallel<W: Weight>(c: &Kernel<W>, d: &Kernel<W>) -> Result<()> {
    if c.dom() != d.dom() || c.cod() != d.cod() {
        return Err(Error::mismatch(
            format!("{} ⇸ {}", c.dom(), c.cod()),
            format!("{} ⇸ {}", d.dom(), d.cod()),
        ));
    }
    Ok(())
}
