//! Bayesian lenses: a forward channel paired with a state-dependent backward
//! channel.
//!
//! A lens `(X, A) ↬ (Y, B)` has forward kernel `X ⇸ Y` and, for each prior
//! state on `X`, a backward kernel `B ⇸ A`. Composition inverts the second
//! factor at the pushed-forward prior and then the first at the original
//! prior.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::inversion::invert;
use crate::markov::{almost_equal, joint_deviation, Dist, FiniteSpace, Kernel, Side};
use crate::weight::Weight;

pub type BackwardRule<W> = Arc<dyn Fn(&Dist<W>) -> Result<Kernel<W>> + Send + Sync>;

/// A family of kernels `B ⇸ A` indexed by states on `base`.
///
/// The index set is infinite, so the family is an opaque pure function and
/// equality is only ever checked pointwise.
#[derive(Clone)]
pub struct StateDependentKernel<W> {
    base: FiniteSpace,
    dom: FiniteSpace,
    cod: FiniteSpace,
    rule: BackwardRule<W>,
}

impl<W: Weight> StateDependentKernel<W> {
    pub fn new(
        base: FiniteSpace,
        dom: FiniteSpace,
        cod: FiniteSpace,
        rule: impl Fn(&Dist<W>) -> Result<Kernel<W>> + Send + Sync + 'static,
    ) -> Self {
        StateDependentKernel {
            base,
            dom,
            cod,
            rule: Arc::new(rule),
        }
    }

    /// Ignores the state.
    pub fn constant(base: FiniteSpace, kernel: Kernel<W>) -> Self {
        let (dom, cod) = (kernel.dom().clone(), kernel.cod().clone());
        Self::new(base, dom, cod, move |_| Ok(kernel.clone()))
    }

    pub fn base(&self) -> &FiniteSpace {
        &self.base
    }

    pub fn dom(&self) -> &FiniteSpace {
        &self.dom
    }

    pub fn cod(&self) -> &FiniteSpace {
        &self.cod
    }

    /// Evaluates the rule at a state, checking both the state and the kernel
    /// the rule hands back.
    pub fn eval(&self, state: &Dist<W>) -> Result<Kernel<W>> {
        self.base.expect_eq(state.space())?;
        let k = (self.rule)(state)?;
        self.dom.expect_eq(k.dom())?;
        self.cod.expect_eq(k.cod())?;
        Ok(k)
    }

    /// Pullback along `f : Y ⇸ X`: the family `σ ↦ self(f∘σ)` indexed by
    /// states on `Y`.
    pub fn reindex(&self, f: &Kernel<W>) -> Result<StateDependentKernel<W>> {
        self.base.expect_eq(f.cod())?;
        let inner = self.clone();
        let f = f.clone();
        Ok(Self::new(
            f.dom().clone(),
            self.dom.clone(),
            self.cod.clone(),
            move |sigma| inner.eval(&sigma.pushforward(&f)?),
        ))
    }
}

impl<W: Weight> fmt::Debug for StateDependentKernel<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⇸_{} {}", self.dom, self.base, self.cod)
    }
}

/// `reindex(f, α)`: `σ ↦ α(f∘σ)`.
pub fn reindex<W: Weight>(
    f: &Kernel<W>,
    alpha: &StateDependentKernel<W>,
) -> Result<StateDependentKernel<W>> {
    alpha.reindex(f)
}

/// How a lens was built; only exact lenses have a serial form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LensKind {
    Exact,
    Identity,
    Composite,
    Custom,
}

#[derive(Clone)]
pub struct BayesianLens<W> {
    forward: Kernel<W>,
    backward: StateDependentKernel<W>,
    kind: LensKind,
}

impl<W: Weight> BayesianLens<W> {
    pub fn new(forward: Kernel<W>, backward: StateDependentKernel<W>) -> Result<Self> {
        forward.dom().expect_eq(backward.base())?;
        Ok(BayesianLens {
            forward,
            backward,
            kind: LensKind::Custom,
        })
    }

    /// A lens whose backward kernel ignores the prior.
    pub fn with_constant_backward(forward: Kernel<W>, backward: Kernel<W>) -> Self {
        let base = forward.dom().clone();
        BayesianLens {
            forward,
            backward: StateDependentKernel::constant(base, backward),
            kind: LensKind::Custom,
        }
    }

    /// `(id_X, id_A)`.
    pub fn identity(x: &FiniteSpace, a: &FiniteSpace) -> Self {
        BayesianLens {
            forward: Kernel::identity(x),
            backward: StateDependentKernel::constant(x.clone(), Kernel::identity(a)),
            kind: LensKind::Identity,
        }
    }

    /// The monoidal unit `(I, I)`.
    pub fn unit() -> Self {
        Self::identity(&FiniteSpace::unit(), &FiniteSpace::unit())
    }

    /// `(c, c†)`: the backward kernel at `π` is the exact Bayesian inverse.
    /// Rows at zero-evidence observations are left undefined.
    pub fn exact(c: &Kernel<W>) -> Self {
        let forward = c.clone();
        let rule_c = c.clone();
        let backward = StateDependentKernel::new(
            c.dom().clone(),
            c.cod().clone(),
            c.dom().clone(),
            move |pi| Ok(invert(&rule_c, pi)?.posterior),
        );
        BayesianLens {
            forward,
            backward,
            kind: LensKind::Exact,
        }
    }

    /// A state `I ⇸ X` as a lens `(I, I) ↬ (X, X)`; the backward kernel
    /// discards.
    pub fn from_state(state: &Dist<W>) -> Self {
        let x = state.space().clone();
        BayesianLens {
            forward: state.as_kernel(),
            backward: StateDependentKernel::constant(FiniteSpace::unit(), Kernel::discard(&x)),
            kind: LensKind::Custom,
        }
    }

    /// A deterministic atom relabeling with its inverse relabeling going back.
    /// `fwd_perm` acts on the forward space, `bwd_perm` on the backward one.
    pub fn permutation(
        x: &FiniteSpace,
        fwd_perm: &[usize],
        a: &FiniteSpace,
        bwd_perm: &[usize],
    ) -> Result<Self> {
        let forward = Kernel::permutation(x, fwd_perm)?;
        let target = a.permute(bwd_perm)?;
        let backward = Kernel::permutation(&target, &inverse_permutation(bwd_perm))?;
        Ok(Self::with_constant_backward(forward, backward))
    }

    pub fn forward(&self) -> &Kernel<W> {
        &self.forward
    }

    pub fn backward(&self) -> &StateDependentKernel<W> {
        &self.backward
    }

    pub fn kind(&self) -> LensKind {
        self.kind
    }

    /// `X` in `(X, A) ↬ (Y, B)`.
    pub fn fwd_dom(&self) -> &FiniteSpace {
        self.forward.dom()
    }

    /// `A`.
    pub fn bwd_cod(&self) -> &FiniteSpace {
        self.backward.cod()
    }

    /// `Y`.
    pub fn fwd_cod(&self) -> &FiniteSpace {
        self.forward.cod()
    }

    /// `B`.
    pub fn bwd_dom(&self) -> &FiniteSpace {
        self.backward.dom()
    }

    /// The backward kernel `B ⇸ A` at a prior on `X`.
    pub fn update(&self, prior: &Dist<W>) -> Result<Kernel<W>> {
        self.backward.eval(prior)
    }

    /// Lens composition: first `self : (X,A) ↬ (Y,B)`, then
    /// `next : (Y,B) ↬ (Z,C)`. The backward kernel at `π` is
    /// `self†_π ∘ next†_{self∘π}`.
    pub fn then(&self, next: &BayesianLens<W>) -> Result<BayesianLens<W>> {
        next.fwd_dom().expect_eq(self.fwd_cod())?;
        next.bwd_cod().expect_eq(self.bwd_dom())?;
        let forward = self.forward.then(&next.forward)?;
        let first = self.clone();
        let second = next.clone();
        let backward = StateDependentKernel::new(
            self.fwd_dom().clone(),
            next.bwd_dom().clone(),
            self.bwd_cod().clone(),
            move |pi| {
                let pushed = pi.pushforward(&first.forward)?;
                let outer = second.update(&pushed)?;
                let inner = first.update(pi)?;
                outer.then(&inner)
            },
        );
        Ok(BayesianLens {
            forward,
            backward,
            kind: LensKind::Composite,
        })
    }

    /// Parallel product. The backward kernel at a joint `ω` on `X⊗X'` is
    /// `self†_{ω_X} ⊗ other†_{ω_X'}`, computed from the marginals.
    pub fn tensor(&self, other: &BayesianLens<W>) -> BayesianLens<W> {
        let forward = self.forward.tensor(&other.forward);
        let (left, right) = (self.clone(), other.clone());
        let backward = StateDependentKernel::new(
            self.fwd_dom().tensor(other.fwd_dom()),
            self.bwd_dom().tensor(other.bwd_dom()),
            self.bwd_cod().tensor(other.bwd_cod()),
            move |omega| {
                let l = left.update(&omega.marginal(left.fwd_dom(), Side::Left)?)?;
                let r = right.update(&omega.marginal(right.fwd_dom(), Side::Right)?)?;
                Ok(l.tensor(&r))
            },
        );
        BayesianLens {
            forward,
            backward,
            kind: LensKind::Composite,
        }
    }

    pub fn same_signature(&self, other: &BayesianLens<W>) -> bool {
        self.fwd_dom() == other.fwd_dom()
            && self.fwd_cod() == other.fwd_cod()
            && self.bwd_dom() == other.bwd_dom()
            && self.bwd_cod() == other.bwd_cod()
    }
}

impl<W: Weight> fmt::Debug for BayesianLens<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BayesianLens[{:?}] ({}, {}) ↬ ({}, {})",
            self.kind,
            self.forward.dom(),
            self.backward.cod(),
            self.forward.cod(),
            self.backward.dom()
        )
    }
}

pub(crate) fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub fn lens_compose<W: Weight>(
    f: &BayesianLens<W>,
    g: &BayesianLens<W>,
) -> Result<BayesianLens<W>> {
    f.then(g)
}

pub fn lens_tensor<W: Weight>(f: &BayesianLens<W>, g: &BayesianLens<W>) -> BayesianLens<W> {
    f.tensor(g)
}

pub fn exact_lens<W: Weight>(c: &Kernel<W>) -> BayesianLens<W> {
    BayesianLens::exact(c)
}

/// Evaluates both sides of optical composition for exact lenses: the direct
/// inverse `(d∘c)†_π` and the composite backward `c†_π ∘ d†_{c∘π}`.
pub fn buco_sides<W: Weight>(
    c: &Kernel<W>,
    d: &Kernel<W>,
    pi: &Dist<W>,
) -> Result<(Kernel<W>, Kernel<W>, Dist<W>)> {
    let dc = c.then(d)?;
    let direct = invert(&dc, pi)?.posterior;
    let composite = exact_lens(c).then(&exact_lens(d))?.update(pi)?;
    let observed = pi.pushforward(&dc)?;
    Ok((direct, composite, observed))
}

/// Checks that Bayesian updates compose optically at `(c, d, π)`: the direct
/// inverse of `d∘c` and the lens-composite backward are almost-equal with
/// respect to `d∘c∘π`.
pub fn verify_buco<W: Weight>(
    c: &Kernel<W>,
    d: &Kernel<W>,
    pi: &Dist<W>,
    tol: f64,
) -> Result<bool> {
    let (direct, composite, observed) = buco_sides(c, d, pi)?;
    almost_equal(&direct, &composite, &observed, tol)
}

/// Largest joint deviation between the two sides of [`verify_buco`].
pub fn buco_deviation<W: Weight>(c: &Kernel<W>, d: &Kernel<W>, pi: &Dist<W>) -> Result<f64> {
    let (direct, composite, observed) = buco_sides(c, d, pi)?;
    joint_deviation(&direct, &composite, &observed)
}

/// Pointwise comparison of two lenses at a prior: forward kernels everywhere,
/// backward kernels almost-everywhere with respect to the prediction.
pub fn lenses_agree_at<W: Weight>(
    f: &BayesianLens<W>,
    g: &BayesianLens<W>,
    prior: &Dist<W>,
    tol: f64,
) -> Result<bool> {
    if !f.same_signature(g) {
        return Err(Error::mismatch(format!("{f:?}"), format!("{g:?}")));
    }
    if !f.forward().approx_eq(g.forward(), tol) {
        return Ok(false);
    }
    let observed = prior.pushforward(f.forward())?;
    let (fb, gb) = (f.update(prior)?, g.update(prior)?);
    if f.bwd_dom() == f.fwd_cod() {
        almost_equal(&fb, &gb, &observed, tol)
    } else {
        Ok(fb.approx_eq(&gb, tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{ratio, Rational};

    fn bit() -> FiniteSpace {
        FiniteSpace::range("B", 2).unwrap()
    }

    fn bsc(p: Rational) -> Kernel<Rational> {
        let q = ratio(1, 1) - p.clone();
        Kernel::new(bit(), bit(), vec![vec![p.clone(), q.clone()], vec![q, p]]).unwrap()
    }

    #[test]
    fn exact_lens_backward_is_posterior() {
        let l = exact_lens(&bsc(ratio(4, 5)));
        let back = l.update(&Dist::uniform(&bit())).unwrap();
        assert_eq!(back.at("1").unwrap().weights(), &[ratio(1, 5), ratio(4, 5)]);
    }

    #[test]
    fn identity_lens_is_unital() {
        let l = exact_lens(&bsc(ratio(2, 3)));
        let id = BayesianLens::identity(&bit(), &bit());
        let pi = Dist::new(bit(), vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        for composed in [id.then(&l).unwrap(), l.then(&id).unwrap()] {
            assert!(lenses_agree_at(&composed, &l, &pi, 0.0).unwrap());
            assert_eq!(composed.update(&pi).unwrap(), l.update(&pi).unwrap());
        }
    }

    #[test]
    fn buco_with_identities() {
        let id = Kernel::identity(&bit());
        let pi = Dist::new(bit(), vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        assert!(verify_buco(&id, &id, &pi, 0.0).unwrap());
    }

    #[test]
    fn buco_with_zero_evidence_observation() {
        let x = bit();
        let y = FiniteSpace::range("Y", 3).unwrap();
        let c = Kernel::new(
            x.clone(),
            y.clone(),
            vec![
                vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)],
                vec![ratio(0, 1), ratio(1, 1), ratio(0, 1)],
            ],
        )
        .unwrap();
        let d = Kernel::new(
            y.clone(),
            x.clone(),
            vec![
                vec![ratio(1, 1), ratio(0, 1)],
                vec![ratio(1, 3), ratio(2, 3)],
                vec![ratio(0, 1), ratio(1, 1)],
            ],
        )
        .unwrap();
        let pi = Dist::dirac(&x, "1").unwrap();
        let (direct, composite, observed) = buco_sides(&c, &d, &pi).unwrap();
        assert_eq!(observed.support(), vec![0, 1]);
        assert!(verify_buco(&c, &d, &pi, 0.0).unwrap());
        assert_eq!(buco_deviation(&c, &d, &pi).unwrap(), 0.0);
        assert!(direct.is_defined_at(0) && composite.is_defined_at(0));
    }

    #[test]
    fn reindex_identity_and_constant() {
        let l = exact_lens(&bsc(ratio(3, 4)));
        let pi = Dist::new(bit(), vec![ratio(1, 5), ratio(4, 5)]).unwrap();
        let same = reindex(&Kernel::identity(&bit()), l.backward()).unwrap();
        assert_eq!(same.eval(&pi).unwrap(), l.update(&pi).unwrap());

        let k = bsc(ratio(1, 3));
        let constant = StateDependentKernel::constant(bit(), k.clone());
        let pulled = reindex(&bsc(ratio(2, 3)), &constant).unwrap();
        assert_eq!(pulled.eval(&pi).unwrap(), k);
    }

    #[test]
    fn tensor_at_product_state_splits() {
        let f = exact_lens(&bsc(ratio(4, 5)));
        let g = exact_lens(&bsc(ratio(2, 3)));
        let p = Dist::new(bit(), vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        let q = Dist::new(bit(), vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        let fg = f.tensor(&g);
        let back = fg.update(&p.tensor(&q)).unwrap();
        let expected = f.update(&p).unwrap().tensor(&g.update(&q).unwrap());
        assert_eq!(back, expected);
    }

    #[test]
    fn unit_tensor_is_identity() {
        let f = exact_lens(&bsc(ratio(4, 5)));
        let fu = f.tensor(&BayesianLens::unit());
        let pi = Dist::new(bit(), vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        assert!(fu.same_signature(&f));
        assert!(lenses_agree_at(&fu, &f, &pi, 0.0).unwrap());
    }

    #[test]
    fn composition_rejects_mismatch() {
        let f = exact_lens(&bsc(ratio(4, 5)));
        let three = FiniteSpace::range("T", 3).unwrap();
        let g = exact_lens(&Kernel::<Rational>::identity(&three));
        assert!(matches!(f.then(&g), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn state_lens_has_discarding_backward() {
        let pi = Dist::new(bit(), vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        let l = BayesianLens::from_state(&pi);
        assert!(l.fwd_dom().is_unit());
        assert_eq!(l.forward().row_dist(0).unwrap(), pi);
        assert!(l.bwd_cod().is_unit());
        assert_eq!(l.bwd_dom(), &bit());
    }
}
