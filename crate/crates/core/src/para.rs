//! Parameterized Bayesian lenses.
//!
//! A parameterized lens `(X, A) → (Y, B)` with parameters `(Ω, Θ)` is an
//! ordinary lens `(Ω⊗X, Θ⊗A) ↬ (Y, B)`. Parameters accumulate on the left
//! under composition; 2-cells are lenses on the parameter ports applied by
//! precomposition.

use crate::error::{Error, Result};
use crate::lens::BayesianLens;
use crate::markov::{Dist, FiniteSpace, Kernel};
use crate::weight::Weight;

#[derive(Clone)]
pub struct ParamLens<W> {
    param_fwd: FiniteSpace,
    param_bwd: FiniteSpace,
    lens: BayesianLens<W>,
    // Cached X and A, the unparameterized domain pair.
    dom_fwd: FiniteSpace,
    cod_bwd: FiniteSpace,
}

impl<W: Weight> ParamLens<W> {
    pub fn new(
        param_fwd: FiniteSpace,
        param_bwd: FiniteSpace,
        lens: BayesianLens<W>,
    ) -> Result<Self> {
        let dom_fwd =
            lens.fwd_dom()
                .strip_prefix(&param_fwd)
                .ok_or_else(|| Error::NotAProductSpace {
                    space: lens.fwd_dom().label(),
                    factor: param_fwd.label(),
                })?;
        let cod_bwd =
            lens.bwd_cod()
                .strip_prefix(&param_bwd)
                .ok_or_else(|| Error::NotAProductSpace {
                    space: lens.bwd_cod().label(),
                    factor: param_bwd.label(),
                })?;
        Ok(ParamLens {
            param_fwd,
            param_bwd,
            lens,
            dom_fwd,
            cod_bwd,
        })
    }

    /// A lens with trivial parameters `(I, I)`.
    pub fn trivial(lens: BayesianLens<W>) -> Self {
        let (dom_fwd, cod_bwd) = (lens.fwd_dom().clone(), lens.bwd_cod().clone());
        ParamLens {
            param_fwd: FiniteSpace::unit(),
            param_bwd: FiniteSpace::unit(),
            lens,
            dom_fwd,
            cod_bwd,
        }
    }

    pub fn param_fwd(&self) -> &FiniteSpace {
        &self.param_fwd
    }

    pub fn param_bwd(&self) -> &FiniteSpace {
        &self.param_bwd
    }

    pub fn lens(&self) -> &BayesianLens<W> {
        &self.lens
    }

    /// `X`.
    pub fn dom_fwd(&self) -> &FiniteSpace {
        &self.dom_fwd
    }

    /// `A`.
    pub fn cod_bwd(&self) -> &FiniteSpace {
        &self.cod_bwd
    }

    /// Sequential composition: `self` then `next`. The composite has
    /// parameters `(Ω'⊗Ω, Θ'⊗Θ)` where `(Ω', Θ')` belong to `next`, and lens
    /// `(id_{(Ω',Θ')} ⊗ self) ; next`.
    pub fn then(&self, next: &ParamLens<W>) -> Result<ParamLens<W>> {
        let carried = BayesianLens::identity(&next.param_fwd, &next.param_bwd);
        let lens = carried.tensor(&self.lens).then(&next.lens)?;
        ParamLens::new(
            next.param_fwd.tensor(&self.param_fwd),
            next.param_bwd.tensor(&self.param_bwd),
            lens,
        )
    }

    /// Parallel composition with parameters `(Ω⊗Ω', Θ⊗Θ')`. The interchanger
    /// reorders `Ω⊗Ω'⊗X⊗X'` into `Ω⊗X⊗Ω'⊗X'` before the tensor of lenses,
    /// and the backward side undoes the same reordering.
    pub fn tensor(&self, other: &ParamLens<W>) -> Result<ParamLens<W>> {
        let fwd_src = FiniteSpace::product([
            &self.param_fwd,
            &other.param_fwd,
            &self.dom_fwd,
            &other.dom_fwd,
        ]);
        let fwd_perm = interchange_permutation(
            self.param_fwd.arity(),
            other.param_fwd.arity(),
            self.dom_fwd.arity(),
            other.dom_fwd.arity(),
        );
        let bwd_src = FiniteSpace::product([
            &self.param_bwd,
            &other.param_bwd,
            &self.cod_bwd,
            &other.cod_bwd,
        ]);
        let bwd_perm = interchange_permutation(
            self.param_bwd.arity(),
            other.param_bwd.arity(),
            self.cod_bwd.arity(),
            other.cod_bwd.arity(),
        );
        let interchanger = BayesianLens::permutation(&fwd_src, &fwd_perm, &bwd_src, &bwd_perm)?;
        let lens = interchanger.then(&self.lens.tensor(&other.lens))?;
        ParamLens::new(
            self.param_fwd.tensor(&other.param_fwd),
            self.param_bwd.tensor(&other.param_bwd),
            lens,
        )
    }

    /// Applies a 2-cell `α : (Ω₀, Θ₀) ↬ (Ω, Θ)`: the result has parameters
    /// `(Ω₀, Θ₀)` and lens `(α ⊗ id_{(X,A)}) ; self`.
    pub fn reparameterize(&self, alpha: &BayesianLens<W>) -> Result<ParamLens<W>> {
        alpha.fwd_cod().expect_eq(&self.param_fwd)?;
        alpha.bwd_dom().expect_eq(&self.param_bwd)?;
        let widened = alpha.tensor(&BayesianLens::identity(&self.dom_fwd, &self.cod_bwd));
        let lens = widened.then(&self.lens)?;
        ParamLens::new(alpha.fwd_dom().clone(), alpha.bwd_cod().clone(), lens)
    }

    /// Clamps the forward parameter to `omega` and discards updated
    /// parameters: forward `x ↦ l(·|ω, x)`, backward at `π` is the
    /// `A`-marginal of `l†` at `δ_ω ⊗ π`.
    pub fn fix_parameter(&self, omega: &str) -> Result<BayesianLens<W>> {
        let point = Dist::dirac(&self.param_fwd, omega)?;
        let x = self.dom_fwd.clone();
        let clamp = point.as_kernel().tensor(&Kernel::identity(&x));
        let forward = clamp.then(self.lens.forward())?;
        let drop_theta = Kernel::discard(&self.param_bwd).tensor(&Kernel::identity(&self.cod_bwd));
        let inner = self.lens.clone();
        let backward = crate::lens::StateDependentKernel::new(
            x,
            self.lens.bwd_dom().clone(),
            self.cod_bwd.clone(),
            move |pi| inner.update(&point.tensor(pi))?.then(&drop_theta),
        );
        BayesianLens::new(forward, backward)
    }
}

impl<W: Weight> std::fmt::Debug for ParamLens<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Para[{}, {}]{:?}",
            self.param_fwd, self.param_bwd, self.lens
        )
    }
}

/// The 2-cell `(δ_ω, discard) : (I, I) ↬ (Ω, Θ)` picking a parameter.
pub fn parameter_point<W: Weight>(
    param_fwd: &FiniteSpace,
    param_bwd: &FiniteSpace,
    omega: &str,
) -> Result<BayesianLens<W>> {
    let state = Dist::dirac(param_fwd, omega)?;
    Ok(BayesianLens::with_constant_backward(
        state.as_kernel(),
        Kernel::discard(param_bwd),
    ))
}

/// Atom permutation taking `P⊗P'⊗D⊗D'` to `P⊗D⊗P'⊗D'`, given atom counts.
pub fn interchange_permutation(p: usize, p2: usize, d: usize, d2: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(p + p2 + d + d2);
    perm.extend(0..p);
    perm.extend(p + p2..p + p2 + d);
    perm.extend(p..p + p2);
    perm.extend(p + p2 + d..p + p2 + d + d2);
    perm
}

pub fn para_compose<W: Weight>(f: &ParamLens<W>, g: &ParamLens<W>) -> Result<ParamLens<W>> {
    f.then(g)
}

pub fn para_tensor<W: Weight>(f: &ParamLens<W>, g: &ParamLens<W>) -> Result<ParamLens<W>> {
    f.tensor(g)
}

pub fn reparameterize<W: Weight>(
    l: &ParamLens<W>,
    alpha: &BayesianLens<W>,
) -> Result<ParamLens<W>> {
    l.reparameterize(alpha)
}

pub fn fix_parameter<W: Weight>(l: &ParamLens<W>, omega: &str) -> Result<BayesianLens<W>> {
    l.fix_parameter(omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lens::{exact_lens, lenses_agree_at};
    use crate::weight::{ratio, Rational};

    fn coin() -> FiniteSpace {
        FiniteSpace::new("Coin", ["H", "T"]).unwrap()
    }

    fn thetas() -> FiniteSpace {
        FiniteSpace::new("Theta", ["t3", "t7"]).unwrap()
    }

    /// `θ ⇸ Coin` with heads probability 3/10 or 7/10, as an exact lens.
    fn coin_family() -> ParamLens<Rational> {
        let k = Kernel::new(
            thetas(),
            coin(),
            vec![
                vec![ratio(3, 10), ratio(7, 10)],
                vec![ratio(7, 10), ratio(3, 10)],
            ],
        )
        .unwrap();
        ParamLens::new(thetas(), thetas(), exact_lens(&k)).unwrap()
    }

    #[test]
    fn fixing_a_coin_parameter_reads_the_table() {
        let l = coin_family();
        assert!(l.dom_fwd().is_unit());
        let fixed = l.fix_parameter("t7").unwrap();
        assert_eq!(
            fixed.forward().row_dist(0).unwrap().weights(),
            &[ratio(7, 10), ratio(3, 10)]
        );
        assert!(matches!(
            l.fix_parameter("t5"),
            Err(Error::UnknownOutcome { .. })
        ));
    }

    #[test]
    fn fix_parameter_matches_point_reparameterization() {
        let l = coin_family();
        let via_alpha = l
            .reparameterize(&parameter_point(l.param_fwd(), l.param_bwd(), "t3").unwrap())
            .unwrap();
        assert!(via_alpha.param_fwd().is_unit());
        let fixed = l.fix_parameter("t3").unwrap();
        let unit_state = Dist::<Rational>::unit();
        assert!(lenses_agree_at(via_alpha.lens(), &fixed, &unit_state, 0.0).unwrap());
    }

    #[test]
    fn trivial_parameters_reduce_to_lens_composition() {
        let b = FiniteSpace::range("B", 2).unwrap();
        let c = Kernel::new(
            b.clone(),
            b.clone(),
            vec![
                vec![ratio(4, 5), ratio(1, 5)],
                vec![ratio(1, 5), ratio(4, 5)],
            ],
        )
        .unwrap();
        let f = ParamLens::trivial(exact_lens(&c));
        let g = ParamLens::trivial(exact_lens(&c));
        let fg = f.then(&g).unwrap();
        assert!(fg.param_fwd().is_unit() && fg.param_bwd().is_unit());
        let direct = exact_lens(&c).then(&exact_lens(&c)).unwrap();
        let pi = Dist::new(b, vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        assert!(lenses_agree_at(fg.lens(), &direct, &pi, 0.0).unwrap());
    }

    #[test]
    fn interchanger_permutation_layout() {
        // Ω has 1 atom, Ω' has 2, X has 1, X' has 1:
        // [Ω, Ω'a, Ω'b, X, X'] -> [Ω, X, Ω'a, Ω'b, X']
        assert_eq!(interchange_permutation(1, 2, 1, 1), vec![0, 3, 1, 2, 4]);
        assert_eq!(interchange_permutation(0, 0, 1, 1), vec![0, 1]);
    }

    #[test]
    fn rejects_bad_parameter_split() {
        let b = FiniteSpace::range("B", 2).unwrap();
        let lens = BayesianLens::<Rational>::identity(&b, &b);
        assert!(ParamLens::new(thetas(), FiniteSpace::unit(), lens).is_err());
    }
}
