//! Variational free energy of an approximate posterior and the two standard
//! decompositions of it.

use crate::error::{Error, Result};
use crate::inversion::{
    check_index, entropy, invert, kl_divergence, ln_weight, log_evidence, total_variation,
};
use crate::markov::{Dist, Kernel};
use crate::weight::Weight;

/// A divergence between states on the same space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    Kl,
    TotalVariation,
}

impl Divergence {
    pub fn eval<W: Weight>(self, alpha: &Dist<W>, beta: &Dist<W>) -> Result<f64> {
        match self {
            Divergence::Kl => kl_divergence(alpha, beta),
            Divergence::TotalVariation => total_variation(alpha, beta),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Divergence::Kl => "kl",
            Divergence::TotalVariation => "tv",
        }
    }
}

/// `E_{x∼q}[−ln c(y|x)]`: `+∞` as soon as `q` charges an `x` that cannot
/// produce `y`.
pub fn expected_surprisal<W: Weight>(q: &Dist<W>, c: &Kernel<W>, y: usize) -> Result<f64> {
    c.dom().expect_eq(q.space())?;
    check_index(c.cod(), y)?;
    let mut total = 0.0;
    for x in q.support() {
        let lik = &c.row(x)?[y];
        total -= q.weight_at(x).to_f64() * ln_weight(lik);
    }
    Ok(total)
}

/// `F_D(q, c, π, y) = E_{x∼q}[−ln c(y|x)] + D(q, π)`.
pub fn free_energy<W: Weight>(
    q: &Dist<W>,
    c: &Kernel<W>,
    pi: &Dist<W>,
    y: usize,
    divergence: Divergence,
) -> Result<f64> {
    Ok(expected_surprisal(q, c, y)? + divergence.eval(q, pi)?)
}

/// Both sides of `F = D_KL(q ‖ c†_π(y)) − ln p_{c∘π}(y)`, each computed on
/// its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuboReport {
    pub free_energy: f64,
    pub kl_to_exact: f64,
    pub neg_log_evidence: f64,
    /// `|F − (kl_to_exact + neg_log_evidence)|`, zero when both are `+∞`.
    pub deviation: f64,
    pub holds: bool,
}

impl EuboReport {
    /// `F + ln p(y)`, the gap between the bound and the surprisal.
    pub fn gap(&self) -> f64 {
        self.free_energy - self.neg_log_evidence
    }
}

pub fn check_eubo<W: Weight>(
    q: &Dist<W>,
    c: &Kernel<W>,
    pi: &Dist<W>,
    y: usize,
    tol: f64,
) -> Result<EuboReport> {
    let neg_log_evidence = -log_evidence(pi, c, y)?;
    if neg_log_evidence.is_infinite() {
        return Err(Error::UnsupportedObservation(format!(
            "{} has no evidence",
            c.cod().outcome_label(y)
        )));
    }
    let free_energy = free_energy(q, c, pi, y, Divergence::Kl)?;
    let exact = invert(c, pi)?.posterior_at(y)?;
    let kl_to_exact = kl_divergence(q, &exact)?;
    let rhs = kl_to_exact + neg_log_evidence;
    let deviation = if free_energy == rhs {
        0.0
    } else {
        (free_energy - rhs).abs()
    };
    let holds = deviation <= tol && free_energy >= neg_log_evidence - tol;
    Ok(EuboReport {
        free_energy,
        kl_to_exact,
        neg_log_evidence,
        deviation,
        holds,
    })
}

/// Energy and entropy terms of the KL free energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helmholtz {
    /// `E_{x∼q}[−ln c(y|x) − ln π(x)]`.
    pub internal_energy: f64,
    /// Shannon entropy of `q`.
    pub entropy: f64,
}

impl Helmholtz {
    /// `U − S`.
    pub fn free_energy(&self) -> f64 {
        self.internal_energy - self.entropy
    }
}

pub fn helmholtz_decomposition<W: Weight>(
    q: &Dist<W>,
    c: &Kernel<W>,
    pi: &Dist<W>,
    y: usize,
) -> Result<Helmholtz> {
    c.dom().expect_eq(q.space())?;
    q.space().expect_eq(pi.space())?;
    check_index(c.cod(), y)?;
    let mut internal_energy = 0.0;
    for x in q.support() {
        let energy = -ln_weight(&c.row(x)?[y]) - ln_weight(pi.weight_at(x));
        internal_energy += q.weight_at(x).to_f64() * energy;
    }
    Ok(Helmholtz {
        internal_energy,
        entropy: entropy(q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::FiniteSpace;
    use crate::weight::{ratio, Rational};

    fn bit() -> FiniteSpace {
        FiniteSpace::range("B", 2).unwrap()
    }

    fn bsc() -> Kernel<Rational> {
        Kernel::new(
            bit(),
            bit(),
            vec![
                vec![ratio(4, 5), ratio(1, 5)],
                vec![ratio(1, 5), ratio(4, 5)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn uniform_q_on_bsc() {
        let u = Dist::uniform(&bit());
        let f = free_energy(&u, &bsc(), &u, 1, Divergence::Kl).unwrap();
        let expected = -(0.5 * 0.2f64.ln() + 0.5 * 0.8f64.ln());
        assert!((f - expected).abs() < 1e-15);
        assert!((f - 0.916_290_731_874).abs() < 1e-9);
        assert!(f >= 2f64.ln());
    }

    #[test]
    fn exact_posterior_attains_the_bound() {
        let u = Dist::uniform(&bit());
        let post = invert(&bsc(), &u).unwrap().posterior_at(1).unwrap();
        let r = check_eubo(&post, &bsc(), &u, 1, 1e-12).unwrap();
        assert!(r.holds);
        assert_eq!(r.kl_to_exact, 0.0);
        assert!((r.free_energy - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dirac_on_identity_costs_nothing() {
        let x = FiniteSpace::range("X", 3).unwrap();
        let d: Dist<Rational> = Dist::dirac_at(&x, 1);
        let f = free_energy(&d, &Kernel::identity(&x), &d, 1, Divergence::Kl).unwrap();
        assert_eq!(f, 0.0);
        let h = helmholtz_decomposition(&d, &Kernel::identity(&x), &d, 1).unwrap();
        assert_eq!(h.entropy, 0.0);
        assert_eq!(h.free_energy(), 0.0);
    }

    #[test]
    fn support_violation_is_infinite_on_both_sides() {
        let x = FiniteSpace::range("X", 2).unwrap();
        let c = Kernel::new(
            x.clone(),
            bit(),
            vec![
                vec![ratio(1, 1), ratio(0, 1)],
                vec![ratio(1, 2), ratio(1, 2)],
            ],
        )
        .unwrap();
        let u = Dist::uniform(&x);
        let r = check_eubo(&u, &c, &u, 1, 1e-12).unwrap();
        assert_eq!(r.free_energy, f64::INFINITY);
        assert_eq!(r.kl_to_exact, f64::INFINITY);
        assert!(r.holds);
    }

    #[test]
    fn zero_evidence_is_surfaced() {
        let x = FiniteSpace::range("X", 2).unwrap();
        let pi: Dist<Rational> = Dist::dirac_at(&x, 0);
        let c = Kernel::identity(&x);
        assert!(matches!(
            check_eubo(&pi, &c, &pi, 1, 1e-12),
            Err(Error::UnsupportedObservation(_))
        ));
    }

    #[test]
    fn helmholtz_uniform_entropy() {
        let x = FiniteSpace::range("X", 4).unwrap();
        let u: Dist<f64> = Dist::uniform(&x);
        let c = Kernel::identity(&x);
        let h = helmholtz_decomposition(&u, &c, &u, 0).unwrap();
        assert!((h.entropy - 4f64.ln()).abs() < 1e-15);
    }
}
