use std::fmt;

use super::dist::{normalize_row, Dist};
use super::space::{check_permutation, FiniteSpace};
use crate::error::{Error, Result};
use crate::weight::Weight;

/// A stochastic channel `X ⇸ Y`: one distribution over `cod` per outcome of
/// `dom`.
///
/// Kernels built by the public constructors are total. Bayesian inversion
/// produces kernels whose rows at zero-evidence observations are left
/// undefined; reading such a row yields [`Error::UnsupportedObservation`].
#[derive(Clone, PartialEq)]
pub struct Kernel<W> {
    dom: FiniteSpace,
    cod: FiniteSpace,
    rows: Vec<Option<Vec<W>>>,
}

impl<W: Weight> Kernel<W> {
    pub fn new(dom: FiniteSpace, cod: FiniteSpace, rows: Vec<Vec<W>>) -> Result<Self> {
        Self::partial(dom, cod, rows.into_iter().map(Some).collect())
    }

    /// A kernel that may leave some rows undefined.
    pub fn partial(dom: FiniteSpace, cod: FiniteSpace, rows: Vec<Option<Vec<W>>>) -> Result<Self> {
        if rows.len() != dom.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} rows for domain {} with {} outcomes",
                rows.len(),
                dom.label(),
                dom.len()
            )));
        }
        let rows = rows
            .into_iter()
            .map(|r| r.map(|r| normalize_row(&cod, r)).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Kernel { dom, cod, rows })
    }

    pub fn from_dists(dom: FiniteSpace, cod: FiniteSpace, rows: Vec<Dist<W>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for d in rows {
            d.space().expect_eq(&cod)?;
            out.push(Some(d.weights().to_vec()));
        }
        Self::partial(dom, cod, out)
    }

    pub fn from_fn(
        dom: &FiniteSpace,
        cod: &FiniteSpace,
        mut row: impl FnMut(usize) -> Result<Dist<W>>,
    ) -> Result<Self> {
        let rows = (0..dom.len()).map(&mut row).collect::<Result<Vec<_>>>()?;
        Self::from_dists(dom.clone(), cod.clone(), rows)
    }

    /// A deterministic kernel `x ↦ δ_{f(x)}`.
    pub fn deterministic(dom: &FiniteSpace, cod: &FiniteSpace, f: impl Fn(usize) -> usize) -> Self {
        let rows = (0..dom.len())
            .map(|x| {
                let mut row = vec![W::zero(); cod.len()];
                row[f(x)] = W::one();
                Some(row)
            })
            .collect();
        Kernel {
            dom: dom.clone(),
            cod: cod.clone(),
            rows,
        }
    }

    pub fn identity(space: &FiniteSpace) -> Self {
        Self::deterministic(space, space, |x| x)
    }

    /// Every input goes to the same state.
    pub fn constant(dom: &FiniteSpace, state: &Dist<W>) -> Self {
        Kernel {
            dom: dom.clone(),
            cod: state.space().clone(),
            rows: vec![Some(state.weights().to_vec()); dom.len()],
        }
    }

    /// `x ↦ δ_{(x,x)}`.
    pub fn copy(space: &FiniteSpace) -> Self {
        let n = space.len();
        Self::deterministic(space, &space.tensor(space), |x| x * n + x)
    }

    /// The unique kernel into the unit space.
    pub fn discard(space: &FiniteSpace) -> Self {
        Self::deterministic(space, &FiniteSpace::unit(), |_| 0)
    }

    /// Deterministic relabeling along an atom permutation: new atom `i` is old
    /// atom `perm[i]`.
    pub fn permutation(space: &FiniteSpace, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, space.arity())?;
        let target = space.permute(perm)?;
        Ok(Self::deterministic(space, &target, |x| {
            let c = space.coords(x);
            let moved: Vec<usize> = perm.iter().map(|&p| c[p]).collect();
            target.index_of_coords(&moved)
        }))
    }

    /// The symmetry `L⊗R → R⊗L`.
    pub fn swap(left: &FiniteSpace, right: &FiniteSpace) -> Self {
        let nr = right.len();
        let nl = left.len();
        Self::deterministic(&left.tensor(right), &right.tensor(left), |i| {
            let (l, r) = (i / nr, i % nr);
            r * nl + l
        })
    }

    pub fn dom(&self) -> &FiniteSpace {
        &self.dom
    }

    pub fn cod(&self) -> &FiniteSpace {
        &self.cod
    }

    pub fn is_total(&self) -> bool {
        self.rows.iter().all(Option::is_some)
    }

    pub fn is_defined_at(&self, x: usize) -> bool {
        self.rows[x].is_some()
    }

    pub fn undefined_rows(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&x| self.rows[x].is_none())
            .collect()
    }

    pub fn row(&self, x: usize) -> Result<&[W]> {
        self.rows[x]
            .as_deref()
            .ok_or_else(|| Error::UnsupportedObservation(self.dom.outcome_label(x)))
    }

    pub fn row_dist(&self, x: usize) -> Result<Dist<W>> {
        Ok(Dist::from_parts_unchecked(
            self.cod.clone(),
            self.row(x)?.to_vec(),
        ))
    }

    /// The output distribution at the outcome labelled `x`.
    pub fn at(&self, x: &str) -> Result<Dist<W>> {
        self.row_dist(self.dom.index_of(x)?)
    }

    /// `c(y|x)`, by index.
    pub fn prob(&self, x: usize, y: usize) -> Result<&W> {
        Ok(&self.row(x)?[y])
    }

    /// Sequential composition: first `self`, then `next` (that is,
    /// `next ∘ self`), via the Chapman–Kolmogorov sum.
    pub fn then(&self, next: &Kernel<W>) -> Result<Kernel<W>> {
        next.dom.expect_eq(&self.cod)?;
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            rows.push(match row {
                None => None,
                Some(row) => chapman_kolmogorov(row, next),
            });
        }
        Kernel::partial(self.dom.clone(), next.cod.clone(), rows)
    }

    /// Parallel product `f⊗g`.
    pub fn tensor(&self, other: &Kernel<W>) -> Kernel<W> {
        let mut rows = Vec::with_capacity(self.rows.len() * other.rows.len());
        for a in &self.rows {
            for b in &other.rows {
                rows.push(match (a, b) {
                    (Some(a), Some(b)) => {
                        let mut r = Vec::with_capacity(a.len() * b.len());
                        for wa in a {
                            for wb in b {
                                r.push(wa.clone() * wb.clone());
                            }
                        }
                        Some(r)
                    }
                    _ => None,
                });
            }
        }
        Kernel {
            dom: self.dom.tensor(&other.dom),
            cod: self.cod.tensor(&other.cod),
            rows,
        }
    }

    /// Row-wise comparison. Undefined rows only match undefined rows.
    pub fn approx_eq(&self, other: &Kernel<W>, tol: f64) -> bool {
        self.dom == other.dom
            && self.cod == other.cod
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| match (a, b) {
                    (Some(a), Some(b)) => a.iter().zip(b).all(|(u, v)| u.close(v, tol)),
                    (None, None) => true,
                    _ => false,
                })
    }

    pub fn to_f64(&self) -> Kernel<f64> {
        Kernel {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.as_ref().map(|r| r.iter().map(Weight::to_f64).collect()))
                .collect(),
        }
    }
}

fn chapman_kolmogorov<W: Weight>(row: &[W], next: &Kernel<W>) -> Option<Vec<W>> {
    let mut out = vec![W::zero(); next.cod.len()];
    for (y, w) in row.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let next_row = next.rows[y].as_ref()?;
        for (o, v) in out.iter_mut().zip(next_row) {
            if !v.is_zero() {
                *o = o.clone() + w.clone() * v.clone();
            }
        }
    }
    Some(out)
}

/// `d ∘ c`.
pub fn compose_kernels<W: Weight>(c: &Kernel<W>, d: &Kernel<W>) -> Result<Kernel<W>> {
    c.then(d)
}

/// `f ⊗ g`.
pub fn tensor_kernels<W: Weight>(f: &Kernel<W>, g: &Kernel<W>) -> Kernel<W> {
    f.tensor(g)
}

impl<W: fmt::Debug> fmt::Debug for Kernel<W> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Kernel {} ⇸ {} {{", self.dom, self.cod)?;
        for (x, row) in self.rows.iter().enumerate() {
            write!(f, "  {}: ", self.dom.outcome_label(x))?;
            match row {
                Some(r) => writeln!(f, "{r:?}")?,
                None => writeln!(f, "undefined")?,
            }
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::Side;
    use crate::weight::{ratio, Rational};

    fn bit() -> FiniteSpace {
        FiniteSpace::range("B", 2).unwrap()
    }

    fn bsc(p: Rational) -> Kernel<Rational> {
        let q = ratio(1, 1) - p.clone();
        Kernel::new(bit(), bit(), vec![vec![p.clone(), q.clone()], vec![q, p]]).unwrap()
    }

    #[test]
    fn chained_binary_symmetric_channels() {
        // Hand enumeration: 0.8·0.8 + 0.2·0.2 = 0.68.
        let c = bsc(ratio(4, 5));
        let cc = compose_kernels(&c, &c).unwrap();
        assert_eq!(cc.prob(0, 0).unwrap(), &ratio(17, 25));
        assert_eq!(cc.prob(1, 1).unwrap(), &ratio(17, 25));
        assert_eq!(cc.prob(0, 1).unwrap(), &ratio(8, 25));
    }

    #[test]
    fn identity_is_unital() {
        let c = bsc(ratio(3, 4));
        let id = Kernel::identity(&bit());
        assert_eq!(id.then(&c).unwrap(), c);
        assert_eq!(c.then(&id).unwrap(), c);
    }

    #[test]
    fn mismatched_composition_fails() {
        let c = bsc(ratio(3, 4));
        let three = FiniteSpace::range("T", 3).unwrap();
        let d = Kernel::<Rational>::identity(&three);
        assert!(matches!(c.then(&d), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn dirac_pushforward_reads_row() {
        let c = bsc(ratio(3, 5));
        let pushed = Dist::dirac(&bit(), "1").unwrap().pushforward(&c).unwrap();
        assert_eq!(pushed, c.at("1").unwrap());
    }

    #[test]
    fn swap_is_involutive() {
        let x = FiniteSpace::range("X", 3).unwrap();
        let y = bit();
        let s = Kernel::<Rational>::swap(&x, &y);
        let back = Kernel::swap(&y, &x);
        assert_eq!(s.then(&back).unwrap(), Kernel::identity(&x.tensor(&y)));
        let p = Kernel::permutation(&x.tensor(&y), &[1, 0]).unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn copy_then_project() {
        let x = FiniteSpace::range("X", 3).unwrap();
        let pi = Dist::new(x.clone(), vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)]).unwrap();
        let copied = pi.pushforward(&Kernel::copy(&x)).unwrap();
        assert_eq!(copied.marginal(&x, Side::Left).unwrap(), pi);
        assert_eq!(copied.support().len(), 3);
    }

    #[test]
    fn undefined_rows_propagate_only_with_mass() {
        let b = bit();
        let partial = Kernel::partial(
            b.clone(),
            b.clone(),
            vec![Some(vec![ratio(1, 1), ratio(0, 1)]), None],
        )
        .unwrap();
        // A first stage that never reaches row 1 composes to a total kernel.
        let to_zero = Kernel::deterministic(&b, &b, |_| 0);
        assert!(to_zero.then(&partial).unwrap().is_total());
        let through = Kernel::identity(&b).then(&partial).unwrap();
        assert_eq!(through.undefined_rows(), vec![1]);
        assert!(matches!(
            through.row(1),
            Err(Error::UnsupportedObservation(_))
        ));
    }
}
