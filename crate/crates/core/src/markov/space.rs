use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A labelled, non-empty set of distinct outcomes. Atoms are the factors that
/// product spaces are built from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    label: String,
    outcomes: Vec<String>,
}

impl Atom {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// A finite outcome space.
///
/// Spaces are flat tensor products of [`Atom`]s. The unit space `I` is the
/// empty product and has exactly one outcome. Because nested products are
/// flattened left-associatively, `(X⊗Y)⊗Z`, `X⊗(Y⊗Z)` and `X⊗I` are literally
/// equal values, so associators and unitors act as the identity on outcomes.
///
/// Outcomes of a product are ordered lexicographically, first factor most
/// significant.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    atoms: Arc<[Atom]>,
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(
        label: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let label = label.into();
        let outcomes: Vec<String> = outcomes.into_iter().map(Into::into).collect();
        if outcomes.is_empty() {
            return Err(Error::InvalidSpace(format!(
                "space `{label}` has no outcomes"
            )));
        }
        for (i, o) in outcomes.iter().enumerate() {
            if o.is_empty() || o.contains(',') || o == "*" {
                return Err(Error::InvalidSpace(format!(
                    "outcome `{o}` of `{label}` must be non-empty, comma-free and not `*`"
                )));
            }
            if outcomes[..i].contains(o) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate outcome `{o}` in `{label}`"
                )));
            }
        }
        Ok(FiniteSpace {
            atoms: Arc::from(vec![Atom { label, outcomes }]),
        })
    }

    /// A space with outcomes `0..n`.
    pub fn range(label: impl Into<String>, n: usize) -> Result<Self> {
        Self::new(label, (0..n).map(|i| i.to_string()))
    }

    pub fn unit() -> Self {
        FiniteSpace {
            atoms: Arc::from(Vec::new()),
        }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        FiniteSpace {
            atoms: Arc::from(atoms),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn arity(&self) -> usize {
        self.atoms.len()
    }

    pub fn len(&self) -> usize {
        self.atoms.iter().map(Atom::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tensor(&self, other: &FiniteSpace) -> FiniteSpace {
        if self.is_unit() {
            return other.clone();
        }
        if other.is_unit() {
            return self.clone();
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .cloned()
            .collect();
        FiniteSpace::from_atoms(atoms)
    }

    pub fn product<'a>(spaces: impl IntoIterator<Item = &'a FiniteSpace>) -> FiniteSpace {
        spaces
            .into_iter()
            .fold(FiniteSpace::unit(), |acc, s| acc.tensor(s))
    }

    pub fn label(&self) -> String {
        if self.is_unit() {
            "I".to_string()
        } else {
            self.atoms
                .iter()
                .map(|a| a.label.as_str())
                .collect::<Vec<_>>()
                .join("⊗")
        }
    }

    /// Per-atom coordinates of a flat outcome index.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut coords = vec![0; self.atoms.len()];
        for (slot, atom) in coords.iter_mut().zip(self.atoms.iter()).rev() {
            *slot = index % atom.len();
            index /= atom.len();
        }
        coords
    }

    pub fn index_of_coords(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.atoms.len());
        coords
            .iter()
            .zip(self.atoms.iter())
            .fold(0, |acc, (&c, atom)| acc * atom.len() + c)
    }

    /// Display label of an outcome: the atom outcome for atomic spaces, a
    /// comma-joined tuple for products and `*` for the unit.
    pub fn outcome_label(&self, index: usize) -> String {
        if self.is_unit() {
            return "*".to_string();
        }
        self.coords(index)
            .iter()
            .zip(self.atoms.iter())
            .map(|(&c, a)| a.outcomes[c].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn outcome_labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.outcome_label(i)).collect()
    }

    /// Looks up an outcome by its display label.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        if self.is_unit() {
            return if label == "*" {
                Ok(0)
            } else {
                Err(self.unknown(label))
            };
        }
        let parts: Vec<&str> = label.split(',').map(str::trim).collect();
        if parts.len() != self.atoms.len() {
            return Err(self.unknown(label));
        }
        let mut coords = Vec::with_capacity(parts.len());
        for (part, atom) in parts.iter().zip(self.atoms.iter()) {
            let c = atom
                .outcomes
                .iter()
                .position(|o| o == part)
                .ok_or_else(|| self.unknown(label))?;
            coords.push(c);
        }
        Ok(self.index_of_coords(&coords))
    }

    fn unknown(&self, label: &str) -> Error {
        Error::UnknownOutcome {
            space: self.label(),
            outcome: label.to_string(),
        }
    }

    /// If `self = prefix ⊗ rest`, returns `rest`.
    pub fn strip_prefix(&self, prefix: &FiniteSpace) -> Option<FiniteSpace> {
        let n = prefix.atoms.len();
        if n <= self.atoms.len() && self.atoms[..n] == prefix.atoms[..] {
            Some(FiniteSpace::from_atoms(self.atoms[n..].to_vec()))
        } else {
            None
        }
    }

    /// If `self = rest ⊗ suffix`, returns `rest`.
    pub fn strip_suffix(&self, suffix: &FiniteSpace) -> Option<FiniteSpace> {
        let n = suffix.atoms.len();
        let m = self.atoms.len();
        if n <= m && self.atoms[m - n..] == suffix.atoms[..] {
            Some(FiniteSpace::from_atoms(self.atoms[..m - n].to_vec()))
        } else {
            None
        }
    }

    /// Reorders atoms so that new atom `i` is old atom `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<FiniteSpace> {
        check_permutation(perm, self.atoms.len())?;
        Ok(FiniteSpace::from_atoms(
            perm.iter().map(|&p| self.atoms[p].clone()).collect(),
        ))
    }

    /// `Ok` when both spaces are the same, a mismatch error otherwise.
    pub fn expect_eq(&self, other: &FiniteSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::mismatch(self.label(), other.label()))
        }
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation of length {} applied to {n} factors",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidParameter(format!(
                "{perm:?} is not a permutation"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

impl fmt::Debug for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteSpace({})", self.label())
    }
}

impl fmt::Display for FiniteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
