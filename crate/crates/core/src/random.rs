//! Seeded random instances for property checks and scenario generation.
//!
//! Draws come from ChaCha8 seeded with a `u64`, with one stream per instance
//! index, so instance `i` of seed `s` never depends on how many other
//! instances were drawn. Probability weights are quantized: each entry gets an
//! integer `k ∈ 0..=64` (or `1..=64` when strictly positive) and the row is
//! divided by its total, which keeps exact arithmetic small.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::markov::{Dist, FiniteSpace, Kernel};
use crate::weight::Weight;

/// Numerator range of quantized weights.
pub const QUANTUM: u64 = 64;

#[derive(Debug, Clone)]
pub struct InstanceRng {
    rng: ChaCha8Rng,
}

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        InstanceRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The independent stream for instance `index` of a seeded suite.
    pub fn for_instance(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        InstanceRng { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform in `lo..=hi`.
    pub fn size(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    /// Uniform in `[lo, hi)`.
    pub fn real(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random()
    }

    /// A space `label` with `lo..=hi` outcomes named `label0, label1, …`.
    pub fn space(&mut self, label: &str, lo: usize, hi: usize) -> FiniteSpace {
        let n = self.size(lo, hi);
        FiniteSpace::range(label, n).expect("generated sizes are positive")
    }

    /// Quantized numerators for one row; never all zero.
    pub fn numerators(&mut self, n: usize, positive: bool) -> Vec<u64> {
        let lo = u64::from(positive);
        loop {
            let ks: Vec<u64> = (0..n)
                .map(|_| self.rng.random_range(lo..=QUANTUM))
                .collect();
            if ks.iter().any(|&k| k > 0) {
                return ks;
            }
        }
    }

    pub fn weights<W: Weight>(&mut self, n: usize, positive: bool) -> Vec<W> {
        let ks = self.numerators(n, positive);
        let total: u64 = ks.iter().sum();
        ks.into_iter().map(|k| W::from_ratio(k, total)).collect()
    }

    pub fn dist<W: Weight>(&mut self, space: &FiniteSpace, positive: bool) -> Dist<W> {
        let w = self.weights(space.len(), positive);
        Dist::new(space.clone(), w).expect("quantized rows are normalized")
    }

    pub fn kernel<W: Weight>(
        &mut self,
        dom: &FiniteSpace,
        cod: &FiniteSpace,
        positive: bool,
    ) -> Kernel<W> {
        let rows = (0..dom.len())
            .map(|_| self.weights(cod.len(), positive))
            .collect();
        Kernel::new(dom.clone(), cod.clone(), rows).expect("quantized rows are normalized")
    }

    /// A uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.rng.random_range(0..=i);
            p.swap(i, j);
        }
        p
    }
}
