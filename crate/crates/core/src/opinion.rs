//! Opinion configurations and the fractions observed from them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphTopology, NodeId};
use crate::util::tolerant_floor;

/// A proportion in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fraction(f64);

impl Fraction {
    pub const ZERO: Fraction = Fraction(0.0);
    pub const ONE: Fraction = Fraction(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::ProbabilityOutOfRange {
                name: "fraction",
                value,
            });
        }
        Ok(Fraction(value))
    }

    /// For values produced by arithmetic that is exact in [0,1] up to float
    /// noise; anything further out than noise is a logic error.
    pub(crate) fn from_exact(value: f64) -> Self {
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&value));
        Fraction(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Binary opinions of all individuals at one slot. Index i holds individual
/// i's opinion: true = Yes, false = No.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpinionVector {
    bits: Vec<bool>,
    yes_count: usize,
}

impl OpinionVector {
    pub fn all_no(len: usize) -> Self {
        OpinionVector {
            bits: vec![false; len],
            yes_count: 0,
        }
    }

    pub fn all_yes(len: usize) -> Self {
        OpinionVector {
            bits: vec![true; len],
            yes_count: len,
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        let yes_count = bits.iter().filter(|&&b| b).count();
        OpinionVector { bits, yes_count }
    }

    /// All No except the listed individuals.
    pub fn with_yes_at(len: usize, yes: &[usize]) -> Result<Self> {
        let mut v = Self::all_no(len);
        for &i in yes {
            if i >= len {
                return Err(Error::InvalidOpinionVector {
                    reason: format!("index {i} out of range for {len} individuals"),
                });
            }
            v.set(i, true);
        }
        Ok(v)
    }

    /// Exactly floor(beta0 * len) Yes opinions placed on a uniformly random
    /// subset. Fixing the count removes initial-fraction variance between
    /// trials; only the placement varies.
    pub fn symmetric_random<R: Rng>(len: usize, beta0: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta0) {
            return Err(Error::ProbabilityOutOfRange {
                name: "beta0",
                value: beta0,
            });
        }
        let count = tolerant_floor(beta0 * len as f64) as usize;
        let mut order: Vec<usize> = (0..len).collect();
        for i in 0..count {
            let j = rng.random_range(i..len);
            order.swap(i, j);
        }
        Self::with_yes_at(len, &order[..count])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, yes: bool) {
        if self.bits[i] != yes {
            self.bits[i] = yes;
            if yes {
                self.yes_count += 1;
            } else {
                self.yes_count -= 1;
            }
        }
    }

    pub fn flip(&mut self, i: usize) {
        let now = !self.bits[i];
        self.set(i, now);
    }

    pub fn yes_count(&self) -> usize {
        self.yes_count
    }

    /// Bitmask encoding with individual i at bit i. Only meaningful for
    /// vectors short enough to index a dense state distribution.
    pub fn to_bitmask(&self) -> usize {
        debug_assert!(self.len() <= usize::BITS as usize);
        self.bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    pub fn from_bitmask(len: usize, mask: usize) -> Self {
        let bits: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
        Self::from_bits(bits)
    }

    /// Yes-fraction over the whole population.
    pub fn global_fraction(&self) -> Fraction {
        Fraction::from_exact(self.yes_count as f64 / self.bits.len() as f64)
    }

    /// Yes-fraction among i's neighbors; None when i is isolated, so callers
    /// can apply their own isolated-node rule.
    pub fn neighborhood_fraction(&self, g: &GraphTopology, i: NodeId) -> Option<Fraction> {
        let neighbors = g.neighbors(i);
        if neighbors.is_empty() {
            return None;
        }
        let yes = neighbors.iter().filter(|&&j| self.bits[j]).count();
        Some(Fraction::from_exact(yes as f64 / neighbors.len() as f64))
    }

    /// Mean opinion of k draws taken uniformly with replacement from the
    /// whole population (the drawing individual's own opinion included).
    pub fn sampled_fraction<R: Rng>(&self, k: usize, rng: &mut R) -> Result<Fraction> {
        if k == 0 {
            return Err(Error::SampleSizeZero);
        }
        let m = self.bits.len();
        let yes = (0..k).filter(|_| self.bits[rng.random_range(0..m)]).count();
        Ok(Fraction::from_exact(yes as f64 / k as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind, GraphSpec};
    use crate::rng::init_rng;

    #[test]
    fn global_fraction_counts_yes() {
        let v = OpinionVector::from_bits(vec![true, false, true, false]);
        assert_eq!(v.global_fraction().get(), 0.5);
        assert_eq!(OpinionVector::all_no(7).global_fraction().get(), 0.0);
        let v = OpinionVector::from_bits(vec![true, true, true, false, false]);
        assert_eq!(v.global_fraction().get(), 0.6);
    }

    #[test]
    fn set_and_flip_maintain_count() {
        let mut v = OpinionVector::all_no(5);
        v.set(2, true);
        v.set(2, true);
        assert_eq!(v.yes_count(), 1);
        v.flip(2);
        assert_eq!(v.yes_count(), 0);
        v.flip(4);
        assert_eq!(v.yes_count(), 1);
    }

    #[test]
    fn bitmask_roundtrip() {
        let v = OpinionVector::from_bits(vec![true, false, false, true]);
        assert_eq!(v.to_bitmask(), 0b1001);
        assert_eq!(OpinionVector::from_bitmask(4, 0b1001), v);
    }

    #[test]
    fn spoke_sees_only_the_hub() {
        let g = generate(&GraphSpec {
            kind: GraphKind::HubSpoke,
            node_count: 4,
            seed: 0,
        })
        .unwrap();
        let mut s = OpinionVector::all_no(4);
        s.set(0, true); // hub Yes
        let f = s.neighborhood_fraction(&g, NodeId(1)).unwrap();
        assert_eq!(f.get(), 1.0);
    }

    #[test]
    fn complete_graph_fraction_excludes_self() {
        let g = generate(&GraphSpec {
            kind: GraphKind::Complete,
            node_count: 3,
            seed: 0,
        })
        .unwrap();
        let s = OpinionVector::from_bits(vec![true, false, true]);
        let f = s.neighborhood_fraction(&g, NodeId(0)).unwrap();
        assert_eq!(f.get(), 0.5);
    }

    #[test]
    fn isolated_node_has_no_fraction() {
        // Two nodes joined by an edge plus an isolated third.
        let g = GraphTopology::from_edges(3, &[(0, 1)]).unwrap();
        let s = OpinionVector::all_yes(3);
        assert!(s.neighborhood_fraction(&g, NodeId(2)).is_none());
    }

    use crate::graph::GraphTopology;

    #[test]
    fn sampling_is_unbiased_on_a_split_pair() {
        // bits=[1,0], k=2: exact mean 0.5, sd of the mean over n draws is
        // sqrt(1/8 / n); 0.005 is >4 sigma at n=1e5.
        let s = OpinionVector::from_bits(vec![true, false]);
        let mut rng = init_rng(99, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| s.sampled_fraction(2, &mut rng).unwrap().get())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn sampling_fixed_points() {
        let mut rng = init_rng(1, 0);
        let ones = OpinionVector::all_yes(9);
        assert_eq!(ones.sampled_fraction(4, &mut rng).unwrap().get(), 1.0);
        let s = OpinionVector::from_bits(vec![true, false]);
        let f = s.sampled_fraction(1, &mut rng).unwrap().get();
        assert!(f == 0.0 || f == 1.0);
        assert!(s.sampled_fraction(0, &mut rng).is_err());
    }

    #[test]
    fn symmetric_random_places_exact_count() {
        let mut rng = init_rng(5, 3);
        let v = OpinionVector::symmetric_random(10, 0.3, &mut rng).unwrap();
        assert_eq!(v.yes_count(), 3);
        let v = OpinionVector::symmetric_random(100, 0.5, &mut rng).unwrap();
        assert_eq!(v.yes_count(), 50);
        let v = OpinionVector::symmetric_random(4, 1.0, &mut rng).unwrap();
        assert_eq!(v.yes_count(), 4);
    }

    #[test]
    fn fraction_rejects_out_of_range() {
        assert!(Fraction::new(-0.1).is_err());
        assert!(Fraction::new(1.1).is_err());
        assert!(Fraction::new(0.0).is_ok());
        assert!(Fraction::new(1.0).is_ok());
    }
}
