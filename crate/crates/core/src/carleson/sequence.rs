use serde::{Deserialize, Serialize};

use crate::dyadic::{haar_analyze, DyadicIndex, StepFunction};
use crate::error::{Error, Result};
use crate::operators::Smoothness;

/// Largest Carleson depth accepted; `2^21 − 1` intervals.
pub const MAX_CARLESON_DEPTH: u32 = 20;

/// Nonnegative weights `μ(I)` on the intervals of levels `0..=depth`, heap
/// ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct CarlesonSequence {
    depth: u32,
    mu: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SequenceRepr {
    depth: u32,
    entries: Vec<EntryRepr>,
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    level: u32,
    pos: u64,
    mu: f64,
}

impl TryFrom<SequenceRepr> for CarlesonSequence {
    type Error = Error;
    fn try_from(r: SequenceRepr) -> Result<Self> {
        let entries = r
            .entries
            .into_iter()
            .map(|e| Ok((DyadicIndex::new(e.level, e.pos)?, e.mu)))
            .collect::<Result<Vec<_>>>()?;
        CarlesonSequence::new(r.depth, entries)
    }
}

impl From<CarlesonSequence> for SequenceRepr {
    fn from(m: CarlesonSequence) -> Self {
        Self {
            depth: m.depth,
            entries: m
                .entries()
                .filter(|&(_, v)| v != 0.0)
                .map(|(i, mu)| EntryRepr {
                    level: i.level,
                    pos: i.pos,
                    mu,
                })
                .collect(),
        }
    }
}

impl CarlesonSequence {
    /// Entries may repeat; repeated intervals accumulate.
    pub fn new(depth: u32, entries: Vec<(DyadicIndex, f64)>) -> Result<Self> {
        if depth > MAX_CARLESON_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_CARLESON_DEPTH,
            });
        }
        let mut mu = vec![0.0; (2usize << depth) - 1];
        for (i, v) in entries {
            if i.level > depth {
                return Err(Error::CoefficientOutOfDepth { level: i.level, depth });
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeInput {
                    op: "CarlesonSequence",
                    value: v,
                });
            }
            mu[i.heap_index()] += v;
        }
        Ok(Self { depth, mu })
    }

    pub fn zero(depth: u32) -> Self {
        Self::new(depth, Vec::new()).expect("empty is valid")
    }

    /// `μ(I) = |I|^{-2s}(b,h_I)²` for the Haar coefficients of `b`; a symbol
    /// of depth `d` gives a sequence of depth `max(d, 1) − 1`.
    pub fn from_symbol(b: &StepFunction, s: Smoothness) -> Self {
        let c = haar_analyze(b);
        let depth = c.depth().max(1) - 1;
        let mut mu = vec![0.0; (2usize << depth) - 1];
        for (i, v) in c.iter() {
            let w = s.derivative_weight(i.level);
            mu[i.heap_index()] = (w * v).powi(2);
        }
        Self { depth, mu }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn get(&self, i: DyadicIndex) -> f64 {
        if i.level > self.depth {
            0.0
        } else {
            self.mu[i.heap_index()]
        }
    }

    /// Heap-ordered weights over levels `0..=depth`.
    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    pub fn entries(&self) -> impl Iterator<Item = (DyadicIndex, f64)> + '_ {
        self.mu
            .iter()
            .enumerate()
            .map(|(k, &v)| (DyadicIndex::from_heap_index(k), v))
    }

    /// The same weights carried at a larger depth (zero on the new levels).
    pub fn extend_to(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink sequence of depth {} to {depth}",
                self.depth
            )));
        }
        let mut mu = self.mu.clone();
        mu.resize((2usize << depth) - 1, 0.0);
        Ok(Self { depth, mu })
    }

    /// Weights on levels `> cutoff` only.
    pub fn tail(&self, cutoff: u32) -> Self {
        let keep_from = ((2usize << cutoff.min(self.depth)) - 1).min(self.mu.len());
        let mut mu = self.mu.clone();
        if cutoff < self.depth {
            mu[..keep_from].fill(0.0);
        } else {
            mu.fill(0.0);
        }
        Self { depth: self.depth, mu }
    }

    /// `Σ_{J⊆I} μ(J)` for every `I`, heap ordered.
    pub fn subtree_masses(&self) -> Vec<f64> {
        let mut m = self.mu.clone();
        for k in (0..m.len()).rev() {
            let r = 2 * k + 2;
            if r < m.len() {
                m[k] += m[2 * k + 1] + m[r];
            }
        }
        m
    }

    /// `μ ≤ other` pointwise (missing entries count as zero).
    pub fn is_dominated_by(&self, other: &CarlesonSequence) -> bool {
        self.entries().all(|(i, v)| v <= other.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"depth":2,"entries":[{"level":1,"pos":1,"mu":0.5},{"level":0,"pos":0,"mu":2.0}]}"#;
        let m: CarlesonSequence = serde_json::from_str(text).unwrap();
        assert_eq!(m.get(DyadicIndex::new(1, 1).unwrap()), 0.5);
        assert_eq!(m.get(DyadicIndex::ROOT), 2.0);
        let back: CarlesonSequence = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CarlesonSequence>(
            r#"{"depth":1,"entries":[{"level":0,"pos":0,"mu":-1.0}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<CarlesonSequence>(
            r#"{"depth":1,"entries":[{"level":2,"pos":0,"mu":1.0}]}"#
        )
        .is_err());
    }

    #[test]
    fn subtree_and_tail() {
        let m = CarlesonSequence::new(
            2,
            DyadicIndex::all_up_to(3).map(|i| (i, 1.0)).collect(),
        )
        .unwrap();
        let sub = m.subtree_masses();
        assert_eq!(sub[0], 7.0);
        assert_eq!(sub[1], 3.0);
        let t = m.tail(0);
        assert_eq!(t.subtree_masses()[0], 6.0);
        assert_eq!(m.tail(2).subtree_masses()[0], 0.0);
    }

    #[test]
    fn symbol_weights() {
        let s = Smoothness::new(0.5).unwrap();
        let m = CarlesonSequence::from_symbol(&StepFunction::haar(DyadicIndex::ROOT), s);
        assert_eq!(m.depth(), 0);
        assert_eq!(m.weights(), &[1.0]);
    }
}
