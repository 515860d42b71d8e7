use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicIndex, StepFunction, MAX_STEP_DEPTH};
use crate::error::{Error, Result};

/// A finite union of dyadic intervals, stored as the sorted set of covered
/// leaves at `depth`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DyadicSetRepr", into = "DyadicSetRepr")]
pub struct DyadicSet {
    depth: u32,
    leaves: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct DyadicSetRepr {
    depth: u32,
    leaves: Vec<u64>,
}

impl TryFrom<DyadicSetRepr> for DyadicSet {
    type Error = Error;
    fn try_from(r: DyadicSetRepr) -> Result<Self> {
        DyadicSet::new(r.depth, r.leaves)
    }
}

impl From<DyadicSet> for DyadicSetRepr {
    fn from(s: DyadicSet) -> Self {
        Self {
            depth: s.depth,
            leaves: s.leaves,
        }
    }
}

impl DyadicSet {
    pub fn new(depth: u32, mut leaves: Vec<u64>) -> Result<Self> {
        if depth > MAX_STEP_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_STEP_DEPTH,
            });
        }
        if let Some(&bad) = leaves.iter().find(|&&k| k >= 1u64 << depth) {
            return Err(Error::InvalidIndex {
                level: depth,
                pos: bad,
            });
        }
        leaves.sort_unstable();
        leaves.dedup();
        Ok(Self { depth, leaves })
    }

    pub fn empty(depth: u32) -> Self {
        Self {
            depth,
            leaves: Vec::new(),
        }
    }

    pub fn full(depth: u32) -> Self {
        Self {
            depth,
            leaves: (0..1u64 << depth).collect(),
        }
    }

    pub fn from_interval(i: DyadicIndex) -> Self {
        Self {
            depth: i.level,
            leaves: vec![i.pos],
        }
    }

    /// Union of intervals, represented at `depth` (at least as deep as every interval).
    pub fn from_intervals(depth: u32, intervals: &[DyadicIndex]) -> Result<Self> {
        if let Some(i) = intervals.iter().find(|i| i.level > depth) {
            return Err(Error::InvalidArgument(format!(
                "interval {i} is finer than set depth {depth}"
            )));
        }
        let leaves = intervals.iter().flat_map(|i| i.leaf_range(depth)).collect();
        Self::new(depth, leaves)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaves(&self) -> &[u64] {
        &self.leaves
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.leaves.len() as f64 * (-(self.depth as f64)).exp2()
    }

    pub fn refine(&self, depth: u32) -> Result<DyadicSet> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot refine set of depth {} to {depth}",
                self.depth
            )));
        }
        let shift = depth - self.depth;
        let leaves = self
            .leaves
            .iter()
            .flat_map(|&k| (k << shift)..((k + 1) << shift))
            .collect();
        DyadicSet::new(depth, leaves)
    }

    /// Membership mask over the `2^depth` leaves at `depth >= self.depth`.
    pub fn mask(&self, depth: u32) -> Vec<bool> {
        assert!(depth >= self.depth);
        let shift = depth - self.depth;
        let mut mask = vec![false; 1usize << depth];
        for &k in &self.leaves {
            mask[(k << shift) as usize..((k + 1) << shift) as usize].fill(true);
        }
        mask
    }

    pub fn indicator(&self) -> StepFunction {
        let mask = self.mask(self.depth);
        StepFunction::new(self.depth, mask.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
            .expect("mask length matches depth")
    }

    pub fn union(&self, other: &DyadicSet) -> DyadicSet {
        let depth = self.depth.max(other.depth);
        let mut leaves = self.refine(depth).expect("deeper").leaves;
        leaves.extend(other.refine(depth).expect("deeper").leaves);
        DyadicSet::new(depth, leaves).expect("valid leaves")
    }

    pub fn is_subset(&self, other: &DyadicSet) -> bool {
        let depth = self.depth.max(other.depth);
        let a = self.mask(depth);
        let b = other.mask(depth);
        a.iter().zip(&b).all(|(&x, &y)| !x || y)
    }

    /// The same set at the smallest depth that represents it exactly.
    pub fn canonical(&self) -> DyadicSet {
        let mut set = self.clone();
        while set.depth > 0 {
            let mut coarse = Vec::with_capacity(set.leaves.len() / 2);
            let mut ok = true;
            let mut it = set.leaves.iter().peekable();
            while let Some(&k) = it.next() {
                if k % 2 == 0 && it.peek() == Some(&&(k + 1)) {
                    it.next();
                    coarse.push(k / 2);
                } else {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
            set = DyadicSet {
                depth: set.depth - 1,
                leaves: coarse,
            };
        }
        set
    }

    /// Representative of the orbit of this set under the tree automorphisms
    /// (swapping the two children of any interval), in canonical form. The
    /// `H^s` norm is invariant under these maps, so orbit members share one
    /// capacity.
    pub fn orbit_representative(&self) -> DyadicSet {
        fn sort_halves(mask: &mut [bool]) {
            if mask.len() < 2 {
                return;
            }
            let half = mask.len() / 2;
            let (l, r) = mask.split_at_mut(half);
            sort_halves(l);
            sort_halves(r);
            if l < r {
                l.swap_with_slice(r);
            }
        }
        let mut mask = self.mask(self.depth);
        sort_halves(&mut mask);
        let leaves = mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k as u64)
            .collect();
        DyadicSet {
            depth: self.depth,
            leaves,
        }
        .canonical()
    }

    /// Super-level set `{x : f(x) ≥ t}` at the depth of `f`.
    pub fn superlevel(f: &StepFunction, t: f64) -> DyadicSet {
        let leaves = f
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= t)
            .map(|(k, _)| k as u64)
            .collect();
        DyadicSet {
            depth: f.depth(),
            leaves,
        }
    }
}
