use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level any index or step function may address.
pub const MAX_LEVEL: u32 = 30;

/// The dyadic interval `2^{-level} [pos, pos + 1)` inside `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub level: u32,
    pub pos: u64,
}

/// How two dyadic intervals sit relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    /// The first interval strictly contains the second.
    Contains,
    /// The first interval is strictly contained in the second.
    ContainedIn,
    Disjoint,
}

impl DyadicIndex {
    pub const ROOT: DyadicIndex = DyadicIndex { level: 0, pos: 0 };

    pub fn new(level: u32, pos: u64) -> Result<Self> {
        if level > MAX_LEVEL || pos >= (1u64 << level) {
            return Err(Error::InvalidIndex { level, pos });
        }
        Ok(Self { level, pos })
    }

    /// Lebesgue measure, exactly `2^{-level}`.
    pub fn measure(self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn left_endpoint(self) -> f64 {
        self.pos as f64 * self.measure()
    }

    pub fn left_child(self) -> Self {
        Self {
            level: self.level + 1,
            pos: 2 * self.pos,
        }
    }

    pub fn right_child(self) -> Self {
        Self {
            level: self.level + 1,
            pos: 2 * self.pos + 1,
        }
    }

    pub fn children(self) -> [Self; 2] {
        [self.left_child(), self.right_child()]
    }

    pub fn parent(self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            pos: self.pos / 2,
        })
    }

    pub fn is_left_child(self) -> bool {
        self.level > 0 && self.pos % 2 == 0
    }

    /// The ancestor of `self` at `level`, or `None` when `level` is deeper.
    pub fn ancestor_at(self, level: u32) -> Option<Self> {
        (level <= self.level).then(|| Self {
            level,
            pos: self.pos >> (self.level - level),
        })
    }

    /// `true` when `other ⊆ self`.
    pub fn contains(self, other: Self) -> bool {
        other.ancestor_at(self.level) == Some(self)
    }

    pub fn relation(self, other: Self) -> Relation {
        match self.level.cmp(&other.level) {
            Ordering::Equal if self.pos == other.pos => Relation::Equal,
            Ordering::Less if self.contains(other) => Relation::Contains,
            Ordering::Greater if other.contains(self) => Relation::ContainedIn,
            _ => Relation::Disjoint,
        }
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.relation(other) == Relation::Disjoint
    }

    /// Range of leaf positions at `depth` covered by this interval.
    /// Requires `depth >= level`.
    pub fn leaf_range(self, depth: u32) -> std::ops::Range<u64> {
        debug_assert!(depth >= self.level);
        let shift = depth - self.level;
        (self.pos << shift)..((self.pos + 1) << shift)
    }

    /// Position of this index in breadth-first (heap) order:
    /// `2^level - 1 + pos`.
    pub fn heap_index(self) -> usize {
        (1usize << self.level) - 1 + self.pos as usize
    }

    pub fn from_heap_index(i: usize) -> Self {
        let level = usize::BITS - 1 - (i + 1).leading_zeros();
        Self {
            level,
            pos: (i + 1 - (1usize << level)) as u64,
        }
    }

    /// All intervals of levels `0..levels` in heap order.
    pub fn all_up_to(levels: u32) -> impl Iterator<Item = Self> {
        (0..(1usize << levels) - 1).map(Self::from_heap_index)
    }

    /// The constant value `h_self(other)` of the Haar function on a strictly
    /// contained interval, `±|self|^{-1/2}`. `None` unless `other ⊊ self`.
    pub fn haar_value_on(self, other: Self) -> Option<f64> {
        if other.level <= self.level || !self.contains(other) {
            return None;
        }
        let child = other.ancestor_at(self.level + 1)?;
        let magnitude = self.measure().sqrt().recip();
        Some(if child.is_left_child() {
            magnitude
        } else {
            -magnitude
        })
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}/2^{}, {}/2^{})", self.pos, self.level, self.pos + 1, self.level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_relations() {
        let i = DyadicIndex::new(3, 5).unwrap();
        assert_eq!(i.left_child(), DyadicIndex { level: 4, pos: 10 });
        assert_eq!(i.right_child(), DyadicIndex { level: 4, pos: 11 });
        assert_eq!(i.parent(), Some(DyadicIndex { level: 2, pos: 2 }));
        assert_eq!(DyadicIndex::ROOT.parent(), None);
        assert_eq!(i.measure(), 0.125);
        assert!(DyadicIndex::new(2, 4).is_err());
    }

    #[test]
    fn relation_is_trichotomous() {
        let all: Vec<_> = DyadicIndex::all_up_to(5).collect();
        for &a in &all {
            for &b in &all {
                let (lo_a, hi_a) = (a.left_endpoint(), a.left_endpoint() + a.measure());
                let (lo_b, hi_b) = (b.left_endpoint(), b.left_endpoint() + b.measure());
                let expected = if a == b {
                    Relation::Equal
                } else if lo_a <= lo_b && hi_b <= hi_a {
                    Relation::Contains
                } else if lo_b <= lo_a && hi_a <= hi_b {
                    Relation::ContainedIn
                } else {
                    assert!(hi_a <= lo_b || hi_b <= lo_a);
                    Relation::Disjoint
                };
                assert_eq!(a.relation(b), expected, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn heap_index_round_trip() {
        for (i, idx) in DyadicIndex::all_up_to(8).enumerate() {
            assert_eq!(idx.heap_index(), i);
            assert_eq!(DyadicIndex::from_heap_index(i), idx);
        }
    }

    #[test]
    fn haar_value_sign_by_child() {
        let j = DyadicIndex::new(1, 1).unwrap();
        let inside_left = DyadicIndex::new(3, 4).unwrap();
        let inside_right = DyadicIndex::new(3, 7).unwrap();
        let v = 2f64.sqrt();
        assert!((j.haar_value_on(inside_left).unwrap() - v).abs() < 1e-15);
        assert!((j.haar_value_on(inside_right).unwrap() + v).abs() < 1e-15);
        assert_eq!(j.haar_value_on(j), None);
        assert_eq!(j.haar_value_on(DyadicIndex::new(3, 0).unwrap()), None);
    }
}
