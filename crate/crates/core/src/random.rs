//! Seeded generators for symbols, test functions, sets and Carleson sequences.
//!
//! Every sample is drawn from its own ChaCha stream keyed by `(seed, stream,
//! index)`, so results do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::capacity::DyadicSet;
use crate::carleson::CarlesonSequence;
use crate::dyadic::{haar_synthesize, DyadicIndex, HaarCoeffs, StepFunction};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for sample `index` of experiment `stream`.
pub fn sample_rng(seed: u64, stream: &str, index: u64) -> ChaCha8Rng {
    let tag = stream
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3));
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ tag) ^ index))
}

/// Mean and Haar coefficients i.i.d. standard normal, coefficients scaled by
/// `|I|^alpha`.
pub fn random_haar(depth: u32, alpha: f64, rng: &mut impl Rng) -> HaarCoeffs {
    let mean: f64 = StandardNormal.sample(rng);
    let coeffs = (0..(1usize << depth) - 1)
        .map(|k| {
            let z: f64 = StandardNormal.sample(rng);
            z * DyadicIndex::from_heap_index(k).measure().powf(alpha)
        })
        .collect();
    HaarCoeffs::from_parts(depth, mean, coeffs).expect("sizes match")
}

pub fn random_function(depth: u32, alpha: f64, rng: &mut impl Rng) -> StepFunction {
    haar_synthesize(&random_haar(depth, alpha, rng))
}

/// `|g|` for a random `g`.
pub fn random_nonnegative(depth: u32, alpha: f64, rng: &mut impl Rng) -> StepFunction {
    random_function(depth, alpha, rng).map(f64::abs)
}

/// Union of one to four random dyadic intervals of levels `1..=depth`,
/// represented at `depth`.
pub fn random_set(depth: u32, rng: &mut impl Rng) -> DyadicSet {
    let count = rng.random_range(1..=4);
    let intervals: Vec<DyadicIndex> = (0..count)
        .map(|_| {
            let level = rng.random_range(1..=depth.max(1)).min(depth);
            DyadicIndex::new(level, rng.random_range(0..1u64 << level)).expect("in range")
        })
        .collect();
    DyadicSet::from_intervals(depth, &intervals).expect("levels within depth")
}

/// Random subset of `set`: each leaf kept with probability 1/2, falling back
/// to a single leaf so the result is nonempty whenever `set` is.
pub fn random_subset(set: &DyadicSet, rng: &mut impl Rng) -> DyadicSet {
    let mut leaves: Vec<u64> = set.leaves().iter().copied().filter(|_| rng.random_bool(0.5)).collect();
    if leaves.is_empty() && !set.is_empty() {
        leaves.push(set.leaves()[rng.random_range(0..set.leaves().len())]);
    }
    DyadicSet::new(set.depth(), leaves).expect("subset of valid leaves")
}

/// `μ(I)` i.i.d. uniform on `[0, 1)` for every interval of levels `0..=depth`.
pub fn random_carleson(depth: u32, rng: &mut impl Rng) -> CarlesonSequence {
    let entries = DyadicIndex::all_up_to(depth + 1).map(|i| (i, rng.random::<f64>())).collect();
    CarlesonSequence::new(depth, entries).expect("nonnegative, within depth")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = sample_rng(42, "x", 3).random();
        let b: u64 = sample_rng(42, "x", 3).random();
        let c: u64 = sample_rng(42, "x", 4).random();
        let d: u64 = sample_rng(42, "y", 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = sample_rng(1, "t", 0);
        let f = random_nonnegative(5, 0.0, &mut rng);
        assert!(f.values().iter().all(|&v| v >= 0.0));
        for _ in 0..50 {
            let e = random_set(6, &mut rng);
            assert!(!e.is_empty());
            assert!(random_subset(&e, &mut rng).is_subset(&e));
        }
        let mu = random_carleson(2, &mut rng);
        assert_eq!(mu.entries().count(), 7);
    }
}
