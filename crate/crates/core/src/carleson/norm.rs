//! `‖μ‖²_{sC}`: the supremum over finite disjoint collections `{I_k}` of
//! `Σ_k Σ_{J⊆I_k} μ(J) / Cap_s(⋃ I_k)`, together with the `BMO^s` and
//! `CMO^s` functionals built on it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CarlesonSequence;
use crate::capacity::{CapacityCache, CapacityEstimate, CapacityOptions, DyadicSet, DEFAULT_EXTRA_DEPTH};
use crate::dyadic::{DyadicIndex, StepFunction};
use crate::error::{Error, Result};
use crate::operators::Smoothness;

/// Deepest tree enumerated by default in exact mode.
pub const EXACT_MAX_DEPTH: u32 = 3;
/// Deepest tree enumerated when explicitly allowed.
pub const EXACT_MAX_DEPTH_OVERRIDE: u32 = 4;
/// Number of best single intervals the greedy search may add.
pub const GREEDY_POOL: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonOptions {
    pub mode: Mode,
    /// `solve_depth: None` means sequence depth + 4.
    pub capacity: CapacityOptions,
    pub allow_depth_4: bool,
}

impl CarlesonOptions {
    pub fn exact() -> Self {
        Self {
            mode: Mode::Exact,
            capacity: CapacityOptions::default(),
            allow_depth_4: false,
        }
    }

    pub fn heuristic() -> Self {
        Self {
            mode: Mode::Heuristic,
            ..Self::exact()
        }
    }

    pub fn with_solve_depth(mut self, solve_depth: u32) -> Self {
        self.capacity.solve_depth = Some(solve_depth);
        self
    }
}

/// A disjoint collection with its captured mass and the capacity of its union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionValue {
    pub collection: Vec<DyadicIndex>,
    pub mass: f64,
    pub cap: CapacityEstimate,
    pub ratio: f64,
    /// `true` when the ratio is only a lower bound on the supremum.
    pub heuristic: bool,
}

/// Every nonempty antichain of the tree with levels `0..=depth`.
pub fn antichains(depth: u32) -> Vec<Vec<DyadicIndex>> {
    fn below(i: DyadicIndex, depth: u32) -> Vec<Vec<DyadicIndex>> {
        let mut out = vec![Vec::new(), vec![i]];
        if i.level < depth {
            let left = below(i.left_child(), depth);
            let right = below(i.right_child(), depth);
            for l in &left {
                for r in &right {
                    if l.is_empty() && r.is_empty() {
                        continue;
                    }
                    let mut both = l.clone();
                    both.extend_from_slice(r);
                    out.push(both);
                }
            }
        }
        out
    }
    let mut all = below(DyadicIndex::ROOT, depth);
    all.retain(|a| !a.is_empty());
    all
}

struct Evaluator<'a> {
    mu_depth: u32,
    subtree: Vec<f64>,
    s: Smoothness,
    opts: CapacityOptions,
    cache: &'a CapacityCache,
}

impl<'a> Evaluator<'a> {
    fn new(mu: &CarlesonSequence, s: Smoothness, opts: &CarlesonOptions, cache: &'a CapacityCache) -> Self {
        let capacity = CapacityOptions {
            solve_depth: Some(opts.capacity.solve_depth.unwrap_or(mu.depth() + DEFAULT_EXTRA_DEPTH)),
            ..opts.capacity
        };
        Self {
            mu_depth: mu.depth(),
            subtree: mu.subtree_masses(),
            s,
            opts: capacity,
            cache,
        }
    }

    fn mass(&self, collection: &[DyadicIndex]) -> f64 {
        collection.iter().map(|i| self.subtree[i.heap_index()]).sum()
    }

    fn union(&self, collection: &[DyadicIndex]) -> DyadicSet {
        DyadicSet::from_intervals(self.mu_depth, collection).expect("intervals within sequence depth")
    }

    fn value(&self, collection: Vec<DyadicIndex>, heuristic: bool) -> Result<CollectionValue> {
        let mass = self.mass(&collection);
        let cap = (*self.cache.get(&self.union(&collection), self.s, &self.opts)?).clone();
        let ratio = if mass == 0.0 { 0.0 } else { mass / cap.value };
        Ok(CollectionValue {
            collection,
            mass,
            cap,
            ratio,
            heuristic,
        })
    }

    fn capacity_value(&self, collection: &[DyadicIndex]) -> Result<f64> {
        Ok(self.cache.value(&self.union(collection), self.s, &self.opts)?.0)
    }
}

fn better(candidate_mass: f64, candidate_cap: f64, best: Option<(f64, f64)>) -> bool {
    match best {
        None => true,
        // compare mass/cap without dividing
        Some((m, c)) => candidate_mass * c > m * candidate_cap,
    }
}

pub fn carleson_norm(
    mu: &CarlesonSequence,
    s: Smoothness,
    opts: &CarlesonOptions,
    cache: &CapacityCache,
) -> Result<CollectionValue> {
    let ev = Evaluator::new(mu, s, opts, cache);
    match opts.mode {
        Mode::Exact => exact(&ev, opts),
        Mode::Heuristic => heuristic(&ev),
    }
}

/// Supremum over single intervals only, `max_I μ(T_I)/Cap(I)`. Always a
/// lower bound on [`carleson_norm`]; exhaustive at any depth.
pub fn single_interval_sup(
    mu: &CarlesonSequence,
    s: Smoothness,
    opts: &CarlesonOptions,
    cache: &CapacityCache,
) -> Result<CollectionValue> {
    let ev = Evaluator::new(mu, s, opts, cache);
    let mut best: Option<(f64, f64)> = None;
    let mut best_interval = DyadicIndex::ROOT;
    for i in DyadicIndex::all_up_to(ev.mu_depth + 1) {
        let (mass, cap) = (ev.mass(&[i]), ev.capacity_value(&[i])?);
        if better(mass, cap, best) {
            best = Some((mass, cap));
            best_interval = i;
        }
    }
    ev.value(vec![best_interval], false)
}

fn exact(ev: &Evaluator, opts: &CarlesonOptions) -> Result<CollectionValue> {
    let cap_depth = if opts.allow_depth_4 {
        EXACT_MAX_DEPTH_OVERRIDE
    } else {
        EXACT_MAX_DEPTH
    };
    if ev.mu_depth > cap_depth {
        return Err(Error::DepthExceeded {
            op: "exact carleson_norm",
            depth: ev.mu_depth,
            max: cap_depth,
        });
    }
    // capacities by union bitmask over the 2^depth leaves
    let mut caps: HashMap<u64, f64> = HashMap::new();
    let mut best: Option<(f64, f64)> = None;
    let mut best_collection = vec![DyadicIndex::ROOT];
    for a in antichains(ev.mu_depth) {
        let mask = a
            .iter()
            .flat_map(|i| i.leaf_range(ev.mu_depth))
            .fold(0u64, |m, k| m | (1 << k));
        let cap = match caps.get(&mask) {
            Some(&c) => c,
            None => {
                let c = ev.capacity_value(&a)?;
                caps.insert(mask, c);
                c
            }
        };
        let mass = ev.mass(&a);
        if better(mass, cap, best) {
            best = Some((mass, cap));
            best_collection = a;
        }
    }
    ev.value(best_collection, false)
}

fn heuristic(ev: &Evaluator) -> Result<CollectionValue> {
    let mut best: Option<(f64, f64)> = None;
    let mut best_collection = vec![DyadicIndex::ROOT];

    let mut singles = Vec::new();
    for i in DyadicIndex::all_up_to(ev.mu_depth + 1) {
        let (mass, cap) = (ev.mass(&[i]), ev.capacity_value(&[i])?);
        singles.push((i, mass, cap));
        if better(mass, cap, best) {
            best = Some((mass, cap));
            best_collection = vec![i];
        }
    }
    // a full level covers [0,1], whose capacity is 1 at every solve depth
    for level in 1..=ev.mu_depth {
        let all: Vec<DyadicIndex> = (0..1u64 << level).map(|pos| DyadicIndex { level, pos }).collect();
        let (mass, cap) = (ev.mass(&all), ev.capacity_value(&all)?);
        if better(mass, cap, best) {
            best = Some((mass, cap));
            best_collection = all;
        }
    }

    singles.sort_by(|a, b| (b.1 * a.2).total_cmp(&(a.1 * b.2)).then(a.0.heap_index().cmp(&b.0.heap_index())));
    let pool: Vec<DyadicIndex> = singles.iter().take(GREEDY_POOL).map(|t| t.0).collect();
    if let Some(&(first, mass, cap)) = singles.first() {
        let mut current = vec![first];
        let mut current_value = (mass, cap);
        loop {
            let mut step: Option<(DyadicIndex, f64, f64)> = None;
            for &i in &pool {
                if current.iter().any(|j| !j.is_disjoint(i)) {
                    continue;
                }
                let mut trial = current.clone();
                trial.push(i);
                let (m, c) = (ev.mass(&trial), ev.capacity_value(&trial)?);
                if better(m, c, step.map(|t| (t.1, t.2))) {
                    step = Some((i, m, c));
                }
            }
            match step {
                Some((i, m, c)) if better(m, c, Some(current_value)) => {
                    current.push(i);
                    current_value = (m, c);
                }
                _ => break,
            }
        }
        if better(current_value.0, current_value.1, best) {
            current.sort_by_key(|i| i.heap_index());
            best_collection = current;
        }
    }
    ev.value(best_collection, true)
}

/// `‖b‖²_{BMO^s}` as the Carleson norm of `μ(I) = |I|^{-2s}(b,h_I)²`; the
/// norm itself is `ratio.sqrt()`.
pub fn bmo_s_norm(b: &StepFunction, s: Smoothness, opts: &CarlesonOptions, cache: &CapacityCache) -> Result<CollectionValue> {
    carleson_norm(&CarlesonSequence::from_symbol(b, s), s, opts, cache)
}

/// `Θ(N)`: the `BMO^s` supremum with `μ` restricted to intervals of measure
/// `< 2^{-cutoff}`, returned as a norm (square root of the ratio).
pub fn cmo_tail(b: &StepFunction, s: Smoothness, cutoff: u32, opts: &CarlesonOptions, cache: &CapacityCache) -> Result<f64> {
    let mu = CarlesonSequence::from_symbol(b, s).tail(cutoff);
    if mu.weights().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(carleson_norm(&mu, s, opts, cache)?.ratio.sqrt())
}
