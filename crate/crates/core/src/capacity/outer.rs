//! Randomized checks that restricted capacity behaves as an outer measure.

use serde::{Deserialize, Serialize};

use super::{capacity, CapacityOptions, DyadicSet};
use crate::error::Result;
use crate::operators::Smoothness;
use crate::parallel::par_map;
use crate::random::{random_set, random_subset, sample_rng};

/// Slack absorbing solver error in the inequality checks.
pub const OUTER_MEASURE_BUDGET: f64 = 1e-7;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pairs: usize,
    pub failures: usize,
    /// Largest `lhs − rhs` observed; negative when every pair holds strictly.
    pub max_violation: f64,
    pub unconverged: usize,
}

impl PairCheck {
    fn record(&mut self, lhs: f64, rhs: f64, converged: bool) {
        let v = lhs - rhs;
        if self.pairs == 0 || v > self.max_violation {
            self.max_violation = v;
        }
        self.pairs += 1;
        if v > OUTER_MEASURE_BUDGET {
            self.failures += 1;
        }
        if !converged {
            self.unconverged += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterMeasureReport {
    pub s: Smoothness,
    pub set_depth: u32,
    pub solve_depth: u32,
    pub seed: u64,
    pub empty_value: f64,
    pub monotone: PairCheck,
    pub subadditive: PairCheck,
}

impl OuterMeasureReport {
    pub fn passed(&self) -> bool {
        self.empty_value == 0.0 && self.monotone.failures == 0 && self.subadditive.failures == 0
    }
}

/// `trials` nested pairs `E₁ ⊆ E₂` and `trials` union pairs of random sets at
/// `set_depth`, all solved at one common grid depth.
pub fn outer_measure_suite(
    s: Smoothness,
    set_depth: u32,
    seed: u64,
    trials: usize,
    opts: &CapacityOptions,
    jobs: usize,
) -> Result<OuterMeasureReport> {
    let opts = CapacityOptions {
        solve_depth: Some(opts.solve_depth.unwrap_or(set_depth + super::DEFAULT_EXTRA_DEPTH)),
        ..*opts
    };
    let cap = |e: &DyadicSet| capacity(e, s, &opts);
    let empty_value = cap(&DyadicSet::empty(set_depth))?.value;

    let nested = par_map(jobs, trials, |k| -> Result<_> {
        let mut rng = sample_rng(seed, "outer-nested", k as u64);
        let big = random_set(set_depth, &mut rng);
        let small = random_subset(&big, &mut rng);
        let (a, b) = (cap(&small)?, cap(&big)?);
        Ok((a.value, b.value, a.converged && b.converged))
    });
    let unions = par_map(jobs, trials, |k| -> Result<_> {
        let mut rng = sample_rng(seed, "outer-union", k as u64);
        let e1 = random_set(set_depth, &mut rng);
        let e2 = random_set(set_depth, &mut rng);
        let (a, b, u) = (cap(&e1)?, cap(&e2)?, cap(&e1.union(&e2))?);
        Ok((u.value, a.value + b.value, a.converged && b.converged && u.converged))
    });

    let mut monotone = PairCheck::default();
    for r in nested {
        let (lhs, rhs, ok) = r?;
        monotone.record(lhs, rhs, ok);
    }
    let mut subadditive = PairCheck::default();
    for r in unions {
        let (lhs, rhs, ok) = r?;
        subadditive.record(lhs, rhs, ok);
    }
    Ok(OuterMeasureReport {
        s,
        set_depth,
        solve_depth: opts.solve_depth.expect("set above"),
        seed,
        empty_value,
        monotone,
        subadditive,
    })
}
