//! Dyadic `s`-capacity of finite unions of dyadic intervals, computed as the
//! minimum of `‖f‖²_{H^s}` over depth-`M` step functions with `f ≥ 1` on `E`.
//!
//! Any depth-`M` minimizer is admissible for the unrestricted problem, so every
//! reported value is an upper bound on the true capacity. Once `M` reaches the
//! depth of `E` the bound is attained: conditional expectation onto the
//! depth-`M` cells preserves `f ≥ 1` on `E` and does not increase the norm.

mod outer;
mod set;
mod solver;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use outer::{outer_measure_suite, OuterMeasureReport, PairCheck, OUTER_MEASURE_BUDGET};
pub use set::DyadicSet;

use crate::dyadic::{DyadicIndex, StepFunction};
use crate::error::{Error, Result};
use crate::operators::Smoothness;
use solver::{energy, kkt_residual, solve_obstacle, QuadraticForm, SolverOutcome, SolverSettings};

/// Deepest solve grid accepted, `2^20` leaves.
pub const MAX_SOLVE_DEPTH: u32 = 20;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Solve depth used when none is given: `depth(E) + DEFAULT_EXTRA_DEPTH`.
pub const DEFAULT_EXTRA_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityOptions {
    /// Grid depth `M`; `None` means `depth(E) + 4` with `E` in canonical form.
    pub solve_depth: Option<u32>,
    pub tol: f64,
    /// `None` means `50·2^M`.
    pub max_iters: Option<usize>,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            solve_depth: None,
            tol: DEFAULT_TOL,
            max_iters: None,
        }
    }
}

impl CapacityOptions {
    pub fn at_depth(solve_depth: u32) -> Self {
        Self {
            solve_depth: Some(solve_depth),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub certificate: StepFunction,
    pub solve_depth: u32,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restricted capacity of `e` at the configured solve depth `M`.
///
/// The minimization runs on the grid of the canonical set depth `d ≤ M` and
/// the minimizer is refined to depth `M`: averaging an admissible function
/// over the depth-`d` cells keeps it admissible and drops only Haar
/// coefficients, so the depth-`M` minimizer is a depth-`d` step function.
/// The reported value and KKT residual are evaluated on the depth-`M` grid.
pub fn capacity(e: &DyadicSet, s: Smoothness, opts: &CapacityOptions) -> Result<CapacityEstimate> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let e = e.canonical();
    let depth = opts.solve_depth.unwrap_or(e.depth() + DEFAULT_EXTRA_DEPTH);
    if depth > MAX_SOLVE_DEPTH {
        return Err(Error::DepthTooLarge {
            depth,
            max: MAX_SOLVE_DEPTH,
        });
    }
    if depth < e.depth() {
        return Err(Error::InvalidArgument(format!(
            "solve depth {depth} is coarser than the set (depth {})",
            e.depth()
        )));
    }
    if e.is_empty() {
        return Ok(CapacityEstimate {
            value: 0.0,
            certificate: StepFunction::zero(depth),
            solve_depth: depth,
            kkt_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let settings = SolverSettings {
        tol: opts.tol,
        max_iters: opts.max_iters.unwrap_or(50usize << depth),
    };
    let out = solve_on_grid(&e, s, e.depth(), settings);
    let certificate = StepFunction::new(e.depth(), out.x)?.refine(depth)?;
    let mut form = QuadraticForm::new(depth, s.get());
    let mut g = vec![0.0; form.len()];
    form.apply(certificate.values(), &mut g);
    let kkt_residual = kkt_residual(certificate.values(), &g, &e.mask(depth));
    Ok(CapacityEstimate {
        value: energy(certificate.values(), &g),
        certificate,
        solve_depth: depth,
        kkt_residual,
        iterations: out.iterations,
        converged: kkt_residual <= opts.tol,
    })
}

fn solve_on_grid(e: &DyadicSet, s: Smoothness, grid: u32, settings: SolverSettings) -> SolverOutcome {
    let mut form = QuadraticForm::new(grid, s.get());
    solve_obstacle(&mut form, &e.mask(grid), settings)
}

/// `‖𝟙_I‖²_{H^s} = |I| + |I|² Σ_{J⊋I} |J|^{-1-2s}`.
pub fn capacity_upper_indicator(i: DyadicIndex, s: Smoothness) -> f64 {
    let m = i.measure();
    let ancestors: f64 = (0..i.level)
        .map(|j| ((1.0 + 2.0 * s.get()) * j as f64).exp2())
        .sum();
    m + m * m * ancestors
}

/// `Σ_i (t_i² − t_{i−1}²)/2 · Cap({f ≥ t_i})` over the distinct positive
/// leaf values `t_i` of `f`, which equals `∫_0^∞ t Cap({f ≥ t}) dt` for step
/// functions. Capacities are restricted upper bounds, so the result
/// overestimates the continuous quantity.
pub fn mazya_integral(f: &StepFunction, s: Smoothness, opts: &CapacityOptions, cache: Option<&CapacityCache>) -> Result<f64> {
    if let Some(&v) = f.values().iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(Error::NegativeInput {
            op: "mazya_integral",
            value: v,
        });
    }
    let mut levels: Vec<f64> = f.values().iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let opts = CapacityOptions {
        solve_depth: Some(opts.solve_depth.unwrap_or(f.depth() + DEFAULT_EXTRA_DEPTH)),
        ..*opts
    };
    let mut total = 0.0;
    let mut prev = 0.0;
    for t in levels {
        let e = DyadicSet::superlevel(f, t);
        let cap = match cache {
            Some(c) => c.value(&e, s, &opts)?.0,
            None => capacity(&e, s, &opts)?.value,
        };
        total += 0.5 * (t * t - prev * prev) * cap;
        prev = t;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    s: u64,
    tol: u64,
    solve_depth: Option<u32>,
    max_iters: Option<usize>,
    set: DyadicSet,
}

/// Memoized [`capacity`], keyed by the canonical form of the set. Safe to share
/// across threads; a duplicate concurrent solve stores the first result.
#[derive(Debug, Default)]
pub struct CapacityCache {
    map: Mutex<HashMap<CacheKey, Arc<CapacityEstimate>>>,
    values: Mutex<HashMap<CacheKey, (f64, bool)>>,
}

impl CapacityCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(e: DyadicSet, s: Smoothness, opts: &CapacityOptions) -> CacheKey {
        CacheKey {
            s: s.get().to_bits(),
            tol: opts.tol.to_bits(),
            solve_depth: opts.solve_depth,
            max_iters: opts.max_iters,
            set: e,
        }
    }

    pub fn get(&self, e: &DyadicSet, s: Smoothness, opts: &CapacityOptions) -> Result<Arc<CapacityEstimate>> {
        let key = Self::key(e.canonical(), s, opts);
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let est = Arc::new(capacity(&key.set, s, opts)?);
        let mut map = self.map.lock().expect("cache lock");
        Ok(Arc::clone(map.entry(key).or_insert(est)))
    }

    /// Capacity value and convergence flag only, shared across the orbit of
    /// `e` under tree automorphisms. With `solve_depth: None` the grid depth
    /// is derived from the orbit representative, which has the same
    /// canonical depth as `e`.
    pub fn value(&self, e: &DyadicSet, s: Smoothness, opts: &CapacityOptions) -> Result<(f64, bool)> {
        let key = Self::key(e.orbit_representative(), s, opts);
        if let Some(&hit) = self.values.lock().expect("cache lock").get(&key) {
            return Ok(hit);
        }
        let est = capacity(&key.set, s, opts)?;
        let v = (est.value, est.converged);
        let mut map = self.values.lock().expect("cache lock");
        Ok(*map.entry(key).or_insert(v))
    }

    /// Number of stored full estimates.
    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::haar_analyze;
    use crate::norms::hs_norm_sq_coeffs;

    fn s(v: f64) -> Smoothness {
        Smoothness::new(v).unwrap()
    }

    /// Minimizer is 1 on the half and 1/3 on the other half. Only the root
    /// coefficient (weight 1 for every `s`) is nonzero: `5/9 + 1/9 = 2/3`.
    #[test]
    fn half_interval_capacity_is_two_thirds() {
        let half = DyadicSet::from_interval(DyadicIndex::new(1, 1).unwrap());
        for sv in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let est = capacity(&half, s(sv), &CapacityOptions::at_depth(8)).unwrap();
            assert!((est.value - 2.0 / 3.0).abs() < 1e-8, "s={sv}: {}", est.value);
            let other = est.certificate.values()[0];
            assert!((other - 1.0 / 3.0).abs() < 1e-6, "s={sv}: {other}");
        }
    }

    #[test]
    fn reduced_grid_matches_full_grid_solve() {
        let sets = [
            DyadicSet::new(3, vec![1, 4, 5]).unwrap(),
            DyadicSet::new(4, vec![0, 7, 8, 15]).unwrap(),
            DyadicSet::new(2, vec![2]).unwrap(),
        ];
        for e in &sets {
            for sv in [0.2, 0.5, 0.85] {
                let m = e.depth() + 3;
                let reduced = capacity(e, s(sv), &CapacityOptions::at_depth(m)).unwrap();
                let settings = SolverSettings {
                    tol: DEFAULT_TOL,
                    max_iters: 50 << m,
                };
                let full = solve_on_grid(e, s(sv), m, settings);
                assert!(reduced.converged && full.kkt_residual <= DEFAULT_TOL);
                let mut form = QuadraticForm::new(m, sv);
                let mut g = vec![0.0; form.len()];
                form.apply(&full.x, &mut g);
                let full_value = energy(&full.x, &g);
                assert!((reduced.value - full_value).abs() < 1e-9, "{} vs {full_value}", reduced.value);
                let gap = reduced
                    .certificate
                    .values()
                    .iter()
                    .zip(&full.x)
                    .fold(0.0f64, |g, (a, b)| g.max((a - b).abs()));
                assert!(gap < 1e-6, "certificate gap {gap}");
            }
        }
    }

    #[test]
    fn whole_interval_has_unit_capacity() {
        for sv in [0.25, 0.5, 0.75] {
            let est = capacity(&DyadicSet::full(0), s(sv), &CapacityOptions::at_depth(6)).unwrap();
            assert!((est.value - 1.0).abs() < 1e-12);
            assert!(est.certificate.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
            assert!(est.converged);
        }
    }

    #[test]
    fn empty_set_has_zero_capacity() {
        let est = capacity(&DyadicSet::empty(3), s(0.4), &CapacityOptions::default()).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.certificate.max_abs(), 0.0);
    }

    #[test]
    fn certificate_is_feasible_and_consistent() {
        let sv = s(0.3);
        let e = DyadicSet::new(3, vec![1, 2, 6]).unwrap();
        let est = capacity(&e, sv, &CapacityOptions::at_depth(8)).unwrap();
        assert!(est.converged, "residual {}", est.kkt_residual);
        for k in e.refine(8).unwrap().leaves() {
            assert!(est.certificate.values()[*k as usize] >= 1.0 - 1e-9);
        }
        let direct = hs_norm_sq_coeffs(&haar_analyze(&est.certificate), sv);
        assert!((direct - est.value).abs() <= 1e-9 * est.value);
        assert!(est.certificate.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn indicator_bound_examples() {
        assert_eq!(capacity_upper_indicator(DyadicIndex::ROOT, s(0.5)), 1.0);
        // level 1, s = 1/2: 1/2 + (1/4)·1
        let i = DyadicIndex::new(1, 1).unwrap();
        assert!((capacity_upper_indicator(i, s(0.5)) - 0.75).abs() < 1e-15);
        let sv = s(0.25);
        for level in 1..5 {
            let i = DyadicIndex::new(level, 0).unwrap();
            let direct = hs_norm_sq_coeffs(&haar_analyze(&StepFunction::indicator(i)), sv);
            assert!((direct - capacity_upper_indicator(i, sv)).abs() < 1e-13);
            let est = capacity(&DyadicSet::from_interval(i), sv, &CapacityOptions::default()).unwrap();
            assert!(est.value <= direct + 1e-12);
        }
    }

    #[test]
    fn mazya_examples() {
        let opts = CapacityOptions::at_depth(4);
        let one = StepFunction::constant(1.0);
        assert!((mazya_integral(&one, s(0.5), &opts, None).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(mazya_integral(&StepFunction::zero(2), s(0.5), &opts, None).unwrap(), 0.0);
        let neg = StepFunction::new(1, vec![1.0, -0.5]).unwrap();
        assert!(matches!(
            mazya_integral(&neg, s(0.5), &opts, None),
            Err(Error::NegativeInput { .. })
        ));
    }

    #[test]
    fn cache_reuses_equivalent_sets() {
        let cache = CapacityCache::new();
        let opts = CapacityOptions::at_depth(6);
        let a = DyadicSet::from_interval(DyadicIndex::new(1, 0).unwrap());
        let b = a.refine(4).unwrap();
        let x = cache.get(&a, s(0.5), &opts).unwrap();
        let y = cache.get(&b, s(0.5), &opts).unwrap();
        assert!(Arc::ptr_eq(&x, &y));
        assert_eq!(cache.len(), 1);
        let mirrored = DyadicSet::from_interval(DyadicIndex::new(1, 1).unwrap());
        let (v, ok) = cache.value(&mirrored, s(0.5), &opts).unwrap();
        assert!(ok && (v - x.value).abs() < 1e-12);
    }

    #[test]
    fn estimate_json_carries_certificate() {
        let est = capacity(&DyadicSet::full(0), s(0.5), &CapacityOptions::at_depth(1)).unwrap();
        let v = serde_json::to_value(&est).unwrap();
        assert_eq!(v["certificate"]["depth"], 1);
        assert_eq!(v["solve_depth"], 1);
    }
}
