//! Ratio experiments estimating the constants in the two-sided equivalences.
//!
//! Every experiment draws its samples from per-sample seeded streams and
//! reports long-format rows `(suite, s, depth, seed, statistic, value)`. For
//! suites built on `BMO^s` the `depth` column is the Carleson depth, so the
//! random symbols carry one more Haar level; elsewhere it is the function
//! depth.

use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, mazya_integral, CapacityCache, CapacityOptions, DyadicSet, DEFAULT_EXTRA_DEPTH};
use crate::carleson::{
    bmo_s_norm, carleson_norm, embedding_constant, operator_norm_hs, single_interval_sup, CarlesonOptions, Mode, Operator,
};
use crate::dyadic::{haar_analyze, DyadicIndex, StepFunction};
use crate::error::{Error, Result};
use crate::norms::{bmo_dyadic, hs_dot_sq_coeffs, hs_norm};
use crate::operators::{frac_integral_avg, maximal, pointwise_product, Smoothness};
use crate::parallel::par_map;
use crate::random::{random_carleson, random_function, random_nonnegative, sample_rng};

/// Grid depth for capacity solves inside the suites unless configured.
pub const SUITE_SOLVE_DEPTH: u32 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub suite: String,
    pub s: f64,
    pub depth: u32,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl RatioStats {
    pub fn new(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return Self {
                count: 0,
                min: f64::NAN,
                median: f64::NAN,
                max: f64::NAN,
            };
        }
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            count: n,
            min: v[0],
            median,
            max: v[n - 1],
        }
    }

    /// `max/min`, the multiplicative width of the band.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Relative change `|b − a| / |a|`.
pub fn drift(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub jobs: usize,
    /// Capacity grid depth; `None` uses [`SUITE_SOLVE_DEPTH`] (or the
    /// suite-specific default noted on each function).
    pub solve_depth: Option<u32>,
    /// Haar coefficients of random inputs scale like `|I|^alpha`.
    pub alpha: f64,
    pub mode: Mode,
    pub allow_depth_4: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 200,
            jobs: 1,
            solve_depth: None,
            alpha: 0.0,
            mode: Mode::Exact,
            allow_depth_4: false,
        }
    }
}

impl SuiteConfig {
    fn carleson(&self, mode: Mode) -> CarlesonOptions {
        CarlesonOptions {
            mode,
            capacity: CapacityOptions::at_depth(self.solve_depth.unwrap_or(SUITE_SOLVE_DEPTH)),
            allow_depth_4: self.allow_depth_4,
        }
    }

    /// Exact when the depth allows it under the configured mode, else heuristic.
    fn mode_for(&self, carleson_depth: u32) -> Mode {
        let cap = if self.allow_depth_4 { 4 } else { 3 };
        match self.mode {
            Mode::Exact if carleson_depth <= cap => Mode::Exact,
            _ => Mode::Heuristic,
        }
    }
}

/// Samples of one statistic together with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub suite: String,
    pub s: f64,
    pub depth: u32,
    pub seed: u64,
    pub stats: RatioStats,
    /// `true` when a heuristic (lower-bound) `BMO^s` entered the ratio.
    pub heuristic: bool,
    pub unconverged: usize,
    pub samples: Vec<f64>,
}

impl Scan {
    fn new(suite: &str, s: f64, depth: u32, seed: u64, samples: Vec<f64>, heuristic: bool, unconverged: usize) -> Self {
        Self {
            suite: suite.to_string(),
            s,
            depth,
            seed,
            stats: RatioStats::new(&samples),
            heuristic,
            unconverged,
            samples,
        }
    }

    pub fn rows(&self) -> Vec<Row> {
        let row = |statistic: &str, value: f64| Row {
            suite: self.suite.clone(),
            s: self.s,
            depth: self.depth,
            seed: self.seed,
            statistic: statistic.to_string(),
            value,
        };
        vec![
            row("count", self.stats.count as f64),
            row("min", self.stats.min),
            row("median", self.stats.median),
            row("max", self.stats.max),
            row("heuristic", if self.heuristic { 1.0 } else { 0.0 }),
            row("unconverged", self.unconverged as f64),
        ]
    }
}

fn smooth(s: f64) -> Result<Smoothness> {
    Smoothness::new(s)
}

/// `Cap(I)/|I|^{1−2s}` for `I = [0, 2^{-j})`, `j ∈ levels`, at one grid depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityScan {
    pub s: f64,
    pub solve_depth: u32,
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub upper_bounds: Vec<f64>,
    pub converged: bool,
}

impl CapacityScan {
    pub fn stats(&self) -> RatioStats {
        RatioStats::new(&self.ratios)
    }

    pub fn rows(&self, seed: u64) -> Vec<Row> {
        let mut rows = Vec::new();
        let row = |statistic: String, value: f64| Row {
            suite: "capacity_scan".into(),
            s: self.s,
            depth: self.solve_depth,
            seed,
            statistic,
            value,
        };
        for ((level, v), r) in self.levels.iter().zip(&self.values).zip(&self.ratios) {
            rows.push(row(format!("cap_level_{level}"), *v));
            rows.push(row(format!("ratio_level_{level}"), *r));
        }
        let st = self.stats();
        rows.push(row("ratio_min".into(), st.min));
        rows.push(row("ratio_max".into(), st.max));
        rows.push(row("ratio_spread".into(), st.spread()));
        rows
    }
}

pub fn capacity_scan(s: f64, levels: impl IntoIterator<Item = u32>, solve_depth: u32) -> Result<CapacityScan> {
    let sm = smooth(s)?;
    let levels: Vec<u32> = levels.into_iter().collect();
    let mut values = Vec::new();
    let mut ratios = Vec::new();
    let mut upper_bounds = Vec::new();
    let mut converged = true;
    for &level in &levels {
        let i = DyadicIndex::new(level, 0)?;
        let est = capacity(&DyadicSet::from_interval(i), sm, &CapacityOptions::at_depth(solve_depth))?;
        converged &= est.converged;
        ratios.push(est.value / i.measure().powf(1.0 - 2.0 * s));
        values.push(est.value);
        upper_bounds.push(crate::capacity::capacity_upper_indicator(i, sm));
    }
    Ok(CapacityScan {
        s,
        solve_depth,
        levels,
        values,
        ratios,
        upper_bounds,
        converged,
    })
}

/// `mazya_integral(f)/‖f‖²_{H^s}` over random nonnegative `f`. Default grid
/// depth is the function depth plus four.
pub fn mazya_scan(s: f64, depth: u32, cfg: &SuiteConfig) -> Result<Scan> {
    let sm = smooth(s)?;
    let opts = CapacityOptions::at_depth(cfg.solve_depth.unwrap_or(depth + DEFAULT_EXTRA_DEPTH));
    let cache = CapacityCache::new();
    let ratios = par_map(cfg.jobs, cfg.trials, |k| -> Result<f64> {
        let f = random_nonnegative(depth, cfg.alpha, &mut sample_rng(cfg.seed, "mazya", k as u64));
        Ok(mazya_integral(&f, sm, &opts, Some(&cache))? / hs_norm(&f, sm).powi(2))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Scan::new("mazya", s, depth, cfg.seed, ratios, false, 0))
}

/// `embedding_constant(μ)/‖μ‖²_{sC}` over random `μ` of the given Carleson depth.
pub fn embedding_scan(s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Scan> {
    let sm = smooth(s)?;
    let mode = cfg.mode_for(depth);
    let opts = cfg.carleson(mode);
    let out = par_map(cfg.jobs, cfg.trials, |k| -> Result<(f64, bool)> {
        let mu = random_carleson(depth, &mut sample_rng(cfg.seed, "embedding", k as u64));
        let norm = carleson_norm(&mu, sm, &opts, cache)?;
        let emb = embedding_constant(&mu, sm, depth)?;
        Ok((emb.value / norm.ratio, emb.converged && norm.cap.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let unconverged = out.iter().filter(|t| !t.1).count();
    let ratios = out.into_iter().map(|t| t.0).collect();
    Ok(Scan::new("embedding", s, depth, cfg.seed, ratios, mode == Mode::Heuristic, unconverged))
}

/// `max_I μ(T_I)/Cap(I)` divided by `‖μ‖²_{sC}` over random `μ`: how much of
/// the supremum single intervals capture. At most 1.
pub fn single_interval_scan(s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Scan> {
    let sm = smooth(s)?;
    let mode = cfg.mode_for(depth);
    let opts = cfg.carleson(mode);
    let out = par_map(cfg.jobs, cfg.trials, |k| -> Result<(f64, bool)> {
        let mu = random_carleson(depth, &mut sample_rng(cfg.seed, "embedding", k as u64));
        let full = carleson_norm(&mu, sm, &opts, cache)?;
        let single = single_interval_sup(&mu, sm, &opts, cache)?;
        Ok((single.ratio / full.ratio, full.cap.converged && single.cap.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let unconverged = out.iter().filter(|t| !t.1).count();
    let ratios = out.into_iter().map(|t| t.0).collect();
    Ok(Scan::new("single_interval", s, depth, cfg.seed, ratios, mode == Mode::Heuristic, unconverged))
}

/// Which operator a symbol-ratio suite measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolOperator {
    Paraproduct,
    AdjointParaproduct,
    ShiftCommutator,
}

impl SymbolOperator {
    pub fn suite_name(self) -> &'static str {
        match self {
            SymbolOperator::Paraproduct => "paraproduct",
            SymbolOperator::AdjointParaproduct => "adjoint_paraproduct",
            SymbolOperator::ShiftCommutator => "shift_commutator",
        }
    }

    fn with_symbol(self, symbol: StepFunction) -> Operator {
        match self {
            SymbolOperator::Paraproduct => Operator::Paraproduct { symbol },
            SymbolOperator::AdjointParaproduct => Operator::AdjointParaproduct { symbol },
            SymbolOperator::ShiftCommutator => Operator::ShiftCommutator { symbol },
        }
    }
}

/// `‖L_b‖_{H^s→H^s}/‖b‖_{BMO^s}` over random symbols with Carleson depth
/// `depth`. The operator norm is taken over inputs of the symbol depth,
/// which is exact for these operators.
pub fn operator_scan(op: SymbolOperator, s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Scan> {
    let sm = smooth(s)?;
    let mode = cfg.mode_for(depth);
    let opts = cfg.carleson(mode);
    let symbol_depth = depth + 1;
    let out = par_map(cfg.jobs, cfg.trials, |k| -> Result<(f64, bool)> {
        let b = random_function(symbol_depth, cfg.alpha, &mut sample_rng(cfg.seed, "symbol", k as u64));
        let bmo = bmo_s_norm(&b, sm, &opts, cache)?;
        let operator = op.with_symbol(b);
        let norm = operator_norm_hs(|f| operator.apply(f), sm, symbol_depth)?;
        Ok((norm.value / bmo.ratio.sqrt(), norm.converged && bmo.cap.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let unconverged = out.iter().filter(|t| !t.1).count();
    let ratios = out.into_iter().map(|t| t.0).collect();
    Ok(Scan::new(op.suite_name(), s, depth, cfg.seed, ratios, mode == Mode::Heuristic, unconverged))
}

/// `‖fg‖_{H^s}/(‖f‖_{H^s}‖g‖_{H^s})` over random pairs at function depth `depth`.
pub fn algebra_scan(s: f64, depth: u32, cfg: &SuiteConfig) -> Result<Scan> {
    let sm = smooth(s)?;
    let ratios = par_map(cfg.jobs, cfg.trials, |k| {
        let mut rng = sample_rng(cfg.seed, "algebra", k as u64);
        let f = random_function(depth, cfg.alpha, &mut rng);
        let g = random_function(depth, cfg.alpha, &mut rng);
        hs_norm(&pointwise_product(&f, &g), sm) / (hs_norm(&f, sm) * hs_norm(&g, sm))
    });
    Ok(Scan::new("algebra", s, depth, cfg.seed, ratios, false, 0))
}

/// `‖b‖_{BMO^s}/‖b‖_{Ḣ^s}` over random symbols with Carleson depth `depth`.
pub fn bmo_s_vs_sobolev_scan(s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Scan> {
    let sm = smooth(s)?;
    let mode = cfg.mode_for(depth);
    let opts = cfg.carleson(mode);
    let out = par_map(cfg.jobs, cfg.trials, |k| -> Result<(f64, bool)> {
        let b = random_function(depth + 1, cfg.alpha, &mut sample_rng(cfg.seed, "symbol", k as u64));
        let bmo = bmo_s_norm(&b, sm, &opts, cache)?;
        let dot = hs_dot_sq_coeffs(&haar_analyze(&b), sm).sqrt();
        Ok((bmo.ratio.sqrt() / dot, bmo.cap.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let unconverged = out.iter().filter(|t| !t.1).count();
    let ratios = out.into_iter().map(|t| t.0).collect();
    Ok(Scan::new("bmo_s_vs_sobolev", s, depth, cfg.seed, ratios, mode == Mode::Heuristic, unconverged))
}

/// `‖b‖_{BMO}/‖b‖_{BMO^s}` over random symbols with Carleson depth `depth`.
pub fn bmo_vs_bmo_s_scan(s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Scan> {
    let sm = smooth(s)?;
    let mode = cfg.mode_for(depth);
    let opts = cfg.carleson(mode);
    let out = par_map(cfg.jobs, cfg.trials, |k| -> Result<(f64, bool)> {
        let b = random_function(depth + 1, cfg.alpha, &mut sample_rng(cfg.seed, "symbol", k as u64));
        let bmo_s = bmo_s_norm(&b, sm, &opts, cache)?;
        Ok((bmo_dyadic(&b) / bmo_s.ratio.sqrt(), bmo_s.cap.converged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let unconverged = out.iter().filter(|t| !t.1).count();
    let ratios = out.into_iter().map(|t| t.0).collect();
    Ok(Scan::new("bmo_vs_bmo_s", s, depth, cfg.seed, ratios, mode == Mode::Heuristic, unconverged))
}

/// `max_x M(T^s f)(x) / T^s(Mf)(x)` for one nonnegative `f`.
pub fn maximal_commutation_ratio(f: &StepFunction, s: Smoothness) -> f64 {
    let lhs = maximal(&frac_integral_avg(f, s));
    let rhs = frac_integral_avg(&maximal(f), s);
    lhs.values()
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| a / b)
        .fold(0.0, f64::max)
}

/// Per sample, [`maximal_commutation_ratio`] over random nonnegative `f`.
pub fn maximal_commutation_scan(s: f64, depth: u32, cfg: &SuiteConfig) -> Result<Scan> {
    let sm = smooth(s)?;
    let ratios = par_map(cfg.jobs, cfg.trials, |k| {
        let f = random_nonnegative(depth, cfg.alpha, &mut sample_rng(cfg.seed, "maximal", k as u64));
        maximal_commutation_ratio(&f, sm)
    });
    Ok(Scan::new("maximal_commutation", s, depth, cfg.seed, ratios, false, 0))
}

/// [`maximal_commutation_ratio`] maximized over the indicators of all
/// dyadic intervals of levels `0..=depth`, represented at `depth`.
pub fn maximal_commutation_indicators(s: f64, depth: u32) -> Result<f64> {
    let sm = smooth(s)?;
    DyadicIndex::all_up_to(depth + 1)
        .map(|i| Ok(maximal_commutation_ratio(&StepFunction::indicator(i).refine(depth)?, sm)))
        .try_fold(0.0, |m, r: Result<f64>| Ok(f64::max(m, r?)))
}

/// `Θ(N)` for `N = 0..depth` on random symbols of function depth `depth`.
pub fn cmo_tail_scan(s: f64, depth: u32, cfg: &SuiteConfig, cache: &CapacityCache) -> Result<Vec<Row>> {
    let sm = smooth(s)?;
    let opts = cfg.carleson(Mode::Heuristic);
    let per_sample = par_map(cfg.jobs, cfg.trials, |k| -> Result<Vec<f64>> {
        let b = random_function(depth, cfg.alpha, &mut sample_rng(cfg.seed, "cmo", k as u64));
        (0..=depth)
            .map(|n| crate::carleson::cmo_tail(&b, sm, n, &opts, cache))
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for n in 0..=depth as usize {
        let max = per_sample.iter().map(|v| v[n]).fold(0.0, f64::max);
        rows.push(Row {
            suite: "cmo_tail".into(),
            s,
            depth,
            seed: cfg.seed,
            statistic: format!("max_theta_cutoff_{n}"),
            value: max,
        });
    }
    Ok(rows)
}

/// Suite names accepted by [`run_suite`].
pub const SUITE_NAMES: [&str; 12] = [
    "capacity_scan",
    "mazya",
    "embedding",
    "single_interval",
    "paraproduct",
    "adjoint_paraproduct",
    "algebra",
    "shift_commutator",
    "bmo_s_vs_sobolev",
    "bmo_vs_bmo_s",
    "maximal_commutation",
    "cmo_tail",
];

/// One named suite for every `s` in `s_values` at `depth`.
pub fn run_suite(name: &str, s_values: &[f64], depth: u32, cfg: &SuiteConfig) -> Result<Vec<Row>> {
    let cache = CapacityCache::new();
    let mut rows = Vec::new();
    for &s in s_values {
        let scan = match name {
            "capacity_scan" => {
                let solve_depth = cfg.solve_depth.unwrap_or(SUITE_SOLVE_DEPTH);
                rows.extend(capacity_scan(s, 1..=depth.min(solve_depth), solve_depth)?.rows(cfg.seed));
                continue;
            }
            "cmo_tail" => {
                rows.extend(cmo_tail_scan(s, depth, cfg, &cache)?);
                continue;
            }
            "mazya" => mazya_scan(s, depth, cfg)?,
            "embedding" => embedding_scan(s, depth, cfg, &cache)?,
            "single_interval" => single_interval_scan(s, depth, cfg, &cache)?,
            "paraproduct" => operator_scan(SymbolOperator::Paraproduct, s, depth, cfg, &cache)?,
            "adjoint_paraproduct" => operator_scan(SymbolOperator::AdjointParaproduct, s, depth, cfg, &cache)?,
            "shift_commutator" => operator_scan(SymbolOperator::ShiftCommutator, s, depth, cfg, &cache)?,
            "algebra" => algebra_scan(s, depth, cfg)?,
            "bmo_s_vs_sobolev" => bmo_s_vs_sobolev_scan(s, depth, cfg, &cache)?,
            "bmo_vs_bmo_s" => bmo_vs_bmo_s_scan(s, depth, cfg, &cache)?,
            "maximal_commutation" => {
                rows.push(Row {
                    suite: name.into(),
                    s,
                    depth,
                    seed: cfg.seed,
                    statistic: "indicator_family_max".into(),
                    value: maximal_commutation_indicators(s, depth)?,
                });
                maximal_commutation_scan(s, depth, cfg)?
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite {other:?}; expected one of {}",
                    SUITE_NAMES.join(", ")
                )))
            }
        };
        rows.extend(scan.rows());
    }
    Ok(rows)
}

/// The six equivalence experiments: paraproduct, adjoint paraproduct,
/// algebra, commutator, `BMO^s` against `Ḣ^s` (only for `s > 1/2`) and
/// `BMO` against `BMO^s`.
pub fn theorem_suites(s_values: &[f64], depth: u32, cfg: &SuiteConfig) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for name in ["paraproduct", "adjoint_paraproduct", "algebra", "shift_commutator", "bmo_vs_bmo_s"] {
        rows.extend(run_suite(name, s_values, depth, cfg)?);
    }
    let high: Vec<f64> = s_values.iter().copied().filter(|&s| s > 0.5).collect();
    rows.extend(run_suite("bmo_s_vs_sobolev", &high, depth, cfg)?);
    Ok(rows)
}
