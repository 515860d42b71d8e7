//! Norms and seminorms on step functions: `L²`, `L^∞`, the Haar form of
//! `H^s` / `Ḣ^s`, the left–right double-integral form, dyadic BMO and the
//! smallest-common-ancestor kernel form.

use serde::{Deserialize, Serialize};

use crate::dyadic::{haar_analyze, DyadicIndex, HaarCoeffs, StepFunction};
use crate::error::{Error, Result};
use crate::operators::{mod_derivative, Smoothness};

/// Depth cap for the quadratic-cost [`delta_form`].
pub const DELTA_FORM_MAX_DEPTH: u32 = 7;

pub fn l2_norm(f: &StepFunction) -> f64 {
    (f.values().iter().map(|v| v * v).sum::<f64>() * f.leaf_measure()).sqrt()
}

pub fn sup_norm(f: &StepFunction) -> f64 {
    f.max_abs()
}

/// `Σ_I |I|^{-2s}(f,h_I)²`.
pub fn hs_dot_sq_coeffs(c: &HaarCoeffs, s: Smoothness) -> f64 {
    c.weighted_energy(|j| {
        let w = s.derivative_weight(j);
        w * w
    })
}

/// `‖f‖²_{H^s} = Σ_I |I|^{-2s}(f,h_I)² + ‖f‖²_{L²}` from coefficients.
pub fn hs_norm_sq_coeffs(c: &HaarCoeffs, s: Smoothness) -> f64 {
    hs_dot_sq_coeffs(c, s) + c.energy()
}

pub fn hs_norm(f: &StepFunction, s: Smoothness) -> f64 {
    hs_norm_sq_coeffs(&haar_analyze(f), s).sqrt()
}

pub fn hs_dot(f: &StepFunction, s: Smoothness) -> f64 {
    hs_dot_sq_coeffs(&haar_analyze(f), s).sqrt()
}

/// `‖J^s f‖_{L²}`.
pub fn js_norm(f: &StepFunction, s: Smoothness) -> f64 {
    mod_derivative(&haar_analyze(f), s).energy().sqrt()
}

/// First and second moments `∫_I f`, `∫_I f²` for every interval of levels
/// `0..=depth`, heap ordered.
struct Moments {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Moments {
    fn new(f: &StepFunction) -> Self {
        let to_integrals = |avg: Vec<f64>| {
            avg.into_iter()
                .enumerate()
                .map(|(k, a)| a * DyadicIndex::from_heap_index(k).measure())
                .collect::<Vec<_>>()
        };
        Self {
            first: to_integrals(f.averages()),
            second: to_integrals(f.map(|v| v * v).averages()),
        }
    }

    /// `∬_{I₋×I₊} |f(x) − f(y)|² dx dy`.
    fn leftright(&self, i: DyadicIndex) -> f64 {
        let half = 0.5 * i.measure();
        let (l, r) = (i.left_child().heap_index(), i.right_child().heap_index());
        half * self.second[l] + half * self.second[r] - 2.0 * self.first[l] * self.first[r]
    }
}

/// `∬_{I₋×I₊} |f(x) − f(y)|² dx dy` from cached moments. Zero for intervals at
/// or below the leaf level.
pub fn leftright_term(f: &StepFunction, i: DyadicIndex) -> f64 {
    if i.level >= f.depth() {
        return 0.0;
    }
    Moments::new(f).leftright(i)
}

/// The three pieces `|I|(f,h_I)²`, `(|I|/2)∫_{I₋}|f−⟨f⟩_{I₋}|²`,
/// `(|I|/2)∫_{I₊}|f−⟨f⟩_{I₊}|²` of the double integral over `I₋×I₊`,
/// computed from Haar coefficients (oscillation by Parseval on each child).
pub fn leftright_split(c: &HaarCoeffs, i: DyadicIndex) -> [f64; 3] {
    let depth = c.depth();
    let subtree_energy = |root: DyadicIndex| -> f64 {
        (root.level..depth)
            .map(|level| {
                root.leaf_range(level)
                    .map(|pos| c.get(DyadicIndex { level, pos }).powi(2))
                    .sum::<f64>()
            })
            .sum()
    };
    let m = i.measure();
    [
        m * c.get(i).powi(2),
        0.5 * m * subtree_energy(i.left_child()),
        0.5 * m * subtree_energy(i.right_child()),
    ]
}

/// [`leftright_term`] for every interval of levels `0..depth`, heap ordered.
pub fn leftright_terms(f: &StepFunction) -> Vec<f64> {
    let m = Moments::new(f);
    DyadicIndex::all_up_to(f.depth()).map(|i| m.leftright(i)).collect()
}

/// [`leftright_split`] for every interval of levels `0..depth`, heap ordered,
/// with subtree energies accumulated once.
pub fn leftright_splits(c: &HaarCoeffs) -> Vec<[f64; 3]> {
    let len = c.coeffs().len();
    let mut subtree: Vec<f64> = c.coeffs().iter().map(|v| v * v).collect();
    for k in (0..len).rev() {
        if 2 * k + 2 < len {
            subtree[k] += subtree[2 * k + 1] + subtree[2 * k + 2];
        }
    }
    let child = |k: usize| subtree.get(k).copied().unwrap_or(0.0);
    (0..len)
        .map(|k| {
            let m = DyadicIndex::from_heap_index(k).measure();
            [m * c.coeffs()[k].powi(2), 0.5 * m * child(2 * k + 1), 0.5 * m * child(2 * k + 2)]
        })
        .collect()
}

/// `(Σ_I |I|^{-1-2s} ∬_{I₋×I₊} |f(x)−f(y)|² dx dy)^{1/2}`.
pub fn hs_dot_leftright(f: &StepFunction, s: Smoothness) -> f64 {
    let m = Moments::new(f);
    DyadicIndex::all_up_to(f.depth())
        .map(|i| {
            let w = ((1.0 + 2.0 * s.get()) * i.level as f64).exp2();
            w * m.leftright(i)
        })
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// Classical dyadic BMO via the Carleson formulation
/// `sup_I (|I|^{-1} Σ_{J⊆I} (b,h_J)²)^{1/2}`.
pub fn bmo_dyadic(b: &StepFunction) -> f64 {
    let c = haar_analyze(b);
    let mut subtree: Vec<f64> = c.coeffs().iter().map(|v| v * v).collect();
    for k in (0..subtree.len()).rev() {
        let (l, r) = (2 * k + 1, 2 * k + 2);
        if r < subtree.len() {
            subtree[k] += subtree[l] + subtree[r];
        }
    }
    subtree
        .iter()
        .enumerate()
        .map(|(k, e)| e / DyadicIndex::from_heap_index(k).measure())
        .fold(0.0, f64::max)
        .sqrt()
}

/// `∬ |f(x)−f(y)|² / δ(x,y)^{1+2s} dx dy + ‖f‖²_{L²}` where `δ(x,y)` is the
/// length of the smallest dyadic interval containing both points. Exact
/// leaf-pair summation, `O(4^N)`.
pub fn delta_form(f: &StepFunction, s: Smoothness) -> Result<f64> {
    let n = f.depth();
    if n > DELTA_FORM_MAX_DEPTH {
        return Err(Error::DepthExceeded {
            op: "delta_form",
            depth: n,
            max: DELTA_FORM_MAX_DEPTH,
        });
    }
    let v = f.values();
    let h2 = f.leaf_measure().powi(2);
    let mut total = 0.0;
    for (a, &fa) in v.iter().enumerate() {
        for (b, &fb) in v.iter().enumerate().skip(a + 1) {
            // common ancestor level = n − bit length of (a xor b)
            let level = n - (usize::BITS - (a ^ b).leading_zeros());
            let kernel = ((1.0 + 2.0 * s.get()) * level as f64).exp2();
            total += 2.0 * h2 * (fa - fb).powi(2) * kernel;
        }
    }
    Ok(total + l2_norm(f).powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub sup: f64,
    pub hs: f64,
    pub hs_dot: f64,
    pub hs_leftright: f64,
    pub s: Smoothness,
}

impl NormReport {
    pub fn compute(f: &StepFunction, s: Smoothness) -> Self {
        let c = haar_analyze(f);
        Self {
            l2: c.energy().sqrt(),
            sup: sup_norm(f),
            hs: hs_norm_sq_coeffs(&c, s).sqrt(),
            hs_dot: hs_dot_sq_coeffs(&c, s).sqrt(),
            hs_leftright: hs_dot_leftright(f, s),
            s,
        }
    }
}
