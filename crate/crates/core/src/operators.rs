//! Fractional derivatives and integrals, the dyadic maximal function, the Haar
//! shift, paraproducts and commutators, all evaluated exactly on step functions.

use serde::{Deserialize, Serialize};

use crate::dyadic::{haar_analyze, haar_synthesize, HaarCoeffs, StepFunction};
use crate::error::{Error, Result};
use crate::lipschitz::PiecewiseLinearMap;

/// Smoothness index `s ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Smoothness(f64);

impl Smoothness {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s < 1.0 {
            Ok(Self(s))
        } else {
            Err(Error::InvalidSmoothness(s))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `|I|^{-s} = 2^{js}` for an interval at level `j`.
    pub fn derivative_weight(self, level: u32) -> f64 {
        (self.0 * level as f64).exp2()
    }

    /// `2^s − 1 > 0`.
    pub fn inversion_factor(self) -> f64 {
        self.0.exp2() - 1.0
    }
}

impl TryFrom<f64> for Smoothness {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<Smoothness> for f64 {
    fn from(s: Smoothness) -> f64 {
        s.0
    }
}

/// `D^s`: coefficients scaled by `|I|^{-s}`, mean dropped.
pub fn frac_derivative(c: &HaarCoeffs, s: Smoothness) -> HaarCoeffs {
    c.scaled_by_level(0.0, |j| s.derivative_weight(j))
}

/// `J^s`: as `D^s` but the mean is kept with weight `2^{-s}`.
pub fn mod_derivative(c: &HaarCoeffs, s: Smoothness) -> HaarCoeffs {
    c.scaled_by_level((-s.get()).exp2(), |j| s.derivative_weight(j))
}

/// `T^s f = Σ_I |I|^s ⟨f⟩_I 𝟙_I`, evaluated leafwise. Levels `0..=N` are summed
/// directly; below the leaves `⟨f⟩_I` is the leaf value, so the remaining
/// geometric tail is added in closed form.
pub fn frac_integral_avg(f: &StepFunction, s: Smoothness) -> StepFunction {
    let n = f.depth();
    let s = s.get();
    let pyramid = f.averages();
    let tail = (-(n as f64 + 1.0) * s).exp2() / (1.0 - (-s).exp2());
    let weights: Vec<f64> = (0..=n).map(|j| (-(j as f64) * s).exp2()).collect();
    StepFunction::from_leaves(n, |leaf| {
        let direct: f64 = (0..=n)
            .map(|j| {
                let anc = leaf.ancestor_at(j).expect("ancestor level within depth");
                weights[j as usize] * pyramid[anc.heap_index()]
            })
            .sum();
        direct + tail * f.values()[leaf.pos as usize]
    })
}

/// `T^s` in Haar form: `(2^s − 1)^{-1}(Σ |I|^s (f,h_I) h_I + 2^s ⟨f⟩_{I₀})`.
pub fn frac_integral_haar(c: &HaarCoeffs, s: Smoothness) -> HaarCoeffs {
    let k = s.inversion_factor().recip();
    c.scaled_by_level(k * s.get().exp2(), |j| k / s.derivative_weight(j))
}

/// Dyadic maximal function `Mf = sup_I ⟨|f|⟩_I 𝟙_I`. Intervals finer than a
/// leaf contribute `|f|` on that leaf, which the leaf level already covers.
pub fn maximal(f: &StepFunction) -> StepFunction {
    let n = f.depth();
    let mut running = f.map(f64::abs).averages();
    for i in 1..running.len() {
        let parent = (i - 1) / 2;
        running[i] = running[i].max(running[parent]);
    }
    let leaf_start = (1usize << n) - 1;
    StepFunction::new(n, running.split_off(leaf_start)).expect("leaf count matches depth")
}

/// Haar shift `Ш f = Σ_I (f,h_I)(h_{I₋} − h_{I₊})`. The output is one level deeper.
pub fn haar_shift(c: &HaarCoeffs) -> HaarCoeffs {
    let mut out = HaarCoeffs::zero(c.depth() + 1).expect("depth bounded");
    for (i, v) in c.iter() {
        out.set(i.left_child(), v).expect("child within depth");
        out.set(i.right_child(), -v).expect("child within depth");
    }
    out
}

/// [`haar_shift`] on a step function.
pub fn haar_shift_fn(f: &StepFunction) -> StepFunction {
    haar_synthesize(&haar_shift(&haar_analyze(f)))
}

fn coeffs_at(f: &StepFunction, depth: u32) -> HaarCoeffs {
    haar_analyze(&f.at_depth(depth))
}

/// `Π_b f = Σ_I (b,h_I) ⟨f⟩_I h_I`.
pub fn paraproduct(b: &StepFunction, f: &StepFunction) -> StepFunction {
    let depth = b.depth().max(f.depth());
    let cb = coeffs_at(b, depth);
    let avg = f.at_depth(depth).averages();
    let mut out = HaarCoeffs::zero(depth).expect("depth bounded");
    for (k, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c = cb.coeffs()[k] * avg[k];
    }
    haar_synthesize(&out)
}

/// `Π̃_b f = Σ_I (f,h_I)(b,h_I) 𝟙_I/|I| + ⟨f⟩_{I₀}⟨b⟩_{I₀}`.
pub fn adjoint_paraproduct(b: &StepFunction, f: &StepFunction) -> StepFunction {
    let depth = b.depth().max(f.depth());
    let cb = coeffs_at(b, depth);
    let cf = coeffs_at(f, depth);
    // acc[k] holds the partial sum on the level-`level` interval k.
    let mut acc = vec![0.0; 1usize << depth];
    acc[0] = cf.mean() * cb.mean();
    for level in 0..depth {
        let start = (1usize << level) - 1;
        let inv_measure = (level as f64).exp2();
        for k in (0..1usize << level).rev() {
            let v = acc[k] + cf.coeffs()[start + k] * cb.coeffs()[start + k] * inv_measure;
            acc[2 * k] = v;
            acc[2 * k + 1] = v;
        }
    }
    StepFunction::new(depth, acc).expect("leaf count matches depth")
}

/// `Λ_b f = Π_f b`.
pub fn lambda_paraproduct(b: &StepFunction, f: &StepFunction) -> StepFunction {
    paraproduct(f, b)
}

/// `[L, Ш] f = L(Ш f) − Ш(L f)` for any operator `L`.
pub fn shift_commutator(l: impl Fn(&StepFunction) -> StepFunction, f: &StepFunction) -> StepFunction {
    let a = l(&haar_shift_fn(f));
    let b = haar_shift_fn(&l(f));
    &a - &b
}

/// `[b, Ш] f = b Ш f − Ш(b f)`.
pub fn commutator_shift(b: &StepFunction, f: &StepFunction) -> StepFunction {
    shift_commutator(|g| pointwise_product(b, g), f)
}

/// Coefficient form of `[Λ_b, Ш] f`:
/// `Σ_{J left} (f,h_Ĵ)(⟨b⟩_J − ⟨b⟩_Ĵ) h_J + Σ_{J right} (f,h_Ĵ)(⟨b⟩_Ĵ − ⟨b⟩_J) h_J`.
pub fn lambda_shift_commutator_closed_form(b: &StepFunction, f: &StepFunction) -> StepFunction {
    let cf = haar_analyze(f);
    let mut out = HaarCoeffs::zero(cf.depth() + 1).expect("depth bounded");
    for (parent, c) in cf.iter() {
        let parent_avg = b.average(parent);
        let l = parent.left_child();
        let r = parent.right_child();
        out.set(l, c * (b.average(l) - parent_avg)).expect("within depth");
        out.set(r, c * (parent_avg - b.average(r))).expect("within depth");
    }
    haar_synthesize(&out)
}

pub fn lipschitz_compose(psi: &PiecewiseLinearMap, f: &StepFunction) -> StepFunction {
    f.map(|v| psi.eval(v))
}

pub fn pointwise_product(f: &StepFunction, g: &StepFunction) -> StepFunction {
    f * g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{inner, DyadicIndex};

    fn s(v: f64) -> Smoothness {
        Smoothness::new(v).unwrap()
    }

    #[test]
    fn smoothness_bounds() {
        assert!(Smoothness::new(0.0).is_err());
        assert!(Smoothness::new(1.0).is_err());
        assert!(Smoothness::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Smoothness>("1.5").is_err());
    }

    #[test]
    fn derivative_examples() {
        let h = haar_analyze(&StepFunction::haar(DyadicIndex::ROOT));
        let d = frac_derivative(&h, s(0.3));
        assert_eq!(d.get(DyadicIndex::ROOT), 1.0);
        let c = haar_analyze(&StepFunction::constant(4.0));
        assert_eq!(frac_derivative(&c, s(0.3)).mean(), 0.0);
        let j = mod_derivative(&haar_analyze(&StepFunction::constant(1.0)), s(0.5));
        assert!((j.mean() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn integral_of_constant() {
        for sv in [0.1, 0.5, 0.9] {
            let expected = 1.0 / (1.0 - (-sv as f64).exp2());
            let t = frac_integral_avg(&StepFunction::constant(1.0), s(sv));
            assert!((t.values()[0] - expected).abs() < 1e-12);
            let th = frac_integral_haar(&haar_analyze(&StepFunction::constant(1.0)), s(sv));
            let closed_form = sv.exp2() / (sv.exp2() - 1.0);
            assert!((th.mean() - closed_form).abs() < 1e-12);
            assert!((th.mean() - expected).abs() < 1e-12);
        }
        let zero = frac_integral_avg(&StepFunction::zero(3), s(0.4));
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn maximal_examples() {
        let m = maximal(&StepFunction::constant(-3.0));
        assert_eq!(m.values(), &[3.0]);
        let f = StepFunction::indicator(DyadicIndex::new(1, 0).unwrap());
        assert_eq!(maximal(&f).values(), &[1.0, 0.5]);
    }

    #[test]
    fn shift_of_root_haar() {
        let c = haar_analyze(&StepFunction::haar(DyadicIndex::ROOT));
        let sh = haar_synthesize(&haar_shift(&c));
        let expected = &StepFunction::haar(DyadicIndex::new(1, 0).unwrap())
            - &StepFunction::haar(DyadicIndex::new(1, 1).unwrap());
        assert!(sh.max_abs_diff(&expected) < 1e-15);
        let k = haar_shift_fn(&StepFunction::constant(2.0));
        assert_eq!(k.max_abs(), 0.0);
    }

    #[test]
    fn paraproduct_examples() {
        let f = StepFunction::from_leaves(3, |l| l.pos as f64 - 2.0);
        assert_eq!(paraproduct(&StepFunction::constant(5.0), &f).max_abs(), 0.0);
        let b = StepFunction::from_leaves(3, |l| (l.pos * l.pos) as f64);
        let got = paraproduct(&b, &StepFunction::constant(1.5));
        let expected = (&b - &StepFunction::constant(b.integral())).scale(1.5);
        assert!(got.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn adjoint_paraproduct_examples() {
        let f = StepFunction::from_leaves(3, |l| l.pos as f64);
        let got = adjoint_paraproduct(&StepFunction::constant(2.0), &f);
        assert!(got.max_abs_diff(&StepFunction::constant(2.0 * f.integral())) < 1e-12);
        let h = StepFunction::haar(DyadicIndex::ROOT);
        let got = adjoint_paraproduct(&h, &h);
        assert!(got.max_abs_diff(&StepFunction::constant(1.0)) < 1e-15);
    }

    #[test]
    fn commutator_and_composition_examples() {
        let f = StepFunction::from_leaves(4, |l| (l.pos as f64).cos());
        let c = commutator_shift(&StepFunction::constant(3.0), &f);
        assert!(c.max_abs() < 1e-12);
        assert_eq!(lipschitz_compose(&PiecewiseLinearMap::identity(), &f), f);
        let h = StepFunction::haar(DyadicIndex::ROOT);
        let a = lipschitz_compose(&PiecewiseLinearMap::abs(), &h);
        assert!(a.max_abs_diff(&StepFunction::constant(1.0)) < 1e-15);
        assert_eq!(pointwise_product(&f, &StepFunction::constant(1.0)), f);
        assert!(pointwise_product(&h, &h).max_abs_diff(&StepFunction::constant(1.0)) < 1e-15);
        assert!((inner(&h, &h) - 1.0).abs() < 1e-15);
    }
}
