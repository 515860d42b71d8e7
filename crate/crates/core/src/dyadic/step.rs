use std::borrow::Cow;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::index::{DyadicIndex, MAX_LEVEL};
use crate::error::{Error, Result};

/// Largest depth a step function may have; `2^24` leaves.
pub const MAX_STEP_DEPTH: u32 = 24;

/// A function on `[0,1)` that is constant on each of the `2^depth` leaves
/// `2^{-depth}[k, k+1)`. Values are stored in leaf order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionRepr", into = "StepFunctionRepr")]
pub struct StepFunction {
    depth: u32,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionRepr {
    depth: u32,
    values: Vec<f64>,
}

impl TryFrom<StepFunctionRepr> for StepFunction {
    type Error = Error;

    fn try_from(r: StepFunctionRepr) -> Result<Self> {
        StepFunction::new(r.depth, r.values)
    }
}

impl From<StepFunction> for StepFunctionRepr {
    fn from(f: StepFunction) -> Self {
        Self {
            depth: f.depth,
            values: f.values,
        }
    }
}

impl StepFunction {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        if depth > MAX_STEP_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_STEP_DEPTH,
            });
        }
        let expected = 1usize << depth;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                depth,
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { depth, values })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            depth: 0,
            values: vec![c],
        }
    }

    pub fn zero(depth: u32) -> Self {
        Self {
            depth,
            values: vec![0.0; 1 << depth],
        }
    }

    /// Builds a depth-`depth` function from its value on each leaf.
    pub fn from_leaves(depth: u32, mut value: impl FnMut(DyadicIndex) -> f64) -> Self {
        assert!(depth <= MAX_STEP_DEPTH);
        let values = (0..1u64 << depth)
            .map(|pos| value(DyadicIndex { level: depth, pos }))
            .collect();
        Self { depth, values }
    }

    /// `𝟙_I`, represented at depth `level(I)`.
    pub fn indicator(i: DyadicIndex) -> Self {
        Self::from_leaves(i.level, |leaf| if leaf == i { 1.0 } else { 0.0 })
    }

    /// The Haar function `h_I = |I|^{-1/2}(𝟙_{I₋} − 𝟙_{I₊})` at depth `level(I) + 1`.
    pub fn haar(i: DyadicIndex) -> Self {
        let amp = i.measure().sqrt().recip();
        let (l, r) = (i.left_child(), i.right_child());
        Self::from_leaves(i.level + 1, |leaf| {
            if leaf == l {
                amp
            } else if leaf == r {
                -amp
            } else {
                0.0
            }
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn leaf_measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    /// Value on the leaf containing `x ∈ [0,1)`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let k = ((x * n as f64).floor() as isize).clamp(0, n as isize - 1) as usize;
        self.values[k]
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.leaf_measure()
    }

    /// Refines to depth `depth` by duplicating values.
    pub fn refine(&self, depth: u32) -> Result<StepFunction> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot refine depth {} down to {depth}",
                self.depth
            )));
        }
        if depth > MAX_STEP_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_STEP_DEPTH,
            });
        }
        let rep = 1usize << (depth - self.depth);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, rep))
            .collect();
        Ok(Self { depth, values })
    }

    /// Borrowed view at `depth >= self.depth`.
    pub fn at_depth(&self, depth: u32) -> Cow<'_, StepFunction> {
        if depth == self.depth {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.refine(depth).expect("refinement depth checked by caller"))
        }
    }

    /// Exact mean `⟨f⟩_I`. For intervals finer than a leaf this is the leaf value.
    pub fn average(&self, i: DyadicIndex) -> f64 {
        if i.level >= self.depth {
            return self.values[(i.pos >> (i.level - self.depth)) as usize];
        }
        let range = i.leaf_range(self.depth);
        let count = (range.end - range.start) as f64;
        self.values[range.start as usize..range.end as usize]
            .iter()
            .sum::<f64>()
            / count
    }

    /// Averages over every interval of levels `0..=depth`, heap ordered.
    pub fn averages(&self) -> Vec<f64> {
        let n = self.depth;
        let total = (1usize << (n + 1)) - 1;
        let mut out = vec![0.0; total];
        let leaf_start = (1usize << n) - 1;
        out[leaf_start..].copy_from_slice(&self.values);
        for level in (0..n).rev() {
            let start = (1usize << level) - 1;
            let child_start = (1usize << (level + 1)) - 1;
            for k in 0..1usize << level {
                out[start + k] = 0.5 * (out[child_start + 2 * k] + out[child_start + 2 * k + 1]);
            }
        }
        out
    }

    pub fn map(&self, mut op: impl FnMut(f64) -> f64) -> StepFunction {
        Self {
            depth: self.depth,
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    /// Leafwise combination after refining both arguments to the larger depth.
    pub fn zip_with(&self, other: &StepFunction, mut op: impl FnMut(f64, f64) -> f64) -> StepFunction {
        let depth = self.depth.max(other.depth);
        let a = self.at_depth(depth);
        let b = other.at_depth(depth);
        Self {
            depth,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(&x, &y)| op(x, y))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        self.map(|v| c * v)
    }

    /// Largest absolute leaf difference after refinement to a common depth.
    pub fn max_abs_diff(&self, other: &StepFunction) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs())
            .values
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Exact `(f, g) = ∫ f g` at the common depth.
pub fn inner(f: &StepFunction, g: &StepFunction) -> f64 {
    let depth = f.depth.max(g.depth);
    let a = f.at_depth(depth);
    let b = g.at_depth(depth);
    let h = (-(depth as f64)).exp2();
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * h
}

impl Add for &StepFunction {
    type Output = StepFunction;
    fn add(self, rhs: &StepFunction) -> StepFunction {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &StepFunction {
    type Output = StepFunction;
    fn sub(self, rhs: &StepFunction) -> StepFunction {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &StepFunction {
    type Output = StepFunction;
    fn mul(self, rhs: &StepFunction) -> StepFunction {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Mul<&StepFunction> for f64 {
    type Output = StepFunction;
    fn mul(self, rhs: &StepFunction) -> StepFunction {
        rhs.scale(self)
    }
}

impl Neg for &StepFunction {
    type Output = StepFunction;
    fn neg(self) -> StepFunction {
        self.scale(-1.0)
    }
}

const _: () = assert!(MAX_STEP_DEPTH <= MAX_LEVEL);
