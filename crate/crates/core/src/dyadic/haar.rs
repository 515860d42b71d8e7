//! Exact Haar analysis and synthesis on finite-depth step functions.
//!
//! Coefficients of a depth-`N` function live on levels `0..N` and are stored
//! in heap order (`2^j - 1 + k` for the interval `(j, k)`).

use serde::{Deserialize, Serialize};

use super::index::DyadicIndex;
use super::step::{StepFunction, MAX_STEP_DEPTH};
use crate::error::{Error, Result};

/// Mean plus Haar coefficients `(f, h_I)` for levels `0..depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HaarCoeffsRepr", into = "HaarCoeffsRepr")]
pub struct HaarCoeffs {
    depth: u32,
    mean: f64,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HaarCoeffsRepr {
    depth: u32,
    mean: f64,
    coeffs: Vec<CoeffEntry>,
}

#[derive(Serialize, Deserialize)]
struct CoeffEntry {
    level: u32,
    pos: u64,
    value: f64,
}

impl TryFrom<HaarCoeffsRepr> for HaarCoeffs {
    type Error = Error;

    fn try_from(r: HaarCoeffsRepr) -> Result<Self> {
        let mut out = HaarCoeffs::zero(r.depth)?;
        out.mean = r.mean;
        for e in r.coeffs {
            let idx = DyadicIndex::new(e.level, e.pos)?;
            if idx.level >= r.depth {
                return Err(Error::CoefficientOutOfDepth {
                    level: idx.level,
                    depth: r.depth,
                });
            }
            out.coeffs[idx.heap_index()] = e.value;
        }
        Ok(out)
    }
}

impl From<HaarCoeffs> for HaarCoeffsRepr {
    fn from(c: HaarCoeffs) -> Self {
        let coeffs = c
            .iter()
            .map(|(i, value)| CoeffEntry {
                level: i.level,
                pos: i.pos,
                value,
            })
            .collect();
        Self {
            depth: c.depth,
            mean: c.mean,
            coeffs,
        }
    }
}

impl HaarCoeffs {
    pub fn zero(depth: u32) -> Result<Self> {
        if depth > MAX_STEP_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_STEP_DEPTH,
            });
        }
        Ok(Self {
            depth,
            mean: 0.0,
            coeffs: vec![0.0; (1usize << depth) - 1],
        })
    }

    /// Builds coefficients from a mean and a heap-ordered coefficient vector
    /// of length `2^depth - 1`.
    pub fn from_parts(depth: u32, mean: f64, coeffs: Vec<f64>) -> Result<Self> {
        let expected = (1usize << depth) - 1;
        if depth > MAX_STEP_DEPTH {
            return Err(Error::DepthTooLarge {
                depth,
                max: MAX_STEP_DEPTH,
            });
        }
        if coeffs.len() != expected {
            return Err(Error::LengthMismatch {
                depth,
                expected,
                actual: coeffs.len(),
            });
        }
        Ok(Self { depth, mean, coeffs })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn set_mean(&mut self, mean: f64) {
        self.mean = mean;
    }

    /// Heap-ordered coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// `(f, h_I)`; zero for intervals at or below the depth.
    pub fn get(&self, i: DyadicIndex) -> f64 {
        if i.level < self.depth {
            self.coeffs[i.heap_index()]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, i: DyadicIndex, value: f64) -> Result<()> {
        if i.level >= self.depth {
            return Err(Error::CoefficientOutOfDepth {
                level: i.level,
                depth: self.depth,
            });
        }
        self.coeffs[i.heap_index()] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (DyadicIndex, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (DyadicIndex::from_heap_index(i), c))
    }

    /// Pads with zero coefficients up to `depth`.
    pub fn refine(&self, depth: u32) -> Result<HaarCoeffs> {
        if depth < self.depth {
            return Err(Error::InvalidArgument(format!(
                "cannot refine depth {} down to {depth}",
                self.depth
            )));
        }
        let mut out = HaarCoeffs::zero(depth)?;
        out.mean = self.mean;
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        Ok(out)
    }

    /// Multiplies every coefficient at level `j` by `factor(j)` and the mean
    /// by `mean_factor`.
    pub fn scaled_by_level(&self, mean_factor: f64, factor: impl Fn(u32) -> f64) -> HaarCoeffs {
        let mut out = self.clone();
        out.mean *= mean_factor;
        for level in 0..self.depth {
            let w = factor(level);
            let start = (1usize << level) - 1;
            for c in &mut out.coeffs[start..2 * start + 1] {
                *c *= w;
            }
        }
        out
    }

    /// `mean² + Σ coeffs²`, the squared L² norm by Parseval.
    pub fn energy(&self) -> f64 {
        self.mean * self.mean + self.coeffs.iter().map(|c| c * c).sum::<f64>()
    }

    /// `Σ_I weight(level(I)) (f,h_I)²`.
    pub fn weighted_energy(&self, weight: impl Fn(u32) -> f64) -> f64 {
        (0..self.depth)
            .map(|level| {
                let start = (1usize << level) - 1;
                weight(level)
                    * self.coeffs[start..2 * start + 1]
                        .iter()
                        .map(|c| c * c)
                        .sum::<f64>()
            })
            .sum()
    }

    pub fn max_abs_diff(&self, other: &HaarCoeffs) -> f64 {
        let depth = self.depth.max(other.depth);
        let a = self.refine(depth).expect("depth bounded");
        let b = other.refine(depth).expect("depth bounded");
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x - y).abs())
            .fold((a.mean - b.mean).abs(), f64::max)
    }
}

/// `(f, h_I)` for all `I` above the leaf level plus `⟨f⟩_{I₀}`, by the
/// bottom-up averaging cascade.
pub fn haar_analyze(f: &StepFunction) -> HaarCoeffs {
    let depth = f.depth();
    let mut avg = f.values().to_vec();
    let mut coeffs = vec![0.0; (1usize << depth) - 1];
    for level in (0..depth).rev() {
        let half_sqrt = 0.5 * (-(level as f64) / 2.0).exp2();
        let start = (1usize << level) - 1;
        for k in 0..1usize << level {
            let (l, r) = (avg[2 * k], avg[2 * k + 1]);
            coeffs[start + k] = half_sqrt * (l - r);
            avg[k] = 0.5 * (l + r);
        }
    }
    HaarCoeffs {
        depth,
        mean: avg[0],
        coeffs,
    }
}

/// Inverse of [`haar_analyze`]: `⟨f⟩_{I₀} + Σ (f,h_I) h_I`.
pub fn haar_synthesize(c: &HaarCoeffs) -> StepFunction {
    let depth = c.depth;
    let mut avg = vec![0.0; 1usize << depth];
    avg[0] = c.mean;
    for level in 0..depth {
        let inv_sqrt = (level as f64 / 2.0).exp2();
        let start = (1usize << level) - 1;
        for k in (0..1usize << level).rev() {
            let a = avg[k];
            let d = c.coeffs[start + k] * inv_sqrt;
            avg[2 * k] = a + d;
            avg[2 * k + 1] = a - d;
        }
    }
    StepFunction::new(depth, avg).expect("length matches depth")
}
