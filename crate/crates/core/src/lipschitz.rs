use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuous piecewise-linear `ψ: ℝ → ℝ`, interpolating `(knots[i], values[i])`
/// and extended linearly with `left_slope` / `right_slope` beyond the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearMap {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinearMap {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidArgument(
                "piecewise-linear map needs matching, nonempty knots and values".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
        }
        if !(left_slope.is_finite() && right_slope.is_finite())
            || knots.iter().chain(&values).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("piecewise-linear map must be finite".into()));
        }
        Ok(Self {
            knots,
            values,
            left_slope,
            right_slope,
        })
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0], vec![0.0], 1.0, 1.0).expect("valid")
    }

    pub fn abs() -> Self {
        Self::new(vec![0.0], vec![0.0], -1.0, 1.0).expect("valid")
    }

    /// `0` below `1/2`, `1` above `1`, linear in between. Lipschitz constant 2.
    pub fn level_truncation() -> Self {
        Self::new(vec![0.5, 1.0], vec![0.0, 1.0], 0.0, 0.0).expect("valid")
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] + self.left_slope * (x - self.knots[0]);
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1] + self.right_slope * (x - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= x) - 1;
        let t = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }

    /// `‖ψ‖_Lip`, the largest absolute slope.
    pub fn lipschitz_constant(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
            .fold(self.left_slope.abs().max(self.right_slope.abs()), f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_shape() {
        let phi = PiecewiseLinearMap::level_truncation();
        assert_eq!(phi.eval(0.2), 0.0);
        assert_eq!(phi.eval(0.75), 0.5);
        assert_eq!(phi.eval(3.0), 1.0);
        assert_eq!(phi.lipschitz_constant(), 2.0);
    }

    #[test]
    fn abs_and_identity() {
        let a = PiecewiseLinearMap::abs();
        assert_eq!(a.eval(-2.0), 2.0);
        assert_eq!(a.eval(1.5), 1.5);
        assert_eq!(PiecewiseLinearMap::identity().eval(-0.3), -0.3);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(PiecewiseLinearMap::new(vec![1.0, 0.0], vec![0.0, 0.0], 0.0, 0.0).is_err());
    }
}
