//! Order-fixed summary statistics.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum, evaluated in slice order.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanStd { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        let stderr = if n > 1 {
            let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, stderr, n }
    }

    /// True when `other` lies within `k` combined standard errors.
    pub fn agrees_with(&self, other: f64, other_stderr: f64, k: f64) -> bool {
        let s = (self.stderr * self.stderr + other_stderr * other_stderr).sqrt();
        (self.mean - other).abs() <= k * s
    }
}
