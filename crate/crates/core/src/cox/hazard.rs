use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous non-decreasing step function with jumps at `jump_times`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeHazard {
    jump_times: Vec<f64>,
    jump_sizes: Vec<f64>,
}

impl CumulativeHazard {
    pub fn new(jump_times: Vec<f64>, jump_sizes: Vec<f64>) -> Result<Self> {
        if jump_times.len() != jump_sizes.len() {
            return Err(Error::Validation("jump times and sizes differ in length".into()));
        }
        if jump_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Validation("jump times must be finite and non-negative".into()));
        }
        if jump_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("jump times must be strictly increasing".into()));
        }
        if jump_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Validation("jump sizes must be finite and positive".into()));
        }
        Ok(Self { jump_times, jump_sizes })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn jump_sizes(&self) -> &[f64] {
        &self.jump_sizes
    }

    /// `eta(t)`, including a jump at `t` itself.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.jump_sizes[..k].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.jump_sizes.iter().sum()
    }

    /// `(time, jump, cumulative value)` rows.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        let mut level = 0.0;
        self.jump_times
            .iter()
            .zip(&self.jump_sizes)
            .map(|(&t, &s)| {
                level += s;
                (t, s, level)
            })
            .collect()
    }
}
