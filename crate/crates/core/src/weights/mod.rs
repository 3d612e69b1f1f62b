//! Exchangeable bootstrap weights.
//!
//! A bootstrap replicate is a weighted refit with weights `W_n = (W_n1, ..., W_nn)`
//! that are exchangeable, non-negative and sum to `n`. This module generates
//! such vectors for the six classical schemes, knows their variance constant
//! `c^2 = lim (1/n) sum (W_ni - 1)^2`, and estimates the moment and tail
//! quantities that make a scheme usable for variance estimation.

mod diagnostics;
mod generate;
mod l21;
mod moments;
pub(crate) mod scheme;

pub use diagnostics::{
    check_weight_conditions, empirical_c2, empirical_c2_with_error, DiagnosticsOptions,
    FifthMomentEstimate, WeightConditionReport, WeightDiagnostics,
};
pub use generate::generate_weights;
pub use l21::{l21_norm, l21_norm_quadrature, l21_norm_of_sample, StepSurvival};
pub use moments::{
    exact_multinomial_fifth_moment, exact_raw_moment, falling_factorial, limiting_raw_moment,
    polya_factorial_moment, stirling2,
};
pub use scheme::{IidLaw, WeightScheme};

use crate::error::{Error, Result};

/// One draw of bootstrap weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    integer_valued: bool,
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

impl WeightVector {
    pub fn new(values: Vec<f64>, integer_valued: bool) -> Result<Self> {
        let w = Self {
            values,
            integer_valued,
        };
        w.check_invariants()?;
        Ok(w)
    }

    /// All weights equal to one: the original-sample fit.
    pub fn ones(n: usize) -> Self {
        Self {
            values: vec![1.0; n],
            integer_valued: true,
        }
    }

    pub(crate) fn from_counts(counts: Vec<u32>) -> Self {
        Self {
            values: counts.into_iter().map(f64::from).collect(),
            integer_valued: true,
        }
    }

    pub(crate) fn unchecked(values: Vec<f64>, integer_valued: bool) -> Self {
        Self {
            values,
            integer_valued,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_integer_valued(&self) -> bool {
        self.integer_valued
    }

    /// Non-negativity and `sum W = n`: exact for integer-valued draws, within a
    /// relative `1e-12` otherwise.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.values.len();
        if let Some((i, w)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::Validation(format!("weight {i} is {w}, expected finite and >= 0")));
        }
        if self.integer_valued {
            if self.values.iter().any(|w| w.fract() != 0.0) {
                return Err(Error::Validation("integer-valued weights have a fractional entry".into()));
            }
            let total: u64 = self.values.iter().map(|&w| w as u64).sum();
            if total != n as u64 {
                return Err(Error::Validation(format!("weights sum to {total}, expected {n}")));
            }
        } else {
            let total: f64 = self.values.iter().sum();
            if ((total - n as f64) / n as f64).abs() > 1e-12 {
                return Err(Error::Validation(format!("weights sum to {total}, expected {n}")));
            }
        }
        Ok(())
    }

    /// `(1/n) sum (W_i - 1)^2`.
    pub fn spread(&self) -> f64 {
        self.values.iter().map(|w| (w - 1.0) * (w - 1.0)).sum::<f64>() / self.n() as f64
    }
}
