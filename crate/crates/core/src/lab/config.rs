use serde::{Deserialize, Serialize};

use crate::bootstrap::SigmaChoice;
use crate::cox::SimulationConfig;
use crate::error::{Error, Result};
use crate::weights::WeightScheme;

/// Acceptance tolerances for the consistency experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest acceptable median KS distance.
    pub ks_max: f64,
    /// Relative error of the mean bootstrap variance against the Monte Carlo variance.
    pub variance_vs_mc: f64,
    /// Relative error of the mean bootstrap variance against the plug-in oracle.
    pub variance_vs_plugin: f64,
    /// Odd moments: `|median| <= tol * (c^2 Sigma)^(p/2)`.
    pub odd_moment: f64,
    /// Even moments: relative error of the median.
    pub even_moment: f64,
    /// Half-width of the acceptable coverage band for t-type sets.
    pub coverage_t: f64,
    /// Half-width for percentile and hybrid sets.
    pub coverage_other: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ks_max: 0.05,
            variance_vs_mc: 0.15,
            variance_vs_plugin: 0.20,
            odd_moment: 0.10,
            even_moment: 0.15,
            coverage_t: 0.03,
            coverage_other: 0.04,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Data-generating design; its `n` is replaced by each entry of `n_grid`.
    pub simulation: SimulationConfig,
    pub scheme: WeightScheme,
    pub n_grid: Vec<usize>,
    /// Bootstrap replicates `B` per dataset.
    pub replicates: usize,
    /// Simulated datasets per sample size.
    pub mc_reps: usize,
    /// Confidence sets have level `1 - alpha`.
    pub alpha: f64,
    pub moments: Vec<u32>,
    pub seed: u64,
    pub sigma: SigmaChoice,
    /// Escalate excluded replicates and degenerate levels to errors.
    pub strict: bool,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            simulation: SimulationConfig::default(),
            scheme: WeightScheme::Efron,
            n_grid: vec![400],
            replicates: 2000,
            mc_reps: 500,
            alpha: 0.05,
            moments: vec![1, 2, 3, 4],
            seed: 20_240_601,
            sigma: SigmaChoice::Plugin,
            strict: false,
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Validation(format!("{key}: {reason}")));
        self.simulation.validate()?;
        self.scheme.validate()?;
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2) {
            return bad("n_grid", "must be a non-empty list of sizes >= 2".into());
        }
        if self.replicates < 2 {
            return bad("replicates", format!("must be at least 2, got {}", self.replicates));
        }
        if self.mc_reps < 1 {
            return bad("mc_reps", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", format!("must lie in (0, 1], got {}", self.alpha));
        }
        if self.strict && self.alpha >= 1.0 {
            return Err(Error::Domain("alpha = 1 gives a level-0 set; rejected in strict mode".into()));
        }
        if self.moments.iter().any(|&p| !(1..=4).contains(&p)) {
            return bad("moments", "orders must lie in 1..=4".into());
        }
        Ok(())
    }
}
