//! Shared fixtures for the benchmarks.

use exboot_core::cox::simulate_dataset;
use exboot_core::{SimulationConfig, StreamKey, SurvivalDataset};

/// Default scalar design at sample size `n`.
pub fn dataset(n: usize, seed: u64) -> SurvivalDataset {
    let config = SimulationConfig { n, ..SimulationConfig::default() };
    simulate_dataset(&config, &mut StreamKey::root(seed).rng()).expect("default design is valid")
}

/// Bivariate design with Rademacher covariates.
pub fn bivariate_dataset(n: usize, seed: u64) -> SurvivalDataset {
    let config = SimulationConfig {
        n,
        theta0: vec![0.5, -0.3],
        covariates: exboot_core::cox::CovariateLaw::Rademacher,
        ..SimulationConfig::default()
    };
    simulate_dataset(&config, &mut StreamKey::root(seed).rng()).expect("bivariate design is valid")
}
