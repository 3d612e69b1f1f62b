use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit, simulate_dataset, FitOptions, SimulationConfig};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::{kendall_trend, median};
use crate::weights::WeightVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuisanceRateRow {
    pub n: usize,
    /// Median over replications of `sqrt(n) sup_{t <= tau} |eta_hat(t) - eta_0(t)|`.
    pub median_scaled_distance: f64,
    pub replications: usize,
    pub unconverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuisanceRateReport {
    pub rows: Vec<NuisanceRateRow>,
    pub kendall_tau: f64,
    /// One-sided p-value for an increasing trend of the medians in `n`.
    pub trend_p_value: f64,
    /// No significant increasing trend at the 5% level.
    pub bounded: bool,
}

/// Root-n behaviour of the Breslow estimator under repeated simulation.
pub fn nuisance_rate_diagnostic(
    config: &SimulationConfig,
    n_grid: &[usize],
    replications: usize,
    key: StreamKey,
) -> Result<NuisanceRateReport> {
    config.validate()?;
    if n_grid.is_empty() || replications == 0 {
        return Err(Error::Domain("need a non-empty n grid and at least one replication".into()));
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    let rows = grid
        .iter()
        .map(|&n| {
            let sim = SimulationConfig { n, ..config.clone() };
            let outcomes = (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let data = simulate_dataset(&sim, &mut key.child(n as u64).child(rep as u64).rng())?;
                    let f = fit(&data, &WeightVector::ones(n), &FitOptions::default())?;
                    let dist = f.eta_hat.sup_distance(|t| sim.true_cumulative_hazard(t), sim.tau);
                    Ok(((n as f64).sqrt() * dist, f.converged))
                })
                .collect::<Result<Vec<_>>>()?;
            let stats: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
            Ok(NuisanceRateRow {
                n,
                median_scaled_distance: median(&stats),
                replications,
                unconverged: outcomes.iter().filter(|o| !o.1).count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let medians: Vec<f64> = rows.iter().map(|r| r.median_scaled_distance).collect();
    let (kendall_tau, trend_p_value) = kendall_trend(&medians);
    Ok(NuisanceRateReport {
        rows,
        kendall_tau,
        trend_p_value,
        bounded: trend_p_value >= 0.05,
    })
}
