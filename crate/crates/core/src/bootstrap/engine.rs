use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cox::{CoxFit, CoxProblem, FitOptions, SurvivalDataset};
use crate::error::{Error, Result};
use crate::estimator::WeightedMEstimator;
use crate::rng::StreamKey;
use crate::weights::{generate_weights, WeightScheme};

/// Default share of replicates that may be excluded before strict mode fails.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub scheme: WeightScheme,
    pub replicates: usize,
    /// Fail instead of warning when too many replicates are excluded.
    pub strict: bool,
    pub max_excluded_fraction: f64,
}

impl BootstrapSpec {
    pub fn new(scheme: WeightScheme, replicates: usize) -> Self {
        Self { scheme, replicates, strict: false, max_excluded_fraction: MAX_EXCLUDED_FRACTION }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedReplicate {
    /// 1-based replicate index.
    pub b: usize,
    pub reason: String,
}

/// Bootstrap estimates around a fitted model.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapRun {
    pub scheme: WeightScheme,
    /// `c^2` used for normalization (the scheme's limit value).
    pub c2: f64,
    pub n: usize,
    /// Requested replicate count `B`.
    pub replicates: usize,
    pub seed: u64,
    pub theta_hat: Vec<f64>,
    /// Usable estimates in replicate order.
    pub theta_stars: Vec<Vec<f64>>,
    /// 1-based replicate index of each usable row.
    pub usable: Vec<usize>,
    pub excluded: Vec<ExcludedReplicate>,
    pub warnings: Vec<String>,
}

impl BootstrapRun {
    pub fn dimension(&self) -> usize {
        self.theta_hat.len()
    }

    pub fn usable_count(&self) -> usize {
        self.theta_stars.len()
    }

    pub fn excluded_fraction(&self) -> f64 {
        self.excluded.len() as f64 / self.replicates as f64
    }

    /// All usable estimates equal `theta_hat` (e.g. the all-ones scheme).
    pub fn is_degenerate(&self) -> bool {
        self.theta_stars.iter().all(|row| row == &self.theta_hat)
    }

    /// `theta*_j(b) - theta_hat_j` over usable replicates.
    pub(crate) fn deviations(&self, j: usize) -> Vec<f64> {
        self.theta_stars.iter().map(|row| row[j] - self.theta_hat[j]).collect()
    }
}

/// Weighted bootstrap of the Cox fit, replicates keyed by `(seed, "bootstrap", b)`.
pub fn run_bootstrap(
    dataset: &SurvivalDataset,
    base_fit: &CoxFit,
    spec: &BootstrapSpec,
    seed: u64,
    fit_options: &FitOptions,
) -> Result<BootstrapRun> {
    if !base_fit.converged {
        return Err(Error::NotConverged("the base fit must converge before bootstrapping".into()));
    }
    let problem = CoxProblem::new(dataset, *fit_options);
    run_weighted_bootstrap(&problem, &base_fit.theta_hat, spec, StreamKey::root(seed).named("bootstrap"), seed)
}

/// Bootstrap any weighted M-estimator. Replicate `b` draws its weights from `key.child(b)`
/// and refits from `theta_hat`, so results do not depend on scheduling.
pub fn run_weighted_bootstrap<E: WeightedMEstimator>(
    estimator: &E,
    theta_hat: &[f64],
    spec: &BootstrapSpec,
    key: StreamKey,
    seed: u64,
) -> Result<BootstrapRun> {
    spec.scheme.validate()?;
    if spec.replicates < 2 {
        return Err(Error::Domain(format!("need B >= 2 replicates, got {}", spec.replicates)));
    }
    if theta_hat.len() != estimator.dimension() {
        return Err(Error::Validation("theta_hat does not match the estimator dimension".into()));
    }
    let n = estimator.sample_size();
    let outcomes: Vec<std::result::Result<Vec<f64>, String>> = (1..=spec.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = key.child(b as u64).rng();
            let weights = generate_weights(&spec.scheme, n, &mut rng).map_err(|e| e.to_string())?;
            match estimator.estimate(&weights, theta_hat) {
                Ok(est) if est.converged => Ok(est.theta),
                Ok(est) if est.monotone => Err("monotone likelihood".to_string()),
                Ok(est) => Err(format!("no convergence after {} iterations", est.iterations)),
                Err(e) => Err(e.to_string()),
            }
        })
        .collect();

    let mut theta_stars = Vec::with_capacity(spec.replicates);
    let mut usable = Vec::with_capacity(spec.replicates);
    let mut excluded = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(theta) => {
                theta_stars.push(theta);
                usable.push(i + 1);
            }
            Err(reason) => excluded.push(ExcludedReplicate { b: i + 1, reason }),
        }
    }
    let mut warnings = Vec::new();
    let fraction = excluded.len() as f64 / spec.replicates as f64;
    if fraction > spec.max_excluded_fraction {
        if spec.strict {
            return Err(Error::UnstableResampling {
                excluded: excluded.len(),
                total: spec.replicates,
                limit: 100.0 * spec.max_excluded_fraction,
            });
        }
        warnings.push(format!(
            "{} of {} replicates excluded, above the {:.0}% limit",
            excluded.len(),
            spec.replicates,
            100.0 * spec.max_excluded_fraction
        ));
    }
    Ok(BootstrapRun {
        scheme: spec.scheme,
        c2: spec.scheme.theoretical_c2(),
        n,
        replicates: spec.replicates,
        seed,
        theta_hat: theta_hat.to_vec(),
        theta_stars,
        usable,
        excluded,
        warnings,
    })
}
