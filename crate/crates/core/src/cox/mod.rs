//! The Cox proportional hazards model: data, simulation, weighted partial-likelihood
//! fitting and information estimates.

mod data;
mod fit;
mod hazard;
mod information;
mod likelihood;
mod rate;
mod simulate;

pub use data::{SurvivalDataset, SurvivalObservation};
pub use fit::{fit, fit_at, fit_from, CoxFit, CoxProblem, FitOptions};
pub use hazard::CumulativeHazard;
pub use information::{
    condition_number, efficient_score_outer_product, efficient_scores, invert_information,
    plugin_efficient_information, profile_information,
};
pub use likelihood::{log_partial_likelihood, weighted_breslow, PartialLikelihood};
pub use rate::{nuisance_rate_diagnostic, NuisanceRateReport, NuisanceRateRow};
pub use simulate::{simulate_dataset, Baseline, Censoring, CovariateLaw, SimulationConfig};
