//! Monte Carlo experiments: bootstrap consistency on simulated Cox data, the
//! weight-law checks, and numerical checks of two supporting inequalities.
//!
//! Every experiment is a pure function of its configuration, seed included.

mod config;
mod consistency;
mod inequalities;
mod ks;
mod report;
mod weight_law;

pub use config::{ExperimentConfig, Tolerances};
pub use consistency::{coverage_experiment, distribution_consistency_experiment, variance_and_moment_experiment};
pub use inequalities::{
    inequality_sweep, multiplier_inequality_check, multiplier_sweep, norm_inequality_check, norm_sweep,
    InequalityConfig, MonomialClass, MultiplierMargin, NormInequalityMargin, PositiveLaw,
};
pub use ks::ks_distance;
pub use report::{Check, ExperimentReport, Record};
pub use weight_law::{verify_weights, WeightLawConfig};
