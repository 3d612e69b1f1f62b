//! The exchangeably weighted bootstrap: replicate generation, variance and moment
//! estimates, and confidence sets.

mod artifact;
mod engine;
mod estimates;
mod intervals;

pub use engine::{
    run_bootstrap, run_weighted_bootstrap, BootstrapRun, BootstrapSpec, ExcludedReplicate, MAX_EXCLUDED_FRACTION,
};
pub use estimates::{bootstrap_mean, central_second_moment, moment_estimate, variance_estimate};
pub use intervals::{
    hybrid_confidence_set, percentile_confidence_set, t_confidence_set, ConfidenceSet, IntervalKind, SigmaChoice,
    CONFIDENCE_CSV_HEADER,
};
