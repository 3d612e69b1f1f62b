//! Exchangeably weighted bootstrap inference for semiparametric M-estimation,
//! with the Cox proportional hazards model as the estimator.
//!
//! * [`weights`]: exchangeable weight schemes and their diagnostics.
//! * [`cox`]: simulation, weighted partial-likelihood fitting and variance oracles.
//! * [`bootstrap`]: the weighted bootstrap, variance and moment estimates, confidence sets.
//! * [`lab`]: Monte Carlo experiments checking consistency and the supporting inequalities.

pub mod bootstrap;
pub mod cox;
pub mod error;
pub mod estimator;
pub mod lab;
pub mod rng;
pub mod stats;
pub mod weights;

pub use cox::{CoxFit, CumulativeHazard, SimulationConfig, SurvivalDataset, SurvivalObservation};
pub use error::{Error, Result};
pub use estimator::{ReplicateEstimate, WeightedMEstimator};
pub use rng::{StreamKey, StreamRng};
pub use weights::{WeightScheme, WeightVector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
