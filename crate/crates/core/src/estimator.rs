use crate::error::Result;
use crate::weights::WeightVector;

/// Outcome of one weighted refit.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateEstimate {
    pub theta: Vec<f64>,
    pub converged: bool,
    pub monotone: bool,
    pub iterations: usize,
}

/// An M-estimator that can be refitted under exchangeable observation weights.
pub trait WeightedMEstimator: Sync {
    fn sample_size(&self) -> usize;

    fn dimension(&self) -> usize;

    /// Maximize the weighted criterion, starting the search at `start`.
    fn estimate(&self, weights: &WeightVector, start: &[f64]) -> Result<ReplicateEstimate>;
}
