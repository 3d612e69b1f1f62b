use thiserror::Error;

/// Errors raised by the estimation, resampling and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("sample size {n} is too small (need at least {min})")]
    Size { n: usize, min: usize },

    #[error("invalid weight scheme specification `{spec}`: {reason}")]
    SchemeSpec { spec: String, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("no events with positive weight; the model cannot be fitted")]
    NoEvents,

    #[error("empty risk set at time {time} with positive event weight")]
    DegenerateRiskSet { time: f64 },

    #[error("matrix is singular (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("need at least {needed} usable bootstrap replicates, have {usable}")]
    InsufficientReplicates { usable: usize, needed: usize },

    #[error("{excluded} of {total} bootstrap replicates were excluded (limit {limit:.0}%)")]
    UnstableResampling { excluded: usize, total: usize, limit: f64 },

    #[error("bootstrap statistic has zero variance: {0}")]
    ZeroVariance(String),

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
