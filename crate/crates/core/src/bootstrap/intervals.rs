use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{variance_estimate, BootstrapRun};
use crate::cox::{invert_information, plugin_efficient_information, profile_information, CoxFit, SurvivalDataset};
use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, sort_ascending};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    TType,
    Percentile,
    Hybrid,
}

impl IntervalKind {
    pub const ALL: [IntervalKind; 3] = [IntervalKind::TType, IntervalKind::Percentile, IntervalKind::Hybrid];
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalKind::TType => "t_type",
            IntervalKind::Percentile => "percentile",
            IntervalKind::Hybrid => "hybrid",
        })
    }
}

/// Coordinatewise confidence intervals at level `1 - alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub kind: IntervalKind,
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// The bootstrap distribution had no spread and the set collapsed to `theta_hat`.
    pub degenerate: bool,
}

impl ConfidenceSet {
    pub fn contains_coordinate(&self, j: usize, value: f64) -> bool {
        self.lower[j] <= value && value <= self.upper[j]
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    /// `kind,level,coordinate,lower,upper` rows without a header.
    pub fn csv_rows(&self) -> String {
        (0..self.lower.len())
            .map(|j| format!("{},{},{},{},{}\n", self.kind, self.level, j + 1, self.lower[j], self.upper[j]))
            .collect()
    }
}

/// Header for [`ConfidenceSet::csv_rows`].
pub const CONFIDENCE_CSV_HEADER: &str = "kind,level,coordinate,lower,upper\n";

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    sort_ascending(&mut v);
    v
}

fn collapse(run: &BootstrapRun, kind: IntervalKind, alpha: f64) -> ConfidenceSet {
    ConfidenceSet {
        kind,
        level: 1.0 - alpha,
        lower: run.theta_hat.clone(),
        upper: run.theta_hat.clone(),
        degenerate: true,
    }
}

/// Studentized intervals `[theta_hat - sqrt(S_jj/n) q_{1-a/2}, theta_hat - sqrt(S_jj/n) q_{a/2}]`, where
/// `q` are quantiles of `t_j(b) = (sqrt(n)/c)(theta*_j(b) - theta_hat_j) / sqrt(S*_jj)`
/// and `S*` is [`variance_estimate`].
pub fn t_confidence_set(run: &BootstrapRun, sigma_hat: &DMatrix<f64>, alpha: f64) -> Result<ConfidenceSet> {
    check_alpha(alpha)?;
    let d = run.dimension();
    if sigma_hat.nrows() != d || sigma_hat.ncols() != d {
        return Err(Error::Validation(format!("sigma_hat must be {d} x {d}")));
    }
    let boot_var = variance_estimate(run)?;
    if run.is_degenerate() {
        return Ok(collapse(run, IntervalKind::TType, alpha));
    }
    let n = run.n as f64;
    let c = run.c2.sqrt();
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for j in 0..d {
        let s_star = boot_var[(j, j)];
        if !(s_star > 0.0) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        if !(sigma_hat[(j, j)] > 0.0) {
            return Err(Error::Singular { condition: f64::INFINITY });
        }
        let t = sorted(run.deviations(j).iter().map(|dev| n.sqrt() / c * dev / s_star.sqrt()).collect());
        let scale = (sigma_hat[(j, j)] / n).sqrt();
        lower.push(run.theta_hat[j] - scale * quantile_sorted(&t, 1.0 - alpha / 2.0));
        upper.push(run.theta_hat[j] - scale * quantile_sorted(&t, alpha / 2.0));
    }
    Ok(ConfidenceSet { kind: IntervalKind::TType, level: 1.0 - alpha, lower, upper, degenerate: false })
}

/// `theta_hat + ` quantiles of `(theta* - theta_hat)/c`; with `c = 1` the classical percentile interval.
pub fn percentile_confidence_set(run: &BootstrapRun, alpha: f64) -> Result<ConfidenceSet> {
    scaled_quantile_set(run, alpha, IntervalKind::Percentile)
}

/// `theta_hat - ` reflected quantiles of `(theta* - theta_hat)/c`.
pub fn hybrid_confidence_set(run: &BootstrapRun, alpha: f64) -> Result<ConfidenceSet> {
    scaled_quantile_set(run, alpha, IntervalKind::Hybrid)
}

fn scaled_quantile_set(run: &BootstrapRun, alpha: f64, kind: IntervalKind) -> Result<ConfidenceSet> {
    check_alpha(alpha)?;
    if run.usable_count() < 2 {
        return Err(Error::InsufficientReplicates { usable: run.usable_count(), needed: 2 });
    }
    if run.is_degenerate() {
        return Ok(collapse(run, kind, alpha));
    }
    let c = run.c2.sqrt();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for j in 0..run.dimension() {
        let dev = sorted(run.deviations(j).iter().map(|v| v / c).collect());
        let lo = quantile_sorted(&dev, alpha / 2.0);
        let hi = quantile_sorted(&dev, 1.0 - alpha / 2.0);
        let centre = run.theta_hat[j];
        match kind {
            IntervalKind::Hybrid => {
                lower.push(centre - hi);
                upper.push(centre - lo);
            }
            _ => {
                lower.push(centre + lo);
                upper.push(centre + hi);
            }
        }
    }
    Ok(ConfidenceSet { kind, level: 1.0 - alpha, lower, upper, degenerate: false })
}

/// Variance estimate used to rescale the studentized intervals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaChoice {
    /// Inverse plug-in efficient information.
    #[default]
    Plugin,
    /// Inverse observed profile information.
    Profile,
    /// The bootstrap variance estimate itself.
    Bootstrap,
}

impl SigmaChoice {
    pub fn resolve(&self, fit: &CoxFit, dataset: &SurvivalDataset, run: &BootstrapRun) -> Result<DMatrix<f64>> {
        match self {
            SigmaChoice::Plugin => invert_information(&plugin_efficient_information(fit, dataset)?),
            SigmaChoice::Profile => invert_information(&profile_information(fit, dataset)?),
            SigmaChoice::Bootstrap => variance_estimate(run),
        }
    }
}

impl fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SigmaChoice::Plugin => "plugin",
            SigmaChoice::Profile => "profile",
            SigmaChoice::Bootstrap => "bootstrap",
        })
    }
}

impl FromStr for SigmaChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plugin" => Ok(SigmaChoice::Plugin),
            "profile" => Ok(SigmaChoice::Profile),
            "bootstrap" => Ok(SigmaChoice::Bootstrap),
            other => Err(Error::Validation(format!("unknown sigma choice `{other}` (plugin, profile or bootstrap)"))),
        }
    }
}
