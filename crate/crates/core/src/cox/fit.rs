use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::likelihood::{breslow_sorted, check_theta, evaluate, separates, sorted_weights, Evaluation, Order};
use super::data::SortedView;
use super::{CumulativeHazard, SurvivalDataset};
use crate::error::Result;
use crate::estimator::{ReplicateEstimate, WeightedMEstimator};
use crate::weights::WeightVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Convergence threshold on the sup-norm of the score.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Fits with a coordinate beyond this bound are flagged as monotone.
    pub theta_cap: f64,
    /// Bound on `eta(tau)`; exceeding it only produces a warning.
    pub eta_bound: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
            max_halvings: 30,
            theta_cap: 50.0,
            eta_bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoxFit {
    pub theta_hat: Vec<f64>,
    pub eta_hat: CumulativeHazard,
    pub log_partial_likelihood: f64,
    pub score_sup_norm: f64,
    /// Negative Hessian of the weighted log partial likelihood at `theta_hat`.
    pub observed_information: DMatrix<f64>,
    pub converged: bool,
    /// The likelihood appears to increase without bound (separated data).
    pub monotone: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Converged,
    Monotone,
    Stalled,
}

pub(crate) struct NewtonOutcome {
    pub theta: Vec<f64>,
    pub eval: Evaluation,
    pub converged: bool,
    pub monotone: bool,
    pub iterations: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve `(-H) step = g`; the flag reports that `-H` is not positive definite.
fn newton_step(eval: &Evaluation, d: usize) -> (Vec<f64>, bool) {
    let neg_h = DMatrix::from_row_slice(d, d, &eval.hessian).map(|v| -v);
    let g = nalgebra::DVector::from_column_slice(&eval.gradient);
    if let Some(chol) = neg_h.clone().cholesky() {
        return (chol.solve(&g).as_slice().to_vec(), false);
    }
    let scale = (0..d).map(|i| neg_h[(i, i)].abs()).fold(1.0, f64::max);
    let mut ridge = 1e-12 * scale;
    while ridge <= scale {
        let shifted = &neg_h + DMatrix::identity(d, d) * ridge;
        if let Some(chol) = shifted.cholesky() {
            return (chol.solve(&g).as_slice().to_vec(), true);
        }
        ridge *= 100.0;
    }
    (eval.gradient.clone(), true)
}

pub(crate) fn newton(view: &SortedView, d: usize, w: &[f64], start: &[f64], options: &FitOptions) -> Result<NewtonOutcome> {
    let mut theta = start.to_vec();
    let mut current = evaluate(view, d, &theta, w, Order::Hessian)?;
    let mut last_step: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let status = loop {
        let (step, singular) = newton_step(&current, d);
        if sup_norm(&current.gradient) < options.tolerance {
            if !singular && sup_norm(&step) <= 1e-4 * sup_norm(&theta).max(1.0) {
                break Status::Converged;
            }
            if singular {
                // A flat direction with zero score is either a constant covariate
                // combination or the limit of a separated fit.
                let separated = last_step.as_ref().is_some_and(|dir| separates(view, d, w, dir));
                break if separated { Status::Monotone } else { Status::Converged };
            }
        }
        if iterations >= options.max_iterations {
            break Status::Stalled;
        }
        let slack = 1e-12 * (1.0 + current.value.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let candidate: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if let Ok(eval) = evaluate(view, d, &candidate, w, Order::Hessian) {
                if eval.value >= current.value - slack {
                    accepted = Some((candidate, eval));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((candidate, eval)) = accepted else {
            break Status::Stalled;
        };
        iterations += 1;
        last_step = Some(theta.iter().zip(&candidate).map(|(a, b)| b - a).collect());
        theta = candidate;
        current = eval;
        if sup_norm(&theta) > options.theta_cap {
            break Status::Monotone;
        }
    };
    let monotone = match status {
        Status::Monotone => true,
        Status::Converged => false,
        Status::Stalled => {
            let dir = last_step.unwrap_or_else(|| current.gradient.clone());
            separates(view, d, w, &dir)
        }
    };
    Ok(NewtonOutcome {
        theta,
        eval: current,
        converged: status == Status::Converged,
        monotone,
        iterations,
    })
}

/// Maximize the weighted log partial likelihood by Newton's method with step halving, from `theta = 0`.
pub fn fit<W: AsRef<[f64]> + ?Sized>(dataset: &SurvivalDataset, weights: &W, options: &FitOptions) -> Result<CoxFit> {
    fit_from(dataset, weights, &vec![0.0; dataset.dimension()], options)
}

/// [`fit`] started from `start`.
pub fn fit_from<W: AsRef<[f64]> + ?Sized>(dataset: &SurvivalDataset, weights: &W, start: &[f64], options: &FitOptions) -> Result<CoxFit> {
    let d = dataset.dimension();
    check_theta(start, d)?;
    let w = sorted_weights(dataset, weights.as_ref())?;
    let out = newton(dataset.sorted(), d, &w, start, options)?;
    assemble(dataset, &w, out, options)
}

/// Evaluate the fit quantities at a fixed `theta` without optimizing.
pub fn fit_at<W: AsRef<[f64]> + ?Sized>(dataset: &SurvivalDataset, weights: &W, theta: &[f64], options: &FitOptions) -> Result<CoxFit> {
    let d = dataset.dimension();
    check_theta(theta, d)?;
    let w = sorted_weights(dataset, weights.as_ref())?;
    let eval = evaluate(dataset.sorted(), d, theta, &w, Order::Hessian)?;
    let converged = sup_norm(&eval.gradient) < options.tolerance;
    let out = NewtonOutcome { theta: theta.to_vec(), eval, converged, monotone: false, iterations: 0 };
    assemble(dataset, &w, out, options)
}

fn assemble(dataset: &SurvivalDataset, w: &[f64], out: NewtonOutcome, options: &FitOptions) -> Result<CoxFit> {
    let d = dataset.dimension();
    let eta_hat = breslow_sorted(dataset.sorted(), d, &out.theta, w)?;
    let mut warnings = Vec::new();
    if let Some(bound) = options.eta_bound {
        if eta_hat.total() > bound {
            warnings.push(format!("eta_hat(tau) = {} exceeds the bound {bound}", eta_hat.total()));
        }
    }
    if out.monotone {
        warnings.push("monotone likelihood: no finite maximizer".into());
    } else if !out.converged {
        warnings.push(format!("no convergence after {} iterations", out.iterations));
    }
    Ok(CoxFit {
        score_sup_norm: sup_norm(&out.eval.gradient),
        observed_information: DMatrix::from_row_slice(d, d, &out.eval.hessian).map(|v| -v),
        log_partial_likelihood: out.eval.value,
        theta_hat: out.theta,
        eta_hat,
        converged: out.converged,
        monotone: out.monotone,
        iterations: out.iterations,
        warnings,
    })
}

/// The Cox partial-likelihood M-estimator on a fixed dataset.
#[derive(Clone, Copy, Debug)]
pub struct CoxProblem<'a> {
    pub dataset: &'a SurvivalDataset,
    pub options: FitOptions,
}

impl<'a> CoxProblem<'a> {
    pub fn new(dataset: &'a SurvivalDataset, options: FitOptions) -> Self {
        Self { dataset, options }
    }
}

impl WeightedMEstimator for CoxProblem<'_> {
    fn sample_size(&self) -> usize {
        self.dataset.len()
    }

    fn dimension(&self) -> usize {
        self.dataset.dimension()
    }

    fn estimate(&self, weights: &WeightVector, start: &[f64]) -> Result<ReplicateEstimate> {
        let w = sorted_weights(self.dataset, weights.values())?;
        let out = newton(self.dataset.sorted(), self.dataset.dimension(), &w, start, &self.options)?;
        Ok(ReplicateEstimate {
            theta: out.theta,
            converged: out.converged,
            monotone: out.monotone,
            iterations: out.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cox::SurvivalObservation;

    fn data(rows: &[(f64, bool, f64)]) -> SurvivalDataset {
        SurvivalDataset::from_observations(
            rows.iter().map(|&(y, delta, z)| SurvivalObservation { y, delta, z: vec![z] }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn separated_pair_is_flagged() {
        let ds = data(&[(1.0, true, 1.0), (2.0, true, 0.0)]);
        let f = fit(&ds, &WeightVector::ones(2), &FitOptions::default()).unwrap();
        assert!(f.monotone);
        assert!(!f.converged);
        assert!(f.theta_hat[0] > 20.0);
    }

    #[test]
    fn constant_covariate_converges_flat() {
        let ds = data(&[(1.0, true, 2.0), (2.0, true, 2.0), (3.0, false, 2.0)]);
        let f = fit(&ds, &WeightVector::ones(3), &FitOptions::default()).unwrap();
        assert!(f.converged && !f.monotone);
        assert_eq!(f.theta_hat, vec![0.0]);
        assert!(f.observed_information[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn interior_fit_zeroes_the_score() {
        let ds = data(&[
            (0.3, true, 0.9),
            (0.5, true, 0.1),
            (0.9, false, 0.5),
            (1.1, true, 0.2),
            (1.4, true, 0.7),
            (2.0, false, 0.4),
        ]);
        let f = fit(&ds, &WeightVector::ones(6), &FitOptions::default()).unwrap();
        assert!(f.converged, "{f:?}");
        assert!(f.score_sup_norm < 1e-9);
        assert!(f.observed_information[(0, 0)] > 0.0);
        let again = fit(&ds, &WeightVector::ones(6), &FitOptions::default()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn eta_bound_warning() {
        let ds = data(&[(0.3, true, 0.9), (0.5, true, 0.1), (0.9, false, 0.5), (1.1, true, 0.2)]);
        let options = FitOptions { eta_bound: Some(1e-3), ..FitOptions::default() };
        let f = fit(&ds, &WeightVector::ones(4), &options).unwrap();
        assert!(f.warnings.iter().any(|w| w.contains("exceeds")));
    }
}
