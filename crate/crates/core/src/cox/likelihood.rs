use nalgebra::{DMatrix, DVector};

use super::data::SortedView;
use super::{CumulativeHazard, SurvivalDataset};
use crate::error::{Error, Result};

/// Weighted log partial likelihood with its exact first and second derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialLikelihood {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// `sum_i w_i delta_i [theta'z_i - log sum_j w_j exp(theta'z_j) 1{y_j >= y_i}]`.
pub fn log_partial_likelihood<W: AsRef<[f64]> + ?Sized>(
    theta: &[f64],
    dataset: &SurvivalDataset,
    weights: &W,
) -> Result<PartialLikelihood> {
    let w = sorted_weights(dataset, weights.as_ref())?;
    check_theta(theta, dataset.dimension())?;
    let e = evaluate(dataset.sorted(), dataset.dimension(), theta, &w, Order::Hessian)?;
    let d = dataset.dimension();
    Ok(PartialLikelihood {
        value: e.value,
        gradient: DVector::from_vec(e.gradient),
        hessian: DMatrix::from_row_slice(d, d, &e.hessian),
    })
}

/// Profiled cumulative hazard: jump `sum w_i delta_i / sum_{y_j >= t} w_j exp(theta'z_j)` at each event time.
pub fn weighted_breslow<W: AsRef<[f64]> + ?Sized>(theta: &[f64], dataset: &SurvivalDataset, weights: &W) -> Result<CumulativeHazard> {
    let w = sorted_weights(dataset, weights.as_ref())?;
    check_theta(theta, dataset.dimension())?;
    breslow_sorted(dataset.sorted(), dataset.dimension(), theta, &w)
}

pub(crate) fn check_theta(theta: &[f64], d: usize) -> Result<()> {
    if theta.len() != d {
        return Err(Error::Validation(format!("theta has length {}, covariates have dimension {d}", theta.len())));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("theta must be finite".into()));
    }
    Ok(())
}

/// Weights permuted into the dataset's sorted order.
pub(crate) fn sorted_weights(dataset: &SurvivalDataset, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != dataset.len() {
        return Err(Error::Validation(format!(
            "weight vector has length {}, dataset has {} observations",
            weights.len(),
            dataset.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation("weights must be finite and non-negative".into()));
    }
    Ok(dataset.sorted().order.iter().map(|&i| weights[i]).collect())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Order {
    Value,
    Gradient,
    Hessian,
}

pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `d x d`.
    pub hessian: Vec<f64>,
}

fn linear(z: &[f64], theta: &[f64]) -> f64 {
    z.iter().zip(theta).map(|(a, b)| a * b).sum()
}

/// Risk-set sums accumulated from the latest time backwards, scaled by `exp(-shift)`
/// where `shift` is the running maximum of `theta'z`.
struct RiskSums {
    shift: f64,
    s0: f64,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl RiskSums {
    fn new(d: usize, order: Order) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            s0: 0.0,
            s1: vec![0.0; if order >= Order::Gradient { d } else { 0 }],
            s2: vec![0.0; if order >= Order::Hessian { d * d } else { 0 }],
        }
    }

    fn add(&mut self, weight: f64, lin: f64, z: &[f64]) {
        if lin > self.shift {
            let scale = (self.shift - lin).exp();
            self.s0 *= scale;
            self.s1.iter_mut().for_each(|v| *v *= scale);
            self.s2.iter_mut().for_each(|v| *v *= scale);
            self.shift = lin;
        }
        let e = weight * (lin - self.shift).exp();
        self.s0 += e;
        if !self.s1.is_empty() {
            for (s, zj) in self.s1.iter_mut().zip(z) {
                *s += e * zj;
            }
        }
        if !self.s2.is_empty() {
            let d = z.len();
            for a in 0..d {
                let ez = e * z[a];
                for b in 0..d {
                    self.s2[a * d + b] += ez * z[b];
                }
            }
        }
    }
}

pub(crate) fn evaluate(view: &SortedView, d: usize, theta: &[f64], w: &[f64], order: Order) -> Result<Evaluation> {
    let mut sums = RiskSums::new(d, order);
    let mut value = 0.0;
    let mut gradient = vec![0.0; if order >= Order::Gradient { d } else { 0 }];
    let mut hessian = vec![0.0; if order >= Order::Hessian { d * d } else { 0 }];
    let mut total_events = 0.0;
    let mut event_z = vec![0.0; d];
    let mut start = 0;
    for &end in &view.group_ends {
        let mut dw = 0.0;
        let mut dw_lin = 0.0;
        event_z.iter_mut().for_each(|v| *v = 0.0);
        for k in start..end {
            if w[k] == 0.0 {
                continue;
            }
            let z = &view.z[k * d..(k + 1) * d];
            let lin = linear(z, theta);
            sums.add(w[k], lin, z);
            if view.event[k] {
                dw += w[k];
                dw_lin += w[k] * lin;
                for (acc, zj) in event_z.iter_mut().zip(z) {
                    *acc += w[k] * zj;
                }
            }
        }
        if dw > 0.0 {
            if !(sums.s0 > 0.0) {
                return Err(Error::DegenerateRiskSet { time: view.y[start] });
            }
            total_events += dw;
            value += dw_lin - dw * (sums.s0.ln() + sums.shift);
            if order >= Order::Gradient {
                for j in 0..d {
                    gradient[j] += event_z[j] - dw * sums.s1[j] / sums.s0;
                }
            }
            if order >= Order::Hessian {
                for a in 0..d {
                    let ea = sums.s1[a] / sums.s0;
                    for b in 0..d {
                        let eb = sums.s1[b] / sums.s0;
                        hessian[a * d + b] -= dw * (sums.s2[a * d + b] / sums.s0 - ea * eb);
                    }
                }
            }
        }
        start = end;
    }
    if total_events == 0.0 {
        return Err(Error::NoEvents);
    }
    if !value.is_finite() {
        return Err(Error::Validation("log partial likelihood is not finite".into()));
    }
    Ok(Evaluation { value, gradient, hessian })
}

pub(crate) fn breslow_sorted(view: &SortedView, d: usize, theta: &[f64], w: &[f64]) -> Result<CumulativeHazard> {
    let mut sums = RiskSums::new(d, Order::Value);
    let mut times = Vec::new();
    let mut jumps = Vec::new();
    let mut start = 0;
    for &end in &view.group_ends {
        let mut dw = 0.0;
        for k in start..end {
            if w[k] == 0.0 {
                continue;
            }
            let z = &view.z[k * d..(k + 1) * d];
            sums.add(w[k], linear(z, theta), z);
            if view.event[k] {
                dw += w[k];
            }
        }
        if dw > 0.0 {
            if !(sums.s0 > 0.0) {
                return Err(Error::DegenerateRiskSet { time: view.y[start] });
            }
            times.push(view.y[start]);
            jumps.push(dw / sums.s0 * (-sums.shift).exp());
        }
        start = end;
    }
    if times.is_empty() {
        return Err(Error::NoEvents);
    }
    times.reverse();
    jumps.reverse();
    CumulativeHazard::new(times, jumps)
}

/// Whether `direction` separates the data: along it every event with positive weight
/// has the largest `direction'z` in its risk set, strictly so at least once. The
/// likelihood is then non-decreasing without bound along `direction`.
pub(crate) fn separates(view: &SortedView, d: usize, w: &[f64], direction: &[f64]) -> bool {
    let scale = view
        .z
        .chunks_exact(d)
        .map(|z| linear(z, direction).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return false;
    }
    let eps = 1e-9 * scale;
    let mut max_u = f64::NEG_INFINITY;
    let mut min_u = f64::INFINITY;
    let mut strict = false;
    let mut start = 0;
    for &end in &view.group_ends {
        for k in start..end {
            if w[k] > 0.0 {
                let u = linear(&view.z[k * d..(k + 1) * d], direction);
                max_u = max_u.max(u);
                min_u = min_u.min(u);
            }
        }
        for k in start..end {
            if w[k] > 0.0 && view.event[k] {
                let u = linear(&view.z[k * d..(k + 1) * d], direction);
                if u < max_u - eps {
                    return false;
                }
                if min_u < u - eps {
                    strict = true;
                }
            }
        }
        start = end;
    }
    strict
}
