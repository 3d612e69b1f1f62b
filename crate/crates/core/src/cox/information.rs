use nalgebra::DMatrix;

use super::likelihood::{evaluate, Order};
use super::{CoxFit, SurvivalDataset};
use crate::error::{Error, Result};

/// Eigenvalue ratio below which an information matrix counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Empirical efficient scores at `theta` under unit weights, one row per observation
/// in the dataset's original order.
///
/// With `e(t) = S1(t)/S0(t)` and the Breslow jumps `dEta`, the score of observation `i` is
/// `delta_i (z_i - e(y_i)) - exp(theta'z_i) sum_{t_k <= y_i} (z_i - e(t_k)) dEta_k`.
pub fn efficient_scores(theta: &[f64], dataset: &SurvivalDataset) -> Result<Vec<Vec<f64>>> {
    super::likelihood::check_theta(theta, dataset.dimension())?;
    let view = dataset.sorted();
    let d = dataset.dimension();
    let n = dataset.len();
    let lin: Vec<f64> = view.z.chunks_exact(d).map(|z| z.iter().zip(theta).map(|(a, b)| a * b).sum()).collect();
    let shift = lin.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Per tie group, from the latest time back: e(t) and the jump (scaled by exp(shift)).
    let groups = view.group_ends.len();
    let mut e_at = vec![0.0; groups * d];
    let mut jump = vec![0.0; groups];
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; d];
    let mut start = 0;
    for (g, &end) in view.group_ends.iter().enumerate() {
        let mut events = 0.0;
        for k in start..end {
            let e = (lin[k] - shift).exp();
            s0 += e;
            for j in 0..d {
                s1[j] += e * view.z[k * d + j];
            }
            if view.event[k] {
                events += 1.0;
            }
        }
        for j in 0..d {
            e_at[g * d + j] = s1[j] / s0;
        }
        jump[g] = events / s0;
        start = end;
    }
    if jump.iter().all(|&j| j == 0.0) {
        return Err(Error::NoEvents);
    }

    // Cumulative sums forward in time: A(t) = eta(t), B(t) = sum e(t_k) dEta_k.
    let mut a_cum = vec![0.0; groups];
    let mut b_cum = vec![0.0; groups * d];
    let mut a = 0.0;
    let mut b = vec![0.0; d];
    for g in (0..groups).rev() {
        a += jump[g];
        for j in 0..d {
            b[j] += e_at[g * d + j] * jump[g];
        }
        a_cum[g] = a;
        b_cum[g * d..(g + 1) * d].copy_from_slice(&b);
    }

    let mut scores = vec![vec![0.0; d]; n];
    let mut start = 0;
    for (g, &end) in view.group_ends.iter().enumerate() {
        for k in start..end {
            let weight = (lin[k] - shift).exp();
            let z = &view.z[k * d..(k + 1) * d];
            let row = &mut scores[view.order[k]];
            for j in 0..d {
                let event_part = if view.event[k] { z[j] - e_at[g * d + j] } else { 0.0 };
                row[j] = event_part - weight * (z[j] * a_cum[g] - b_cum[g * d + j]);
            }
        }
        start = end;
    }
    Ok(scores)
}

/// `(1/n) sum_i s_i s_i'` of the empirical efficient scores, without a singularity check.
pub fn efficient_score_outer_product(theta: &[f64], dataset: &SurvivalDataset) -> Result<DMatrix<f64>> {
    let d = dataset.dimension();
    let mut info = DMatrix::zeros(d, d);
    for s in efficient_scores(theta, dataset)? {
        for a in 0..d {
            for b in 0..d {
                info[(a, b)] += s[a] * s[b];
            }
        }
    }
    Ok(info / dataset.len() as f64)
}

/// Plug-in estimate of the efficient information at the fitted `theta_hat`.
///
/// Errors with the condition number when the estimate is singular.
pub fn plugin_efficient_information(fit: &CoxFit, dataset: &SurvivalDataset) -> Result<DMatrix<f64>> {
    require_converged(fit)?;
    let info = efficient_score_outer_product(&fit.theta_hat, dataset)?;
    check_nonsingular(&info)?;
    Ok(info)
}

/// `-(1/n)` times the Hessian of the unit-weight log partial likelihood at `theta_hat`.
pub fn profile_information(fit: &CoxFit, dataset: &SurvivalDataset) -> Result<DMatrix<f64>> {
    require_converged(fit)?;
    let d = dataset.dimension();
    let w = vec![1.0; dataset.len()];
    let eval = evaluate(dataset.sorted(), d, &fit.theta_hat, &w, Order::Hessian)?;
    Ok(DMatrix::from_row_slice(d, d, &eval.hessian) / -(dataset.len() as f64))
}

fn require_converged(fit: &CoxFit) -> Result<()> {
    if fit.converged {
        Ok(())
    } else {
        Err(Error::NotConverged("information requires a converged fit".into()))
    }
}

/// Ratio of largest to smallest eigenvalue of a symmetric matrix (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if max == 0.0 || min <= SINGULAR_RATIO * max {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn check_nonsingular(m: &DMatrix<f64>) -> Result<()> {
    let condition = condition_number(m);
    if condition.is_finite() {
        Ok(())
    } else {
        let eig = m.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        Err(Error::Singular { condition: if min > 0.0 { max / min } else { f64::INFINITY } })
    }
}

/// Inverse of a symmetric positive definite information matrix.
pub fn invert_information(info: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_nonsingular(info)?;
    info.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::Singular { condition: condition_number(info) })
}
