use nalgebra::DMatrix;

use super::BootstrapRun;
use crate::error::{Error, Result};

fn require_usable(run: &BootstrapRun) -> Result<()> {
    if run.usable_count() < 2 {
        return Err(Error::InsufficientReplicates { usable: run.usable_count(), needed: 2 });
    }
    Ok(())
}

/// Mean of the usable estimates.
pub fn bootstrap_mean(run: &BootstrapRun) -> Vec<f64> {
    let shift = shifted_mean(run);
    run.theta_stars.first().map_or(shift.clone(), |r0| r0.iter().zip(&shift).map(|(a, b)| a + b).collect())
}

/// Mean of `theta*(b) - theta*(first)`; centring on a data point keeps identical rows exactly zero.
fn shifted_mean(run: &BootstrapRun) -> Vec<f64> {
    let d = run.dimension();
    let m = run.usable_count() as f64;
    let Some(r0) = run.theta_stars.first() else {
        return vec![0.0; d];
    };
    (0..d).map(|j| run.theta_stars.iter().map(|r| r[j] - r0[j]).sum::<f64>() / m).collect()
}

fn centred(run: &BootstrapRun) -> impl Iterator<Item = Vec<f64>> + '_ {
    let shift = shifted_mean(run);
    let r0 = run.theta_stars[0].clone();
    run.theta_stars
        .iter()
        .map(move |r| r.iter().zip(&r0).zip(&shift).map(|((x, x0), s)| (x - x0) - s).collect())
}

/// `(n / (B_u c^2)) sum_b (theta*(b) - mean)(theta*(b) - mean)'` over the usable replicates.
pub fn variance_estimate(run: &BootstrapRun) -> Result<DMatrix<f64>> {
    require_usable(run)?;
    let d = run.dimension();
    let mut acc = DMatrix::zeros(d, d);
    for row in centred(run) {
        for a in 0..d {
            for b in 0..d {
                acc[(a, b)] += row[a] * row[b];
            }
        }
    }
    Ok(acc * (run.n as f64 / (run.usable_count() as f64 * run.c2)))
}

/// Per-coordinate `(1/B_u) sum_b (sqrt(n)(theta*_j(b) - theta_hat_j))^p`.
pub fn moment_estimate(run: &BootstrapRun, p: u32) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    require_usable(run)?;
    let root_n = (run.n as f64).sqrt();
    let m = run.usable_count() as f64;
    Ok((0..run.dimension())
        .map(|j| run.deviations(j).iter().map(|dev| (root_n * dev).powi(p as i32)).sum::<f64>() / m)
        .collect())
}

/// Per-coordinate `(1/B_u) sum_b (sqrt(n)(theta*_j(b) - mean_j))^2`.
pub fn central_second_moment(run: &BootstrapRun) -> Result<Vec<f64>> {
    require_usable(run)?;
    let n = run.n as f64;
    let m = run.usable_count() as f64;
    let mut acc = vec![0.0; run.dimension()];
    for row in centred(run) {
        for (a, v) in acc.iter_mut().zip(&row) {
            *a += n * v * v;
        }
    }
    Ok(acc.into_iter().map(|a| a / m).collect())
}
