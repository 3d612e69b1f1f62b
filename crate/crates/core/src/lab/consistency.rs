use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{ks_distance, Check, ExperimentConfig, ExperimentReport, Record};
use crate::bootstrap::{
    hybrid_confidence_set, moment_estimate, percentile_confidence_set, run_weighted_bootstrap, t_confidence_set,
    variance_estimate, BootstrapSpec, ConfidenceSet, IntervalKind, SigmaChoice,
};
use crate::cox::{
    fit, invert_information, plugin_efficient_information, profile_information, simulate_dataset, CoxProblem,
    FitOptions, SimulationConfig,
};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::{mean, median, sample_variance, standard_error, standard_normal_moment};
use crate::weights::WeightVector;

/// What one simulated dataset contributes to the experiments.
#[derive(Clone, Debug)]
struct Replication {
    theta_hat: Vec<f64>,
    /// Inverse plug-in efficient information.
    sigma_plugin: DMatrix<f64>,
    boot_var: DMatrix<f64>,
    /// `moments[k][j]`: order `config.moments[k]`, coordinate `j`.
    moments: Vec<Vec<f64>>,
    ks: Vec<f64>,
    sets: Vec<ConfidenceSet>,
    excluded: usize,
}

#[derive(Clone, Copy, Default)]
struct Needs {
    ks: bool,
    sets: bool,
}

fn replicate(config: &ExperimentConfig, n: usize, rep: usize, needs: Needs) -> Result<Replication> {
    let key = StreamKey::root(config.seed).named("mc").child(n as u64).child(rep as u64);
    let sim = SimulationConfig { n, ..config.simulation.clone() };
    let data = simulate_dataset(&sim, &mut key.named("data").rng())?;
    let options = FitOptions::default();
    let base = fit(&data, &WeightVector::ones(n), &options)?;
    if !base.converged {
        return Err(Error::NotConverged(format!("dataset {rep} at n = {n}")));
    }
    let spec = BootstrapSpec {
        strict: config.strict,
        ..BootstrapSpec::new(config.scheme, config.replicates)
    };
    let run = run_weighted_bootstrap(&CoxProblem::new(&data, options), &base.theta_hat, &spec, key.named("boot"), config.seed)?;
    if needs.ks && run.is_degenerate() {
        return Err(Error::ZeroVariance(format!(
            "scheme {} gives identical replicates; the bootstrap law is a point mass",
            config.scheme
        )));
    }
    let sigma_plugin = invert_information(&plugin_efficient_information(&base, &data)?)?;
    let boot_var = variance_estimate(&run)?;
    let moments = config.moments.iter().map(|&p| moment_estimate(&run, p)).collect::<Result<Vec<_>>>()?;
    let d = base.theta_hat.len();
    let scale = (n as f64).sqrt() / run.c2.sqrt();
    let ks = if needs.ks {
        (0..d)
            .map(|j| {
                let stat: Vec<f64> = run.theta_stars.iter().map(|r| scale * (r[j] - base.theta_hat[j])).collect();
                ks_distance(&stat, 0.0, sigma_plugin[(j, j)])
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let sets = if needs.sets && config.alpha < 1.0 {
        let sigma = match config.sigma {
            SigmaChoice::Plugin => sigma_plugin.clone(),
            SigmaChoice::Profile => invert_information(&profile_information(&base, &data)?)?,
            SigmaChoice::Bootstrap => boot_var.clone(),
        };
        vec![
            t_confidence_set(&run, &sigma, config.alpha)?,
            percentile_confidence_set(&run, config.alpha)?,
            hybrid_confidence_set(&run, config.alpha)?,
        ]
    } else {
        Vec::new()
    };
    Ok(Replication {
        theta_hat: base.theta_hat,
        sigma_plugin,
        boot_var,
        moments,
        ks,
        sets,
        excluded: run.excluded.len(),
    })
}

fn replications(config: &ExperimentConfig, n: usize, needs: Needs) -> Result<Vec<Replication>> {
    (0..config.mc_reps).into_par_iter().map(|rep| replicate(config, n, rep, needs)).collect()
}

fn note_exclusions(report: &mut ExperimentReport, n: usize, reps: &[Replication], config: &ExperimentConfig) {
    let excluded: usize = reps.iter().map(|r| r.excluded).sum();
    report.records.push(Record::new(Some(n), "excluded_replicates", excluded as f64));
    if excluded > 0 {
        report.warnings.push(format!(
            "n = {n}: {excluded} of {} bootstrap replicates excluded",
            reps.len() * config.replicates
        ));
    }
}

/// Standard error of a sample median under approximate normality.
fn median_se(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    (std::f64::consts::PI / 2.0).sqrt() * standard_error(values)
}

/// Coordinatewise KS distance of `(sqrt(n)/c)(theta* - theta_hat)` against `N(0, Sigma_jj)` with the plug-in `Sigma`.
pub fn distribution_consistency_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.scheme.is_degenerate() {
        return Err(Error::ZeroVariance(format!(
            "scheme {} gives identical replicates; the bootstrap law is a point mass",
            config.scheme
        )));
    }
    let mut report = ExperimentReport::new("distribution", config);
    let mut medians = Vec::new();
    for &n in &config.n_grid {
        let reps = replications(config, n, Needs { ks: true, sets: false })?;
        note_exclusions(&mut report, n, &reps, config);
        let d = reps[0].theta_hat.len();
        let mut per_coord = Vec::new();
        for j in 0..d {
            let ks: Vec<f64> = reps.iter().map(|r| r.ks[j]).collect();
            let (med, se) = (median(&ks), median_se(&ks));
            report.records.push(Record::new(Some(n), "ks_median", med).coordinate(j + 1).se(se));
            report.records.push(Record::new(Some(n), "ks_mean", mean(&ks)).coordinate(j + 1).se(standard_error(&ks)));
            let limit = config.tolerances.ks_max;
            report.checks.push(Check::new(
                format!("ks_median[n={n},j={}]", j + 1),
                med <= limit,
                format!("median KS {med:.4} (SE {se:.4}) <= {limit}"),
            ));
            per_coord.push((med, se));
        }
        medians.push((n, per_coord));
    }
    if medians.len() > 1 {
        let (n_small, first) = medians.iter().min_by_key(|m| m.0).unwrap();
        let (n_large, last) = medians.iter().max_by_key(|m| m.0).unwrap();
        for (j, ((a, sa), (b, sb))) in first.iter().zip(last).enumerate() {
            let allowance = 2.0 * (sa * sa + sb * sb).sqrt();
            report.checks.push(Check::new(
                format!("ks_decreases[j={}]", j + 1),
                b <= &(a + allowance),
                format!("median KS {b:.4} at n={n_large} vs {a:.4} at n={n_small} (allowance {allowance:.4})"),
            ));
        }
    }
    Ok(report)
}

/// Bootstrap variance against the Monte Carlo variance and the plug-in oracle, and bootstrap moments
/// against the Gaussian targets `c^p Sigma_jj^(p/2) (p-1)!!` (zero for odd `p`).
pub fn variance_and_moment_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new("variance_and_moments", config);
    let c2 = config.scheme.theoretical_c2();
    let tol = &config.tolerances;
    for &n in &config.n_grid {
        let reps = replications(config, n, Needs::default())?;
        note_exclusions(&mut report, n, &reps, config);
        let m = reps.len() as f64;
        let d = reps[0].theta_hat.len();
        for j in 0..d {
            let coord = j + 1;
            let boot: Vec<f64> = reps.iter().map(|r| r.boot_var[(j, j)]).collect();
            let plugin: Vec<f64> = reps.iter().map(|r| r.sigma_plugin[(j, j)]).collect();
            let scaled_err: Vec<f64> = reps
                .iter()
                .map(|r| (n as f64).sqrt() * (r.theta_hat[j] - config.simulation.theta0[j]))
                .collect();
            let boot_mean = mean(&boot);
            let plugin_mean = mean(&plugin);
            let (mc_var, mc_var_se) = if reps.len() > 1 {
                let mu = mean(&scaled_err);
                let v = sample_variance(&scaled_err);
                let m4 = scaled_err.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / m;
                (v, ((m4 - v * v).max(0.0) / m).sqrt())
            } else {
                (f64::NAN, f64::NAN)
            };
            report.records.push(Record::new(Some(n), "bootstrap_variance_mean", boot_mean).coordinate(coord).se(standard_error(&boot)));
            report.records.push(Record::new(Some(n), "plugin_variance_mean", plugin_mean).coordinate(coord).se(standard_error(&plugin)));
            report.records.push(Record::new(Some(n), "mc_variance", mc_var).coordinate(coord).se(mc_var_se));

            let ratio_mc = boot_mean / mc_var;
            let ratio_mc_se = ratio_mc * ((standard_error(&boot) / boot_mean).powi(2) + (mc_var_se / mc_var).powi(2)).sqrt();
            report.records.push(Record::new(Some(n), "variance_ratio_mc", ratio_mc).coordinate(coord).se(ratio_mc_se).target(1.0));
            report.checks.push(Check::new(
                format!("variance_vs_mc[n={n},j={coord}]"),
                (ratio_mc - 1.0).abs() <= tol.variance_vs_mc,
                format!(
                    "mean bootstrap variance {boot_mean:.4} / MC variance {mc_var:.4} = {ratio_mc:.4} (SE {ratio_mc_se:.4}), tolerance {}",
                    tol.variance_vs_mc
                ),
            ));
            let ratio_plugin = boot_mean / plugin_mean;
            let ratios: Vec<f64> = boot.iter().zip(&plugin).map(|(b, p)| b / p).collect();
            report.records.push(
                Record::new(Some(n), "variance_ratio_plugin", ratio_plugin).coordinate(coord).se(standard_error(&ratios)).target(1.0),
            );
            report.checks.push(Check::new(
                format!("variance_vs_plugin[n={n},j={coord}]"),
                (ratio_plugin - 1.0).abs() <= tol.variance_vs_plugin,
                format!(
                    "mean bootstrap variance {boot_mean:.4} / mean plug-in variance {plugin_mean:.4} = {ratio_plugin:.4}, tolerance {}",
                    tol.variance_vs_plugin
                ),
            ));

            for (k, &p) in config.moments.iter().enumerate() {
                // Per dataset: odd orders are scaled by (c^2 Sigma)^(p/2), even orders become relative errors.
                let normalized: Vec<f64> = reps
                    .iter()
                    .map(|r| {
                        let unit = (c2 * r.sigma_plugin[(j, j)]).powf(p as f64 / 2.0);
                        let value = r.moments[k][j];
                        if p % 2 == 1 {
                            value / unit
                        } else {
                            value / (unit * standard_normal_moment(p)) - 1.0
                        }
                    })
                    .collect();
                let raw: Vec<f64> = reps.iter().map(|r| r.moments[k][j]).collect();
                let target = if p % 2 == 1 {
                    0.0
                } else {
                    (c2 * plugin_mean).powf(p as f64 / 2.0) * standard_normal_moment(p)
                };
                report.records.push(
                    Record::new(Some(n), format!("moment_{p}"), median(&raw)).coordinate(coord).se(median_se(&raw)).target(target),
                );
                let med = median(&normalized);
                let se = median_se(&normalized);
                let (stat, limit) = if p % 2 == 1 {
                    (format!("moment_{p}_scaled"), tol.odd_moment)
                } else {
                    (format!("moment_{p}_relative_error"), tol.even_moment)
                };
                report.records.push(Record::new(Some(n), stat.clone(), med).coordinate(coord).se(se).target(0.0));
                report.checks.push(Check::new(
                    format!("{stat}[n={n},j={coord}]"),
                    med.abs() <= limit,
                    format!("median over {} datasets {med:.4} (SE {se:.4}), tolerance {limit}", reps.len()),
                ));
            }
        }
    }
    Ok(report)
}

/// Coverage of `theta0` by the three confidence sets, with binomial standard errors.
pub fn coverage_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new("coverage", config);
    let nominal = 1.0 - config.alpha;
    for &n in &config.n_grid {
        let reps = replications(config, n, Needs { ks: false, sets: true })?;
        note_exclusions(&mut report, n, &reps, config);
        let m = reps.len() as f64;
        let d = config.simulation.theta0.len();
        for (k, kind) in IntervalKind::ALL.iter().enumerate() {
            for j in 0..d {
                let coord = j + 1;
                let theta0 = config.simulation.theta0[j];
                // A level-0 set (alpha = 1) is empty and covers nothing.
                let hits = if config.alpha >= 1.0 {
                    0
                } else {
                    reps.iter().filter(|r| r.sets[k].contains_coordinate(j, theta0)).count()
                };
                let cov = hits as f64 / m;
                let se = (cov * (1.0 - cov) / m).sqrt();
                report.records.push(Record::new(Some(n), format!("coverage_{kind}"), cov).coordinate(coord).se(se).target(nominal));
                if config.alpha < 1.0 {
                    let widths: Vec<f64> = reps.iter().map(|r| r.sets[k].widths()[j]).collect();
                    report.records.push(
                        Record::new(Some(n), format!("width_{kind}"), median(&widths)).coordinate(coord).se(median_se(&widths)),
                    );
                }
                let half = if *kind == IntervalKind::TType {
                    config.tolerances.coverage_t
                } else {
                    config.tolerances.coverage_other
                };
                let (lo, hi) = (nominal - half, nominal + half);
                report.checks.push(Check::new(
                    format!("coverage_{kind}[n={n},j={coord}]"),
                    (lo - 1e-12..=hi + 1e-12).contains(&cov),
                    format!("coverage {cov:.4} (SE {se:.4}) in [{lo:.2}, {hi:.2}]"),
                ));
            }
        }
    }
    Ok(report)
}
