use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use exboot_core::bootstrap::{
    hybrid_confidence_set, percentile_confidence_set, run_bootstrap, t_confidence_set, variance_estimate,
    BootstrapSpec, ConfidenceSet, CONFIDENCE_CSV_HEADER,
};
use exboot_core::cox::{fit_at, invert_information, plugin_efficient_information, simulate_dataset};
use exboot_core::lab::{
    coverage_experiment, distribution_consistency_experiment, inequality_sweep, variance_and_moment_experiment,
    verify_weights, ExperimentReport,
};
use exboot_core::{cox, Error, StreamKey, SurvivalDataset, WeightVector};
use serde_json::json;

use crate::config::RunConfig;
use crate::failure::Failure;
use crate::output::{comment_header, create_dir, provenance, slug, write, write_report};
use crate::VerifyKind;

fn simulation_failure(e: Error) -> Failure {
    match e {
        Error::Validation(m) => Failure::Config(format!("simulation.{m}")),
        other => other.into(),
    }
}

fn read_dataset(path: &Path) -> Result<SurvivalDataset, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    SurvivalDataset::read_csv(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { .. } => Failure::io(path, e),
        other => other.into(),
    })
}

fn matrix_rows(m: &impl std::ops::Index<(usize, usize), Output = f64>, d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| m[(i, j)]).collect()).collect()
}

pub fn simulate(config: &RunConfig, out: &Path) -> Result<(), Failure> {
    config.simulation.validate().map_err(simulation_failure)?;
    let key = StreamKey::root(config.rng.seed).named("simulate");
    let data = simulate_dataset(&config.simulation, &mut key.rng())?;
    let echo = json!({ "simulation": config.simulation, "rng": config.rng });
    write(out, &(comment_header(&echo) + &data.to_csv_string()))?;
    println!(
        "wrote {} observations ({} events, {:.1}% censored) to {}",
        data.len(),
        data.event_count(),
        100.0 * data.censoring_fraction(),
        out.display()
    );
    Ok(())
}

pub fn fit(config: &RunConfig, data_path: &Path, out: Option<&Path>, fix_theta: Option<&[f64]>) -> Result<(), Failure> {
    let data = read_dataset(data_path)?;
    let weights = WeightVector::ones(data.len());
    let result = match fix_theta {
        Some(theta) => fit_at(&data, &weights, theta, &config.fit)?,
        None => cox::fit(&data, &weights, &config.fit)?,
    };
    let d = data.dimension();
    let plugin_variance = if fix_theta.is_none() && result.converged {
        plugin_efficient_information(&result, &data).and_then(|i| invert_information(&i)).ok().map(|v| matrix_rows(&v, d))
    } else {
        None
    };
    let hazard: Vec<_> = result
        .eta_hat
        .table()
        .into_iter()
        .map(|(time, jump, value)| json!({ "time": time, "jump": jump, "cumulative": value }))
        .collect();
    let report = json!({
        "tool_version": exboot_core::VERSION,
        "config": json!({ "fit": config.fit }),
        "data": { "path": data_path.display().to_string(), "n": data.len(), "events": data.event_count(), "dimension": d },
        "theta_fixed": fix_theta.is_some(),
        "theta_hat": result.theta_hat,
        "log_partial_likelihood": result.log_partial_likelihood,
        "score_sup_norm": result.score_sup_norm,
        "observed_information": matrix_rows(&result.observed_information, d),
        "plugin_variance": plugin_variance,
        "converged": result.converged,
        "monotone": result.monotone,
        "iterations": result.iterations,
        "warnings": result.warnings,
        "cumulative_hazard": hazard,
    });
    let text = serde_json::to_string_pretty(&report).expect("fit reports serialize") + "\n";
    match out {
        Some(path) => {
            write(path, &text)?;
            println!("theta_hat = {:?}, converged = {}, monotone = {}", result.theta_hat, result.converged, result.monotone);
        }
        None => print!("{text}"),
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if fix_theta.is_none() && !result.converged {
        let why = if result.monotone { "the likelihood is monotone (separated data)" } else { "Newton iterations did not converge" };
        return Err(Failure::Check(why.into()));
    }
    Ok(())
}

pub fn bootstrap(config: &RunConfig, data_path: &Path, out: &Path) -> Result<(), Failure> {
    let b = &config.bootstrap;
    if !(b.alpha > 0.0 && b.alpha < 1.0) {
        return Err(Failure::Config(format!("bootstrap.alpha: must lie in (0, 1), got {}", b.alpha)));
    }
    if b.replicates < 2 {
        return Err(Failure::Config(format!("bootstrap.B: must be at least 2, got {}", b.replicates)));
    }
    let data = read_dataset(data_path)?;
    let base = cox::fit(&data, &WeightVector::ones(data.len()), &config.fit)?;
    if !base.converged {
        return Err(Failure::Check("the base fit did not converge; nothing to bootstrap".into()));
    }
    let spec = BootstrapSpec { strict: config.execution.strict, ..BootstrapSpec::new(config.weights.scheme, b.replicates) };
    let run = run_bootstrap(&data, &base, &spec, config.rng.seed, &config.fit)?;
    let variance = variance_estimate(&run)?;
    let sigma = b.sigma.resolve(&base, &data, &run)?;
    let sets: Vec<ConfidenceSet> = vec![
        t_confidence_set(&run, &sigma, b.alpha)?,
        percentile_confidence_set(&run, b.alpha)?,
        hybrid_confidence_set(&run, b.alpha)?,
    ];
    let d = data.dimension();
    let echo = json!({
        "weights": config.weights,
        "fit": config.fit,
        "bootstrap": config.bootstrap,
        "rng": config.rng,
        "execution": config.execution,
        "data": data_path.display().to_string(),
    });
    let degenerate = run.is_degenerate();

    create_dir(out)?;
    write(&out.join("replicates.csv"), &run.to_artifact(&provenance(&echo)))?;
    let mut csv = comment_header(&echo) + CONFIDENCE_CSV_HEADER + "\n";
    for set in &sets {
        csv.push_str(&set.csv_rows());
    }
    write(&out.join("confidence_sets.csv"), &csv)?;
    let report = json!({
        "tool_version": exboot_core::VERSION,
        "config": echo,
        "scheme": run.scheme,
        "c2": run.c2,
        "n": run.n,
        "B": run.replicates,
        "theta_hat": run.theta_hat,
        "usable_replicates": run.usable_count(),
        "excluded_replicates": run.excluded,
        "excluded_fraction": run.excluded_fraction(),
        "warnings": run.warnings,
        "degenerate": degenerate,
        "bootstrap_variance": matrix_rows(&variance, d),
        "sigma": { "choice": b.sigma, "matrix": matrix_rows(&sigma, d) },
        "confidence_sets": sets,
    });
    write(&out.join("bootstrap.json"), &(serde_json::to_string_pretty(&report).expect("reports serialize") + "\n"))?;

    println!("scheme {} (c^2 = {}), B = {}, usable = {}", run.scheme, run.c2, run.replicates, run.usable_count());
    println!("theta_hat = {:?}", run.theta_hat);
    println!("bootstrap variance = {:?}", matrix_rows(&variance, d));
    for set in &sets {
        let flag = if set.degenerate { " [degenerate]" } else { "" };
        for j in 0..d {
            println!("{} {:.0}% theta{}: [{}, {}]{flag}", set.kind, 100.0 * set.level, j + 1, set.lower[j], set.upper[j]);
        }
    }
    if degenerate {
        println!("degenerate: every replicate equals theta_hat");
    }
    for e in &run.excluded {
        println!("excluded replicate {}: {}", e.b, e.reason);
    }
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

/// Keep the checks and records whose names start with one of `prefixes`.
fn restrict(mut report: ExperimentReport, kind: &str, prefixes: &[&str]) -> ExperimentReport {
    let keep = |name: &str| prefixes.iter().any(|p| name.starts_with(p));
    report.experiment = kind.to_string();
    report.checks.retain(|c| keep(&c.name));
    report.records.retain(|r| keep(&r.statistic) || r.statistic.ends_with("variance_mean") || r.statistic == "mc_variance");
    report
}

pub fn verify(config: &RunConfig, kind: VerifyKind, out: Option<&Path>) -> Result<(), Failure> {
    let experiment = || {
        let e = config.experiment();
        e.simulation.validate().map_err(simulation_failure)?;
        e.validate().map_err(|err| match err {
            Error::Validation(m) => Failure::Config(m),
            other => other.into(),
        })?;
        Ok::<_, Failure>(e)
    };
    let (name, report) = match kind {
        VerifyKind::Weights => {
            let (report, conditions) = verify_weights(&config.weight_law())?;
            if let Some(dir) = out {
                create_dir(dir)?;
                let header = comment_header(&report.config);
                for c in &conditions {
                    write(&dir.join(format!("weights_conditions_{}.csv", slug(&c.scheme))), &(header.clone() + &c.to_csv()))?;
                }
            }
            ("weights", report)
        }
        VerifyKind::Distribution => ("distribution", distribution_consistency_experiment(&experiment()?)?),
        VerifyKind::Variance => {
            ("variance", restrict(variance_and_moment_experiment(&experiment()?)?, "variance", &["variance", "excluded"]))
        }
        VerifyKind::Moments => {
            ("moments", restrict(variance_and_moment_experiment(&experiment()?)?, "moments", &["moment", "excluded"]))
        }
        VerifyKind::Coverage => ("coverage", coverage_experiment(&experiment()?)?),
        VerifyKind::Inequalities => ("inequalities", inequality_sweep(&config.inequalities())?),
    };
    if let Some(dir) = out {
        write_report(dir, name, &report)?;
    }
    print!("{}", report.summary());
    if report.passes() {
        println!("{name}: all {} checks passed", report.checks.len());
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(Failure::Check(format!("{name}: {failed} of {} checks failed", report.checks.len())))
    }
}
