use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentReport, Record};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::kendall_trend;
use crate::weights::{
    check_weight_conditions, empirical_c2_with_error, DiagnosticsOptions, WeightConditionReport, WeightScheme,
};

/// Settings for the weight-law verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightLawConfig {
    pub seed: u64,
    pub schemes: Vec<WeightScheme>,
    /// Sizes for the moment, tail and `c^2` diagnostics.
    pub n_grid: Vec<usize>,
    /// Size and replications for the large-`n` `c^2` comparison.
    pub c2_n: usize,
    pub c2_replications: usize,
    /// Relative tolerance of empirical against theoretical `c^2`.
    pub c2_tolerance: f64,
    /// Relative tolerance of the Monte Carlo `E W^5` against the closed form.
    pub fifth_moment_tolerance: f64,
    /// Absolute bound on `E W^5` for the multinomial scheme.
    pub multinomial_fifth_bound: f64,
    pub diagnostics: DiagnosticsOptions,
}

impl Default for WeightLawConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            schemes: WeightScheme::catalogue(),
            n_grid: vec![10, 100, 1000],
            c2_n: 5000,
            c2_replications: 200,
            c2_tolerance: 0.05,
            fifth_moment_tolerance: 0.02,
            multinomial_fifth_bound: 52.0,
            diagnostics: DiagnosticsOptions::default(),
        }
    }
}

/// Moment, tail and variance-constant checks for every scheme.
pub fn verify_weights(config: &WeightLawConfig) -> Result<(ExperimentReport, Vec<WeightConditionReport>)> {
    if config.schemes.is_empty() {
        return Err(Error::Validation("schemes: must not be empty".into()));
    }
    let mut report = ExperimentReport::new("weights", config);
    let root = StreamKey::root(config.seed).named("weights");
    let mut conditions = Vec::with_capacity(config.schemes.len());
    for scheme in &config.schemes {
        let key = root.named(&scheme.to_string());
        let cond = check_weight_conditions(scheme, &config.n_grid, &config.diagnostics, key.named("conditions"))?;
        let name = scheme.to_string();
        for d in &cond.per_n {
            let stat = |s: &str| format!("{s}[{name}]");
            report.records.push(
                Record::new(Some(d.n), stat("fifth_moment"), d.fifth_moment.estimate)
                    .se(d.fifth_moment.standard_error)
                    .target(d.fifth_moment.exact),
            );
            report.records.push(
                Record::new(Some(d.n), stat("c2"), d.empirical_c2).se(d.empirical_c2_se).target(d.finite_n_c2),
            );
            report.records.push(Record::new(Some(d.n), stat("l21_norm"), d.l21_norm_estimate));
            if let Some(&(_, tail)) = d.tail_profile.last() {
                report.records.push(Record::new(Some(d.n), stat("tail_sup_last"), tail));
            }
            let rel = (d.fifth_moment.estimate - d.fifth_moment.exact).abs() / d.fifth_moment.exact;
            report.checks.push(Check::new(
                format!("fifth_moment_exact[{name},n={}]", d.n),
                rel <= config.fifth_moment_tolerance,
                format!(
                    "E W^5 = {:.4} (SE {:.4}) vs closed form {:.4}, relative error {rel:.4}",
                    d.fifth_moment.estimate, d.fifth_moment.standard_error, d.fifth_moment.exact
                ),
            ));
        }
        let fifth: Vec<f64> = cond.per_n.iter().map(|d| d.fifth_moment.estimate).collect();
        let (tau, p_value) = kendall_trend(&fifth);
        report.records.push(Record::new(None, format!("fifth_moment_trend_tau[{name}]"), tau));
        report.records.push(Record::new(None, format!("fifth_moment_trend_p[{name}]"), p_value));
        if *scheme == WeightScheme::Efron {
            let worst = cond.per_n.iter().map(|d| d.fifth_moment.estimate).fold(f64::NEG_INFINITY, f64::max);
            report.checks.push(Check::new(
                "fifth_moment_below_52[efron]",
                worst < config.multinomial_fifth_bound,
                format!("largest E W^5 estimate over the grid is {worst:.4} < {}", config.multinomial_fifth_bound),
            ));
        }
        report.checks.push(Check::new(
            format!("fifth_moment_bounded[{name}]"),
            cond.fifth_moment_bounded && p_value >= 0.01,
            format!(
                "every estimate within 3 SE of the bound {:.4}; increasing-trend p-value {p_value:.3}",
                cond.fifth_moment_bound
            ),
        ));
        report.checks.push(Check::new(format!("l21_bounded[{name}]"), cond.l21_bounded, "||W||_{2,1} <= 2 sup ||W||_4"));
        report.checks.push(Check::new(
            format!("tail_decays[{name}]"),
            cond.tail_decays,
            "t^2 P(W > t) at the largest threshold is below 5% of its value at the smallest",
        ));
        report.checks.push(Check::new(
            format!("c2_tracks[{name}]"),
            cond.c2_tracks,
            "empirical c^2 within 4 SE of the finite-n value, which approaches the limit",
        ));
        conditions.push(cond);
    }

    let large: Vec<(f64, f64)> = config
        .schemes
        .par_iter()
        .map(|scheme| {
            let mut rng = root.named(&scheme.to_string()).named("c2_large").rng();
            empirical_c2_with_error(scheme, config.c2_n, config.c2_replications, &mut rng)
        })
        .collect::<Result<_>>()?;
    for (scheme, (c2, se)) in config.schemes.iter().zip(large) {
        let target = scheme.theoretical_c2();
        let rel = (c2 - target).abs() / target;
        report.records.push(Record::new(Some(config.c2_n), format!("c2[{scheme}]"), c2).se(se).target(target));
        report.checks.push(Check::new(
            format!("c2_limit[{scheme},n={}]", config.c2_n),
            rel <= config.c2_tolerance,
            format!("empirical c^2 {c2:.4} (SE {se:.4}) vs {target}, relative error {rel:.4}"),
        ));
    }
    Ok((report, conditions))
}
