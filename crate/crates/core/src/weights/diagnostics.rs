use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exact_raw_moment, generate_weights, l21_norm_of_sample, limiting_raw_moment, WeightScheme};
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Average of `(1/n) sum (W_i - 1)^2` over `replications` independent draws.
pub fn empirical_c2<R: Rng + ?Sized>(
    scheme: &WeightScheme,
    n: usize,
    replications: usize,
    rng: &mut R,
) -> Result<f64> {
    empirical_c2_with_error(scheme, n, replications, rng).map(|(m, _)| m)
}

/// [`empirical_c2`] together with its Monte Carlo standard error.
pub fn empirical_c2_with_error<R: Rng + ?Sized>(
    scheme: &WeightScheme,
    n: usize,
    replications: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if replications == 0 {
        return Err(Error::Domain("replications must be >= 1".into()));
    }
    let spreads = (0..replications)
        .map(|_| generate_weights(scheme, n, rng).map(|w| w.spread()))
        .collect::<Result<Vec<_>>>()?;
    let mean = crate::stats::mean(&spreads);
    let se = if replications > 1 {
        crate::stats::standard_error(&spreads)
    } else {
        f64::NAN
    };
    Ok((mean, se))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsOptions {
    /// Weight vectors drawn at size `n` are `max(min_draws, pooled_samples / n)`;
    /// every coordinate of every vector enters the moment estimates.
    pub pooled_samples: usize,
    pub min_draws: usize,
    /// Draws used for the `c^2` estimate.
    pub c2_replications: usize,
    /// Upper limit on pooled values kept for the empirical survival function.
    pub sample_cap: usize,
    /// Thresholds `lambda` for `sup_{t >= lambda} t^2 P(W > t)`.
    pub tail_grid: Vec<f64>,
    /// Powers `p'` at which `||W^p'||_{2,1}` is reported.
    pub l21_powers: Vec<f64>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            pooled_samples: 10_000_000,
            min_draws: 100_000,
            c2_replications: 200,
            sample_cap: 2_000_000,
            tail_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            l21_powers: vec![1.0, 2.5],
        }
    }
}

impl DiagnosticsOptions {
    pub fn draws_for(&self, n: usize) -> usize {
        self.min_draws.max(self.pooled_samples / n.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FifthMomentEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    /// Closed-form `E W_n1^5` at this `n`.
    pub exact: f64,
    /// `lim E W_n1^5`.
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnostics {
    pub n: usize,
    pub draws: usize,
    pub empirical_c2: f64,
    pub empirical_c2_se: f64,
    /// Limit value of `c^2`.
    pub theoretical_c2: f64,
    /// `E (1/n) sum (W_i - 1)^2` at this `n`, e.g. `h / (n - h)` for the jackknife.
    pub finite_n_c2: f64,
    pub l21_norm_estimate: f64,
    /// `(p', ||W^p'||_{2,1})` pairs.
    pub l21_power_norms: Vec<(f64, f64)>,
    /// `(lambda, sup_{t >= lambda} t^2 P(W > t))` pairs.
    pub tail_profile: Vec<(f64, f64)>,
    pub fifth_moment: FifthMomentEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConditionReport {
    pub scheme: String,
    pub per_n: Vec<WeightDiagnostics>,
    /// `||W||_{2,1} <= 2 ||W||_4` (the r = 4 norm sandwich) at every `n`.
    pub l21_bounded: bool,
    /// The tail profile at the largest `lambda` is below 5% of its value at the smallest.
    pub tail_decays: bool,
    /// Empirical `c^2` agrees with the exact finite-`n` value, which approaches the limit.
    pub c2_tracks: bool,
    /// Every `E W^5` estimate stays below the scheme's bound (plus 3 standard errors).
    pub fifth_moment_bounded: bool,
    pub fifth_moment_bound: f64,
}

impl WeightConditionReport {
    pub fn passes(&self) -> bool {
        self.l21_bounded && self.tail_decays && self.c2_tracks && self.fifth_moment_bounded
    }

    /// One row per `n` per statistic: `scheme,n,statistic,value,standard_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,n,statistic,value,standard_error\n");
        let mut row = |n: usize, stat: &str, value: f64, se: Option<f64>| {
            let se = se.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{n},{stat},{value},{se}\n", self.scheme));
        };
        for d in &self.per_n {
            row(d.n, "draws", d.draws as f64, None);
            row(d.n, "empirical_c2", d.empirical_c2, Some(d.empirical_c2_se));
            row(d.n, "theoretical_c2", d.theoretical_c2, None);
            row(d.n, "finite_n_c2", d.finite_n_c2, None);
            row(d.n, "l21_norm", d.l21_norm_estimate, None);
            for (p, v) in &d.l21_power_norms {
                row(d.n, &format!("l21_norm_power_{p}"), *v, None);
            }
            for (lambda, v) in &d.tail_profile {
                row(d.n, &format!("tail_sup_lambda_{lambda}"), *v, None);
            }
            row(d.n, "fifth_moment", d.fifth_moment.estimate, Some(d.fifth_moment.standard_error));
            row(d.n, "fifth_moment_exact", d.fifth_moment.exact, None);
            row(d.n, "fifth_moment_limit", d.fifth_moment.limit, None);
        }
        out
    }
}

const CHUNK: usize = 1024;

struct ChunkSummary {
    fifth_sum: f64,
    fifth_sq_sum: f64,
    kept: Vec<f64>,
}

/// `sup_{t >= lambda} t^2 P(W > t)` from an ascending sample.
fn tail_sup(sorted: &[f64], lambda: f64) -> f64 {
    let m = sorted.len() as f64;
    let above = sorted.len() - sorted.partition_point(|&v| v <= lambda);
    let mut best = lambda * lambda * above as f64 / m;
    // Just below each atom v > lambda the tail mass is P(W >= v).
    let mut i = sorted.len();
    while i > 0 && sorted[i - 1] > lambda {
        let v = sorted[i - 1];
        let start = sorted.partition_point(|&x| x < v);
        best = best.max(v * v * (sorted.len() - start) as f64 / m);
        i = start;
    }
    best
}

fn diagnose_one(
    scheme: &WeightScheme,
    n: usize,
    key: StreamKey,
    options: &DiagnosticsOptions,
) -> Result<WeightDiagnostics> {
    let draws = options.draws_for(n);
    let keep_per_draw = (options.sample_cap / draws).clamp(1, n);
    let chunks = draws.div_ceil(CHUNK);
    let moment_key = key.named("moments");
    let summaries = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = moment_key.child(c as u64).rng();
            let count = CHUNK.min(draws - c * CHUNK);
            let mut s = ChunkSummary {
                fifth_sum: 0.0,
                fifth_sq_sum: 0.0,
                kept: Vec::with_capacity(count * keep_per_draw),
            };
            for _ in 0..count {
                let w = generate_weights(scheme, n, &mut rng)?;
                let v = w.values();
                let fifth = v.iter().map(|x| x.powi(5)).sum::<f64>() / n as f64;
                s.fifth_sum += fifth;
                s.fifth_sq_sum += fifth * fifth;
                s.kept.extend_from_slice(&v[..keep_per_draw]);
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fifth_sum = 0.0;
    let mut fifth_sq_sum = 0.0;
    let mut sample = Vec::with_capacity(draws * keep_per_draw);
    for s in summaries {
        fifth_sum += s.fifth_sum;
        fifth_sq_sum += s.fifth_sq_sum;
        sample.extend(s.kept);
    }
    let d = draws as f64;
    let fifth_mean = fifth_sum / d;
    let fifth_var = ((fifth_sq_sum - d * fifth_mean * fifth_mean) / (d - 1.0)).max(0.0);

    let (c2, c2_se) =
        empirical_c2_with_error(scheme, n, options.c2_replications, &mut key.named("c2").rng())?;

    crate::stats::sort_ascending(&mut sample);
    let l21 = l21_norm_of_sample(&sample)?;
    let l21_power_norms = options
        .l21_powers
        .iter()
        .map(|&p| {
            let powered: Vec<f64> = sample.iter().map(|v| v.powf(p)).collect();
            l21_norm_of_sample(&powered).map(|v| (p, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_profile = options
        .tail_grid
        .iter()
        .map(|&lambda| (lambda, tail_sup(&sample, lambda)))
        .collect();

    Ok(WeightDiagnostics {
        n,
        draws,
        empirical_c2: c2,
        empirical_c2_se: c2_se,
        theoretical_c2: scheme.theoretical_c2(),
        finite_n_c2: exact_raw_moment(scheme, n, 2) - 1.0,
        l21_norm_estimate: l21,
        l21_power_norms,
        tail_profile,
        fifth_moment: FifthMomentEstimate {
            estimate: fifth_mean,
            standard_error: (fifth_var / d).sqrt(),
            exact: exact_raw_moment(scheme, n, 5),
            limit: limiting_raw_moment(scheme, 5),
        },
    })
}

/// Numerical diagnostics of the weight conditions across a grid of sample sizes.
pub fn check_weight_conditions(
    scheme: &WeightScheme,
    n_grid: &[usize],
    options: &DiagnosticsOptions,
    key: StreamKey,
) -> Result<WeightConditionReport> {
    scheme.validate()?;
    if n_grid.is_empty() {
        return Err(Error::Domain("n_grid must not be empty".into()));
    }
    let per_n = n_grid
        .iter()
        .map(|&n| diagnose_one(scheme, n, key.child(n as u64), options))
        .collect::<Result<Vec<_>>>()?;

    let sup_exact = |k: u32| {
        n_grid
            .iter()
            .map(|&n| exact_raw_moment(scheme, n, k))
            .fold(limiting_raw_moment(scheme, k), f64::max)
    };
    let l21_bound = 2.0 * sup_exact(4).powf(0.25);
    let fifth_bound = sup_exact(5);

    let l21_bounded = per_n.iter().all(|d| d.l21_norm_estimate <= l21_bound);
    let tail_decays = per_n.iter().all(|d| match (d.tail_profile.first(), d.tail_profile.last()) {
        (Some(first), Some(last)) => last.1 <= 0.05 * first.1,
        _ => true,
    });
    let mut sorted: Vec<&WeightDiagnostics> = per_n.iter().collect();
    sorted.sort_by_key(|d| d.n);
    let agrees = per_n.iter().all(|d| {
        let tol = if d.empirical_c2_se.is_finite() { 4.0 * d.empirical_c2_se } else { 0.0 };
        (d.empirical_c2 - d.finite_n_c2).abs() <= tol + 1e-12
    });
    let approaches = sorted.windows(2).all(|w| {
        (w[1].finite_n_c2 - w[1].theoretical_c2).abs() <= (w[0].finite_n_c2 - w[0].theoretical_c2).abs() + 1e-12
    });
    let fifth_moment_bounded = per_n
        .iter()
        .all(|d| d.fifth_moment.estimate <= fifth_bound + 3.0 * d.fifth_moment.standard_error);

    Ok(WeightConditionReport {
        scheme: scheme.to_string(),
        per_n,
        l21_bounded,
        tail_decays,
        c2_tracks: agrees && approaches,
        fifth_moment_bounded,
        fifth_moment_bound: fifth_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::IidLaw;

    #[test]
    fn jackknife_c2_is_deterministic() {
        let mut rng = StreamKey::root(1).rng();
        let c2 = empirical_c2(&WeightScheme::Jackknife { ratio: 0.5 }, 100, 7, &mut rng).unwrap();
        assert!((c2 - 1.0).abs() < 1e-12);
        let (c2, _) =
            empirical_c2_with_error(&WeightScheme::Jackknife { ratio: 0.3 }, 101, 5, &mut rng).unwrap();
        // h = round(30.3) = 30.
        assert!((c2 - 30.0 / 71.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_c2_near_limits() {
        for (scheme, target) in [
            (WeightScheme::Efron, 1.0),
            (WeightScheme::Hypergeometric { k: 2 }, 0.5),
        ] {
            let c2 = empirical_c2(&scheme, 5000, 200, &mut StreamKey::root(3).rng()).unwrap();
            assert!((c2 / target - 1.0).abs() < 0.05, "{scheme}: {c2}");
        }
        assert!(empirical_c2(&WeightScheme::Efron, 10, 0, &mut StreamKey::root(3).rng()).is_err());
    }

    #[test]
    fn tail_sup_on_known_sample() {
        let sample = [0.0, 0.0, 1.0, 2.0, 2.0, 5.0];
        // t >= 1: candidates 1 * 4/6 (at t = 1: W > 1 has 3/6 -> 3/6), 4 * 3/6, 25 * 1/6.
        assert!((tail_sup(&sample, 1.0) - 25.0 / 6.0).abs() < 1e-12);
        assert!((tail_sup(&sample, 5.0) - 0.0).abs() < 1e-12);
        assert!((tail_sup(&sample, 3.0) - 25.0 / 6.0).abs() < 1e-12);
        assert!((tail_sup(&[0.0, 0.0, 2.0, 2.0], 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_grid_report() {
        let options = DiagnosticsOptions {
            pooled_samples: 200_000,
            min_draws: 5_000,
            c2_replications: 100,
            sample_cap: 100_000,
            ..DiagnosticsOptions::default()
        };
        for scheme in [WeightScheme::Jackknife { ratio: 0.5 }, WeightScheme::Iid(IidLaw::Exponential)] {
            let report = check_weight_conditions(&scheme, &[10, 40], &options, StreamKey::root(8)).unwrap();
            assert!(report.passes(), "{report:?}");
            for d in &report.per_n {
                let profile: Vec<f64> = d.tail_profile.iter().map(|p| p.1).collect();
                assert!(profile.windows(2).all(|w| w[1] <= w[0]));
            }
            let csv = report.to_csv();
            assert!(csv.starts_with("scheme,n,statistic,value,standard_error\n"));
        }
        let jack = check_weight_conditions(&WeightScheme::Jackknife { ratio: 0.5 }, &[10], &options, StreamKey::root(8))
            .unwrap();
        // ||W^p'||_{2,1} = (n / (n - h))^(p' - 1/2) for the jackknife, up to sampling of P(W > 0).
        for (p, v) in &jack.per_n[0].l21_power_norms {
            assert!((v / 2f64.powf(p - 0.5) - 1.0).abs() < 0.01, "p'={p}: {v}");
        }
        assert!(check_weight_conditions(&WeightScheme::Efron, &[], &options, StreamKey::root(1)).is_err());
    }
}
