use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{CumulativeHazard, SurvivalDataset, SurvivalObservation};
use crate::error::{Error, Result};
use crate::weights::scheme::{parse_args, split_call};

/// Baseline hazard `lambda(t)`; its integral is the true cumulative hazard `eta_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Baseline {
    Constant { rate: f64 },
    /// Cumulative hazard `(t / scale)^shape`.
    Weibull { shape: f64, scale: f64 },
}

impl Baseline {
    pub fn cumulative(&self, t: f64) -> f64 {
        match *self {
            Baseline::Constant { rate } => rate * t,
            Baseline::Weibull { shape, scale } => (t / scale).powf(shape),
        }
    }

    pub fn inverse_cumulative(&self, x: f64) -> f64 {
        match *self {
            Baseline::Constant { rate } => x / rate,
            Baseline::Weibull { shape, scale } => scale * x.powf(1.0 / shape),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Baseline::Constant { rate } if !ok(rate) => Err(format!("rate must be positive, got {rate}")),
            Baseline::Weibull { shape, scale } if !ok(shape) || !ok(scale) => {
                Err(format!("shape and scale must be positive, got shape={shape}, scale={scale}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CovariateLaw {
    /// Independent uniform coordinates on `[0, 1]`.
    Uniform,
    /// Independent `+1` / `-1` coordinates with probability one half.
    Rademacher,
    Bernoulli { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Censoring {
    /// Only the administrative cutoff at `tau`.
    None,
    Exponential { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n: usize,
    pub theta0: Vec<f64>,
    pub baseline: Baseline,
    pub covariates: CovariateLaw,
    pub censoring: Censoring,
    /// Follow-up horizon.
    pub tau: f64,
}

impl Default for SimulationConfig {
    /// Scalar design with about 28% censoring.
    fn default() -> Self {
        Self {
            n: 400,
            theta0: vec![0.5],
            baseline: Baseline::Constant { rate: 1.0 },
            covariates: CovariateLaw::Uniform,
            censoring: Censoring::Exponential { rate: 0.35 },
            tau: 1.5,
        }
    }
}

impl SimulationConfig {
    pub fn dimension(&self) -> usize {
        self.theta0.len()
    }

    pub fn true_cumulative_hazard(&self, t: f64) -> f64 {
        self.baseline.cumulative(t.min(self.tau))
    }

    pub fn validate(&self) -> Result<()> {
        let field = |key: &str, reason: String| Error::Validation(format!("{key}: {reason}"));
        if self.n < 2 {
            return Err(field("n", format!("must be at least 2, got {}", self.n)));
        }
        if self.theta0.is_empty() || self.theta0.iter().any(|v| !v.is_finite()) {
            return Err(field("theta0", "must be a non-empty vector of finite numbers".into()));
        }
        self.baseline.validate().map_err(|r| field("baseline", r))?;
        if let CovariateLaw::Bernoulli { p } = self.covariates {
            if !(p > 0.0 && p < 1.0) {
                return Err(field("covariates", format!("p must lie in (0, 1), got {p}")));
            }
        }
        if let Censoring::Exponential { rate } = self.censoring {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(field("censoring", format!("rate must be positive, got {rate}")));
            }
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(field("tau", format!("must be finite and positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Draw `n` observations with `T = eta_0^{-1}(E exp(-theta0'z))`, `E ~ Exp(1)`.
pub fn simulate_dataset<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<SurvivalDataset> {
    config.validate()?;
    let d = config.dimension();
    let observations = (0..config.n)
        .map(|_| {
            let z: Vec<f64> = (0..d)
                .map(|_| match config.covariates {
                    CovariateLaw::Uniform => rng.random::<f64>(),
                    CovariateLaw::Rademacher => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    CovariateLaw::Bernoulli { p } => f64::from(u8::from(rng.random_bool(p))),
                })
                .collect();
            let lin: f64 = z.iter().zip(&config.theta0).map(|(a, b)| a * b).sum();
            let e: f64 = Exp1.sample(rng);
            let t = config.baseline.inverse_cumulative(e * (-lin).exp());
            let c = match config.censoring {
                Censoring::None => f64::INFINITY,
                Censoring::Exponential { rate } => {
                    let e: f64 = Exp1.sample(rng);
                    e / rate
                }
            };
            let y = t.min(c).min(config.tau);
            SurvivalObservation { y, delta: t <= c && t <= config.tau, z }
        })
        .collect();
    SurvivalDataset::new(observations, config.tau)
}

impl CumulativeHazard {
    /// `sup_t |eta(t) - eta_0(t)|` over `[0, tau]` for a continuous non-decreasing `eta_0`.
    ///
    /// The supremum of a step function against a continuous increasing curve is
    /// attained at a jump, just before or at it, or at `tau`.
    pub fn sup_distance(&self, truth: impl Fn(f64) -> f64, tau: f64) -> f64 {
        let mut level = 0.0;
        let mut worst: f64 = 0.0;
        for (&t, &jump) in self.jump_times().iter().zip(self.jump_sizes()) {
            if t > tau {
                break;
            }
            let target = truth(t);
            worst = worst.max((target - level).abs());
            level += jump;
            worst = worst.max((level - target).abs());
        }
        worst.max((truth(tau) - level).abs())
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Constant { rate } => write!(f, "constant(rate={rate})"),
            Baseline::Weibull { shape, scale } => write!(f, "weibull(shape={shape},scale={scale})"),
        }
    }
}

impl fmt::Display for CovariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateLaw::Uniform => write!(f, "uniform"),
            CovariateLaw::Rademacher => write!(f, "rademacher"),
            CovariateLaw::Bernoulli { p } => write!(f, "bernoulli(p={p})"),
        }
    }
}

impl fmt::Display for Censoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Censoring::None => write!(f, "none"),
            Censoring::Exponential { rate } => write!(f, "exponential(rate={rate})"),
        }
    }
}

fn named_args(args: Option<&str>, allowed: &[&str]) -> std::result::Result<Vec<(String, f64)>, String> {
    let args = parse_args(args.unwrap_or(""))?;
    if let Some((k, _)) = args.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(format!("unknown argument `{k}`"));
    }
    Ok(args)
}

fn arg(args: &[(String, f64)], key: &str) -> std::result::Result<f64, String> {
    args.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing argument `{key}`"))
}

macro_rules! string_serde {
    ($t:ty) => {
        impl From<$t> for String {
            fn from(v: $t) -> Self {
                v.to_string()
            }
        }

        impl TryFrom<String> for $t {
            type Error = Error;

            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }
    };
}

string_serde!(Baseline);
string_serde!(CovariateLaw);
string_serde!(Censoring);

fn spec_error(spec: &str, reason: String) -> Error {
    Error::Validation(format!("`{spec}`: {reason}"))
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |r: String| spec_error(spec, r);
        let (name, args) = split_call(spec).map_err(fail)?;
        let baseline = match name.to_ascii_lowercase().as_str() {
            "constant" => {
                let args = named_args(args, &["rate"]).map_err(fail)?;
                Baseline::Constant { rate: arg(&args, "rate").unwrap_or(1.0) }
            }
            "weibull" => {
                let args = named_args(args, &["shape", "scale"]).map_err(fail)?;
                Baseline::Weibull {
                    shape: arg(&args, "shape").map_err(fail)?,
                    scale: arg(&args, "scale").unwrap_or(1.0),
                }
            }
            other => return Err(fail(format!("unknown baseline `{other}` (expected constant or weibull)"))),
        };
        baseline.validate().map_err(fail)?;
        Ok(baseline)
    }
}

impl FromStr for CovariateLaw {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |r: String| spec_error(spec, r);
        let (name, args) = split_call(spec).map_err(fail)?;
        match (name.to_ascii_lowercase().as_str(), args) {
            ("uniform", None) => Ok(CovariateLaw::Uniform),
            ("rademacher", None) => Ok(CovariateLaw::Rademacher),
            ("bernoulli", _) => {
                let args = named_args(args, &["p"]).map_err(fail)?;
                let p = arg(&args, "p").unwrap_or(0.5);
                if !(p > 0.0 && p < 1.0) {
                    return Err(fail(format!("p must lie in (0, 1), got {p}")));
                }
                Ok(CovariateLaw::Bernoulli { p })
            }
            (other, _) => Err(fail(format!(
                "unknown covariate law `{other}` (expected uniform, rademacher or bernoulli(p=..))"
            ))),
        }
    }
}

impl FromStr for Censoring {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |r: String| spec_error(spec, r);
        let (name, args) = split_call(spec).map_err(fail)?;
        match (name.to_ascii_lowercase().as_str(), args) {
            ("none", None) => Ok(Censoring::None),
            ("exponential", Some(_)) => {
                let args = named_args(args, &["rate"]).map_err(fail)?;
                let rate = arg(&args, "rate").map_err(fail)?;
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(fail(format!("rate must be positive, got {rate}")));
                }
                Ok(Censoring::Exponential { rate })
            }
            (other, _) => Err(fail(format!("unknown censoring `{other}` (expected none or exponential(rate=..))"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn null_model_is_exponential() {
        let config = SimulationConfig {
            n: 10_000,
            theta0: vec![0.0],
            censoring: Censoring::None,
            tau: 1e6,
            ..SimulationConfig::default()
        };
        let data = simulate_dataset(&config, &mut StreamKey::root(11).rng()).unwrap();
        assert_eq!(data.event_count(), 10_000);
        let mut ys: Vec<f64> = data.observations().iter().map(|o| o.y).collect();
        ys.sort_by(f64::total_cmp);
        let m = ys.len() as f64;
        let ks = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let f = 1.0 - (-y).exp();
                (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.02, "{ks}");
    }

    #[test]
    fn binary_covariate_mean_ratio() {
        let config = SimulationConfig {
            n: 40_000,
            covariates: CovariateLaw::Bernoulli { p: 0.5 },
            censoring: Censoring::None,
            tau: 1e6,
            ..SimulationConfig::default()
        };
        let data = simulate_dataset(&config, &mut StreamKey::root(12).rng()).unwrap();
        let group_mean = |g: f64| {
            let ys: Vec<f64> = data.observations().iter().filter(|o| o.z[0] == g).map(|o| o.y).collect();
            crate::stats::mean(&ys)
        };
        let ratio = group_mean(1.0) / group_mean(0.0);
        assert!((ratio / (-0.5f64).exp() - 1.0).abs() < 0.03, "{ratio}");
    }

    #[test]
    fn default_design_censoring_fraction() {
        let config = SimulationConfig { n: 10_000, ..SimulationConfig::default() };
        let data = simulate_dataset(&config, &mut StreamKey::root(13).rng()).unwrap();
        let frac = data.censoring_fraction();
        // Exact value for this design is 0.2835.
        assert!((0.2..=0.4).contains(&frac), "{frac}");
        assert!((frac - 0.2835).abs() < 0.015, "{frac}");
        let exp_only = SimulationConfig { tau: 1e6, ..config };
        let frac = simulate_dataset(&exp_only, &mut StreamKey::root(13).rng()).unwrap().censoring_fraction();
        assert!((0.2..=0.4).contains(&frac), "{frac}");
    }

    #[test]
    fn specs_round_trip_and_validate() {
        for s in ["constant(rate=2)", "weibull(shape=1.5,scale=2)"] {
            assert_eq!(s.parse::<Baseline>().unwrap().to_string(), s);
        }
        for s in ["uniform", "rademacher", "bernoulli(p=0.3)"] {
            assert_eq!(s.parse::<CovariateLaw>().unwrap().to_string(), s);
        }
        for s in ["none", "exponential(rate=0.35)"] {
            assert_eq!(s.parse::<Censoring>().unwrap().to_string(), s);
        }
        assert!("constant(rate=-1)".parse::<Baseline>().is_err());
        assert!("exponential(rate=-1)".parse::<Censoring>().is_err());
        assert!("normal".parse::<CovariateLaw>().is_err());
        let bad = SimulationConfig { n: 1, ..SimulationConfig::default() };
        assert!(simulate_dataset(&bad, &mut StreamKey::root(1).rng()).is_err());
    }

    #[test]
    fn weibull_inverse() {
        let b = Baseline::Weibull { shape: 2.0, scale: 3.0 };
        for x in [0.1, 1.0, 5.0] {
            assert!((b.cumulative(b.inverse_cumulative(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_distance_at_jumps() {
        let h = CumulativeHazard::new(vec![1.0, 2.0], vec![0.5, 1.0]).unwrap();
        // Against eta_0(t) = t on [0, 3]: before t=1 gap 1 - 0 = 1 at 1-, after jump |0.5 - 1| = 0.5,
        // before 2: |2 - 0.5| = 1.5, after: |1.5 - 2| = 0.5, at 3: 1.5.
        assert!((h.sup_distance(|t| t, 3.0) - 1.5).abs() < 1e-15);
        assert!((h.sup_distance(|t| t, 1.5) - 1.0).abs() < 1e-15);
    }
}
