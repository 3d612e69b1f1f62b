use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the i.i.d. multipliers `omega_i` in the normalized i.i.d. scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IidLaw {
    /// Exponential with rate one; gives the Bayesian bootstrap.
    Exponential,
    Gamma { shape: f64, rate: f64 },
}

impl IidLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            IidLaw::Exponential => 1.0,
            IidLaw::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            IidLaw::Exponential => 1.0,
            IidLaw::Gamma { shape, rate } => shape / (rate * rate),
        }
    }

    /// Gamma shape of the law; the rate cancels after normalization.
    pub(crate) fn shape(&self) -> f64 {
        match *self {
            IidLaw::Exponential => 1.0,
            IidLaw::Gamma { shape, .. } => shape,
        }
    }
}

/// A resampling scheme expressed through its exchangeable weights.
///
/// Serializes as its specification string, e.g. `"polya(alpha=1)"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightScheme {
    /// Efron's nonparametric bootstrap, `Mult_n(n, 1/n, ..., 1/n)`.
    Efron,
    /// `W_i = omega_i / mean(omega)` with i.i.d. positive `omega_i`.
    Iid(IidLaw),
    /// Delete-h jackknife with `h = round(ratio * n)`.
    Jackknife { ratio: f64 },
    /// Multinomial draw with probabilities given by a first Efron draw.
    Double,
    /// Multinomial draw with Dirichlet(alpha, ..., alpha) probabilities.
    Polya { alpha: f64 },
    /// Urn with `K` balls of each of `n` colours, `n` drawn without replacement.
    Hypergeometric { k: u32 },
    /// All weights one. Test hook: every replicate reproduces the original fit.
    Ones,
}

impl WeightScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightScheme::Iid(law) => match law {
                IidLaw::Exponential => Ok(()),
                IidLaw::Gamma { shape, rate } => {
                    if shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite() {
                        Ok(())
                    } else {
                        Err(Error::Domain(format!(
                            "gamma law needs shape > 0 and rate > 0, got shape={shape}, rate={rate}"
                        )))
                    }
                }
            },
            WeightScheme::Jackknife { ratio } => {
                if ratio > 0.0 && ratio < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("jackknife ratio must lie in (0, 1), got {ratio}")))
                }
            }
            WeightScheme::Polya { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("polya alpha must be > 0, got {alpha}")))
                }
            }
            WeightScheme::Hypergeometric { k } => {
                if k >= 2 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("hypergeometric K must be >= 2, got {k}")))
                }
            }
            WeightScheme::Efron | WeightScheme::Double | WeightScheme::Ones => Ok(()),
        }
    }

    /// Number of deleted observations for the jackknife at sample size `n`.
    pub fn jackknife_h(ratio: f64, n: usize) -> usize {
        let h = (ratio * n as f64).round() as usize;
        h.clamp(1, n.saturating_sub(1).max(1))
    }

    /// Limit value of `(1/n) sum (W_ni - 1)^2`.
    ///
    /// The degenerate [`WeightScheme::Ones`] has no spread at all; it reports a
    /// nominal normalizer of one so that its (zero) bootstrap spread stays finite.
    pub fn theoretical_c2(&self) -> f64 {
        match *self {
            WeightScheme::Efron | WeightScheme::Ones => 1.0,
            WeightScheme::Iid(law) => law.variance() / (law.mean() * law.mean()),
            WeightScheme::Jackknife { ratio } => ratio / (1.0 - ratio),
            WeightScheme::Double => 2.0,
            WeightScheme::Polya { alpha } => (alpha + 1.0) / alpha,
            WeightScheme::Hypergeometric { k } => f64::from(k - 1) / f64::from(k),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, WeightScheme::Ones)
    }

    pub fn is_integer_valued(&self) -> bool {
        !matches!(self, WeightScheme::Iid(_) | WeightScheme::Jackknife { .. })
    }

    /// The six non-degenerate schemes with the parameters used in the checks.
    pub fn catalogue() -> Vec<WeightScheme> {
        vec![
            WeightScheme::Efron,
            WeightScheme::Iid(IidLaw::Exponential),
            WeightScheme::Jackknife { ratio: 0.5 },
            WeightScheme::Double,
            WeightScheme::Polya { alpha: 1.0 },
            WeightScheme::Hypergeometric { k: 2 },
        ]
    }
}

impl fmt::Display for IidLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IidLaw::Exponential => write!(f, "exp1"),
            IidLaw::Gamma { shape, rate } => write!(f, "gamma(shape={shape},rate={rate})"),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Efron => write!(f, "efron"),
            WeightScheme::Iid(law) => write!(f, "iid({law})"),
            WeightScheme::Jackknife { ratio } => write!(f, "jackknife(ratio={ratio})"),
            WeightScheme::Double => write!(f, "double"),
            WeightScheme::Polya { alpha } => write!(f, "polya(alpha={alpha})"),
            WeightScheme::Hypergeometric { k } => write!(f, "hypergeom(k={k})"),
            WeightScheme::Ones => write!(f, "ones"),
        }
    }
}

impl From<WeightScheme> for String {
    fn from(scheme: WeightScheme) -> Self {
        scheme.to_string()
    }
}

impl TryFrom<String> for WeightScheme {
    type Error = Error;

    fn try_from(spec: String) -> Result<Self> {
        spec.parse()
    }
}

/// `name` or `name(args)`, split at the outermost parentheses.
pub(crate) fn split_call(spec: &str) -> std::result::Result<(&str, Option<&str>), String> {
    let spec = spec.trim();
    match spec.find('(') {
        None => Ok((spec, None)),
        Some(open) => {
            if !spec.ends_with(')') {
                return Err("missing closing parenthesis".into());
            }
            Ok((spec[..open].trim(), Some(spec[open + 1..spec.len() - 1].trim())))
        }
    }
}

/// Parse `key=value, key=value` where values are plain numbers.
pub(crate) fn parse_args(args: &str) -> std::result::Result<Vec<(String, f64)>, String> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    args.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{}`", kv.trim()))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a number", v.trim()))?;
            Ok((k.trim().to_ascii_lowercase(), value))
        })
        .collect()
}

pub(crate) fn take_arg(args: &[(String, f64)], key: &str) -> std::result::Result<f64, String> {
    for (k, _) in args {
        if k != key {
            return Err(format!("unknown argument `{k}`"));
        }
    }
    match args {
        [(_, v)] => Ok(*v),
        [] => Err(format!("missing argument `{key}`")),
        _ => Err(format!("argument `{key}` given more than once")),
    }
}

fn parse_law(spec: &str) -> std::result::Result<IidLaw, String> {
    let (name, args) = split_call(spec)?;
    match (name.to_ascii_lowercase().as_str(), args) {
        ("exp1", None) | ("exp", None) => Ok(IidLaw::Exponential),
        ("gamma", Some(args)) => {
            let args = parse_args(args)?;
            let mut shape = None;
            let mut rate = 1.0;
            for (k, v) in args {
                match k.as_str() {
                    "shape" => shape = Some(v),
                    "rate" => rate = v,
                    other => return Err(format!("unknown argument `{other}`")),
                }
            }
            let shape = shape.ok_or("missing argument `shape`")?;
            Ok(IidLaw::Gamma { shape, rate })
        }
        _ => Err(format!("unknown i.i.d. law `{spec}` (expected exp1 or gamma(shape=..., rate=...))")),
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: String| Error::SchemeSpec {
            spec: spec.to_string(),
            reason,
        };
        let (name, args) = split_call(spec).map_err(fail)?;
        let scheme = match (name.to_ascii_lowercase().as_str(), args) {
            ("efron", None) => WeightScheme::Efron,
            ("double", None) => WeightScheme::Double,
            ("ones", None) => WeightScheme::Ones,
            ("iid", Some(law)) => WeightScheme::Iid(parse_law(law).map_err(fail)?),
            ("jackknife", Some(args)) => {
                let args = parse_args(args).map_err(fail)?;
                WeightScheme::Jackknife {
                    ratio: take_arg(&args, "ratio").map_err(fail)?,
                }
            }
            ("polya", Some(args)) => {
                let args = parse_args(args).map_err(fail)?;
                WeightScheme::Polya {
                    alpha: take_arg(&args, "alpha").map_err(fail)?,
                }
            }
            ("hypergeom", Some(args)) => {
                let args = parse_args(args).map_err(fail)?;
                let k = take_arg(&args, "k").map_err(fail)?;
                if k.fract() != 0.0 || k < 0.0 || k > f64::from(u32::MAX) {
                    return Err(fail(format!("k must be a non-negative integer, got {k}")));
                }
                WeightScheme::Hypergeometric { k: k as u32 }
            }
            (other, _) => {
                return Err(fail(format!(
                    "unknown scheme `{other}` or wrong argument list (expected efron, iid(..), \
                     jackknife(ratio=..), double, polya(alpha=..), hypergeom(k=..))"
                )))
            }
        };
        scheme.validate().map_err(|e| fail(e.to_string()))?;
        Ok(scheme)
    }
}
