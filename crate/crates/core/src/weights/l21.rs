use crate::error::{Error, Result};

/// A non-increasing step function `u -> P(Y >= u)` on `[0, oo)`.
///
/// The function equals `levels[k]` on `[breaks[k - 1], breaks[k])`, with
/// `breaks[-1] = 0`, and zero from the last break on.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSurvival {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl StepSurvival {
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breaks.len() != levels.len() {
            return Err(Error::Validation(format!(
                "{} breakpoints but {} levels",
                breaks.len(),
                levels.len()
            )));
        }
        let mut prev_break = 0.0;
        let mut prev_level = 1.0;
        for (i, (&b, &l)) in breaks.iter().zip(&levels).enumerate() {
            if !(b > prev_break) || !b.is_finite() {
                return Err(Error::Validation(format!(
                    "breakpoint {i} = {b} is not finite and strictly increasing from 0"
                )));
            }
            if !(0.0..=prev_level).contains(&l) {
                return Err(Error::Validation(format!(
                    "survival level {i} = {l} is outside [0, {prev_level}]; input must be non-increasing"
                )));
            }
            prev_break = b;
            prev_level = l;
        }
        Ok(Self { breaks, levels })
    }

    /// Empirical `P(Y >= u)` of a non-negative sample.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Validation("empty sample".into()));
        }
        if let Some(v) = sample.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Validation(format!("sample value {v} is not finite and >= 0")));
        }
        let mut sorted = sample.to_vec();
        crate::stats::sort_ascending(&mut sorted);
        let m = sorted.len() as f64;
        let mut breaks = Vec::new();
        let mut levels = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i];
            if v > 0.0 {
                breaks.push(v);
                levels.push((sorted.len() - i) as f64 / m);
            }
            while i < sorted.len() && sorted[i] == v {
                i += 1;
            }
        }
        Ok(Self { breaks, levels })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// `||Y||_{2,1} = int_0^oo sqrt(P(Y >= u)) du`, exact for a step function.
pub fn l21_norm(survival: &StepSurvival) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (&b, &l) in survival.breaks.iter().zip(&survival.levels) {
        total += (b - prev) * l.sqrt();
        prev = b;
    }
    total
}

pub fn l21_norm_of_sample(sample: &[f64]) -> Result<f64> {
    Ok(l21_norm(&StepSurvival::from_sample(sample)?))
}

/// Midpoint-rule approximation of `int_0^upper sqrt(S(u)) du` for a
/// survival function that vanishes beyond `upper`.
pub fn l21_norm_quadrature(survival: impl Fn(f64) -> f64, upper: f64, intervals: usize) -> Result<f64> {
    if !(upper > 0.0) || intervals == 0 {
        return Err(Error::Domain("quadrature needs upper > 0 and at least one interval".into()));
    }
    let h = upper / intervals as f64;
    let mut prev = f64::INFINITY;
    let mut total = 0.0;
    for i in 0..intervals {
        let s = survival((i as f64 + 0.5) * h);
        if !(0.0..=1.0).contains(&s) || s > prev + 1e-12 {
            return Err(Error::Validation(format!(
                "survival value {s} at u = {} is not a non-increasing probability",
                (i as f64 + 0.5) * h
            )));
        }
        prev = s;
        total += s.sqrt();
    }
    Ok(total * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_at_one() {
        let s = StepSurvival::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(l21_norm(&s), 1.0);
        assert_eq!(l21_norm_of_sample(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn jackknife_half() {
        // n = 4, h = 2: P(W >= u) = 1/2 on [0, 2).
        let s = StepSurvival::new(vec![2.0], vec![0.5]).unwrap();
        assert!((l21_norm(&s) - 2f64.sqrt()).abs() < 1e-15);
        assert!((l21_norm_of_sample(&[2.0, 0.0, 2.0, 0.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_quadrature_converges_to_two_thirds() {
        let mut last_err = f64::INFINITY;
        for intervals in [10, 100, 1000, 10_000] {
            let v = l21_norm_quadrature(|u| 1.0 - u, 1.0, intervals).unwrap();
            let err = (v - 2.0 / 3.0).abs();
            assert!(err < last_err);
            last_err = err;
        }
        assert!(last_err < 1e-6);
    }

    #[test]
    fn non_monotone_input_is_rejected() {
        assert!(matches!(
            StepSurvival::new(vec![1.0, 2.0], vec![0.5, 0.7]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            StepSurvival::new(vec![2.0, 1.0], vec![0.5, 0.2]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            l21_norm_quadrature(|u| if u < 0.5 { 0.2 } else { 0.8 }, 1.0, 10),
            Err(Error::Validation(_))
        ));
        assert!(l21_norm_of_sample(&[-1.0]).is_err());
    }

    #[test]
    fn empirical_step_function_levels() {
        let s = StepSurvival::from_sample(&[3.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.breaks(), &[1.0, 3.0]);
        assert_eq!(s.levels(), &[0.75, 0.25]);
        assert!((l21_norm(&s) - (0.75f64.sqrt() + 2.0 * 0.5)).abs() < 1e-15);
    }
}
