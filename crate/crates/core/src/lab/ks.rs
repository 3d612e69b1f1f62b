use crate::error::{Error, Result};
use crate::stats::{normal_cdf, sort_ascending};

/// Kolmogorov distance between the empirical CDF of `sample` and `N(mean, variance)`.
pub fn ks_distance(sample: &[f64], mean: f64, variance: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("sample must not be empty".into()));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::Domain(format!("variance must be positive, got {variance}")));
    }
    let mut sorted = sample.to_vec();
    sort_ascending(&mut sorted);
    let m = sorted.len() as f64;
    let sd = variance.sqrt();
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf((x - mean) / sd);
            (f - i as f64 / m).max((i + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::stats::normal_quantile;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_point_at_the_median() {
        assert!((ks_distance(&[0.0], 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ks_distance(&[3.0], 3.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_quantiles() {
        let m = 1000;
        let sample: Vec<f64> = (0..m).map(|i| normal_quantile((i as f64 + 0.5) / m as f64)).collect();
        let quantile_error = sample
            .iter()
            .enumerate()
            .map(|(i, &x)| (normal_cdf(x) - (i as f64 + 0.5) / m as f64).abs())
            .fold(0.0, f64::max);
        let d = ks_distance(&sample, 0.0, 1.0).unwrap();
        assert!(d <= 0.5 / m as f64 + quantile_error + 1e-15, "{d} vs quantile error {quantile_error}");
    }

    #[test]
    fn normal_samples_are_close() {
        let mut rng = StreamKey::root(4).rng();
        let sample: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_distance(&sample, 0.0, 1.0).unwrap() <= 0.05);
    }

    #[test]
    fn ties_and_errors() {
        // Two tied points at the median: ECDF jumps 0 -> 1 at 0.
        assert!((ks_distance(&[0.0, 0.0], 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_distance(&[], 0.0, 1.0).is_err());
        assert!(ks_distance(&[1.0], 0.0, 0.0).is_err());
    }
}
