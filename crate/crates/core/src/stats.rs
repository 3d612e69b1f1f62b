//! Small numerical helpers shared by the bootstrap engine and the lab.

use statrs::distribution::{ContinuousCDF, Normal};

/// Empirical quantile with linear interpolation between order statistics at
/// position `h = (m - 1) q + 1` (the "type 7" rule). `sorted` must be
/// ascending and non-empty; `q` must lie in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = (m - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= m {
        sorted[m - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn sort_ascending(values: &mut [f64]) {
    values.sort_by(|a, b| a.total_cmp(b));
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    sort_ascending(&mut v);
    quantile_sorted(&v, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn standard_error(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// `(p - 1)!!` for even `p`, the `p`-th moment of a standard normal; zero for odd `p`.
pub fn standard_normal_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    (1..p).step_by(2).map(f64::from).product()
}

/// Kendall's tau between `values` and their index order, with a one-sided
/// p-value for an increasing trend. Exact by enumeration for up to eight
/// points, normal approximation beyond that.
pub fn kendall_trend(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m < 2 {
        return (0.0, 1.0);
    }
    let s = concordance(values);
    let pairs = (m * (m - 1) / 2) as f64;
    let tau = s as f64 / pairs;
    let p = if m <= 8 {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut total = 0usize;
        let mut at_least = 0usize;
        permute(&mut perm, 0, &mut |p| {
            let vals: Vec<f64> = p.iter().map(|&i| i as f64).collect();
            total += 1;
            if concordance(&vals) >= s {
                at_least += 1;
            }
        });
        at_least as f64 / total as f64
    } else {
        let mf = m as f64;
        let var = mf * (mf - 1.0) * (2.0 * mf + 5.0) / 18.0;
        1.0 - normal_cdf((s as f64 - 1.0) / var.sqrt())
    };
    (tau, p)
}

fn concordance(values: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            s += match values[j].partial_cmp(&values[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}
