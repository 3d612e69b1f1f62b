//! Closed-form moments of the weight laws.
//!
//! The multinomial-type schemes are mixtures of multinomials, so their
//! factorial moments `E[W (W-1) ... (W-r+1)] = n^(r) E[P_1^r]` are available in
//! closed form, and raw moments follow from Stirling numbers of the second kind:
//! `E W^k = sum_r S(k, r) E[W^(r)]`.

use super::{WeightScheme};
use crate::error::{Error, Result};

/// Stirling number of the second kind `S(k, j)`.
pub fn stirling2(k: u32, j: u32) -> f64 {
    if k == 0 && j == 0 {
        return 1.0;
    }
    if k == 0 || j == 0 || j > k {
        return 0.0;
    }
    let mut row = vec![0.0f64; j as usize + 1];
    row[0] = 1.0;
    for _ in 1..=k {
        for i in (1..=j as usize).rev() {
            row[i] = i as f64 * row[i] + row[i - 1];
        }
        row[0] = 0.0;
    }
    row[j as usize]
}

/// `x (x - 1) ... (x - r + 1)`.
pub fn falling_factorial(x: f64, r: u32) -> f64 {
    (0..r).map(|i| x - f64::from(i)).product()
}

fn rising_factorial(x: f64, r: u32) -> f64 {
    (0..r).map(|i| x + f64::from(i)).product()
}

fn bell(k: u32) -> f64 {
    (0..=k).map(|j| stirling2(k, j)).sum()
}

/// `E W^5` for a `Mult_n(n, p)` marginal with cell probability `p1`:
/// `n p + 15 n^(2) p^2 + 25 n^(3) p^3 + 10 n^(4) p^4 + n^(5) p^5`.
pub fn exact_multinomial_fifth_moment(n: u64, p1: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Size { n: n as usize, min: 1 });
    }
    if !(p1 > 0.0 && p1 <= 1.0) {
        return Err(Error::Domain(format!("cell probability must lie in (0, 1], got {p1}")));
    }
    let nf = n as f64;
    Ok((1..=5u32)
        .map(|r| stirling2(5, r) * falling_factorial(nf, r) * p1.powi(r as i32))
        .sum())
}

/// `n^(p) E D_1^p` for `D ~ Dirichlet_n(alpha, ..., alpha)`.
pub fn polya_factorial_moment(n: usize, alpha: f64, p: u32) -> f64 {
    let nf = n as f64;
    falling_factorial(nf, p) * rising_factorial(alpha, p) / rising_factorial(nf * alpha, p)
}

/// Factorial moment `E[W_n1^(r)]` for the schemes that are multinomial mixtures.
fn factorial_moment(scheme: &WeightScheme, n: usize, r: u32) -> Option<f64> {
    let nf = n as f64;
    let efron = |r: u32| falling_factorial(nf, r) / nf.powi(r as i32);
    match *scheme {
        WeightScheme::Efron => Some(efron(r)),
        WeightScheme::Double => {
            let first_stage: f64 = (1..=r).map(|j| stirling2(r, j) * efron(j)).sum();
            Some(efron(r) * first_stage)
        }
        WeightScheme::Polya { alpha } => Some(polya_factorial_moment(n, alpha, r)),
        WeightScheme::Hypergeometric { k } => {
            if r > k.min(n as u32) {
                return Some(0.0);
            }
            let kf = f64::from(k);
            Some(falling_factorial(nf, r) * falling_factorial(kf, r) / falling_factorial(nf * kf, r))
        }
        _ => None,
    }
}

/// Exact `E W_n1^k` at sample size `n`.
pub fn exact_raw_moment(scheme: &WeightScheme, n: usize, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let nf = n as f64;
    match *scheme {
        WeightScheme::Ones => 1.0,
        WeightScheme::Jackknife { ratio } => {
            let h = WeightScheme::jackknife_h(ratio, n);
            let kept = (n - h) as f64;
            (kept / nf) * (nf / kept).powi(k as i32)
        }
        WeightScheme::Iid(law) => {
            // W = n D with D ~ Dirichlet_n(shape, ..., shape).
            let s = law.shape();
            nf.powi(k as i32) * rising_factorial(s, k) / rising_factorial(nf * s, k)
        }
        _ => (1..=k)
            .map(|r| stirling2(k, r) * factorial_moment(scheme, n, r).expect("multinomial mixture"))
            .sum(),
    }
}

/// `lim_{n -> oo} E W_n1^k`. For every scheme except the jackknife with a
/// ratio that `n` does not divide evenly, the finite-`n` moments increase to
/// this limit, so it is also an upper bound.
pub fn limiting_raw_moment(scheme: &WeightScheme, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let stirling_sum = |f: &dyn Fn(u32) -> f64| -> f64 { (1..=k).map(|r| stirling2(k, r) * f(r)).sum() };
    match *scheme {
        WeightScheme::Ones => 1.0,
        WeightScheme::Efron => bell(k),
        WeightScheme::Double => stirling_sum(&bell),
        WeightScheme::Polya { alpha } => {
            stirling_sum(&|r| (1..r).map(|i| (alpha + f64::from(i)) / alpha).product())
        }
        WeightScheme::Hypergeometric { k: balls } => {
            let kf = f64::from(balls);
            stirling_sum(&|r| falling_factorial(kf, r) / kf.powi(r as i32))
        }
        WeightScheme::Jackknife { ratio } => (1.0 / (1.0 - ratio)).powi(k as i32 - 1),
        WeightScheme::Iid(law) => {
            let s = law.shape();
            rising_factorial(s, k) / s.powi(k as i32)
        }
    }
}
