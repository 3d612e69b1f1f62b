use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma};

use super::{IidLaw, WeightScheme, WeightVector};
use crate::error::{Error, Result};

/// Draw one exchangeable weight vector of length `n`.
pub fn generate_weights<R: Rng + ?Sized>(
    scheme: &WeightScheme,
    n: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    scheme.validate()?;
    if n < 2 {
        return Err(Error::Size { n, min: 2 });
    }
    let w = match *scheme {
        WeightScheme::Efron => WeightVector::from_counts(efron_counts(n, rng)),
        WeightScheme::Double => {
            // First stage picks n owners uniformly; the second stage draws n
            // balls from that multiset, i.e. Mult(n, W~/n).
            let owners: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[owners[rng.random_range(0..n)]] += 1;
            }
            WeightVector::from_counts(counts)
        }
        WeightScheme::Polya { alpha } => {
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
            let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
            if draws.iter().all(|&g| g == 0.0) {
                return Err(Error::Domain(format!(
                    "all Dirichlet gamma variates underflowed to zero (alpha={alpha})"
                )));
            }
            WeightVector::from_counts(multinomial_counts(n as u64, &draws, rng))
        }
        WeightScheme::Hypergeometric { k } => {
            let k = k as usize;
            let mut counts = vec![0u32; n];
            for ball in index::sample(rng, n * k, n) {
                counts[ball / k] += 1;
            }
            WeightVector::from_counts(counts)
        }
        WeightScheme::Jackknife { ratio } => {
            let h = WeightScheme::jackknife_h(ratio, n);
            let kept = n - h;
            let level = n as f64 / kept as f64;
            let mut values = vec![0.0; n];
            values[..kept].iter_mut().for_each(|v| *v = level);
            values.shuffle(rng);
            WeightVector::unchecked(values, false)
        }
        WeightScheme::Iid(law) => {
            let omega: Vec<f64> = match law {
                IidLaw::Exponential => (0..n).map(|_| Exp1.sample(rng)).collect(),
                IidLaw::Gamma { shape, rate } => {
                    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Domain(e.to_string()))?;
                    (0..n).map(|_| g.sample(rng)).collect()
                }
            };
            let mean = omega.iter().sum::<f64>() / n as f64;
            if !(mean > 0.0) {
                return Err(Error::Domain("i.i.d. multipliers have zero mean; batch rejected".into()));
            }
            WeightVector::unchecked(omega.into_iter().map(|o| o / mean).collect(), false)
        }
        WeightScheme::Ones => WeightVector::ones(n),
    };
    debug_assert!(w.check_invariants().is_ok());
    Ok(w)
}

pub(crate) fn efron_counts<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

/// `Mult(trials, p)` with `p` proportional to `mass`, by sequential
/// conditional binomials. The counts always sum to `trials`.
pub(crate) fn multinomial_counts<R: Rng + ?Sized>(trials: u64, mass: &[f64], rng: &mut R) -> Vec<u32> {
    let m = mass.len();
    let mut tail = vec![0.0; m + 1];
    for i in (0..m).rev() {
        tail[i] = tail[i + 1] + mass[i];
    }
    let mut counts = vec![0u32; m];
    let mut remaining = trials;
    for i in 0..m {
        if remaining == 0 {
            break;
        }
        if i + 1 == m || tail[i + 1] <= 0.0 {
            counts[i] = remaining as u32;
            break;
        }
        let p = (mass[i] / tail[i]).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, p).expect("probability clamped to [0, 1]").sample(rng);
        counts[i] = x as u32;
        remaining -= x;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    #[test]
    fn efron_small() {
        let mut rng = StreamKey::root(1).rng();
        for _ in 0..100 {
            let w = generate_weights(&WeightScheme::Efron, 3, &mut rng).unwrap();
            assert!(w.is_integer_valued());
            assert_eq!(w.values().iter().sum::<f64>(), 3.0);
            assert!(w.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
        }
    }

    #[test]
    fn jackknife_is_a_permutation_of_fixed_weights() {
        let mut rng = StreamKey::root(2).rng();
        for _ in 0..50 {
            let w = generate_weights(&WeightScheme::Jackknife { ratio: 0.5 }, 4, &mut rng).unwrap();
            let mut v = w.values().to_vec();
            v.sort_by(|a, b| a.total_cmp(b));
            assert_eq!(v, vec![0.0, 0.0, 2.0, 2.0]);
        }
    }

    #[test]
    fn iid_normalized_has_mean_one() {
        let mut rng = StreamKey::root(3).rng();
        let w = generate_weights(&WeightScheme::Iid(IidLaw::Exponential), 1000, &mut rng).unwrap();
        let mean = w.values().iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_and_parameter_errors() {
        let mut rng = StreamKey::root(4).rng();
        assert!(matches!(
            generate_weights(&WeightScheme::Efron, 1, &mut rng),
            Err(Error::Size { n: 1, min: 2 })
        ));
        assert!(matches!(
            generate_weights(&WeightScheme::Polya { alpha: -1.0 }, 10, &mut rng),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            generate_weights(&WeightScheme::Hypergeometric { k: 1 }, 10, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fixed_key_reproduces_bytes() {
        for scheme in WeightScheme::catalogue() {
            let a = generate_weights(&scheme, 50, &mut StreamKey::root(9).child(1).rng()).unwrap();
            let b = generate_weights(&scheme, 50, &mut StreamKey::root(9).child(1).rng()).unwrap();
            let bytes = |w: &WeightVector| -> Vec<u8> {
                w.values().iter().flat_map(|v| v.to_le_bytes()).collect()
            };
            assert_eq!(bytes(&a), bytes(&b), "{scheme}");
        }
    }

    #[test]
    fn multinomial_respects_zero_mass() {
        let mut rng = StreamKey::root(5).rng();
        let c = multinomial_counts(100, &[0.0, 1.0, 0.0, 3.0], &mut rng);
        assert_eq!(c[0], 0);
        assert_eq!(c[2], 0);
        assert_eq!(c.iter().sum::<u32>(), 100);
    }

    /// The joint law of (W1, W2) is symmetric: P(W1 > W2) = P(W2 > W1).
    #[test]
    fn pairs_are_exchangeable() {
        for scheme in WeightScheme::catalogue() {
            let mut rng = StreamKey::root(11).named(&scheme.to_string()).rng();
            let (mut first, mut second) = (0i64, 0i64);
            let mut sum1 = 0.0;
            let mut sum2 = 0.0;
            let draws = 10_000;
            for _ in 0..draws {
                let w = generate_weights(&scheme, 20, &mut rng).unwrap();
                let v = w.values();
                if v[0] > v[1] {
                    first += 1;
                } else if v[1] > v[0] {
                    second += 1;
                }
                sum1 += v[0];
                sum2 += v[19];
            }
            let total = (first + second) as f64;
            assert!(((first - second) as f64).abs() <= 4.0 * total.sqrt(), "{scheme}: {first} vs {second}");
            // Both marginals have mean one.
            assert!((sum1 / draws as f64 - 1.0).abs() < 0.06, "{scheme}");
            assert!((sum2 / draws as f64 - 1.0).abs() < 0.06, "{scheme}");
        }
    }

    fn scheme_strategy() -> impl Strategy<Value = WeightScheme> {
        prop_oneof![
            Just(WeightScheme::Efron),
            Just(WeightScheme::Double),
            Just(WeightScheme::Ones),
            Just(WeightScheme::Iid(IidLaw::Exponential)),
            (0.2f64..20.0).prop_map(|shape| WeightScheme::Iid(IidLaw::Gamma { shape, rate: 1.0 })),
            (0.01f64..0.99).prop_map(|ratio| WeightScheme::Jackknife { ratio }),
            (0.05f64..50.0).prop_map(|alpha| WeightScheme::Polya { alpha }),
            (2u32..20).prop_map(|k| WeightScheme::Hypergeometric { k }),
        ]
    }

    proptest! {
        #[test]
        fn every_draw_satisfies_invariants(scheme in scheme_strategy(), n in 2usize..300, seed in any::<u64>()) {
            let w = generate_weights(&scheme, n, &mut StreamKey::root(seed).rng()).unwrap();
            prop_assert_eq!(w.n(), n);
            prop_assert!(w.check_invariants().is_ok());
            prop_assert_eq!(w.is_integer_valued(), scheme.is_integer_valued());
        }
    }
}
