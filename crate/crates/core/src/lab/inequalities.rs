use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentReport, Record};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::{mean, sample_variance, standard_error};
use crate::weights::{generate_weights, l21_norm_of_sample, WeightScheme};

/// Number of batches behind the batch-means standard errors.
const BATCHES: usize = 20;

/// A positive law with finite moments of every order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveLaw {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, scale: f64 },
    /// Components `(weight, shape, scale)`; weights need not be normalized.
    GammaMixture { components: Vec<(f64, f64, f64)> },
}

impl PositiveLaw {
    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let ok = match self {
            PositiveLaw::Constant { value } => positive(*value),
            PositiveLaw::Uniform { low, high } => *low >= 0.0 && high > low && high.is_finite(),
            PositiveLaw::Gamma { shape, scale } => positive(*shape) && positive(*scale),
            PositiveLaw::GammaMixture { components } => {
                !components.is_empty() && components.iter().all(|&(w, a, s)| positive(w) && positive(a) && positive(s))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self} is not a valid positive law")))
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match self {
            PositiveLaw::Constant { value } => Sampler::Constant(*value),
            PositiveLaw::Uniform { low, high } => Sampler::Uniform(*low, *high),
            PositiveLaw::Gamma { shape, scale } => Sampler::Mixture(vec![(1.0, gamma(*shape, *scale)?)]),
            PositiveLaw::GammaMixture { components } => {
                let total: f64 = components.iter().map(|c| c.0).sum();
                let mut cumulative = 0.0;
                let mut parts = Vec::with_capacity(components.len());
                for &(w, shape, scale) in components {
                    cumulative += w / total;
                    parts.push((cumulative, gamma(shape, scale)?));
                }
                Sampler::Mixture(parts)
            }
        })
    }

    /// A mixture of one to three Gamma laws with log-uniform shapes and scales in `[0.2, 5]`.
    pub fn random_gamma_mixture<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let k = rng.random_range(1..=3);
        let log_uniform = |rng: &mut R| (rng.random_range(0.2f64.ln()..5f64.ln())).exp();
        let components = (0..k)
            .map(|_| {
                let w: f64 = Exp1.sample(rng);
                (w.max(1e-3), log_uniform(rng), log_uniform(rng))
            })
            .collect();
        PositiveLaw::GammaMixture { components }
    }
}

impl fmt::Display for PositiveLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositiveLaw::Constant { value } => write!(f, "constant({value})"),
            PositiveLaw::Uniform { low, high } => write!(f, "uniform({low},{high})"),
            PositiveLaw::Gamma { shape, scale } => write!(f, "gamma(shape={shape},scale={scale})"),
            PositiveLaw::GammaMixture { components } => {
                write!(f, "mixture[")?;
                for (i, (w, a, s)) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{w:.3}*gamma({a:.3},{s:.3})")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn gamma(shape: f64, scale: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, scale).map_err(|e| Error::Domain(format!("gamma({shape}, {scale}): {e}")))
}

enum Sampler {
    Constant(f64),
    Uniform(f64, f64),
    Mixture(Vec<(f64, Gamma<f64>)>),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
            Sampler::Mixture(parts) => {
                let u: f64 = rng.random();
                let part = parts.iter().find(|p| u < p.0).unwrap_or(parts.last().expect("non-empty mixture"));
                part.1.sample(rng)
            }
        }
    }
}

/// Sample estimates of `(1/2)||Y||_2 <= ||Y||_{2,1} <= (r/(r-2))||Y||_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormInequalityMargin {
    pub law: String,
    pub r: f64,
    pub sample_size: usize,
    pub l2: f64,
    pub l21: f64,
    pub lr: f64,
    /// `||Y||_{2,1} - ||Y||_2 / 2`.
    pub lower_margin: f64,
    pub lower_margin_se: f64,
    /// `(r/(r-2))||Y||_r - ||Y||_{2,1}`.
    pub upper_margin: f64,
    pub upper_margin_se: f64,
    /// A margin is negative by more than three standard errors.
    pub violated: bool,
}

struct NormEstimates {
    l2: f64,
    l21: f64,
    lr: f64,
}

fn norm_estimates(sample: &[f64], r: f64) -> Result<NormEstimates> {
    let m = sample.len() as f64;
    Ok(NormEstimates {
        l2: (sample.iter().map(|y| y * y).sum::<f64>() / m).sqrt(),
        l21: l21_norm_of_sample(sample)?,
        lr: (sample.iter().map(|y| y.powf(r)).sum::<f64>() / m).powf(1.0 / r),
    })
}

fn batch_se(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

pub fn norm_inequality_check(law: &PositiveLaw, r: f64, sample_size: usize, key: StreamKey) -> Result<NormInequalityMargin> {
    if !(r > 2.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r must exceed 2, got {r}")));
    }
    if sample_size < 2 * BATCHES {
        return Err(Error::Size { n: sample_size, min: 2 * BATCHES });
    }
    let sampler = law.sampler()?;
    let mut rng = key.rng();
    let sample: Vec<f64> = (0..sample_size).map(|_| sampler.draw(&mut rng)).collect();
    let factor = r / (r - 2.0);
    let full = norm_estimates(&sample, r)?;
    let mut lower = Vec::with_capacity(BATCHES);
    let mut upper = Vec::with_capacity(BATCHES);
    for batch in sample.chunks(sample_size / BATCHES).take(BATCHES) {
        let e = norm_estimates(batch, r)?;
        lower.push(e.l21 - 0.5 * e.l2);
        upper.push(factor * e.lr - e.l21);
    }
    let lower_margin = full.l21 - 0.5 * full.l2;
    let upper_margin = factor * full.lr - full.l21;
    let (lower_margin_se, upper_margin_se) = (batch_se(&lower), batch_se(&upper));
    Ok(NormInequalityMargin {
        law: law.to_string(),
        r,
        sample_size,
        l2: full.l2,
        l21: full.l21,
        lr: full.lr,
        lower_margin,
        lower_margin_se,
        upper_margin,
        upper_margin_se,
        violated: lower_margin < -3.0 * lower_margin_se || upper_margin < -3.0 * upper_margin_se,
    })
}

/// Monomials `x^k` on `U(0, 1)`, centred by their exact means `1/(k+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialClass {
    pub powers: Vec<u32>,
}

impl Default for MonomialClass {
    fn default() -> Self {
        Self { powers: vec![1, 2, 3] }
    }
}

impl MonomialClass {
    fn validate(&self) -> Result<()> {
        if self.powers.is_empty() {
            return Err(Error::Domain("function class must not be empty".into()));
        }
        Ok(())
    }

    fn centred(&self, x: f64, out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(&self.powers) {
            *o = x.powi(k as i32) - 1.0 / f64::from(k + 1);
        }
    }

    /// `sup_f |f(x) - E f|`.
    fn envelope(&self, x: f64) -> f64 {
        self.powers.iter().map(|&k| (x.powi(k as i32) - 1.0 / f64::from(k + 1)).abs()).fold(0.0, f64::max)
    }

    /// `(E sup_f |Z(f)|^p)^(1/p)` by the midpoint rule.
    pub fn envelope_norm(&self, p: u32) -> f64 {
        const INTERVALS: usize = 200_000;
        let h = 1.0 / INTERVALS as f64;
        let integral: f64 = (0..INTERVALS).map(|i| self.envelope((i as f64 + 0.5) * h).powi(p as i32)).sum::<f64>() * h;
        integral.powf(1.0 / f64::from(p))
    }
}

/// Both sides of the multiplier inequality with their Monte Carlo errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierMargin {
    pub scheme: WeightScheme,
    pub p: u32,
    pub n: usize,
    pub n0: usize,
    pub draws: usize,
    pub lhs: f64,
    pub lhs_se: f64,
    /// `n0 ||sup|Z_1|||_p ||max W||_p / sqrt(n)`.
    pub first_term: f64,
    /// `R_n^(1/p) ||max_i sup |T_i|||_p`.
    pub second_term: f64,
    pub r_n: f64,
    pub max_weight_norm: f64,
    pub envelope_norm: f64,
    pub partial_sum_norm: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `lhs <= rhs + 3 sqrt(lhs_se^2 + rhs_se^2)`.
    pub holds: bool,
}

/// Per-draw quantities shared by every order `p`.
struct MultiplierSample {
    scheme: WeightScheme,
    n: usize,
    n0: usize,
    /// `sup_f |n^(-1/2) sum W_i Z_i(f)|`.
    weighted_sup: Vec<f64>,
    max_weight: Vec<f64>,
    /// `max_{n0 < i <= n} sup_f |i^(-1/2) sum_{n0 < j <= i} Z_j(f)|`.
    partial_sup: Vec<f64>,
    r_n: f64,
    r_n_se: f64,
    class: MonomialClass,
}

const CHUNK: usize = 256;
/// Pooled weight values kept for the `R_n` estimate.
const WEIGHT_POOL_CAP: usize = 2_000_000;

fn simulate_multiplier(
    n: usize,
    n0: usize,
    scheme: &WeightScheme,
    class: &MonomialClass,
    draws: usize,
    key: StreamKey,
) -> Result<MultiplierSample> {
    if n0 == 0 || n0 >= n {
        return Err(Error::Domain(format!("cutoff n0 = {n0} must satisfy 1 <= n0 < n = {n}")));
    }
    if draws < 2 * BATCHES {
        return Err(Error::Size { n: draws, min: 2 * BATCHES });
    }
    class.validate()?;
    scheme.validate()?;
    let per_draw_pool = (WEIGHT_POOL_CAP / draws).clamp(1, n);
    let d = class.powers.len();
    let chunks: Vec<_> = (0..draws.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<Vec<DrawRow>> {
            let mut rng = key.child(c as u64).rng();
            let mut z = vec![0.0; d];
            let mut weighted = vec![0.0; d];
            let mut partial = vec![0.0; d];
            let count = CHUNK.min(draws - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let w = generate_weights(scheme, n, &mut rng)?;
                weighted.iter_mut().for_each(|v| *v = 0.0);
                partial.iter_mut().for_each(|v| *v = 0.0);
                let mut partial_max: f64 = 0.0;
                for (i, &wi) in w.values().iter().enumerate() {
                    class.centred(rng.random::<f64>(), &mut z);
                    for k in 0..d {
                        weighted[k] += wi * z[k];
                    }
                    if i >= n0 {
                        let scale = 1.0 / ((i + 1) as f64).sqrt();
                        for k in 0..d {
                            partial[k] += z[k];
                            partial_max = partial_max.max((partial[k] * scale).abs());
                        }
                    }
                }
                let sup = weighted.iter().fold(0.0f64, |a, v| a.max(v.abs())) / (n as f64).sqrt();
                let max_w = w.values().iter().copied().fold(0.0, f64::max);
                out.push(DrawRow { sup, max_w, partial_max, pooled: w.values()[..per_draw_pool].to_vec() });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<_> = chunks.into_iter().flatten().collect();
    let pool: Vec<f64> = rows.iter().flat_map(|r| r.pooled.iter().copied()).collect();
    let r_n = l21_norm_of_sample(&pool)?;
    let batch = rows.len() / BATCHES;
    let batch_r: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let values: Vec<f64> = rows[b * batch..(b + 1) * batch].iter().flat_map(|r| r.pooled.iter().copied()).collect();
            l21_norm_of_sample(&values)
        })
        .collect::<Result<_>>()?;
    Ok(MultiplierSample {
        scheme: *scheme,
        n,
        n0,
        weighted_sup: rows.iter().map(|r| r.sup).collect(),
        max_weight: rows.iter().map(|r| r.max_w).collect(),
        partial_sup: rows.iter().map(|r| r.partial_max).collect(),
        r_n,
        r_n_se: batch_se(&batch_r),
        class: class.clone(),
    })
}

struct DrawRow {
    sup: f64,
    max_w: f64,
    partial_max: f64,
    pooled: Vec<f64>,
}

/// `(E X^p)^(1/p)` and its delta-method standard error.
fn lp_norm(values: &[f64], p: u32) -> (f64, f64) {
    let powered: Vec<f64> = values.iter().map(|v| v.powi(p as i32)).collect();
    let m = mean(&powered);
    let se = standard_error(&powered);
    let inv = 1.0 / f64::from(p);
    let norm = m.powf(inv);
    let norm_se = if m > 0.0 { inv * m.powf(inv - 1.0) * se } else { 0.0 };
    (norm, norm_se)
}

impl MultiplierSample {
    fn margin(&self, p: u32) -> Result<MultiplierMargin> {
        if p == 0 {
            return Err(Error::Domain("p must be at least 1".into()));
        }
        let root_n = (self.n as f64).sqrt();
        let (lhs, lhs_se) = lp_norm(&self.weighted_sup, p);
        let (max_w, max_w_se) = lp_norm(&self.max_weight, p);
        let (partial, partial_se) = lp_norm(&self.partial_sup, p);
        let envelope = self.class.envelope_norm(p);
        let inv = 1.0 / f64::from(p);
        let first_factor = self.n0 as f64 * envelope / root_n;
        let first_term = first_factor * max_w;
        let r_pow = self.r_n.powf(inv);
        let second_term = r_pow * partial;
        let r_pow_se = inv * self.r_n.powf(inv - 1.0) * self.r_n_se;
        let rhs_se = ((first_factor * max_w_se).powi(2) + (partial * r_pow_se).powi(2) + (r_pow * partial_se).powi(2)).sqrt();
        let rhs = first_term + second_term;
        Ok(MultiplierMargin {
            scheme: self.scheme,
            p,
            n: self.n,
            n0: self.n0,
            draws: self.weighted_sup.len(),
            lhs,
            lhs_se,
            first_term,
            second_term,
            r_n: self.r_n,
            max_weight_norm: max_w,
            envelope_norm: envelope,
            partial_sum_norm: partial,
            rhs,
            rhs_se,
            holds: lhs <= rhs + 3.0 * lhs_se.hypot(rhs_se),
        })
    }
}

pub fn multiplier_inequality_check(
    p: u32,
    n: usize,
    n0: usize,
    scheme: &WeightScheme,
    class: &MonomialClass,
    draws: usize,
    key: StreamKey,
) -> Result<MultiplierMargin> {
    simulate_multiplier(n, n0, scheme, class, draws, key)?.margin(p)
}

/// Settings for the two inequality sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalityConfig {
    pub seed: u64,
    /// Random positive laws in the norm sweep.
    pub laws: usize,
    pub r_values: Vec<f64>,
    pub law_sample_size: usize,
    pub p_values: Vec<u32>,
    pub n_values: Vec<usize>,
    /// `n0 = max(1, n / n0_divisor)`.
    pub n0_divisor: usize,
    pub schemes: Vec<WeightScheme>,
    pub draws: usize,
    pub class: MonomialClass,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            laws: 100,
            r_values: vec![2.5, 3.0, 4.0],
            law_sample_size: 20_000,
            p_values: vec![1, 2, 3],
            n_values: vec![50, 200],
            n0_divisor: 10,
            schemes: WeightScheme::catalogue(),
            draws: 20_000,
            class: MonomialClass::default(),
        }
    }
}

/// The sandwich over random Gamma mixtures and the multiplier inequality over the scheme grid.
pub fn inequality_sweep(config: &InequalityConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("inequalities", config);
    let (norm, multiplier) = (norm_sweep(config)?, multiplier_sweep(config)?);
    let violations = norm.iter().filter(|m| m.violated).count();
    for m in &norm {
        report.records.push(Record::new(None, format!("norm_lower_margin[r={}]", m.r), m.lower_margin).se(m.lower_margin_se));
        report.records.push(Record::new(None, format!("norm_upper_margin[r={}]", m.r), m.upper_margin).se(m.upper_margin_se));
        if m.violated {
            report.warnings.push(format!("norm sandwich violated for {} at r = {}", m.law, m.r));
        }
    }
    report.checks.push(Check::new(
        "norm_sandwich",
        violations == 0,
        format!("{violations} violations beyond 3 SE over {} law/r pairs", norm.len()),
    ));
    let failures = multiplier.iter().filter(|m| !m.holds).count();
    for m in &multiplier {
        let stat = format!("multiplier_margin[p={},scheme={}]", m.p, m.scheme);
        report.records.push(Record::new(Some(m.n), stat, m.rhs - m.lhs).se(m.lhs_se.hypot(m.rhs_se)));
        report.checks.push(Check::new(
            format!("multiplier[p={},n={},scheme={}]", m.p, m.n, m.scheme),
            m.holds,
            format!("lhs {:.4} (SE {:.4}) vs rhs {:.4} (SE {:.4})", m.lhs, m.lhs_se, m.rhs, m.rhs_se),
        ));
    }
    report.checks.push(Check::new(
        "multiplier_sweep",
        failures == 0,
        format!("{failures} failing cells out of {}", multiplier.len()),
    ));
    Ok(report)
}

pub fn norm_sweep(config: &InequalityConfig) -> Result<Vec<NormInequalityMargin>> {
    let key = StreamKey::root(config.seed).named("norm");
    (0..config.laws)
        .into_par_iter()
        .map(|i| {
            let law_key = key.child(i as u64);
            let law = PositiveLaw::random_gamma_mixture(&mut law_key.named("law").rng());
            config
                .r_values
                .iter()
                .enumerate()
                .map(|(k, &r)| norm_inequality_check(&law, r, config.law_sample_size, law_key.child(k as u64)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

pub fn multiplier_sweep(config: &InequalityConfig) -> Result<Vec<MultiplierMargin>> {
    let key = StreamKey::root(config.seed).named("multiplier");
    let mut out = Vec::new();
    for &n in &config.n_values {
        let n0 = (n / config.n0_divisor.max(1)).max(1);
        for scheme in &config.schemes {
            let sample = simulate_multiplier(n, n0, scheme, &config.class, config.draws, key.child(n as u64).named(&scheme.to_string()))?;
            for &p in &config.p_values {
                out.push(sample.margin(p)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_law_sandwich() {
        let m = norm_inequality_check(&PositiveLaw::Constant { value: 1.0 }, 3.0, 1000, StreamKey::root(1)).unwrap();
        assert_eq!((m.l2, m.l21, m.lr), (1.0, 1.0, 1.0));
        assert_eq!(m.lower_margin, 0.5);
        assert!((m.upper_margin - 2.0).abs() < 1e-12);
        assert!(!m.violated);
    }

    #[test]
    fn uniform_law_norms() {
        let law = PositiveLaw::Uniform { low: 0.0, high: 1.0 };
        let m = norm_inequality_check(&law, 3.0, 200_000, StreamKey::root(2)).unwrap();
        assert!((m.l2 - 1.0 / 3f64.sqrt()).abs() < 0.005);
        assert!((m.l21 - 2.0 / 3.0).abs() < 0.005);
        assert!((m.lr - 0.25f64.powf(1.0 / 3.0)).abs() < 0.005);
        assert!(!m.violated);
    }

    #[test]
    fn rejects_small_r_and_bad_cutoff() {
        let law = PositiveLaw::Constant { value: 1.0 };
        assert!(matches!(norm_inequality_check(&law, 2.0, 1000, StreamKey::root(1)), Err(Error::Domain(_))));
        let class = MonomialClass::default();
        let r = multiplier_inequality_check(1, 50, 50, &WeightScheme::Efron, &class, 1000, StreamKey::root(1));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn envelope_norm_matches_closed_form_for_single_function() {
        // E|x - 1/2| = 1/4 and E(x - 1/2)^2 = 1/12 on U(0, 1).
        let class = MonomialClass { powers: vec![1] };
        assert!((class.envelope_norm(1) - 0.25).abs() < 1e-9);
        assert!((class.envelope_norm(2) - (1.0f64 / 12.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn unit_weights_have_unit_r_n() {
        let class = MonomialClass::default();
        let m = multiplier_inequality_check(2, 50, 5, &WeightScheme::Ones, &class, 400, StreamKey::root(3)).unwrap();
        assert_eq!(m.r_n, 1.0);
        assert_eq!(m.max_weight_norm, 1.0);
        assert!(m.holds);
    }
}
