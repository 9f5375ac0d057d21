//! Seeded generators for the weakly dependent models used throughout the
//! crate: the base-b AR(1) recursion `X_k = (X_{k-1} + xi_k) / b`, causal
//! linear processes and the stationary Gaussian AR(1).

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default number of base-b digits carried by the fixed-point AR(1) state.
pub const DEFAULT_PRECISION_DIGITS: u32 = 64;
/// Default truncation length for causal linear filters.
pub const DEFAULT_TRUNCATION: usize = 64;
/// Tail mass above which a truncated filter is reported.
pub const TAIL_MASS_WARN: f64 = 1e-8;

/// Innovation law for causal linear processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Innovation {
    StandardNormal,
    Normal { mean: f64, sd: f64 },
    /// Continuous uniform on `[lo, hi)`.
    Uniform { lo: f64, hi: f64 },
    /// Uniform on the digit set `{0, ..., b - 1}`.
    Digits { b: u32 },
}

impl Innovation {
    fn validate(&self) -> Result<()> {
        match *self {
            Innovation::StandardNormal => Ok(()),
            Innovation::Normal { mean, sd } if mean.is_finite() && sd.is_finite() && sd > 0.0 => {
                Ok(())
            }
            Innovation::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Innovation::Digits { b } if b >= 2 => Ok(()),
            ref other => Err(Error::InvalidSpec(format!("bad innovation law {other:?}"))),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::StandardNormal => StandardNormal.sample(rng),
            Innovation::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Innovation::Uniform { lo, hi } => rng.random_range(lo..hi),
            Innovation::Digits { b } => rng.random_range(0..b) as f64,
        }
    }
}

/// Model description, serializable to the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `X_k = (X_{k-1} + xi_k) / b`, `xi_k` uniform on `{0, ..., b-1}`.
    #[serde(rename = "base_b_ar1")]
    BaseBAr1 {
        b: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        precision: Option<u32>,
    },
    /// `X_i = sum_j a_j xi_{i-j}`.
    CausalLinear {
        coeffs: Vec<f64>,
        innovation: Innovation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<usize>,
    },
    #[serde(rename = "gaussian_ar1")]
    GaussianAr1 { phi: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::BaseBAr1 { b, precision } => {
                BaseBAr1::with_precision(*b, precision.unwrap_or_else(|| default_precision(*b))).map(|_| ())
            }
            ModelSpec::CausalLinear { coeffs, innovation, truncation } => {
                CausalLinear::new(coeffs.clone(), innovation.clone(), truncation.unwrap_or(DEFAULT_TRUNCATION))
                    .map(|_| ())
            }
            ModelSpec::GaussianAr1 { phi } => check_phi(*phi),
        }
    }

    /// `P{X_0 > u}` (or `P{|X_0| > u}` when `two_sided`) if known in closed form.
    pub fn tail_probability(&self, u: f64, two_sided: bool) -> Option<f64> {
        match *self {
            // Uniform[0, 1) marginal; values are nonnegative so both forms agree.
            ModelSpec::BaseBAr1 { .. } => Some((1.0 - u.max(0.0)).clamp(0.0, 1.0)),
            ModelSpec::GaussianAr1 { phi } => {
                let sd = (1.0 - phi * phi).recip().sqrt();
                if two_sided {
                    Some((2.0 * crate::stats::normal_sf(u.abs() / sd)).min(1.0))
                } else {
                    Some(crate::stats::normal_sf(u / sd))
                }
            }
            ModelSpec::CausalLinear { .. } => None,
        }
    }
}

/// A finite realization together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub spec: ModelSpec,
    pub seed: u64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Generate `n` observations of the model described by `spec`.
pub fn generate(spec: &ModelSpec, n: usize, seed: u64) -> Result<TimeSeries> {
    match spec {
        ModelSpec::BaseBAr1 { b, precision } => {
            let gen = BaseBAr1::with_precision(*b, precision.unwrap_or_else(|| default_precision(*b)))?;
            Ok(TimeSeries { values: gen.generate(n, seed)?, spec: spec.clone(), seed })
        }
        ModelSpec::CausalLinear { coeffs, innovation, truncation } => {
            let gen = CausalLinear::new(
                coeffs.clone(),
                innovation.clone(),
                truncation.unwrap_or(DEFAULT_TRUNCATION),
            )?;
            Ok(TimeSeries { values: gen.generate(n, seed)?, spec: spec.clone(), seed })
        }
        ModelSpec::GaussianAr1 { phi } => generate_gaussian_ar1(*phi, n, seed),
    }
}

/// Base-b AR(1) generated as an exact digit shift.
///
/// The state holds the leading `precision` base-b digits of `X_k` as an
/// integer `D` with `X_k = D / b^precision`. One step of the recursion
/// divides `D` by `b` (dropping the last digit) and writes `xi_k` into the
/// leading position, so `b * X_k - X_{k-1}` is the innovation up to the
/// dropped digit (`< b^{1-precision}`), and rounding never accumulates.
#[derive(Debug, Clone, Copy)]
pub struct BaseBAr1 {
    b: u32,
    precision: u32,
    scale: u128,
    lead: u128,
}

impl BaseBAr1 {
    pub fn new(b: u32) -> Result<Self> {
        Self::with_precision(b, default_precision(b))
    }

    pub fn with_precision(b: u32, precision: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidSpec(format!("base-b AR(1) requires b >= 2, got {b}")));
        }
        let max = max_digits(b);
        if precision == 0 || precision > max {
            return Err(Error::InvalidSpec(format!(
                "precision must be in 1..={max} digits for b = {b}, got {precision}"
            )));
        }
        let base = u128::from(b);
        let lead = base.pow(precision - 1);
        Ok(BaseBAr1 { b, precision, scale: lead * base, lead })
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    fn to_f64(&self, state: u128) -> f64 {
        let x = state as f64 / self.scale as f64;
        // Rounding of a state within half an ulp of b^precision.
        if x >= 1.0 {
            1.0 - f64::EPSILON / 2.0
        } else {
            x
        }
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidSpec("series length must be at least 1".into()));
        }
        let mut rng = rng::stream(seed);
        // X_0 uniform on [0, 1) is equivalent to i.i.d. uniform digits.
        let mut state: u128 = rng.random_range(0..self.scale);
        let mut out = Vec::with_capacity(n);
        out.push(self.to_f64(state));
        let base = u128::from(self.b);
        for _ in 1..n {
            let xi = u128::from(rng.random_range(0..self.b));
            state = state / base + xi * self.lead;
            out.push(self.to_f64(state));
        }
        Ok(out)
    }
}

/// 64 digits, or fewer when `b^64` does not fit in a `u128`.
pub fn default_precision(b: u32) -> u32 {
    DEFAULT_PRECISION_DIGITS.min(max_digits(b.max(2)))
}

/// Largest digit count `p` with `b^p` representable in a `u128`.
fn max_digits(b: u32) -> u32 {
    let base = u128::from(b);
    let mut p = 0;
    let mut acc: u128 = 1;
    while let Some(next) = acc.checked_mul(base) {
        acc = next;
        p += 1;
    }
    p
}

pub fn generate_ar1_base_b(b: u32, n: usize, seed: u64) -> Result<TimeSeries> {
    let gen = BaseBAr1::new(b)?;
    Ok(TimeSeries {
        values: gen.generate(n, seed)?,
        spec: ModelSpec::BaseBAr1 { b, precision: Some(gen.precision()) },
        seed,
    })
}

/// Truncated causal linear filter `X_i = sum_{j < J} a_j xi_{i-j}`.
#[derive(Debug, Clone)]
pub struct CausalLinear {
    coeffs: Vec<f64>,
    innovation: Innovation,
    tail_mass: f64,
}

impl CausalLinear {
    /// Keeps the first `truncation` coefficients; the absolute mass of the
    /// dropped ones is reported by [`CausalLinear::tail_mass`].
    pub fn new(mut coeffs: Vec<f64>, innovation: Innovation, truncation: usize) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSpec("causal linear process needs at least one coefficient".into()));
        }
        if truncation == 0 {
            return Err(Error::InvalidSpec("truncation length must be at least 1".into()));
        }
        if let Some(bad) = coeffs.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite filter coefficient {bad}")));
        }
        innovation.validate()?;
        let tail_mass: f64 = coeffs.iter().skip(truncation).map(|a| a.abs()).sum();
        coeffs.truncate(truncation);
        if tail_mass > TAIL_MASS_WARN {
            log::warn!("causal linear filter truncated at {truncation} taps drops tail mass {tail_mass:e}");
        }
        Ok(CausalLinear { coeffs, innovation, tail_mass })
    }

    /// Coefficients `a_j = b^{-j-1}` for `j < taps`, the linear form of the
    /// base-b AR(1) driven by digit innovations.
    pub fn base_b_ar1(b: u32, taps: usize) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidSpec(format!("b must be >= 2, got {b}")));
        }
        let inv = 1.0 / f64::from(b);
        let coeffs: Vec<f64> = std::iter::successors(Some(inv), |a| Some(a * inv)).take(taps).collect();
        Self::new(coeffs, Innovation::Digits { b }, taps)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidSpec("series length must be at least 1".into()));
        }
        let taps = self.coeffs.len();
        let mut rng = rng::stream(seed);
        // The first taps - 1 draws are burn-in so every emitted value sees a full filter.
        let xi: Vec<f64> = (0..n + taps - 1).map(|_| self.innovation.sample(&mut rng)).collect();
        Ok((0..n)
            .map(|i| {
                let t = i + taps - 1;
                self.coeffs.iter().enumerate().map(|(j, a)| a * xi[t - j]).sum()
            })
            .collect())
    }
}

pub fn generate_causal_linear(
    coeffs: &[f64],
    innovation: Innovation,
    n: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let gen = CausalLinear::new(coeffs.to_vec(), innovation.clone(), DEFAULT_TRUNCATION)?;
    Ok(TimeSeries {
        values: gen.generate(n, seed)?,
        spec: ModelSpec::CausalLinear { coeffs: coeffs.to_vec(), innovation, truncation: None },
        seed,
    })
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_finite() && phi.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("Gaussian AR(1) requires |phi| < 1, got {phi}")))
    }
}

/// Stationary Gaussian AR(1): `X_0 ~ N(0, 1/(1-phi^2))`, `X_k = phi X_{k-1} + eps_k`.
pub fn generate_gaussian_ar1(phi: f64, n: usize, seed: u64) -> Result<TimeSeries> {
    check_phi(phi)?;
    if n == 0 {
        return Err(Error::InvalidSpec("series length must be at least 1".into()));
    }
    let mut rng = rng::stream(seed);
    let stationary = Normal::new(0.0, (1.0 - phi * phi).recip().sqrt())
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut x = stationary.sample(&mut rng);
    let mut values = Vec::with_capacity(n);
    values.push(x);
    for _ in 1..n {
        let eps: f64 = StandardNormal.sample(&mut rng);
        x = phi * x + eps;
        values.push(x);
    }
    Ok(TimeSeries { values, spec: ModelSpec::GaussianAr1 { phi }, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    fn autocov(x: &[f64], lag: usize) -> f64 {
        let (m, _) = mean_var(x);
        let k = x.len() - lag;
        (0..k).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / k as f64
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(matches!(generate_ar1_base_b(1, 10, 0), Err(Error::InvalidSpec(_))));
        assert!(matches!(generate_ar1_base_b(2, 0, 0), Err(Error::InvalidSpec(_))));
        assert!(generate_gaussian_ar1(1.0, 10, 0).is_err());
        assert!(generate_gaussian_ar1(-1.2, 10, 0).is_err());
        assert!(generate_causal_linear(&[], Innovation::StandardNormal, 10, 0).is_err());
        assert!(BaseBAr1::with_precision(2, 128).is_err());
        assert!(BaseBAr1::with_precision(2, 127).is_ok());
        assert_eq!(BaseBAr1::new(10).unwrap().precision(), 38);
    }

    #[test]
    fn single_value_is_stationary_draw() {
        let ts = generate_ar1_base_b(2, 1, 17).unwrap();
        assert_eq!(ts.len(), 1);
        assert!((0.0..1.0).contains(&ts.values[0]));
    }

    #[test]
    fn base_b_recursion_and_range_hold_exactly() {
        for b in [2u32, 3, 5, 10] {
            let x = generate_ar1_base_b(b, 20_000, u64::from(b)).unwrap().values;
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
            for w in x.windows(2) {
                let d = f64::from(b) * w[1] - w[0];
                let digit = d.round();
                assert!((d - digit).abs() < 1e-12, "b={b}: residual {}", d - digit);
                assert!((0.0..f64::from(b)).contains(&digit));
            }
        }
    }

    #[test]
    fn base_2_moments_and_autocovariance() {
        // Uniform[0,1] marginal: mean 1/2, variance 1/12; Cov(X_0, X_l) = 2^{-l}/12.
        let n = 1_000_000;
        let x = generate_ar1_base_b(2, n, 2024).unwrap().values;
        let (m, v) = mean_var(&x);
        // Long-run variance of the mean is Var * (1 + 2 sum 2^{-l}) = 3 Var.
        let se_mean = (3.0 / 12.0 / n as f64).sqrt();
        assert!((m - 0.5).abs() < 3.0 * se_mean, "mean {m}");
        // The fourth central moment of U[0,1] is 1/80; inflate by 3 for dependence.
        let se_var = (3.0 * (1.0 / 80.0 - 1.0 / 144.0) / n as f64).sqrt();
        assert!((v - 1.0 / 12.0).abs() < 3.0 * se_var, "var {v}");
        for l in 1..=5 {
            let c = autocov(&x, l);
            let expect = 0.5f64.powi(l as i32) / 12.0;
            assert!((c - expect).abs() < 3.0 * se_var, "lag {l}: {c} vs {expect}");
        }
    }

    #[test]
    fn single_tap_filter_is_iid_innovations() {
        let ts = generate_causal_linear(&[1.0], Innovation::StandardNormal, 50_000, 5).unwrap();
        let (m, v) = mean_var(&ts.values);
        assert!(m.abs() < 3.0 / (50_000f64).sqrt());
        assert!((v - 1.0).abs() < 3.0 * (2.0 / 50_000f64).sqrt());
        assert!(autocov(&ts.values, 1).abs() < 3.0 / (50_000f64).sqrt());
    }

    #[test]
    fn ma1_lag_one_autocovariance() {
        let n = 200_000;
        let ts = generate_causal_linear(&[1.0, 0.5], Innovation::StandardNormal, n, 9).unwrap();
        let c1 = autocov(&ts.values, 1);
        // Var of the lag-1 product average is at most (1.25^2 + 2*0.5^2 ...)/n; 2/sqrt(n) is generous.
        assert!((c1 - 0.5).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{c1}");
    }

    #[test]
    fn geometric_filter_matches_ar1_marginals() {
        let gen = CausalLinear::base_b_ar1(2, DEFAULT_TRUNCATION).unwrap();
        assert!(gen.tail_mass() == 0.0);
        let n = 400_000;
        let x = gen.generate(n, 31).unwrap();
        let (m, v) = mean_var(&x);
        assert!((m - 0.5).abs() < 3.0 * (3.0 / 12.0 / n as f64).sqrt(), "mean {m}");
        assert!((v - 1.0 / 12.0).abs() < 3.0 * (3.0 * (1.0 / 80.0 - 1.0 / 144.0) / n as f64).sqrt());
        assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn truncation_reports_tail_mass() {
        let coeffs: Vec<f64> = (0..100).map(|j| 0.9f64.powi(j)).collect();
        let gen = CausalLinear::new(coeffs, Innovation::StandardNormal, 10).unwrap();
        assert_eq!(gen.coeffs().len(), 10);
        let expect: f64 = (10..100).map(|j| 0.9f64.powi(j)).sum();
        assert!((gen.tail_mass() - expect).abs() < 1e-12);
    }

    #[test]
    fn gaussian_ar1_moments() {
        let n = 400_000;
        let x = generate_gaussian_ar1(0.5, n, 3).unwrap().values;
        let (_, v) = mean_var(&x);
        let rho = autocov(&x, 1) / v;
        // Bartlett: Var(rho_1) ~ (1 - phi^2) / n for AR(1).
        assert!((rho - 0.5).abs() < 3.0 * (0.75 / n as f64).sqrt(), "{rho}");

        let x = generate_gaussian_ar1(0.9, n, 4).unwrap().values;
        let (_, v) = mean_var(&x);
        let target = 1.0 / (1.0 - 0.81);
        // Var of the sample variance of AR(1): 2 sigma^4 (1 + phi^2)/(1 - phi^2) / n.
        let se = (2.0 * target * target * (1.81 / 0.19) / n as f64).sqrt();
        assert!((v - target).abs() < 3.0 * se, "{v}");

        let x = generate_gaussian_ar1(0.0, n, 5).unwrap().values;
        assert!(autocov(&x, 1).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        let spec = ModelSpec::BaseBAr1 { b: 3, precision: None };
        let a = generate(&spec, 1000, 11).unwrap();
        let b = generate(&spec, 1000, 11).unwrap();
        assert_eq!(a.values, b.values);
        for s in 0..20u64 {
            let x = generate(&spec, 64, s).unwrap().values;
            let y = generate(&spec, 64, s + 1000).unwrap().values;
            assert_ne!(x, y);
        }
        let g = ModelSpec::GaussianAr1 { phi: 0.3 };
        assert_eq!(generate(&g, 100, 1).unwrap().values, generate(&g, 100, 1).unwrap().values);
    }

    #[test]
    fn model_spec_json_round_trip() {
        let spec = ModelSpec::CausalLinear {
            coeffs: vec![1.0, 0.5],
            innovation: Innovation::Uniform { lo: 0.0, hi: 1.0 },
            truncation: Some(8),
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), spec);
        let parsed: ModelSpec = serde_json::from_str(r#"{"kind":"base_b_ar1","b":2}"#).unwrap();
        assert_eq!(parsed, ModelSpec::BaseBAr1 { b: 2, precision: None });
    }
}
