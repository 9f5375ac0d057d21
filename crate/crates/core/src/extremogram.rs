//! The extremogram estimator, its block decomposition and the closed forms
//! for the base-b AR(1) model with `A = B = (1, inf)`.
//!
//! For lag `h` the estimator is
//!
//! ```text
//! rho_hat(h) = #{i <= n - h : X_{n,i} in A, X_{n,i+h} in B} / #{i <= n : X_{n,i} in A}
//! ```
//!
//! and its numerator splits exactly into within-block pairs, pairs that
//! straddle a block boundary (the last `h` starts of each block) and pairs
//! starting in the trailing remainder.

use serde::Serialize;

use crate::clusters::{lag_pair_count, Block, Entry, SetSpec};
use crate::empirical::BlockScheme;
use crate::error::{Error, Result};
use crate::normalize::NormalizedSeries;
use crate::stats::CompensatedSum;

/// Largest tuple count `b^h` the exact enumeration accepts.
pub const MAX_ENUMERATION: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremogramConfig {
    pub a: SetSpec,
    pub b: SetSpec,
    /// Lags `0..=max_lag` are estimated.
    pub max_lag: usize,
    pub u_n: f64,
    pub v_n: f64,
    pub scheme: BlockScheme,
}

impl ExtremogramConfig {
    pub fn new(a: SetSpec, b: SetSpec, max_lag: usize, u_n: f64, v_n: f64, scheme: BlockScheme) -> Result<Self> {
        let cfg = ExtremogramConfig { a, b, max_lag, u_n, v_n, scheme };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Right-tail configuration `A = B = (1, inf)`.
    pub fn right_tail(max_lag: usize, u_n: f64, v_n: f64, scheme: BlockScheme) -> Result<Self> {
        let a = SetSpec::above(1.0)?;
        Self::new(a.clone(), a, max_lag, u_n, v_n, scheme)
    }

    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        if self.max_lag >= self.scheme.r_n() {
            return Err(Error::InvalidLag { h: self.max_lag, r_n: self.scheme.r_n() });
        }
        Ok(())
    }

    pub fn lags(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.max_lag
    }
}

/// Split of the lag-`h` numerator count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairDecomposition {
    /// `sum_j f_{A,B,h}(Y_{n,j})`.
    pub block_sum: usize,
    /// `sum_j delta_{n,j}`: pairs starting in the last `h` positions of a block.
    pub delta_sum: usize,
    /// `R_n`: pairs starting after the last full block.
    pub remainder: usize,
}

impl PairDecomposition {
    pub fn total(&self) -> usize {
        self.block_sum + self.delta_sum + self.remainder
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagEstimate {
    pub h: usize,
    pub numerator: usize,
    pub denominator: usize,
    pub rho_hat: f64,
    pub decomposition: PairDecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremogramEstimate {
    pub n: usize,
    pub denominator: usize,
    pub lags: Vec<LagEstimate>,
}

impl ExtremogramEstimate {
    pub fn rho_hat(&self) -> Vec<f64> {
        self.lags.iter().map(|l| l.rho_hat).collect()
    }

    /// Boundary and remainder counts scaled by `(n v_n)^{-1/2}`, per lag.
    pub fn boundary_terms(&self, v_n: f64) -> Vec<(f64, f64)> {
        let s = (self.n as f64 * v_n).sqrt();
        self.lags
            .iter()
            .map(|l| (l.decomposition.delta_sum as f64 / s, l.decomposition.remainder as f64 / s))
            .collect()
    }
}

fn membership<E: Entry>(values: &[E], set: &SetSpec) -> Vec<bool> {
    values.iter().map(|x| set.contains(x.coords())).collect()
}

fn pair_count(in_a: &[bool], in_b: &[bool], h: usize, starts: std::ops::Range<usize>) -> usize {
    let n = in_a.len();
    let end = starts.end.min(n.saturating_sub(h));
    (starts.start..end.max(starts.start)).filter(|&i| in_a[i] && in_b[i + h]).count()
}

fn decompose(in_a: &[bool], in_b: &[bool], scheme: &BlockScheme, h: usize) -> PairDecomposition {
    let r = scheme.r_n();
    let m = scheme.m_n();
    let mut block_sum = 0;
    let mut delta_sum = 0;
    for j in 0..m {
        let start = j * r;
        block_sum += pair_count(in_a, in_b, h, start..start + r - h);
        delta_sum += pair_count(in_a, in_b, h, start + r - h..start + r);
    }
    let remainder = pair_count(in_a, in_b, h, m * r..in_a.len());
    PairDecomposition { block_sum, delta_sum, remainder }
}

fn check_len<E>(ns: &NormalizedSeries<E>, cfg: &ExtremogramConfig) -> Result<()> {
    if cfg.scheme.n() != ns.values.len() {
        return Err(Error::InvalidScheme(format!(
            "scheme is for n = {} but the series has {} values",
            cfg.scheme.n(),
            ns.values.len()
        )));
    }
    Ok(())
}

pub fn estimate_extremogram<E: Entry>(ns: &NormalizedSeries<E>, cfg: &ExtremogramConfig) -> Result<ExtremogramEstimate> {
    cfg.validate()?;
    check_len(ns, cfg)?;
    let n = ns.values.len();
    let in_a = membership(&ns.values, &cfg.a);
    let in_b = if cfg.a == cfg.b { in_a.clone() } else { membership(&ns.values, &cfg.b) };
    let denominator = in_a.iter().filter(|&&x| x).count();
    if denominator == 0 {
        return Err(Error::NoExceedances { observations: n });
    }
    let lags = cfg
        .lags()
        .map(|h| {
            let decomposition = decompose(&in_a, &in_b, &cfg.scheme, h);
            let numerator = decomposition.total();
            LagEstimate {
                h,
                numerator,
                denominator,
                rho_hat: numerator as f64 / denominator as f64,
                decomposition,
            }
        })
        .collect();
    Ok(ExtremogramEstimate { n, denominator, lags })
}

pub fn decompose_pair_counts<E: Entry>(
    ns: &NormalizedSeries<E>,
    cfg: &ExtremogramConfig,
    h: usize,
) -> Result<PairDecomposition> {
    if h >= cfg.scheme.r_n() {
        return Err(Error::InvalidLag { h, r_n: cfg.scheme.r_n() });
    }
    check_len(ns, cfg)?;
    let in_a = membership(&ns.values, &cfg.a);
    let in_b = membership(&ns.values, &cfg.b);
    Ok(decompose(&in_a, &in_b, &cfg.scheme, h))
}

fn check_base(b: u32) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidSpec(format!("b must be >= 2, got {b}")));
    }
    Ok(())
}

/// Limiting extremogram `b^{-h}` of the base-b AR(1) for `A = B = (1, inf)`.
pub fn theoretical_extremogram_ar1(b: u32, h: usize) -> Result<f64> {
    check_base(b)?;
    let exp = i32::try_from(h).map_err(|_| Error::Domain(format!("lag {h} too large")))?;
    Ok(f64::from(b).powi(exp).recip())
}

/// Pre-asymptotic extremogram `P{X_h > 1 - v_n | X_0 > 1 - v_n}` of the
/// base-b AR(1):
///
/// ```text
/// b^{-h} sum_{j in {0..b-1}^h} min{1, (1 - (1 - v_n) b^h + sum_s j_s b^{s-1})_+ / v_n}
/// ```
///
/// The digit tuple `(j_1, ..., j_h)` is enumerated through its base-b value
/// `k = sum_s j_s b^{s-1}`, which runs over `0..b^h` exactly once. The
/// integer part `1 - b^h + k` is formed exactly before adding `v_n b^h`.
pub fn pa_extremogram_ar1(b: u32, h: usize, v_n: f64) -> Result<f64> {
    check_base(b)?;
    if !(v_n > 0.0 && v_n < 1.0) {
        return Err(Error::Domain(format!("v_n must lie in (0, 1), got {v_n}")));
    }
    let tuples = f64::from(b).powf(h as f64);
    if tuples > MAX_ENUMERATION as f64 {
        return Err(Error::InfeasibleLag { b, h, tuples, limit: MAX_ENUMERATION });
    }
    let count = u64::from(b).pow(h as u32);
    let bh = count as f64;
    let shift = v_n * bh;
    let mut acc = CompensatedSum::default();
    for k in 0..count {
        let integer_part = (k as f64 + 1.0) - bh;
        let positive = (integer_part + shift).max(0.0);
        if positive > 0.0 {
            acc.add((positive / v_n).min(1.0));
        }
    }
    Ok(acc.value() / bh)
}

/// `sqrt(n v_n) (rho_hat(h) - pa(h))` per lag.
pub fn asymptotic_error_vector(estimate: &ExtremogramEstimate, pa: &[f64], n: usize, v_n: f64) -> Result<Vec<f64>> {
    if pa.len() != estimate.lags.len() {
        return Err(Error::Domain(format!(
            "{} reference values for {} lags",
            pa.len(),
            estimate.lags.len()
        )));
    }
    if let Some(bad) = pa.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("reference extremogram value {bad} outside [0, 1]")));
    }
    let s = (n as f64 * v_n).sqrt();
    Ok(estimate.lags.iter().zip(pa).map(|(l, p)| s * (l.rho_hat - p)).collect())
}

/// Block estimates of the covariance functions and the assembled matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    /// `sigma(h, h')`.
    pub sigma: Vec<Vec<f64>>,
    /// `sigma'(h)`.
    pub sigma_prime: Vec<f64>,
    /// `sigma'_{A,A}(0)`.
    pub sigma_prime_aa0: f64,
    /// `Sigma[h][h'] = sigma(h,h') - rho(h') sigma'(h) - rho(h) sigma'(h') + rho(h) rho(h') sigma'_{A,A}(0)`.
    pub matrix: Vec<Vec<f64>>,
    pub blocks: usize,
}

impl CovarianceEstimate {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.len()).map(|h| self.matrix[h][h]).collect()
    }
}

/// Estimates the covariance functions by pooled within-block frequencies:
/// `sigma(h,h') = E[f_{A,B,h}(Y) f_{A,B,h'}(Y)] / (r_n v_n)` and
/// `sigma'(h) = E[f_{A,B,h}(Y) f_{A,A,0}(Y)] / (r_n v_n)`, averaged over all
/// blocks. `rho` supplies the extremogram used in the assembly (lags `0..=max_lag`).
pub fn covariance_matrix_estimate<E: Entry>(
    blocks: &[Block<E>],
    a: &SetSpec,
    b: &SetSpec,
    max_lag: usize,
    v_n: f64,
    rho: &[f64],
) -> Result<CovarianceEstimate> {
    if blocks.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: blocks.len() });
    }
    if rho.len() != max_lag + 1 {
        return Err(Error::Domain(format!("need {} extremogram values, got {}", max_lag + 1, rho.len())));
    }
    let r_n = blocks[0].len();
    if blocks.iter().any(|blk| blk.len() != r_n) {
        return Err(Error::InvalidScheme("blocks must share one length".into()));
    }
    if max_lag >= r_n {
        return Err(Error::InvalidLag { h: max_lag, r_n });
    }
    let rv = r_n as f64 * v_n;
    if !(rv > 0.0) {
        return Err(Error::DegenerateScale { n: r_n, v_n });
    }
    let lags = max_lag + 1;
    let mut cross = vec![vec![CompensatedSum::default(); lags]; lags];
    let mut prime = vec![CompensatedSum::default(); lags];
    let mut aa0 = CompensatedSum::default();
    let mut f = vec![0.0; lags];
    for blk in blocks {
        let x = blk.entries();
        for (h, slot) in f.iter_mut().enumerate() {
            *slot = lag_pair_count(x, a, b, h) as f64;
        }
        let f_aa0 = lag_pair_count(x, a, a, 0) as f64;
        for h in 0..lags {
            for k in h..lags {
                cross[h][k].add(f[h] * f[k]);
            }
            prime[h].add(f[h] * f_aa0);
        }
        aa0.add(f_aa0 * f_aa0);
    }
    let denom = blocks.len() as f64 * rv;
    let mut sigma = vec![vec![0.0; lags]; lags];
    for h in 0..lags {
        for k in h..lags {
            sigma[h][k] = cross[h][k].value() / denom;
            sigma[k][h] = sigma[h][k];
        }
    }
    let sigma_prime: Vec<f64> = prime.iter().map(|s| s.value() / denom).collect();
    let sigma_prime_aa0 = aa0.value() / denom;
    let mut matrix = vec![vec![0.0; lags]; lags];
    for h in 0..lags {
        for k in h..lags {
            let v = sigma[h][k] - rho[k] * sigma_prime[h] - rho[h] * sigma_prime[k]
                + rho[h] * rho[k] * sigma_prime_aa0;
            matrix[h][k] = v;
            matrix[k][h] = v;
        }
    }
    Ok(CovarianceEstimate { sigma, sigma_prime, sigma_prime_aa0, matrix, blocks: blocks.len() })
}
