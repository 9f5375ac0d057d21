//! Empirical weak-dependence diagnostics.
//!
//! For Lipschitz test functions `f, g` bounded by one, weak dependence bounds
//! `|Cov(f(X_0), g(X_l))|` by a coefficient that decays with the gap `l`;
//! for the base-b AR(1) that coefficient is at most `b^{-l}`. The checks here
//! measure the covariance for specific pairs and compare the measured decay
//! with a geometric envelope. Passing them is necessary, not sufficient.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean_sd, CompensatedSum};

/// A test function with a declared Lipschitz constant.
#[derive(Clone)]
pub struct LipschitzFn {
    pub name: String,
    pub lipschitz: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for LipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(Lip {})", self.name, self.lipschitz)
    }
}

impl LipschitzFn {
    pub fn new<F>(name: impl Into<String>, lipschitz: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LipschitzFn { name: name.into(), lipschitz, f: Arc::new(f) }
    }

    /// `x -> min(max(x, 0), 1)`.
    pub fn clipped_identity() -> Self {
        Self::new("clip01", 1.0, |x: f64| x.clamp(0.0, 1.0))
    }

    /// `x -> min(max(s x, -1), 1)`, Lipschitz constant `s`.
    pub fn clipped_linear(s: f64) -> Self {
        Self::new(format!("clip(±1,{s}x)"), s, move |x: f64| (s * x).clamp(-1.0, 1.0))
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone)]
pub struct TestPair {
    pub f: LipschitzFn,
    pub g: LipschitzFn,
}

impl TestPair {
    pub fn new(f: LipschitzFn, g: LipschitzFn) -> Self {
        TestPair { f, g }
    }

    pub fn name(&self) -> String {
        format!("{}/{}", self.f.name, self.g.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayOptions {
    /// Geometric envelope rate: the bound is `C * rate^l`.
    pub rate: f64,
    /// Number of contiguous batches a single long replicate is split into.
    pub batches: usize,
    /// Width of the tolerance band in standard errors.
    pub sigmas: f64,
}

impl DecayOptions {
    pub fn geometric(rate: f64) -> Self {
        DecayOptions { rate, batches: 50, sigmas: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub pair: String,
    pub lags: Vec<usize>,
    /// Signed covariance averaged over replicates.
    pub signed: Vec<f64>,
    /// `|Cov(f(X_0), g(X_l))|`.
    pub measured: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `C * rate^l`, `C` fitted at the smallest lag.
    pub bound: Vec<f64>,
    pub pass: Vec<bool>,
    /// `exp(slope)` of a least-squares fit of `ln |cov|` on the lag.
    pub fitted_rate: Option<f64>,
}

impl DecayReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

/// Lag-`l` sample covariance of `f(x_t)` and `g(x_{t+l})` within one path.
fn lagged_cov(fx: &[f64], gx: &[f64], lag: usize) -> f64 {
    let k = fx.len() - lag;
    let a = &fx[..k];
    let b = &gx[lag..];
    let am = a.iter().copied().collect::<CompensatedSum>().value() / k as f64;
    let bm = b.iter().copied().collect::<CompensatedSum>().value() / k as f64;
    a.iter().zip(b).map(|(x, y)| (x - am) * (y - bm)).collect::<CompensatedSum>().value() / k as f64
}

fn fit_rate(lags: &[usize], measured: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .zip(measured)
        .filter(|(_, m)| **m > 0.0)
        .map(|(&l, &m)| (l as f64, m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    (sxx > 0.0).then(|| (sxy / sxx).exp())
}

/// Measures `|Cov(f(X_0), g(X_l))|` for every pair and lag. With several
/// replicates the per-replicate estimates are averaged and their spread
/// gives the standard error; a single replicate is split into
/// `opts.batches` contiguous batches that play the same role.
pub fn covariance_decay(
    replicates: &[&[f64]],
    pairs: &[TestPair],
    lags: &[usize],
    opts: &DecayOptions,
) -> Result<Vec<DecayReport>> {
    if lags.is_empty() {
        return Err(Error::Domain("no lags requested".into()));
    }
    let max_lag = *lags.iter().max().unwrap_or(&0);
    let pieces: Vec<&[f64]> = match replicates {
        [] => return Err(Error::InsufficientData { needed: 1, got: 0 }),
        [single] => {
            let len = single.len() / opts.batches.max(2);
            if len < 2 * (max_lag + 2) {
                return Err(Error::InsufficientData { needed: 2 * (max_lag + 2) * opts.batches, got: single.len() });
            }
            single.chunks_exact(len).collect()
        }
        many => many.to_vec(),
    };
    if let Some(short) = pieces.iter().find(|p| p.len() < max_lag + 2) {
        return Err(Error::InsufficientData { needed: max_lag + 2, got: short.len() });
    }
    let mut reports = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let mapped: Vec<(Vec<f64>, Vec<f64>)> = pieces
            .iter()
            .map(|p| (p.iter().map(|&x| pair.f.apply(x)).collect(), p.iter().map(|&x| pair.g.apply(x)).collect()))
            .collect();
        let mut signed = Vec::with_capacity(lags.len());
        let mut std_error = Vec::with_capacity(lags.len());
        for &lag in lags {
            let per: Vec<f64> = mapped.iter().map(|(fx, gx)| lagged_cov(fx, gx, lag)).collect();
            let (m, sd) = mean_sd(&per);
            signed.push(m);
            std_error.push(sd / (per.len() as f64).sqrt());
        }
        let measured: Vec<f64> = signed.iter().map(|c| c.abs()).collect();
        let l0 = lags[0];
        let c = measured[0] / opts.rate.powi(l0 as i32);
        let bound: Vec<f64> = lags.iter().map(|&l| c * opts.rate.powi(l as i32)).collect();
        let pass = measured
            .iter()
            .zip(&bound)
            .zip(&std_error)
            .map(|((m, b), se)| *m <= b + opts.sigmas * se)
            .collect();
        reports.push(DecayReport {
            pair: pair.name(),
            lags: lags.to_vec(),
            signed,
            fitted_rate: fit_rate(lags, &measured),
            measured,
            std_error,
            bound,
            pass,
        });
    }
    Ok(reports)
}

/// Sum over blocks `j` of `|Cov(exp(i<t, S_{j-1}>), exp(i<t, W_j>))|`, where
/// `W_j` is the centered, `(n v_n)^{-1/2}`-scaled vector of functional values
/// of block `j` and `S_{j-1} = W_1 + ... + W_{j-1}`. Expectations are taken
/// across replicates; `block_values[r][j][k]` is functional `k` on block `j`
/// of replicate `r`. Reported as a statistic only.
pub fn lindeberg_dependence_sum(block_values: &[Vec<Vec<f64>>], t: &[f64], n: usize, v_n: f64) -> Result<f64> {
    let reps = block_values.len();
    if reps < 2 {
        return Err(Error::InsufficientData { needed: 2, got: reps });
    }
    let m = block_values[0].len();
    let k = t.len();
    if block_values.iter().any(|r| r.len() != m || r.iter().any(|b| b.len() != k)) {
        return Err(Error::Domain("block values must be replicates x blocks x functionals".into()));
    }
    let scale = (n as f64 * v_n).sqrt();
    if !(scale > 0.0) {
        return Err(Error::DegenerateScale { n, v_n });
    }
    // Cross-replicate mean as the centering E f(Y_{n,j}).
    let centers: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..k).map(|c| block_values.iter().map(|r| r[j][c]).sum::<f64>() / reps as f64).collect())
        .collect();
    let phase = |r: usize, j: usize| -> f64 {
        (0..k).map(|c| t[c] * (block_values[r][j][c] - centers[j][c]) / scale).sum()
    };
    let mut prefix = vec![0.0f64; reps];
    let mut total = 0.0;
    for j in 0..m {
        let mut ef = (0.0, 0.0);
        let mut eg = (0.0, 0.0);
        let mut efg = (0.0, 0.0);
        for (r, s) in prefix.iter().enumerate() {
            let w = phase(r, j);
            ef = (ef.0 + s.cos(), ef.1 + s.sin());
            eg = (eg.0 + w.cos(), eg.1 + w.sin());
            efg = (efg.0 + (s + w).cos(), efg.1 + (s + w).sin());
        }
        let q = reps as f64;
        let (ef, eg, efg) = ((ef.0 / q, ef.1 / q), (eg.0 / q, eg.1 / q), (efg.0 / q, efg.1 / q));
        let prod = (ef.0 * eg.0 - ef.1 * eg.1, ef.0 * eg.1 + ef.1 * eg.0);
        total += (efg.0 - prod.0).hypot(efg.1 - prod.1);
        for (r, s) in prefix.iter_mut().enumerate() {
            *s += phase(r, j);
        }
    }
    Ok(total)
}
