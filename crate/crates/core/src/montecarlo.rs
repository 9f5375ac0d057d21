//! Replicated extremogram experiments: per-replicate estimates, errors
//! against the pre-asymptotic extremogram, symmetric 95% bands and
//! normality diagnostics of the scaled errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::{Block, SetSpec};
use crate::empirical::{check_block_scheme, partition_blocks, BlockScheme, SchemeReport, SchemeThresholds};
use crate::error::{Error, Result};
use crate::extremogram::{
    asymptotic_error_vector, covariance_matrix_estimate, estimate_extremogram, pa_extremogram_ar1,
    CovarianceEstimate, ExtremogramConfig,
};
use crate::normalize::{normalize_hard_threshold, VnChoice};
use crate::processes::{generate, ModelSpec};
use crate::rng::derive_seed;
use crate::stats::{anderson_darling, mean_sd, quantile, NormalityTest};

/// Half-width multiplier of the normal-theory bands.
pub const BAND_Z: f64 = 1.96;
/// Largest tolerated fraction of replicates without exceedances.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.10;
pub const DEFAULT_REFERENCE_LENGTH: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    /// `mean +- 1.96 sd` across replicates.
    #[default]
    Normal,
    /// Empirical 2.5% and 97.5% quantiles across replicates.
    Quantile,
}

fn right_tail() -> SetSpec {
    SetSpec::Above { c: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub n: usize,
    pub replicates: usize,
    pub v_n: f64,
    /// Defaults to `1 - v_n`, the matching quantile of a uniform marginal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub max_lag: usize,
    pub block_length: usize,
    pub small_block_length: usize,
    pub base_seed: u64,
    #[serde(default = "right_tail")]
    pub a: SetSpec,
    #[serde(default = "right_tail")]
    pub b: SetSpec,
    #[serde(default)]
    pub bands: BandMethod,
    /// Path length for the simulated reference when no closed form applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_length: Option<usize>,
}

impl ExperimentSpec {
    /// The published setting: base-2 AR(1), 50 replicates of 2000, `v_n = 1/sqrt(n)`, lags up to 20.
    pub fn fig1(base_seed: u64) -> Self {
        let n = 2000;
        ExperimentSpec {
            model: ModelSpec::BaseBAr1 { b: 2, precision: None },
            n,
            replicates: 50,
            v_n: 1.0 / (10.0 * 2f64.sqrt()),
            threshold: None,
            max_lag: 20,
            block_length: 200,
            small_block_length: 10,
            base_seed,
            a: right_tail(),
            b: right_tail(),
            bands: BandMethod::Normal,
            reference_length: None,
        }
    }

    pub fn u_n(&self) -> Result<f64> {
        match (self.threshold, &self.model) {
            (Some(u), _) => Ok(u),
            (None, ModelSpec::BaseBAr1 { .. }) => Ok(1.0 - self.v_n),
            (None, _) => Err(Error::Config("threshold is required for models without a uniform marginal".into())),
        }
    }

    pub fn scheme(&self) -> Result<BlockScheme> {
        BlockScheme::new(self.n, self.block_length, self.small_block_length)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replicates < 2 {
            return Err(Error::Config(format!("need at least 2 replicates, got {}", self.replicates)));
        }
        if !(self.v_n > 0.0 && self.v_n < 1.0) {
            return Err(Error::Config(format!("v_n must lie in (0, 1), got {}", self.v_n)));
        }
        let u = self.u_n()?;
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::InvalidThreshold(u));
        }
        self.a.validate()?;
        self.b.validate()?;
        let scheme = self.scheme()?;
        if self.max_lag >= scheme.r_n() {
            return Err(Error::InvalidLag { h: self.max_lag, r_n: scheme.r_n() });
        }
        Ok(())
    }

    fn config(&self) -> Result<ExtremogramConfig> {
        ExtremogramConfig::new(self.a.clone(), self.b.clone(), self.max_lag, self.u_n()?, self.v_n, self.scheme()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    /// Exact enumeration for the base-b AR(1).
    ClosedForm,
    /// Estimator applied to one long simulated path.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub exceedances: usize,
    pub rho_hat: Vec<f64>,
    /// `rho_hat(h) - rho_n(h)`.
    pub errors: Vec<f64>,
    /// `sqrt(n v_n) (rho_hat(h) - rho_n(h))`.
    pub scaled_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCResult {
    pub lags: Vec<usize>,
    pub u_n: f64,
    pub v_n: f64,
    pub scale: f64,
    pub pa: Vec<f64>,
    pub pa_source: ReferenceSource,
    pub band_method: BandMethod,
    pub replicates: Vec<ReplicateResult>,
    pub excluded: Vec<usize>,
    pub mean_rho_hat: Vec<f64>,
    pub sd_rho_hat: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub sd_error: Vec<f64>,
    pub err_band_lo: Vec<f64>,
    pub err_band_hi: Vec<f64>,
    /// Anderson-Darling normality test of the scaled errors, per lag;
    /// `None` when the sample is too small or has no spread.
    pub normality: Vec<Option<NormalityTest>>,
    pub covariance: Option<CovarianceEstimate>,
    pub scheme_report: Option<SchemeReport>,
    pub warnings: Vec<String>,
}

/// Reference extremogram `rho_n(h)` for lags `0..=max_lag`.
pub fn reference_extremogram(spec: &ExperimentSpec) -> Result<(Vec<f64>, ReferenceSource)> {
    let u = spec.u_n()?;
    let right = right_tail();
    if let ModelSpec::BaseBAr1 { b, .. } = spec.model {
        if spec.a == right && spec.b == right && u > 0.0 && u < 1.0 {
            let closed: Result<Vec<f64>> = (0..=spec.max_lag).map(|h| pa_extremogram_ar1(b, h, 1.0 - u)).collect();
            match closed {
                Ok(pa) => return Ok((pa, ReferenceSource::ClosedForm)),
                Err(Error::InfeasibleLag { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let len = spec.reference_length.unwrap_or(DEFAULT_REFERENCE_LENGTH);
    let series = generate(&spec.model, len, derive_seed(spec.base_seed, u64::MAX))?;
    let ns = normalize_hard_threshold(&series, u, VnChoice::Empirical)?;
    let scheme = BlockScheme::new(len, spec.block_length.min(len), 1)?;
    let cfg = ExtremogramConfig::new(spec.a.clone(), spec.b.clone(), spec.max_lag, u, ns.v_n, scheme)?;
    Ok((estimate_extremogram(&ns, &cfg)?.rho_hat(), ReferenceSource::Simulated))
}

enum Outcome {
    Kept(ReplicateResult, Vec<Block>),
    Excluded(usize),
}

fn run_replicate(spec: &ExperimentSpec, cfg: &ExtremogramConfig, pa: &[f64], index: usize) -> Result<Outcome> {
    let seed = derive_seed(spec.base_seed, index as u64);
    let series = generate(&spec.model, spec.n, seed)?;
    let ns = normalize_hard_threshold(&series, cfg.u_n, VnChoice::Analytic(spec.v_n))?;
    let est = match estimate_extremogram(&ns, cfg) {
        Ok(e) => e,
        Err(Error::NoExceedances { .. }) => return Ok(Outcome::Excluded(index)),
        Err(e) => return Err(e),
    };
    let scaled_errors = asymptotic_error_vector(&est, pa, spec.n, spec.v_n)?;
    let rho_hat = est.rho_hat();
    let errors = rho_hat.iter().zip(pa).map(|(r, p)| r - p).collect();
    let blocks = partition_blocks(&ns, &cfg.scheme)?.blocks;
    Ok(Outcome::Kept(
        ReplicateResult { index, seed, exceedances: est.denominator, rho_hat, errors, scaled_errors },
        blocks,
    ))
}

/// Runs every replicate (in parallel on `threads` workers, or the global
/// pool) and aggregates. Output does not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<MCResult> {
    spec.validate()?;
    let cfg = spec.config()?;
    let (pa, pa_source) = reference_extremogram(spec)?;
    let work = || -> Result<Vec<Outcome>> {
        (0..spec.replicates).into_par_iter().map(|r| run_replicate(spec, &cfg, &pa, r)).collect()
    };
    let outcomes = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut kept = Vec::new();
    let mut blocks = Vec::new();
    let mut excluded = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Kept(r, b) => {
                kept.push(r);
                blocks.extend(b);
            }
            Outcome::Excluded(i) => excluded.push(i),
        }
    }
    if excluded.len() as f64 > MAX_EXCLUDED_FRACTION * spec.replicates as f64 {
        return Err(Error::ExperimentFailed { excluded: excluded.len(), total: spec.replicates });
    }
    let mut warnings = Vec::new();
    if !excluded.is_empty() {
        let msg = format!("{} replicate(s) without exceedances excluded: {:?}", excluded.len(), excluded);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if kept.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: kept.len() });
    }
    let covariance = covariance_matrix_estimate(&blocks, &spec.a, &spec.b, spec.max_lag, spec.v_n, &pa).ok();
    let scheme_report = check_block_scheme(
        spec.n,
        spec.block_length,
        spec.small_block_length,
        spec.v_n,
        &SchemeThresholds::default(),
    );
    if !scheme_report.all_pass() {
        warnings.push(format!("block scheme outside nominal ratios: {}", scheme_report.problems.join("; ")));
    }
    let mut result = aggregate(kept, pa, pa_source, spec.bands, spec.n, cfg.u_n, spec.v_n)?;
    result.excluded = excluded;
    result.covariance = covariance;
    result.scheme_report = Some(scheme_report);
    result.warnings = warnings;
    Ok(result)
}

/// Aggregates replicate results. Every reduction sorts its inputs first, so
/// the output is independent of the order of `replicates`.
pub fn aggregate(
    mut replicates: Vec<ReplicateResult>,
    pa: Vec<f64>,
    pa_source: ReferenceSource,
    band_method: BandMethod,
    n: usize,
    u_n: f64,
    v_n: f64,
) -> Result<MCResult> {
    if replicates.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: replicates.len() });
    }
    replicates.sort_by_key(|r| r.index);
    let lags = pa.len();
    let column = |h: usize, f: fn(&ReplicateResult) -> &Vec<f64>| -> Vec<f64> {
        replicates.iter().map(|r| f(r)[h]).collect()
    };
    let mut out = MCResult {
        lags: (0..lags).collect(),
        u_n,
        v_n,
        scale: (n as f64 * v_n).sqrt(),
        pa: pa.clone(),
        pa_source,
        band_method,
        replicates: Vec::new(),
        excluded: Vec::new(),
        mean_rho_hat: Vec::with_capacity(lags),
        sd_rho_hat: Vec::with_capacity(lags),
        band_lo: Vec::with_capacity(lags),
        band_hi: Vec::with_capacity(lags),
        mean_error: Vec::with_capacity(lags),
        sd_error: Vec::with_capacity(lags),
        err_band_lo: Vec::with_capacity(lags),
        err_band_hi: Vec::with_capacity(lags),
        normality: Vec::with_capacity(lags),
        covariance: None,
        scheme_report: None,
        warnings: Vec::new(),
    };
    for h in 0..lags {
        let rho = column(h, |r| &r.rho_hat);
        let err = column(h, |r| &r.errors);
        let (m, sd) = mean_sd(&rho);
        let (me, sde) = mean_sd(&err);
        let ((lo, hi), (elo, ehi)) = match band_method {
            BandMethod::Normal => ((m - BAND_Z * sd, m + BAND_Z * sd), (me - BAND_Z * sde, me + BAND_Z * sde)),
            BandMethod::Quantile => (
                (quantile(&rho, 0.025), quantile(&rho, 0.975)),
                (quantile(&err, 0.025), quantile(&err, 0.975)),
            ),
        };
        out.mean_rho_hat.push(m);
        out.sd_rho_hat.push(sd);
        out.band_lo.push(lo);
        out.band_hi.push(hi);
        out.mean_error.push(me);
        out.sd_error.push(sde);
        out.err_band_lo.push(elo);
        out.err_band_hi.push(ehi);
        out.normality.push(normality_diagnostic(&column(h, |r| &r.scaled_errors)).ok());
    }
    out.replicates = replicates;
    Ok(out)
}

/// Omnibus normality check of per-replicate errors (Anderson-Darling with
/// estimated mean and variance). A finite-sample surrogate for the
/// asymptotic normality of the scaled errors.
pub fn normality_diagnostic(errors: &[f64]) -> Result<NormalityTest> {
    anderson_darling(errors)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCoverage {
    pub h: usize,
    pub coverage: f64,
    pub nominal: f64,
    /// Three binomial standard errors at the nominal level.
    pub tolerance: f64,
    pub within: bool,
}

/// Fraction of replicates whose estimate lies inside the bands, per lag.
pub fn coverage_check(result: &MCResult, nominal: f64) -> Vec<LagCoverage> {
    let count = result.replicates.len() as f64;
    let tolerance = 3.0 * (nominal * (1.0 - nominal) / count).sqrt();
    result
        .lags
        .iter()
        .map(|&h| {
            let inside = result
                .replicates
                .iter()
                .filter(|r| r.rho_hat[h] >= result.band_lo[h] && r.rho_hat[h] <= result.band_hi[h])
                .count();
            let coverage = inside as f64 / count;
            LagCoverage { h, coverage, nominal, tolerance, within: (coverage - nominal).abs() <= tolerance }
        })
        .collect()
}
