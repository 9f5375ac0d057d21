//! Threshold normalization of a raw series into a row `(X_{n,i})` of the
//! triangular array: exceedances are rescaled, everything else becomes an
//! exact zero.

use serde::{Deserialize, Serialize};

use crate::clusters::{Entry, Norm};
use crate::error::{Error, Result};
use crate::processes::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VnSource {
    Analytic,
    Empirical,
}

/// How `v_n = P{X_{n,1} != 0}` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum VnChoice {
    /// Closed form from the model when available, otherwise empirical.
    #[default]
    Auto,
    Analytic(f64),
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries<E = f64> {
    pub values: Vec<E>,
    pub u_n: f64,
    /// Scale of the peaks-over-threshold variant; `None` for hard thresholding.
    pub a_n: Option<f64>,
    pub v_n: f64,
    pub v_n_source: VnSource,
}

impl<E: Entry> NormalizedSeries<E> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|e| !e.is_zero()).count()
    }

    /// True when no observation exceeds the threshold or `v_n` vanishes.
    pub fn is_degenerate(&self) -> bool {
        self.v_n <= 0.0 || self.nonzero_count() == 0
    }

    fn with_vn(values: Vec<E>, u_n: f64, a_n: Option<f64>, analytic: Option<f64>) -> Result<Self> {
        let mut ns = NormalizedSeries { values, u_n, a_n, v_n: 0.0, v_n_source: VnSource::Empirical };
        match analytic {
            Some(v) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!("analytic v_n = {v} outside [0, 1]")));
                }
                ns.v_n = v;
                ns.v_n_source = VnSource::Analytic;
            }
            None => ns.v_n = exceedance_rate(&ns),
        }
        if ns.is_degenerate() {
            log::warn!("normalized series has no exceedances of u_n = {u_n} (v_n = {})", ns.v_n);
        }
        Ok(ns)
    }
}

/// Fraction of non-null entries.
pub fn exceedance_rate<E: Entry>(ns: &NormalizedSeries<E>) -> f64 {
    if ns.values.is_empty() {
        return 0.0;
    }
    ns.nonzero_count() as f64 / ns.values.len() as f64
}

fn resolve(choice: VnChoice, model: impl FnOnce() -> Option<f64>) -> Option<f64> {
    match choice {
        VnChoice::Auto => model(),
        VnChoice::Analytic(v) => Some(v),
        VnChoice::Empirical => None,
    }
}

/// Peaks over threshold: `max{(X_i - u_n) / a_n, 0}`.
pub fn normalize_pot(series: &TimeSeries, u_n: f64, a_n: f64, vn: VnChoice) -> Result<NormalizedSeries> {
    if !(a_n.is_finite() && a_n > 0.0) {
        return Err(Error::InvalidScale(a_n));
    }
    let values = series.values.iter().map(|x| ((x - u_n) / a_n).max(0.0)).collect();
    let analytic = resolve(vn, || series.spec.tail_probability(u_n, false));
    NormalizedSeries::with_vn(values, u_n, Some(a_n), analytic)
}

/// `X_i / u_n` when `|X_i| > u_n`, else zero; ties are non-exceedances.
pub fn hard_threshold<E: Entry>(values: &[E], u_n: f64, norm: Norm) -> Result<Vec<E>> {
    if !(u_n.is_finite() && u_n > 0.0) {
        return Err(Error::InvalidThreshold(u_n));
    }
    let inv = 1.0 / u_n;
    Ok(values
        .iter()
        .map(|x| if x.norm(norm) > u_n { x.scaled(inv) } else { x.zero_like() })
        .collect())
}

pub fn normalize_hard_threshold(series: &TimeSeries, u_n: f64, vn: VnChoice) -> Result<NormalizedSeries> {
    let values = hard_threshold(&series.values, u_n, Norm::Euclidean)?;
    let analytic = resolve(vn, || series.spec.tail_probability(u_n, true));
    NormalizedSeries::with_vn(values, u_n, None, analytic)
}

/// Hard thresholding of a vector-valued series in the given norm.
pub fn normalize_hard_threshold_vectors(
    values: &[Vec<f64>],
    u_n: f64,
    norm: Norm,
    analytic_vn: Option<f64>,
) -> Result<NormalizedSeries<Vec<f64>>> {
    let values = hard_threshold(values, u_n, norm)?;
    NormalizedSeries::with_vn(values, u_n, None, analytic_vn)
}
