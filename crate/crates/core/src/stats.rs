//! Small numerical helpers shared across modules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Mean and unbiased standard deviation, invariant under reordering of the
/// input: values are sorted before the compensated reduction.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().copied().collect::<CompensatedSum>().value() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let ss = dev.into_iter().collect::<CompensatedSum>().value();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Linear-interpolation sample quantile (type 7).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityTest {
    /// Anderson-Darling A^2 with the small-sample correction `(1 + 0.75/n + 2.25/n^2)`.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl NormalityTest {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub const MIN_NORMALITY_SAMPLE: usize = 20;

/// Anderson-Darling test of normality with mean and variance estimated from
/// the sample. P-values follow the D'Agostino-Stephens piecewise
/// approximation for the modified statistic.
pub fn anderson_darling(sample: &[f64]) -> Result<NormalityTest> {
    let n = sample.len();
    if n < MIN_NORMALITY_SAMPLE {
        return Err(Error::InsufficientData { needed: MIN_NORMALITY_SAMPLE, got: n });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate("non-finite value in normality sample".into()));
    }
    let (mean, sd) = mean_sd(sample);
    if !(sd > 0.0) || sd < 1e-12 * mean.abs().max(1.0) {
        return Err(Error::Degenerate(format!("sample of {n} values has zero spread")));
    }
    let mut z: Vec<f64> = sample.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut acc = CompensatedSum::default();
    for i in 0..n {
        let lo = normal_cdf(z[i]).max(1e-300);
        let hi = normal_sf(z[n - 1 - i]).max(1e-300);
        acc.add((2.0 * i as f64 + 1.0) * (lo.ln() + hi.ln()));
    }
    let a2 = -nf - acc.value() / nf;
    let a = a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(NormalityTest { statistic: a, p_value: p.clamp(0.0, 1.0), n })
}
