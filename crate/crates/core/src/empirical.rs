//! Block partitioning and the empirical process of cluster functionals
//! `Z_n(f) = (n v_n)^{-1/2} sum_j (f(Y_{n,j}) - E f(Y_{n,j}))`.

use serde::{Deserialize, Serialize};

use crate::clusters::{Block, ClusterFunctional, Entry};
use crate::error::{Error, Result};
use crate::normalize::NormalizedSeries;
use crate::stats::CompensatedSum;

/// Big blocks of length `r_n`, small-block gap `l_n`, `m_n = floor(n / r_n)` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockScheme {
    n: usize,
    r_n: usize,
    l_n: usize,
    m_n: usize,
}

impl BlockScheme {
    pub fn new(n: usize, r_n: usize, l_n: usize) -> Result<Self> {
        if l_n < 1 || l_n >= r_n {
            return Err(Error::InvalidScheme(format!("need 1 <= l_n < r_n, got l_n = {l_n}, r_n = {r_n}")));
        }
        if r_n > n {
            return Err(Error::InvalidScheme(format!("block length r_n = {r_n} exceeds n = {n}")));
        }
        Ok(BlockScheme { n, r_n, l_n, m_n: n / r_n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_n(&self) -> usize {
        self.r_n
    }

    pub fn l_n(&self) -> usize {
        self.l_n
    }

    pub fn m_n(&self) -> usize {
        self.m_n
    }

    pub fn remainder_len(&self) -> usize {
        self.n - self.m_n * self.r_n
    }

    pub fn check(&self, v_n: f64, thresholds: &SchemeThresholds) -> SchemeReport {
        check_block_scheme(self.n, self.r_n, self.l_n, v_n, thresholds)
    }
}

/// Numeric surrogates for `l_n << r_n << 1/v_n << n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeThresholds {
    pub max_small_to_big: f64,
    pub max_big_times_vn: f64,
    pub min_n_times_vn: f64,
}

impl Default for SchemeThresholds {
    fn default() -> Self {
        SchemeThresholds { max_small_to_big: 0.2, max_big_times_vn: 0.5, min_n_times_vn: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    /// `1 <= l_n < r_n <= n` holds.
    pub valid: bool,
    pub problems: Vec<String>,
    pub small_to_big: f64,
    pub big_times_vn: f64,
    pub n_times_vn: f64,
    /// `sqrt(n v_n) / r_n`, which should be small.
    pub sqrt_nv_over_r: f64,
    pub small_to_big_ok: bool,
    pub big_times_vn_ok: bool,
    pub n_times_vn_ok: bool,
    pub big_below_n_ok: bool,
}

impl SchemeReport {
    pub fn all_pass(&self) -> bool {
        self.valid && self.small_to_big_ok && self.big_times_vn_ok && self.n_times_vn_ok && self.big_below_n_ok
    }
}

pub fn check_block_scheme(n: usize, r_n: usize, l_n: usize, v_n: f64, t: &SchemeThresholds) -> SchemeReport {
    let mut problems = Vec::new();
    if let Err(e) = BlockScheme::new(n, r_n, l_n) {
        problems.push(e.to_string());
    }
    let (nf, rf, lf) = (n as f64, r_n as f64, l_n as f64);
    let small_to_big = lf / rf;
    let big_times_vn = rf * v_n;
    let n_times_vn = nf * v_n;
    let small_to_big_ok = small_to_big <= t.max_small_to_big;
    let big_times_vn_ok = big_times_vn <= t.max_big_times_vn;
    let n_times_vn_ok = n_times_vn >= t.min_n_times_vn;
    // 1/v_n << n together with r_n << 1/v_n forces r_n << n.
    let big_below_n_ok = rf <= t.max_small_to_big * nf;
    if !small_to_big_ok {
        problems.push(format!("l_n / r_n = {small_to_big:.4} > {}", t.max_small_to_big));
    }
    if !big_times_vn_ok {
        problems.push(format!("r_n * v_n = {big_times_vn:.4} > {}", t.max_big_times_vn));
    }
    if !n_times_vn_ok {
        problems.push(format!("n * v_n = {n_times_vn:.4} < {}", t.min_n_times_vn));
    }
    if !big_below_n_ok {
        problems.push(format!("r_n / n = {:.4} > {}", rf / nf, t.max_small_to_big));
    }
    SchemeReport {
        valid: BlockScheme::new(n, r_n, l_n).is_ok(),
        problems,
        small_to_big,
        big_times_vn,
        n_times_vn,
        sqrt_nv_over_r: (nf * v_n).sqrt() / rf,
        small_to_big_ok,
        big_times_vn_ok,
        n_times_vn_ok,
        big_below_n_ok,
    }
}

/// The `m_n` disjoint big blocks and the trailing remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<E = f64> {
    pub blocks: Vec<Block<E>>,
    pub remainder: Vec<E>,
    pub n: usize,
    pub r_n: usize,
}

impl<E: Entry> Partition<E> {
    pub fn m_n(&self) -> usize {
        self.blocks.len()
    }

    /// Concatenation of blocks and remainder.
    pub fn flatten(&self) -> Vec<E> {
        let mut out: Vec<E> = self.blocks.iter().flat_map(|b| b.entries().iter().cloned()).collect();
        out.extend(self.remainder.iter().cloned());
        out
    }
}

pub fn partition_values<E: Entry>(values: &[E], scheme: &BlockScheme) -> Result<Partition<E>> {
    if scheme.n() != values.len() {
        return Err(Error::InvalidScheme(format!(
            "scheme is for n = {} but the series has {} values",
            scheme.n(),
            values.len()
        )));
    }
    let r = scheme.r_n();
    let m = scheme.m_n();
    let blocks = values[..m * r]
        .chunks_exact(r)
        .map(|c| Block::new(c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition { blocks, remainder: values[m * r..].to_vec(), n: values.len(), r_n: r })
}

pub fn partition_blocks<E: Entry>(ns: &NormalizedSeries<E>, scheme: &BlockScheme) -> Result<Partition<E>> {
    partition_values(&ns.values, scheme)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Centering {
    /// Known `E f(Y_{n,j})`, one value per block or a single stationary value.
    Analytic(Vec<f64>),
    /// Cross-block sample mean; `Z_n` is then zero by construction.
    PlugInMean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalProcessValue {
    pub functional: String,
    pub z: f64,
    pub centering: Vec<f64>,
    /// `sqrt(n v_n)`.
    pub scale: f64,
}

fn block_values<E: Entry>(blocks: &[Block<E>], f: &ClusterFunctional<E>) -> Result<Vec<f64>> {
    blocks.iter().map(|b| f.eval_block(b)).collect()
}

pub fn empirical_process<E: Entry>(
    partition: &Partition<E>,
    f: &ClusterFunctional<E>,
    v_n: f64,
    centering: &Centering,
) -> Result<EmpiricalProcessValue> {
    let nv = partition.n as f64 * v_n;
    if !(nv > 0.0 && nv.is_finite()) {
        return Err(Error::DegenerateScale { n: partition.n, v_n });
    }
    let values = block_values(&partition.blocks, f)?;
    let m = values.len();
    let centers = match centering {
        Centering::Analytic(c) if c.len() == m => c.clone(),
        Centering::Analytic(c) if c.len() == 1 => vec![c[0]; m],
        Centering::Analytic(c) => {
            return Err(Error::Domain(format!("centering has {} values for {m} blocks", c.len())))
        }
        Centering::PlugInMean => {
            let mean = values.iter().copied().collect::<CompensatedSum>().value() / m as f64;
            vec![mean; m]
        }
    };
    let scale = nv.sqrt();
    let sum: CompensatedSum = values.iter().zip(&centers).map(|(v, c)| v - c).collect();
    let z = sum.value() / scale;
    if !z.is_finite() {
        return Err(Error::Domain(format!("Z_n({}) is not finite", f.name())));
    }
    Ok(EmpiricalProcessValue { functional: f.name().to_string(), z, centering: centers, scale })
}

/// `(r_n v_n)^{-1}` times the sample covariance of `(f(Y), g(Y))` over the
/// pooled blocks.
pub fn block_covariance<E: Entry>(
    blocks: &[Block<E>],
    f: &ClusterFunctional<E>,
    g: &ClusterFunctional<E>,
    r_n: usize,
    v_n: f64,
) -> Result<f64> {
    if blocks.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: blocks.len() });
    }
    let rv = r_n as f64 * v_n;
    if !(rv > 0.0) {
        return Err(Error::DegenerateScale { n: r_n, v_n });
    }
    let fv = block_values(blocks, f)?;
    let gv = block_values(blocks, g)?;
    let k = fv.len() as f64;
    let fm = fv.iter().copied().collect::<CompensatedSum>().value() / k;
    let gm = gv.iter().copied().collect::<CompensatedSum>().value() / k;
    let cross: CompensatedSum = fv.iter().zip(&gv).map(|(a, b)| (a - fm) * (b - gm)).collect();
    Ok(cross.value() / (k - 1.0) / rv)
}

/// Sample moment `E|f(Y_n)|^{2 + delta}` over the blocks; reported, not tested.
pub fn moment_diagnostic<E: Entry>(blocks: &[Block<E>], f: &ClusterFunctional<E>, delta: f64) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let vals = block_values(blocks, f)?;
    let s: CompensatedSum = vals.iter().map(|v| v.abs().powf(2.0 + delta)).collect();
    Ok(s.value() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusters::{make_extremogram_functional, make_sum_functional, SetSpec};
    use crate::normalize::VnSource;
    use proptest::prelude::*;
    use rand::Rng;

    fn ns(values: Vec<f64>) -> NormalizedSeries {
        let v = values.iter().filter(|x| **x != 0.0).count() as f64 / values.len() as f64;
        NormalizedSeries { values, u_n: 1.0, a_n: None, v_n: v, v_n_source: VnSource::Empirical }
    }

    #[test]
    fn scheme_validation() {
        assert!(BlockScheme::new(10, 3, 1).is_ok());
        assert!(matches!(BlockScheme::new(10, 11, 1), Err(Error::InvalidScheme(_))));
        assert!(BlockScheme::new(10, 3, 3).is_err());
        assert!(BlockScheme::new(10, 3, 0).is_err());
    }

    #[test]
    fn partition_examples() {
        let s = BlockScheme::new(10, 3, 1).unwrap();
        let p = partition_blocks(&ns((1..=10).map(f64::from).collect()), &s).unwrap();
        assert_eq!((p.m_n(), p.remainder.len()), (3, 1));
        let s = BlockScheme::new(2000, 100, 5).unwrap();
        let p = partition_blocks(&ns(vec![0.0; 2000]), &s).unwrap();
        assert_eq!((p.m_n(), p.remainder.len()), (20, 0));
        let s = BlockScheme::new(7, 7, 1).unwrap();
        let p = partition_blocks(&ns(vec![1.0; 7]), &s).unwrap();
        assert_eq!(p.m_n(), 1);
        let s = BlockScheme::new(8, 4, 1).unwrap();
        assert!(partition_blocks(&ns(vec![1.0; 7]), &s).is_err());
    }

    #[test]
    fn scheme_report_for_fig1_setting() {
        let v = 1.0 / (10.0 * 2f64.sqrt());
        let rep = check_block_scheme(2000, 200, 10, v, &SchemeThresholds::default());
        assert!(rep.valid && rep.small_to_big_ok && rep.n_times_vn_ok && rep.big_below_n_ok);
        assert!((rep.sqrt_nv_over_r - 0.0594603557501360).abs() < 1e-12, "{}", rep.sqrt_nv_over_r);
        // r_n = 200 is not small against 1/v_n ~ 14.1 at this sample size.
        assert!(!rep.big_times_vn_ok);
        assert!((rep.big_times_vn - 200.0 * v).abs() < 1e-12);

        let rep = check_block_scheme(10, 10, 1, 0.01, &SchemeThresholds::default());
        assert!(!rep.big_below_n_ok && !rep.all_pass());
        let rep = check_block_scheme(100, 10, 10, 0.01, &SchemeThresholds::default());
        assert!(!rep.valid);
        let rep = check_block_scheme(100_000, 50, 5, 0.005, &SchemeThresholds::default());
        assert!(rep.all_pass(), "{:?}", rep.problems);
    }

    #[test]
    fn empirical_process_examples() {
        let s = BlockScheme::new(12, 4, 1).unwrap();
        let p = partition_blocks(&ns(vec![0.0, 2.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0]), &s).unwrap();
        let konst = make_sum_functional("const", 0.0, |x: &f64| if *x != 0.0 { 1.0 } else { 0.0 }).unwrap();
        let z = empirical_process(&p, &konst, 0.25, &Centering::PlugInMean).unwrap();
        assert_eq!(z.z, 0.0);
        assert!(matches!(
            empirical_process(&p, &konst, 0.0, &Centering::PlugInMean),
            Err(Error::DegenerateScale { .. })
        ));

        let s = BlockScheme::new(5, 5, 1).unwrap();
        let p = partition_blocks(&ns(vec![0.0, 2.0, 3.0, 0.0, 0.0]), &s).unwrap();
        let sum = make_sum_functional("sum", 0.0, |x: &f64| *x).unwrap();
        let z = empirical_process(&p, &sum, 0.4, &Centering::Analytic(vec![1.0])).unwrap();
        assert!((z.z - (5.0 - 1.0) / 2f64.sqrt()).abs() < 1e-15);
        assert!(empirical_process(&p, &sum, 0.4, &Centering::Analytic(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn empirical_process_variance_for_independent_blocks() {
        // i.i.d. entries, each nonzero with probability v: f = count of
        // nonzeros is Binomial(r, v), so Var Z_n = m r v (1 - v) / (n v).
        let (n, r, v) = (400usize, 20usize, 0.1);
        let s = BlockScheme::new(n, r, 2).unwrap();
        let count = make_sum_functional("count", 0.0, |x: &f64| f64::from(u8::from(*x != 0.0))).unwrap();
        let mut rng = crate::rng::stream(1);
        let reps = 4000;
        let zs: Vec<f64> = (0..reps)
            .map(|_| {
                let vals = (0..n).map(|_| if rng.random::<f64>() < v { 2.0 } else { 0.0 }).collect();
                let p = partition_blocks(&ns(vals), &s).unwrap();
                empirical_process(&p, &count, v, &Centering::Analytic(vec![r as f64 * v])).unwrap().z
            })
            .collect();
        let (_, sd) = crate::stats::mean_sd(&zs);
        let target = (n / r) as f64 * r as f64 * v * (1.0 - v) / (n as f64 * v);
        // Relative SE of a sample variance is about sqrt(2 / reps).
        assert!((sd * sd / target - 1.0).abs() < 3.0 * (2.0 / reps as f64).sqrt(), "{} vs {target}", sd * sd);
    }

    #[test]
    fn block_covariance_examples() {
        let a = SetSpec::above(1.0).unwrap();
        let f0 = make_extremogram_functional::<f64>(a.clone(), a.clone(), 0).unwrap();
        let twice = make_sum_functional("2f", 0.0, |x: &f64| 2.0 * f64::from(u8::from(*x > 1.0))).unwrap();
        let zero = make_sum_functional("zero", 0.0, |_: &f64| 0.0).unwrap();
        let blocks: Vec<Block> =
            vec![vec![0.0, 2.0, 2.0], vec![0.0, 0.0, 0.0], vec![1.5, 0.0, 0.0], vec![3.0, 3.0, 3.0]]
                .into_iter()
                .map(|b| Block::new(b).unwrap())
                .collect();
        assert_eq!(block_covariance(&blocks, &zero, &zero, 3, 0.2).unwrap(), 0.0);
        let cff = block_covariance(&blocks, &f0, &f0, 3, 0.2).unwrap();
        let cfg = block_covariance(&blocks, &f0, &twice, 3, 0.2).unwrap();
        assert!((cfg - 2.0 * cff).abs() < 1e-12);
        assert_eq!(cfg, block_covariance(&blocks, &twice, &f0, 3, 0.2).unwrap());
        assert!(matches!(
            block_covariance(&blocks[..1], &f0, &f0, 3, 0.2),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn block_covariance_of_iid_counts_tends_to_one() {
        // Binomial(r, v) variance r v (1 - v) scaled by 1/(r v) is 1 - v.
        let (r, v) = (10usize, 0.005);
        let mut rng = crate::rng::stream(2);
        let blocks: Vec<Block> = (0..100_000)
            .map(|_| Block::new((0..r).map(|_| if rng.random::<f64>() < v { 1.5 } else { 0.0 }).collect()).unwrap())
            .collect();
        let a = SetSpec::above(1.0).unwrap();
        let f0 = make_extremogram_functional::<f64>(a.clone(), a, 0).unwrap();
        let c = block_covariance(&blocks, &f0, &f0, r, v).unwrap();
        // Count of exceedances ~ 5000, relative SE ~ 1/sqrt(5000).
        assert!((c - (1.0 - v)).abs() < 3.0 / 5000f64.sqrt(), "{c}");
    }

    #[test]
    fn moment_diagnostic_value() {
        let blocks = vec![Block::new(vec![2.0, 0.0]).unwrap(), Block::new(vec![0.0, 0.0]).unwrap()];
        let sum = make_sum_functional("sum", 0.0, |x: &f64| *x).unwrap();
        assert!((moment_diagnostic(&blocks, &sum, 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn partition_is_exact(n in 1usize..300, r in 2usize..40, seed in any::<u64>()) {
            prop_assume!(r <= n);
            let mut rng = crate::rng::stream(seed);
            let vals: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { rng.random::<f64>() + 1.0 } else { 0.0 }).collect();
            let s = BlockScheme::new(n, r, 1).unwrap();
            let p = partition_values(&vals, &s).unwrap();
            prop_assert_eq!(p.m_n(), n / r);
            prop_assert!(p.blocks.iter().all(|b| b.len() == r));
            prop_assert_eq!(p.flatten(), vals);
        }

        #[test]
        fn z_is_linear_under_analytic_centering(
            vals in prop::collection::vec(prop_oneof![Just(0.0), 0.5f64..3.0], 20..200),
            alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
            cf in -2.0f64..2.0, cg in -2.0f64..2.0,
        ) {
            let n = vals.len();
            let s = BlockScheme::new(n, 10, 1).unwrap();
            let p = partition_values(&vals, &s).unwrap();
            let f = make_sum_functional("sq", 0.0, |x: &f64| x * x).unwrap();
            let g = make_sum_functional("gt1", 0.0, |x: &f64| f64::from(u8::from(*x > 1.0))).unwrap();
            let h = make_sum_functional("lin", 0.0, move |x: &f64| alpha * x * x + beta * f64::from(u8::from(*x > 1.0))).unwrap();
            let v = 0.3;
            let zf = empirical_process(&p, &f, v, &Centering::Analytic(vec![cf])).unwrap().z;
            let zg = empirical_process(&p, &g, v, &Centering::Analytic(vec![cg])).unwrap().z;
            let zh = empirical_process(&p, &h, v, &Centering::Analytic(vec![alpha * cf + beta * cg])).unwrap().z;
            prop_assert!((zh - (alpha * zf + beta * zg)).abs() < 1e-10 * (1.0 + zh.abs()));
        }

        #[test]
        fn block_covariance_is_symmetric(vals in prop::collection::vec(prop_oneof![Just(0.0), 0.5f64..3.0], 20..200)) {
            let blocks: Vec<Block> = vals.chunks_exact(5).map(|c| Block::new(c.to_vec()).unwrap()).collect();
            let f = make_sum_functional("sq", 0.0, |x: &f64| x * x).unwrap();
            let g = make_sum_functional("gt1", 0.0, |x: &f64| f64::from(u8::from(*x > 1.0))).unwrap();
            prop_assert_eq!(
                block_covariance(&blocks, &f, &g, 5, 0.2).unwrap(),
                block_covariance(&blocks, &g, &f, 5, 0.2).unwrap()
            );
        }
    }
}
