//! Finite blocks, the core operator and cluster functionals.
//!
//! A cluster functional is a map `f` on finite blocks with `f(x) = f(core(x))`
//! and `f(0, ..., 0) = 0`, where `core(x)` is the sub-block spanning the first
//! to the last non-null entry. Blocks hold scalars (`f64`) or vectors
//! (`Vec<f64>`); both implement [`Entry`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
    L1,
}

impl Norm {
    pub fn of(self, coords: &[f64]) -> f64 {
        match self {
            Norm::Euclidean => coords.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Norm::Max => coords.iter().fold(0.0, |m, c| m.max(c.abs())),
            Norm::L1 => coords.iter().map(|c| c.abs()).sum(),
        }
    }
}

/// A value in the state space `E`: a real or a real vector.
pub trait Entry: Clone + fmt::Debug + Send + Sync + 'static {
    fn coords(&self) -> &[f64];
    fn zero_like(&self) -> Self;
    fn scaled(&self, s: f64) -> Self;

    /// Exact comparison: normalized data carries exact zeros.
    fn is_zero(&self) -> bool {
        self.coords().iter().all(|&c| c == 0.0)
    }

    fn norm(&self, norm: Norm) -> f64 {
        norm.of(self.coords())
    }
}

impl Entry for f64 {
    fn coords(&self) -> &[f64] {
        std::slice::from_ref(self)
    }

    fn zero_like(&self) -> Self {
        0.0
    }

    fn scaled(&self, s: f64) -> Self {
        self * s
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Entry for Vec<f64> {
    fn coords(&self) -> &[f64] {
        self
    }

    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }

    fn scaled(&self, s: f64) -> Self {
        self.iter().map(|c| c * s).collect()
    }
}

/// A non-empty finite sequence over `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<E = f64>(Vec<E>);

impl<E: Entry> Block<E> {
    pub fn new(entries: Vec<E>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("a block must contain at least one entry".into()));
        }
        Ok(Block(entries))
    }

    pub fn entries(&self) -> &[E] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_inner(self) -> Vec<E> {
        self.0
    }
}

impl<E> AsRef<[E]> for Block<E> {
    fn as_ref(&self) -> &[E] {
        &self.0
    }
}

/// Index range of the core of `x`, or `None` when every entry is null.
pub fn core_range<E: Entry>(x: &[E]) -> Option<std::ops::RangeInclusive<usize>> {
    let first = x.iter().position(|e| !e.is_zero())?;
    let last = x.iter().rposition(|e| !e.is_zero())?;
    Some(first..=last)
}

/// Sub-block from the first to the last non-null entry. An all-null block
/// maps to the length-1 null block.
pub fn core<E: Entry>(x: &Block<E>) -> Block<E> {
    match core_range(x.entries()) {
        Some(range) => Block(x.entries()[range].to_vec()),
        None => Block(vec![x.entries()[0].zero_like()]),
    }
}

/// Sets bounded away from the origin, used by the extremogram.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    /// Every coordinate above `c`; the half-line `(c, inf)` for scalars.
    Above { c: f64 },
    /// Every coordinate below `-c`; the half-line `(-inf, -c)` for scalars.
    Below { c: f64 },
    /// `{x : |x| > c}` in the given norm.
    NormAbove {
        c: f64,
        #[serde(default)]
        norm: Norm,
    },
    /// A registered predicate, intersected with `{x : |x|_max > radius}`.
    #[serde(skip)]
    Custom(CustomSet),
}

/// User predicate together with the radius that keeps it away from zero.
#[derive(Clone)]
pub struct CustomSet {
    pub name: String,
    pub radius: f64,
    predicate: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl SetSpec {
    pub fn above(c: f64) -> Result<Self> {
        let s = SetSpec::Above { c };
        s.validate()?;
        Ok(s)
    }

    pub fn below(c: f64) -> Result<Self> {
        let s = SetSpec::Below { c };
        s.validate()?;
        Ok(s)
    }

    pub fn norm_above(c: f64, norm: Norm) -> Result<Self> {
        let s = SetSpec::NormAbove { c, norm };
        s.validate()?;
        Ok(s)
    }

    pub fn custom<F>(name: impl Into<String>, radius: f64, predicate: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        let s = SetSpec::Custom(CustomSet { name: name.into(), radius, predicate: Arc::new(predicate) });
        s.validate()?;
        Ok(s)
    }

    /// The set must avoid a neighbourhood of the origin.
    pub fn validate(&self) -> Result<()> {
        let r = match self {
            SetSpec::Above { c } | SetSpec::Below { c } | SetSpec::NormAbove { c, .. } => *c,
            SetSpec::Custom(cs) => cs.radius,
        };
        if r.is_finite() && r > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidSet(format!("{self:?} is not bounded away from zero (radius {r})")))
        }
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        match self {
            SetSpec::Above { c } => coords.iter().all(|x| x > c),
            SetSpec::Below { c } => coords.iter().all(|x| *x < -c),
            SetSpec::NormAbove { c, norm } => norm.of(coords) > *c,
            SetSpec::Custom(cs) => Norm::Max.of(coords) > cs.radius && (cs.predicate)(coords),
        }
    }
}

impl fmt::Debug for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Above { c } => write!(f, "({c}, inf)"),
            SetSpec::Below { c } => write!(f, "(-inf, -{c})"),
            SetSpec::NormAbove { c, norm } => write!(f, "{{|x|_{norm:?} > {c}}}"),
            SetSpec::Custom(cs) => write!(f, "custom:{}(r > {})", cs.name, cs.radius),
        }
    }
}

impl PartialEq for SetSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SetSpec::Above { c: a }, SetSpec::Above { c: b }) => a == b,
            (SetSpec::Below { c: a }, SetSpec::Below { c: b }) => a == b,
            (SetSpec::NormAbove { c: a, norm: m }, SetSpec::NormAbove { c: b, norm: n }) => a == b && m == n,
            (SetSpec::Custom(a), SetSpec::Custom(b)) => Arc::ptr_eq(&a.predicate, &b.predicate),
            _ => false,
        }
    }
}

type EvalFn<E> = dyn Fn(&[E]) -> Result<f64> + Send + Sync;

/// A named map from blocks to reals honouring the core contract.
#[derive(Clone)]
pub struct ClusterFunctional<E = f64> {
    name: String,
    eval: Arc<EvalFn<E>>,
}

impl<E: Entry> fmt::Debug for ClusterFunctional<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClusterFunctional").field("name", &self.name).finish()
    }
}

impl<E: Entry> ClusterFunctional<E> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[E]) -> Result<f64> {
        (self.eval)(x)
    }

    pub fn eval_block(&self, x: &Block<E>) -> Result<f64> {
        (self.eval)(x.entries())
    }
}

/// `f(x_1, ..., x_r) = sum_i phi(x_i)`; `phi(0)` must vanish.
pub fn make_sum_functional<E, F>(name: impl Into<String>, zero: E, phi: F) -> Result<ClusterFunctional<E>>
where
    E: Entry,
    F: Fn(&E) -> f64 + Send + Sync + 'static,
{
    let name = name.into();
    let at_zero = phi(&zero.zero_like());
    if at_zero != 0.0 {
        return Err(Error::ContractViolation(format!("{name}: phi(0) = {at_zero}, expected 0")));
    }
    Ok(ClusterFunctional {
        name,
        eval: Arc::new(move |x: &[E]| Ok(x.iter().map(&phi).sum())),
    })
}

/// `f(x_1, ..., x_r) = max_i x_i` on `[0, inf)`; for vectors the maximum is
/// taken over every coordinate of every entry.
pub fn make_max_functional<E: Entry>() -> ClusterFunctional<E> {
    ClusterFunctional {
        name: "max".into(),
        eval: Arc::new(|x: &[E]| {
            let mut m = 0.0f64;
            for c in x.iter().flat_map(|e| e.coords().iter().copied()) {
                if !(c >= 0.0) {
                    return Err(Error::Domain(format!("max functional needs nonnegative entries, got {c}")));
                }
                m = m.max(c);
            }
            Ok(m)
        }),
    }
}

/// Number of `i <= r - h` with `x_i in a` and `x_{i+h} in b`.
pub fn lag_pair_count<E: Entry>(x: &[E], a: &SetSpec, b: &SetSpec, h: usize) -> usize {
    if h >= x.len() {
        return 0;
    }
    (0..x.len() - h)
        .filter(|&i| a.contains(x[i].coords()) && b.contains(x[i + h].coords()))
        .count()
}

/// `f_{A,B,h}(x_1, ..., x_r) = sum_{i=1}^{r-h} 1{x_i in A, x_{i+h} in B}`.
pub fn make_extremogram_functional<E: Entry>(a: SetSpec, b: SetSpec, h: usize) -> Result<ClusterFunctional<E>> {
    a.validate()?;
    b.validate()?;
    Ok(ClusterFunctional {
        name: format!("extremogram[{a:?},{b:?},h={h}]"),
        eval: Arc::new(move |x: &[E]| Ok(lag_pair_count(x, &a, &b, h) as f64)),
    })
}

/// Configuration form of a functional, as named in JSON specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    Max,
    /// Number of entries in `set`.
    Count { set: SetSpec },
    Extremogram { a: SetSpec, b: SetSpec, h: usize },
}

impl FunctionalSpec {
    pub fn build(&self) -> Result<ClusterFunctional<f64>> {
        match self {
            FunctionalSpec::Max => Ok(make_max_functional()),
            FunctionalSpec::Count { set } => {
                set.validate()?;
                let set = set.clone();
                make_sum_functional(format!("count[{set:?}]"), 0.0, move |x: &f64| {
                    f64::from(u8::from(set.contains(x.coords())))
                })
            }
            FunctionalSpec::Extremogram { a, b, h } => make_extremogram_functional(a.clone(), b.clone(), *h),
        }
    }
}
