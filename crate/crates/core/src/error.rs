use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid scale a_n = {0}: must be strictly positive")]
    InvalidScale(f64),

    #[error("invalid threshold u_n = {0}: must be strictly positive")]
    InvalidThreshold(f64),

    #[error("cluster functional contract violated: {0}")]
    ContractViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid set specification: {0}")]
    InvalidSet(String),

    #[error("invalid block scheme: {0}")]
    InvalidScheme(String),

    #[error("degenerate scale: n * v_n must be positive (n = {n}, v_n = {v_n})")]
    DegenerateScale { n: usize, v_n: f64 },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no exceedances in A among {observations} observations")]
    NoExceedances { observations: usize },

    #[error("invalid lag h = {h}: must be smaller than the block length r_n = {r_n}")]
    InvalidLag { h: usize, r_n: usize },

    #[error("lag h = {h} infeasible for exact enumeration with b = {b} ({tuples} tuples > {limit})")]
    InfeasibleLag { b: u32, h: usize, tuples: f64, limit: u64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("experiment failed: {excluded} of {total} replicates had no exceedances")]
    ExperimentFailed { excluded: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
