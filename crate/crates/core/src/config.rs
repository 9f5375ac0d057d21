//! JSON run specification shared by every subcommand.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model": { "kind": "base_b_ar1", "b": 2 },
//!   "n": 2000, "replicates": 50, "v_n": 0.07071067811865475,
//!   "max_lag": 20, "block_length": 200, "small_block_length": 10,
//!   "base_seed": 20240101
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::ExperimentSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSpec {
    /// Length of the single long path used for covariance decay.
    #[serde(default = "default_length")]
    pub length: usize,
    /// Lags `1..=max_lag` are measured.
    #[serde(default = "default_lag")]
    pub max_lag: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_length() -> usize {
    1_000_000
}

fn default_lag() -> usize {
    5
}

fn default_batches() -> usize {
    50
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec { length: default_length(), max_lag: default_lag(), batches: default_batches() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

impl SpecFile {
    pub fn new(experiment: ExperimentSpec) -> Self {
        SpecFile { schema_version: SCHEMA_VERSION, experiment, diagnostics: DiagnosticsSpec::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: SpecFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("schema error: {e}")))?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema error: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                spec.schema_version
            )));
        }
        spec.experiment.validate().map_err(|e| Error::Config(format!("schema error: {e}")))?;
        if spec.diagnostics.max_lag == 0 || spec.diagnostics.batches < 2 {
            return Err(Error::Config("schema error: diagnostics need max_lag >= 1 and batches >= 2".into()));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read spec {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::ModelSpec;

    #[test]
    fn parses_minimal_spec_with_defaults() {
        let spec = SpecFile::parse(
            r#"{"schema_version":1,"model":{"kind":"base_b_ar1","b":2},"n":2000,"replicates":50,
                "v_n":0.07071067811865475,"max_lag":20,"block_length":200,"small_block_length":10,"base_seed":7}"#,
        )
        .unwrap();
        assert_eq!(spec.experiment, ExperimentSpec { v_n: 0.07071067811865475, ..ExperimentSpec::fig1(7) });
        assert_eq!(spec.diagnostics, DiagnosticsSpec::default());
    }

    #[test]
    fn round_trips() {
        let mut s = SpecFile::new(ExperimentSpec::fig1(3));
        s.experiment.model = ModelSpec::GaussianAr1 { phi: 0.4 };
        s.experiment.threshold = Some(2.0);
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(SpecFile::parse(&text).unwrap(), s);
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            r#"{"schema_version":2,"model":{"kind":"base_b_ar1","b":2},"n":100,"replicates":5,"v_n":0.1,"max_lag":2,"block_length":10,"small_block_length":1,"base_seed":1}"#,
            r#"{"schema_version":1,"model":{"kind":"base_b_ar1","b":1},"n":100,"replicates":5,"v_n":0.1,"max_lag":2,"block_length":10,"small_block_length":1,"base_seed":1}"#,
            r#"{"schema_version":1,"model":{"kind":"base_b_ar1","b":2},"n":100,"replicates":5,"v_n":0.1,"max_lag":12,"block_length":10,"small_block_length":1,"base_seed":1}"#,
            r#"{"schema_version":1,"n":100}"#,
            "not json",
        ] {
            let err = SpecFile::parse(bad).unwrap_err();
            assert!(err.to_string().contains("schema error"), "{err}");
        }
    }
}
