//! Benchmark harness for the divergence-conforming Stokes solver: the test
//! cases, a flat `key = value` run configuration, the sweep driver and the
//! table/plot-data writers behind the `bench` binary.

pub mod cases;
pub mod config;
pub mod output;
pub mod run;

pub use cases::CaseKind;
pub use config::CaseConfig;
pub use run::{run, RunOutput, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] divstokes::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
