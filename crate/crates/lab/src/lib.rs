//! Experiment driver: parses experiment specifications, runs the named
//! experiment and writes CSV tables plus a JSON manifest.

pub mod checkpoint;
pub mod experiments;
pub mod output;
pub mod spec;

use std::path::PathBuf;

use crcm::exec::Execution;
use thiserror::Error;

pub use spec::{Command, ExperimentSpec, ModelKind};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("check failed: {0}")]
    TestFailure(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Spec(_) => 1,
            LabError::TestFailure(_) => 2,
            LabError::Runtime(_) => 3,
        }
    }
}

impl From<crcm::Error> for LabError {
    fn from(e: crcm::Error) -> Self {
        use crcm::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::NonIntegrableWithoutTruncation
            | E::LambdaNotInWindow(_)
            | E::NestingViolation(_)
            | E::AssumptionAViolated { .. }
            | E::RootUndefined { .. }
            | E::ErodedWindowEmpty(_)
            | E::BoundaryFractionTooLarge(_) => LabError::Spec(e.to_string()),
            _ => LabError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Runtime(e.to_string())
    }
}

/// One invocation of the driver.
#[derive(Clone, Debug)]
pub struct RunRequest {
    pub command: Command,
    pub spec: ExperimentSpec,
    pub out: PathBuf,
    /// Checkpoint to continue from (sampling subcommands only).
    pub resume: Option<PathBuf>,
    pub exec: Execution,
}

/// What a run produced; `passed` is false when a built-in check failed.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
    pub files: Vec<String>,
}

/// Runs the experiment and writes its manifest.
pub fn run(req: &RunRequest) -> Result<Outcome, LabError> {
    std::fs::create_dir_all(&req.out)
        .map_err(|e| LabError::Spec(format!("output directory {}: {e}", req.out.display())))?;
    let started = std::time::Instant::now();
    let outcome = experiments::dispatch(req)?;
    output::write_manifest(req, &outcome, started.elapsed().as_secs_f64())?;
    Ok(outcome)
}
