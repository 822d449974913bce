//! Snapshots of unfinished chain runs.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crcm::mcmc::{ChainKernel, ChainRun};
use serde::{Deserialize, Serialize};

use crate::{Command, ExperimentSpec, LabError};

pub const FILE_NAME: &str = "checkpoint.json";

/// Every chain of a run with its RNG position, step counters and partial
/// trace, keyed by the spec hash.
#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "K: ChainKernel")]
pub struct Checkpoint<K: ChainKernel> {
    pub command: Command,
    pub spec_hash: String,
    pub spec: ExperimentSpec,
    pub runs: Vec<ChainRun<K>>,
}

impl<K: ChainKernel> Checkpoint<K> {
    pub fn save(&self, path: &Path) -> Result<(), LabError> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let f = File::open(path).map_err(|e| LabError::Spec(format!("checkpoint {}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(f))
            .map_err(|e| LabError::Spec(format!("checkpoint {}: {e}", path.display())))
    }
}

/// Reads just the header of a checkpoint: its command and spec.
pub fn peek(path: &Path) -> Result<(Command, ExperimentSpec), LabError> {
    #[derive(Deserialize)]
    struct Head {
        command: Command,
        spec: ExperimentSpec,
    }
    let f = File::open(path).map_err(|e| LabError::Spec(format!("checkpoint {}: {e}", path.display())))?;
    let h: Head = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| LabError::Spec(format!("checkpoint {}: {e}", path.display())))?;
    Ok((h.command, h.spec))
}
