//! The finite-volume continuum random cluster model: birth-death sampler,
//! importance-sampling oracle, conditional resampling and diagnostics.

mod chain;
mod diagnostics;
mod dlr;
mod oracle;

pub use chain::{bd_step, papangelou_weight, ChainState, Move, MoveCounts};
pub use diagnostics::{domination_check, gnz_residual_crcm, DominationLine, DominationReport};
pub use dlr::{conditional_resample, grid_partition, heat_bath_sweep, ResampleMethod, ResampleOptions};
pub use oracle::{
    entropy_report, importance_oracle, EntropyReport, OracleEstimate, OracleReport, Statistic,
};

use crate::error::Result;
use crate::exec::Execution;
use crate::mcmc::{run_chains, ChainOptions, ChainOutput};
use crate::model::{sample_poisson_boolean, ModelParams};
use crate::rng::{stream, Purpose};

/// Start state of chain `index`: a Poisson Boolean draw, followed by the
/// chain's own stream.
pub fn initial_state(params: &ModelParams, seed: u64, index: usize) -> Result<ChainState> {
    params.require_assumption_a()?;
    let mut rng = stream(seed, Purpose::Chain, index as u64);
    let config = sample_poisson_boolean(params, &mut rng);
    Ok(ChainState::new(config, rng))
}

/// Runs `n_chains` independent CRCM chains.
pub fn run_crcm(
    params: &ModelParams,
    options: ChainOptions,
    seed: u64,
    n_chains: usize,
    exec: Execution,
) -> Result<Vec<ChainOutput<ChainState>>> {
    run_chains(params, options, n_chains, exec, |i| initial_state(params, seed, i))
}
