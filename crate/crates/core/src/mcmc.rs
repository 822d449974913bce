//! Generic chain driver: burn-in, thinning, traces and checkpointable runs.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stats::batch_means;

/// Per-state quantities recorded in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub count: usize,
    pub n_cc: usize,
    pub largest: usize,
}

/// A Markov kernel together with its state.
pub trait ChainKernel: Clone + Send + Serialize + DeserializeOwned {
    type Params: Sync + ?Sized;
    type Sample: Clone + Send + Serialize + DeserializeOwned;

    /// Number of balls in the current state.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn step(&mut self, params: &Self::Params) -> Result<()>;

    /// Proposals per sweep. It must not depend on the state: recording the
    /// chain at state-dependent times biases the samples.
    fn sweep_len(params: &Self::Params) -> u64;

    fn observe(&self) -> Observation;

    /// Birth and death acceptance rates so far.
    fn rates(&self) -> (f64, f64);

    fn snapshot(&self) -> Self::Sample;

    /// Recomputes cached quantities from scratch and compares.
    fn audit(&self) -> bool;

    fn steps(&self) -> u64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    /// Burn-in length in sweeps (see [`ChainKernel::sweep_len`]).
    pub burn_in: u64,
    /// Number of thinned samples to collect.
    pub samples: usize,
    /// Sweeps between samples; `None` picks the integrated autocorrelation
    /// time of the count measured on a pilot run after burn-in.
    pub thin: Option<usize>,
    pub pilot_sweeps: usize,
    /// Proposals between full recomputations of cached quantities.
    pub audit_every: u64,
    pub keep_samples: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            burn_in: 10_000,
            samples: 1_000,
            thin: None,
            pilot_sweeps: 1_000,
            audit_every: 10_000,
            keep_samples: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: u64,
    pub count: usize,
    pub n_cc: usize,
    pub largest_component: usize,
    pub accept_birth: f64,
    pub accept_death: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    /// One row per sweep after burn-in (and pilot).
    pub trace: Vec<TraceRow>,
    /// Rows at the thinned sample times.
    pub sample_rows: Vec<TraceRow>,
    pub thin: usize,
    pub accept_birth: f64,
    pub accept_death: f64,
    pub iat_count: f64,
    pub ess_count: f64,
    pub ess_n_cc: f64,
    pub audits: u64,
}

/// A chain in progress; serializable so runs can be checkpointed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "K: ChainKernel")]
pub struct ChainRun<K: ChainKernel> {
    pub state: K,
    pub options: ChainOptions,
    pub sweeps_done: u64,
    thin: Option<usize>,
    pilot: Vec<f64>,
    trace: Vec<TraceRow>,
    sample_rows: Vec<TraceRow>,
    samples: Vec<K::Sample>,
    audits: u64,
}

impl<K: ChainKernel> ChainRun<K> {
    pub fn new(state: K, options: ChainOptions) -> Result<Self> {
        if options.thin == Some(0) {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        if options.thin.is_none() && options.pilot_sweeps < 20 {
            return Err(Error::InvalidParameter(
                "automatic thinning needs a pilot of at least 20 sweeps".into(),
            ));
        }
        Ok(ChainRun {
            state,
            options,
            sweeps_done: 0,
            thin: options.thin,
            pilot: Vec::new(),
            trace: Vec::new(),
            sample_rows: Vec::new(),
            samples: Vec::new(),
            audits: 0,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.sample_rows.len() >= self.options.samples
    }

    fn sweep(&mut self, params: &K::Params) -> Result<()> {
        for _ in 0..K::sweep_len(params) {
            self.state.step(params)?;
            if self.options.audit_every > 0 && self.state.steps() % self.options.audit_every == 0 {
                assert!(
                    self.state.audit(),
                    "cached chain quantities diverged at step {}",
                    self.state.steps()
                );
                self.audits += 1;
            }
        }
        self.sweeps_done += 1;
        Ok(())
    }

    /// Runs until finished or until `budget` more sweeps were done.
    /// Returns whether the run is finished.
    pub fn advance(&mut self, params: &K::Params, budget: Option<u64>) -> Result<bool> {
        let mut left = budget.unwrap_or(u64::MAX);
        while !self.is_finished() {
            if left == 0 {
                return Ok(false);
            }
            left -= 1;
            self.sweep(params)?;
            if self.sweeps_done <= self.options.burn_in {
                continue;
            }
            let obs = self.state.observe();
            let thin = match self.thin {
                Some(t) => t,
                None => {
                    self.pilot.push(obs.count as f64);
                    if self.pilot.len() >= self.options.pilot_sweeps {
                        let iat = batch_means(&self.pilot, 20).iat;
                        self.thin = Some(iat.ceil().max(1.0) as usize);
                        self.pilot = Vec::new();
                    }
                    continue;
                }
            };
            let (ab, ad) = self.state.rates();
            let row = TraceRow {
                sweep: self.sweeps_done,
                count: obs.count,
                n_cc: obs.n_cc,
                largest_component: obs.largest,
                accept_birth: ab,
                accept_death: ad,
            };
            self.trace.push(row);
            if self.trace.len() % thin == 0 {
                self.sample_rows.push(row);
                if self.options.keep_samples {
                    self.samples.push(self.state.snapshot());
                }
            }
        }
        Ok(true)
    }

    pub fn run(mut self, params: &K::Params) -> Result<ChainOutput<K>> {
        self.advance(params, None)?;
        Ok(self.finish())
    }

    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn finish(self) -> ChainOutput<K> {
        let counts: Vec<f64> = self.trace.iter().map(|r| r.count as f64).collect();
        let ncc: Vec<f64> = self.trace.iter().map(|r| r.n_cc as f64).collect();
        let bc = batch_means(&counts, 20);
        let bn = batch_means(&ncc, 20);
        let (ab, ad) = self.state.rates();
        ChainOutput {
            report: SamplerReport {
                trace: self.trace,
                sample_rows: self.sample_rows,
                thin: self.thin.unwrap_or(1),
                accept_birth: ab,
                accept_death: ad,
                iat_count: bc.iat,
                ess_count: bc.ess,
                ess_n_cc: bn.ess,
                audits: self.audits,
            },
            samples: self.samples,
            state: self.state,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutput<K: ChainKernel> {
    pub report: SamplerReport,
    pub samples: Vec<K::Sample>,
    pub state: K,
}

/// Runs `n` independent chains; `init(i)` builds chain `i`'s start state.
pub fn run_chains<K, F>(
    params: &K::Params,
    options: ChainOptions,
    n: usize,
    exec: Execution,
    init: F,
) -> Result<Vec<ChainOutput<K>>>
where
    K: ChainKernel,
    F: Fn(usize) -> Result<K> + Sync + Send,
{
    exec.map(n, |i| ChainRun::new(init(i)?, options)?.run(params))
        .into_iter()
        .collect()
}
