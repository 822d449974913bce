//! Birth, death and component-recolour moves for the finite-volume
//! Widom-Rowlinson measure with density `1_𝒜`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::connectivity::DynamicClusters;
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::MarkedBall;
use crate::mcmc::{run_chains, ChainKernel, ChainOptions, ChainOutput, Observation};
use crate::model::boolean::uniform_point;
use crate::model::{sample_poisson_boolean, Configuration, ModelParams};
use crate::rng::{stream, Purpose, Rng};

use super::{fk_colorize, ColoredConfiguration};

const P_BIRTH: f64 = 0.4;
const P_DEATH: f64 = 0.4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WrMoveCounts {
    pub birth_proposed: u64,
    pub birth_accepted: u64,
    pub death_proposed: u64,
    pub death_accepted: u64,
    pub recolors: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WrMove {
    Birth { accepted: bool },
    Death { accepted: bool },
    Recolor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WrState {
    colored: ColoredConfiguration,
    clusters: DynamicClusters,
    step: u64,
    rng: Rng,
    moves: WrMoveCounts,
}

impl WrState {
    pub fn new(colored: ColoredConfiguration, rng: Rng) -> Self {
        let clusters = DynamicClusters::build(colored.config());
        WrState {
            colored,
            clusters,
            step: 0,
            rng,
            moves: WrMoveCounts::default(),
        }
    }

    pub fn colored(&self) -> &ColoredConfiguration {
        &self.colored
    }

    pub fn moves(&self) -> WrMoveCounts {
        self.moves
    }

    pub fn n_cc(&self) -> usize {
        self.clusters.count()
    }

    /// Unclamped acceptance ratio of adding `x` with `color` to `n` balls
    /// in a window of volume `vol`; zero when forbidden.
    pub fn birth_ratio(&self, params: &ModelParams, x: &MarkedBall, color: u32, vol: f64, n: usize) -> f64 {
        if self.colored.allows(x, color) {
            params.z * vol / (n + 1) as f64
        } else {
            0.0
        }
    }

    /// Unclamped acceptance ratio of removing one of `n` balls.
    pub fn death_ratio(params: &ModelParams, vol: f64, n: usize) -> f64 {
        n as f64 / (params.z * vol)
    }

    pub fn wr_step(&mut self, params: &ModelParams) -> Result<WrMove> {
        let q = params.colors()?;
        self.step += 1;
        let vol = params.window.volume();
        let n = self.colored.len();
        let u: f64 = self.rng.random();
        if u < P_BIRTH {
            self.moves.birth_proposed += 1;
            let x = MarkedBall {
                center: uniform_point(&params.window, &mut self.rng),
                radius: params.law.sample(&mut self.rng),
            };
            let color = self.rng.random_range(1..=q);
            let ratio = self.birth_ratio(params, &x, color, vol, n);
            let accepted = ratio > 0.0 && (ratio >= 1.0 || self.rng.random::<f64>() < ratio);
            if accepted {
                self.moves.birth_accepted += 1;
                self.colored.config_mut().push_unchecked(x);
                self.colored.colors_mut().push(color);
                self.clusters.insert(self.colored.config());
            }
            Ok(WrMove::Birth { accepted })
        } else if u < P_BIRTH + P_DEATH {
            self.moves.death_proposed += 1;
            if n == 0 {
                return Ok(WrMove::Death { accepted: false });
            }
            let y = self.rng.random_range(0..n);
            let ratio = Self::death_ratio(params, vol, n);
            let accepted = ratio >= 1.0 || self.rng.random::<f64>() < ratio;
            if accepted {
                self.moves.death_accepted += 1;
                let plan = self.clusters.plan_removal(self.colored.config(), y);
                self.clusters.apply_removal(plan);
                self.colored.config_mut().swap_remove(y);
                self.colored.colors_mut().swap_remove(y);
            }
            Ok(WrMove::Death { accepted })
        } else {
            self.moves.recolors += 1;
            let live = self.clusters.live_slots();
            if !live.is_empty() {
                let slot = live[self.rng.random_range(0..live.len())];
                let color = self.rng.random_range(1..=q);
                // balls of different components never intersect, so the
                // result is always allowed
                for &b in self.clusters.members(slot) {
                    self.colored.colors_mut()[b as usize] = color;
                }
            }
            Ok(WrMove::Recolor)
        }
    }

    pub fn audit(&self) -> bool {
        self.clusters.consistent_with(self.colored.config()) && self.colored.is_allowed()
    }
}

impl ChainKernel for WrState {
    type Params = ModelParams;
    type Sample = ColoredConfiguration;

    fn len(&self) -> usize {
        self.colored.len()
    }

    /// `⌈z|W|⌉` proposals, the mean count of the Poisson reference.
    fn sweep_len(params: &ModelParams) -> u64 {
        params.mean_count().ceil().max(1.0) as u64
    }

    fn step(&mut self, params: &ModelParams) -> Result<()> {
        self.wr_step(params).map(|_| ())
    }

    fn observe(&self) -> Observation {
        Observation {
            count: self.colored.len(),
            n_cc: self.clusters.count(),
            largest: self.clusters.largest_size(),
        }
    }

    fn rates(&self) -> (f64, f64) {
        let r = |a: u64, p: u64| if p == 0 { 0.0 } else { a as f64 / p as f64 };
        (
            r(self.moves.birth_accepted, self.moves.birth_proposed),
            r(self.moves.death_accepted, self.moves.death_proposed),
        )
    }

    fn snapshot(&self) -> ColoredConfiguration {
        self.colored.clone()
    }

    fn audit(&self) -> bool {
        WrState::audit(self)
    }

    fn steps(&self) -> u64 {
        self.step
    }
}

/// Start state of chain `index`: a Poisson draw at intensity `z/q`, FK
/// coloured, then the chain's own stream.
pub fn initial_wr_state(params: &ModelParams, seed: u64, index: usize) -> Result<WrState> {
    let q = params.colors()?;
    let mut rng = stream(seed, Purpose::Chain, index as u64);
    let config: Configuration = sample_poisson_boolean(&params.with_z(params.z / q as f64), &mut rng);
    let colored = fk_colorize(&config, q, &mut rng)?;
    Ok(WrState::new(colored, rng))
}

/// Runs `n_chains` independent Widom-Rowlinson chains.
pub fn run_wr(
    params: &ModelParams,
    options: ChainOptions,
    seed: u64,
    n_chains: usize,
    exec: Execution,
) -> Result<Vec<ChainOutput<WrState>>> {
    params.colors()?;
    run_chains(params, options, n_chains, exec, |i| initial_wr_state(params, seed, i))
}
