//! Birth-death Metropolis-Hastings for the density `q^{N_cc}` with respect
//! to the Poisson Boolean model on the window.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::connectivity::{count_components, DynamicClusters};
use crate::error::Result;
use crate::geometry::{Aabb, MarkedBall};
use crate::mcmc::{ChainKernel, Observation};
use crate::model::boolean::uniform_point;
use crate::model::{Configuration, ModelParams};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub birth_proposed: u64,
    pub birth_accepted: u64,
    pub death_proposed: u64,
    pub death_accepted: u64,
}

impl MoveCounts {
    pub fn birth_rate(&self) -> f64 {
        rate(self.birth_accepted, self.birth_proposed)
    }

    pub fn death_rate(&self) -> f64 {
        rate(self.death_accepted, self.death_proposed)
    }
}

fn rate(a: u64, p: u64) -> f64 {
    if p == 0 {
        0.0
    } else {
        a as f64 / p as f64
    }
}

/// Configuration plus cached component labels, `N_cc`, step counter and
/// random stream.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainState {
    config: Configuration,
    clusters: DynamicClusters,
    n_cc: i64,
    step: u64,
    rng: Rng,
    moves: MoveCounts,
}

/// What a single step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Birth { accepted: bool },
    Death { accepted: bool },
}

impl ChainState {
    pub fn new(config: Configuration, rng: Rng) -> Self {
        let clusters = DynamicClusters::build(&config);
        let n_cc = clusters.count() as i64;
        ChainState {
            config,
            clusters,
            n_cc,
            step: 0,
            rng,
            moves: MoveCounts::default(),
        }
    }

    pub fn empty(params: &ModelParams, rng: Rng) -> Self {
        ChainState::new(Configuration::for_law(params.window, &params.law), rng)
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn n_cc(&self) -> i64 {
        self.n_cc
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moves(&self) -> MoveCounts {
        self.moves
    }

    pub fn rng_mut(&mut self) -> &mut Rng {
        &mut self.rng
    }

    pub fn clusters(&self) -> &DynamicClusters {
        &self.clusters
    }

    /// Replaces the configuration and rebuilds every cache.
    pub fn replace_config(&mut self, config: Configuration) {
        self.clusters = DynamicClusters::build(&config);
        self.n_cc = self.clusters.count() as i64;
        self.config = config;
    }

    pub fn audit(&self) -> bool {
        self.n_cc == count_components(&self.config) as i64 && self.n_cc == self.clusters.count() as i64
    }

    /// Increment of `N_cc` if `x` were added.
    pub fn increment(&mut self, x: &MarkedBall) -> i64 {
        self.clusters.birth_increment(&self.config, x)
    }

    /// Unclamped Metropolis-Hastings ratio of adding `x`, the birth region
    /// having volume `vol` and currently holding `n` balls.
    pub fn birth_ratio(&mut self, params: &ModelParams, x: &MarkedBall, vol: f64, n: usize) -> f64 {
        let inc = self.increment(x);
        params.z * vol * params.q.powi(inc as i32) / (n + 1) as f64
    }

    /// Unclamped ratio of removing ball `y` out of `n` candidates.
    pub fn death_ratio(&mut self, params: &ModelParams, y: usize, vol: f64, n: usize) -> f64 {
        let plan = self.clusters.plan_removal(&self.config, y);
        n as f64 * params.q.powi(-plan.increment() as i32) / (params.z * vol)
    }

    fn add(&mut self, x: MarkedBall) {
        self.config.push_unchecked(x);
        self.n_cc += self.clusters.insert(&self.config);
    }

    fn remove_with(&mut self, plan: crate::connectivity::RemovalPlan) {
        let y = plan.ball;
        self.n_cc -= plan.increment();
        self.clusters.apply_removal(plan);
        self.config.swap_remove(y);
    }

    /// One birth-death proposal on the whole window.
    pub fn bd_step(&mut self, params: &ModelParams) -> Result<Move> {
        require_assumption(params)?;
        let region = *self.config.window();
        let n = self.config.len();
        let mv = self.region_step(params, &region, n, |_, i| i)?;
        Ok(mv)
    }

    /// One birth-death proposal restricted to `region`: births are uniform in
    /// `region`, deaths pick uniformly among the `n` balls centred there.
    /// `pick(state, k)` maps `k in 0..n` to the ball id.
    fn region_step<P>(&mut self, params: &ModelParams, region: &Aabb, n: usize, pick: P) -> Result<Move>
    where
        P: Fn(&ChainState, usize) -> usize,
    {
        self.step += 1;
        let vol = region.volume();
        if self.rng.random::<bool>() {
            self.moves.birth_proposed += 1;
            let center = uniform_point(region, &mut self.rng);
            let x = MarkedBall {
                center,
                radius: params.law.sample(&mut self.rng),
            };
            let ratio = self.birth_ratio(params, &x, vol, n);
            let accepted = ratio >= 1.0 || self.rng.random::<f64>() < ratio;
            if accepted {
                self.moves.birth_accepted += 1;
                self.add(x);
            }
            Ok(Move::Birth { accepted })
        } else {
            self.moves.death_proposed += 1;
            if n == 0 {
                return Ok(Move::Death { accepted: false });
            }
            let k = self.rng.random_range(0..n);
            let y = pick(self, k);
            let plan = self.clusters.plan_removal(&self.config, y);
            let ratio = n as f64 * params.q.powi(-plan.increment() as i32) / (params.z * vol);
            let accepted = ratio >= 1.0 || self.rng.random::<f64>() < ratio;
            if accepted {
                self.moves.death_accepted += 1;
                self.remove_with(plan);
            }
            Ok(Move::Death { accepted })
        }
    }

    /// Birth-death proposals restricted to `region`, all increments taken
    /// against the whole configuration; balls outside stay frozen.
    pub fn bd_sweeps_in(&mut self, params: &ModelParams, region: &Aabb, sweeps: usize) -> Result<()> {
        require_assumption(params)?;
        let per_sweep = (params.z * region.volume()).ceil().max(1.0) as u64;
        for _ in 0..sweeps {
            for _ in 0..per_sweep {
                let ids: Vec<usize> = (0..self.config.len())
                    .filter(|&i| region.contains(&self.config.ball(i).center))
                    .collect();
                let n = ids.len();
                self.region_step(params, region, n, |_, k| ids[k])?;
            }
        }
        Ok(())
    }
}

pub(crate) fn require_assumption(params: &ModelParams) -> Result<()> {
    params.require_assumption_a()
}

/// Papangelou intensity `z q^{ΔN}` of adding `x` to the chain's state.
pub fn papangelou_weight(state: &mut ChainState, params: &ModelParams, x: &MarkedBall) -> f64 {
    params.z * params.q.powi(state.increment(x) as i32)
}

/// Birth-death step; see [`ChainState::bd_step`].
pub fn bd_step(state: &mut ChainState, params: &ModelParams) -> Result<Move> {
    state.bd_step(params)
}

impl ChainKernel for ChainState {
    type Params = ModelParams;
    type Sample = Configuration;

    fn len(&self) -> usize {
        self.config.len()
    }

    /// `⌈z|W|⌉` proposals, the mean count of the Poisson reference.
    fn sweep_len(params: &ModelParams) -> u64 {
        params.mean_count().ceil().max(1.0) as u64
    }

    fn step(&mut self, params: &ModelParams) -> Result<()> {
        self.bd_step(params).map(|_| ())
    }

    fn observe(&self) -> Observation {
        Observation {
            count: self.config.len(),
            n_cc: self.n_cc as usize,
            largest: self.clusters.largest_size(),
        }
    }

    fn rates(&self) -> (f64, f64) {
        (self.moves.birth_rate(), self.moves.death_rate())
    }

    fn snapshot(&self) -> Configuration {
        self.config.clone()
    }

    fn audit(&self) -> bool {
        ChainState::audit(self)
    }

    fn steps(&self) -> u64 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::{sample_poisson_boolean, RadiusLaw};
    use crate::rng::{stream, Purpose};

    fn params(z: f64, q: f64) -> ModelParams {
        ModelParams::new(z, q, RadiusLaw::Dirac(0.3), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap()
    }

    fn state_with(balls: &[[f64; 2]], r: f64) -> ChainState {
        let w = Aabb::cube(2, -10.0, 10.0).unwrap();
        let c = Configuration::from_balls(
            w,
            &RadiusLaw::Dirac(r),
            balls.iter().map(|c| MarkedBall::at(c, r)).collect(),
        )
        .unwrap();
        ChainState::new(c, stream(0, Purpose::Chain, 0))
    }

    #[test]
    fn papangelou_examples() {
        let p = ModelParams::new(1.0, 2.0, RadiusLaw::Dirac(1.0), Aabb::cube(2, -10.0, 10.0).unwrap()).unwrap();
        let mut s = state_with(&[[0.0, 0.0], [4.0, 0.0]], 1.0);
        assert_eq!(papangelou_weight(&mut s, &p, &MarkedBall::at(&[0.0, 6.0], 1.0)), 2.0);
        assert_eq!(papangelou_weight(&mut s, &p, &MarkedBall::at(&[2.0, 0.0], 1.0)), 0.5);
        let p1 = p.with_q(1.0);
        assert_eq!(papangelou_weight(&mut s, &p1, &MarkedBall::at(&[2.0, 0.0], 1.0)), 1.0);
    }

    #[test]
    fn birth_from_empty_state() {
        let p = params(2.0, 2.0);
        let mut s = ChainState::empty(&p, stream(0, Purpose::Chain, 0));
        let x = MarkedBall::at(&[0.5, 0.5], 0.3);
        // z|Λ| q / 1 = 4
        assert_eq!(s.birth_ratio(&p, &x, 1.0, 0), 4.0);
    }

    #[test]
    fn detailed_balance_audit() {
        let p = ModelParams::new(3.0, 2.5, RadiusLaw::UniformInterval(0.1, 0.5), Aabb::cube(2, 0.0, 3.0).unwrap())
            .unwrap();
        let mut rng = stream(5, Purpose::Misc, 0);
        for _ in 0..200 {
            let c = sample_poisson_boolean(&p, &mut rng);
            let mut s = ChainState::new(c, stream(1, Purpose::Chain, 0));
            let x = MarkedBall {
                center: uniform_point(&p.window, &mut rng),
                radius: p.law.sample(&mut rng),
            };
            let vol = p.window.volume();
            let n = s.config().len();
            let forward = s.birth_ratio(&p, &x, vol, n);
            s.add(x);
            let backward = s.death_ratio(&p, n, vol, n + 1);
            assert!((forward * backward - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn assumption_a_enforced() {
        let p = ModelParams::new(1.0, 0.5, RadiusLaw::ParetoTail { dim: 2 }, Aabb::cube(2, 0.0, 1.0).unwrap())
            .unwrap();
        let mut s = ChainState::empty(&p, stream(0, Purpose::Chain, 0));
        assert!(matches!(bd_step(&mut s, &p), Err(Error::AssumptionAViolated { .. })));
    }

    #[test]
    fn cached_count_survives_many_steps() {
        let p = ModelParams::new(40.0, 2.0, RadiusLaw::UniformInterval(0.02, 0.15), Aabb::cube(2, 0.0, 1.0).unwrap())
            .unwrap();
        let mut s = ChainState::empty(&p, stream(3, Purpose::Chain, 0));
        for i in 0..20_000 {
            bd_step(&mut s, &p).unwrap();
            if i % 1000 == 0 {
                assert!(s.audit());
            }
        }
        assert!(s.audit());
        assert!(s.moves().birth_rate() > 0.0 && s.moves().death_rate() > 0.0);
    }

    #[test]
    fn serde_round_trip_continues_identically() {
        let p = params(5.0, 2.0);
        let mut a = ChainState::empty(&p, stream(9, Purpose::Chain, 0));
        for _ in 0..500 {
            bd_step(&mut a, &p).unwrap();
        }
        let json = serde_json::to_string(&a).unwrap();
        let mut b: ChainState = serde_json::from_str(&json).unwrap();
        for _ in 0..500 {
            bd_step(&mut a, &p).unwrap();
            bd_step(&mut b, &p).unwrap();
        }
        assert_eq!(a.config().balls(), b.config().balls());
        assert_eq!(a.n_cc(), b.n_cc());
    }
}
