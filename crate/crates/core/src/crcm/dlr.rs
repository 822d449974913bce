//! Resampling the balls centred in a box from their conditional law given
//! the rest of the configuration.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::connectivity::{ClusterLabeling, UnionFind};
use crate::error::{Error, Result};
use crate::geometry::{balls_intersect, Aabb, MarkedBall};
use crate::model::boolean::{poisson_count, uniform_point};
use crate::model::{Configuration, ModelParams};

use super::chain::ChainState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResampleOptions {
    /// Rejection proposals before falling back to nested birth-death.
    pub budget: usize,
    /// Sweeps of the nested birth-death fallback.
    pub fallback_sweeps: usize,
}

impl Default for ResampleOptions {
    fn default() -> Self {
        ResampleOptions {
            budget: 10_000,
            fallback_sweeps: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleMethod {
    Rejection { proposals: usize },
    Fallback,
}

/// Exterior balls with their component labels, for fast evaluation of the
/// local count of candidate interiors.
struct Exterior {
    config: Configuration,
    labels: ClusterLabeling,
    /// Components that some ball of radius `r_max` centred in `Λ` can reach.
    near: usize,
}

impl Exterior {
    fn new(config: Configuration, lambda: &Aabb, r_max: Option<f64>) -> Self {
        let labels = ClusterLabeling::build(&config);
        let near = match r_max {
            Some(r) => {
                let mut comps: Vec<usize> = (0..config.len())
                    .filter(|&i| {
                        let b = config.ball(i);
                        lambda.dist_to_point(&b.center) <= b.radius + r
                    })
                    .map(|i| labels.component_of(i))
                    .collect();
                comps.sort_unstable();
                comps.dedup();
                comps.len()
            }
            None => labels.count(),
        };
        Exterior { config, labels, near }
    }

    /// `N_cc(ω' + ω_ext) − N_cc(ω_ext)`.
    fn local_count(&self, inner: &[MarkedBall]) -> i64 {
        let m = inner.len();
        let mut touched: Vec<usize> = Vec::new();
        let mut links: Vec<(usize, usize)> = Vec::new();
        for (i, b) in inner.iter().enumerate() {
            for j in self.config.intersecting(b) {
                let c = self.labels.component_of(j);
                let slot = match touched.iter().position(|&t| t == c) {
                    Some(s) => s,
                    None => {
                        touched.push(c);
                        touched.len() - 1
                    }
                };
                links.push((i, m + slot));
            }
        }
        let mut uf = UnionFind::new(m + touched.len());
        for i in 0..m {
            for j in i + 1..m {
                if balls_intersect(&inner[i], &inner[j]) {
                    uf.union(i, j);
                }
            }
        }
        for (a, b) in links {
            uf.union(a, b);
        }
        uf.count() as i64 - touched.len() as i64
    }
}

/// Replaces the balls centred in `lambda` by a draw from the conditional
/// density `∝ q^{N^Λ_cc(· + ω_{Λ^c})}` with respect to the Poisson model on
/// `lambda`; the exterior is left untouched.
///
/// For `q ≥ 1` proposals come from the Poisson model of intensity `qz`
/// and are accepted with probability `q^{N^Λ − n}`; for `q < 1` they come
/// from intensity `z` and are accepted with `q^{N^Λ − lo}`, `lo` a lower
/// bound on the local count. When the budget runs out a nested birth-death
/// chain restricted to `lambda` is used instead.
pub fn conditional_resample(
    state: &mut ChainState,
    lambda: &Aabb,
    params: &ModelParams,
    opts: &ResampleOptions,
) -> Result<ResampleMethod> {
    params.require_assumption_a()?;
    if lambda.dim() != params.dim() || !lambda.is_inside(state.config().window()) {
        return Err(Error::LambdaNotInWindow(format!("{lambda:?}")));
    }
    let q = params.q;
    let exterior = Exterior::new(state.config().exclude(lambda), lambda, params.law.max_radius());
    let lo = (1 - exterior.near as i64).min(0);
    let intensity = if q >= 1.0 { q * params.z } else { params.z };
    let mean = intensity * lambda.volume();
    let mut inner = Vec::new();
    for attempt in 1..=opts.budget {
        inner.clear();
        let rng = state.rng_mut();
        let n = poisson_count(mean, rng);
        for _ in 0..n {
            let center = uniform_point(lambda, rng);
            inner.push(MarkedBall {
                center,
                radius: params.law.sample(rng),
            });
        }
        let local = exterior.local_count(&inner);
        let log_accept = if q >= 1.0 {
            (local - n as i64) as f64 * q.ln()
        } else {
            (local - lo) as f64 * q.ln()
        };
        let u: f64 = state.rng_mut().random();
        if log_accept >= 0.0 || u.ln() < log_accept {
            let mut config = exterior.config;
            for b in inner.drain(..) {
                config.push(b)?;
            }
            state.replace_config(config);
            return Ok(ResampleMethod::Rejection { proposals: attempt });
        }
    }
    log::warn!(
        "{}; falling back to {} nested birth-death sweeps",
        Error::RejectionBudgetExceeded(opts.budget),
        opts.fallback_sweeps
    );
    state.bd_sweeps_in(params, lambda, opts.fallback_sweeps)?;
    Ok(ResampleMethod::Fallback)
}

/// Splits `window` into `per_axis^d` congruent boxes.
pub fn grid_partition(window: &Aabb, per_axis: usize) -> Vec<Aabb> {
    let d = window.dim();
    let per_axis = per_axis.max(1);
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for k in 0..d {
                let i = idx % per_axis;
                idx /= per_axis;
                let a = window.lo().coords()[k];
                let h = window.side(k) / per_axis as f64;
                lo[k] = a + i as f64 * h;
                hi[k] = if i + 1 == per_axis {
                    window.hi().coords()[k]
                } else {
                    a + (i + 1) as f64 * h
                };
            }
            Aabb::new(&lo, &hi).expect("ordered")
        })
        .collect()
}

/// One heat-bath sweep: conditional resampling of every cell in turn.
pub fn heat_bath_sweep(
    state: &mut ChainState,
    cells: &[Aabb],
    params: &ModelParams,
    opts: &ResampleOptions,
) -> Result<Vec<ResampleMethod>> {
    cells
        .iter()
        .map(|c| conditional_resample(state, c, params, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::local_cc_value;
    use crate::model::{sample_poisson_boolean, RadiusLaw};
    use crate::rng::{stream, Purpose};

    #[test]
    fn local_count_matches_direct_evaluation() {
        let p = ModelParams::new(6.0, 2.0, RadiusLaw::UniformInterval(0.05, 0.4), Aabb::cube(2, 0.0, 3.0).unwrap())
            .unwrap();
        let lam = Aabb::cube(2, 1.0, 2.0).unwrap();
        let mut rng = stream(8, Purpose::Misc, 0);
        for _ in 0..100 {
            let c = sample_poisson_boolean(&p, &mut rng);
            let ext = Exterior::new(c.exclude(&lam), &lam, p.law.max_radius());
            let inner: Vec<MarkedBall> = c.restrict(&lam).balls().to_vec();
            assert_eq!(ext.local_count(&inner), local_cc_value(&c, &lam).unwrap());
            assert!(ext.local_count(&inner) >= (1 - ext.near as i64).min(0));
        }
    }

    #[test]
    fn exterior_is_untouched() {
        let p = ModelParams::new(8.0, 2.0, RadiusLaw::Dirac(0.2), Aabb::cube(2, 0.0, 2.0).unwrap()).unwrap();
        let c = sample_poisson_boolean(&p, &mut stream(1, Purpose::Misc, 0));
        let lam = Aabb::cube(2, 0.5, 1.5).unwrap();
        let mut s = ChainState::new(c.clone(), stream(1, Purpose::Chain, 0));
        for _ in 0..20 {
            conditional_resample(&mut s, &lam, &p, &ResampleOptions::default()).unwrap();
            assert_eq!(s.config().exclude(&lam).balls(), c.exclude(&lam).balls());
            assert!(s.audit());
        }
    }

    #[test]
    fn q_one_gives_poisson_counts() {
        let p = ModelParams::new(5.0, 1.0, RadiusLaw::Dirac(0.1), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let mut s = ChainState::empty(&p, stream(2, Purpose::Chain, 0));
        let w = p.window;
        let counts: Vec<f64> = (0..4000)
            .map(|_| {
                let m = conditional_resample(&mut s, &w, &p, &ResampleOptions::default()).unwrap();
                assert_eq!(m, ResampleMethod::Rejection { proposals: 1 });
                s.config().len() as f64
            })
            .collect();
        let m = crate::stats::mean(&counts);
        let v = crate::stats::variance(&counts);
        assert!((m - 5.0).abs() < 4.0 * (5.0f64 / 4000.0).sqrt());
        assert!((v / m - 1.0).abs() < 0.15);
    }

    #[test]
    fn fallback_runs_when_budget_is_zero() {
        let p = ModelParams::new(5.0, 0.5, RadiusLaw::Dirac(0.1), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let mut s = ChainState::empty(&p, stream(2, Purpose::Chain, 0));
        let opts = ResampleOptions {
            budget: 0,
            fallback_sweeps: 5,
        };
        let lam = Aabb::cube(2, 0.0, 0.5).unwrap();
        assert_eq!(conditional_resample(&mut s, &lam, &p, &opts).unwrap(), ResampleMethod::Fallback);
        assert!(s.config().balls().iter().all(|b| lam.contains(&b.center)));
    }

    #[test]
    fn partition_covers_window() {
        let w = Aabb::cube(2, 0.0, 3.0).unwrap();
        let cells = grid_partition(&w, 3);
        assert_eq!(cells.len(), 9);
        let total: f64 = cells.iter().map(|c| c.volume()).sum();
        assert!((total - 9.0).abs() < 1e-12);
    }
}
