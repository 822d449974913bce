//! Residuals of the GNZ equation `E[Σ_X F(ω−δ_X, X)] = E[∫ F(ω, X) λ(ω, X) dX]`
//! estimated from samples, the inner integral by Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::geometry::MarkedBall;
use crate::model::Configuration;
use crate::rng::{stream, Purpose, Rng};
use crate::stats::{batch_means, mean};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `F ≡ 1`
    One,
    /// `F(ω, X) = 1{X meets no ball of ω}`
    Isolated,
    /// `F(ω, X) = 1{x_1 < midpoint of the window}`
    LeftHalf,
}

impl TestFunction {
    pub const DEFAULTS: [TestFunction; 3] =
        [TestFunction::One, TestFunction::Isolated, TestFunction::LeftHalf];

    /// `F(ω, X)`, or `F(ω − δ_X, X)` when `removed` (then `X` is a ball
    /// of `omega`).
    pub fn eval(self, omega: &Configuration, x: &MarkedBall, removed: bool) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Isolated => {
                let hits = omega.intersecting(x).len() - removed as usize;
                if hits == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::LeftHalf => {
                let window = omega.window();
                let mid = 0.5 * (window.lo().coords()[0] + window.hi().coords()[0]);
                if x.center.coords()[0] < mid {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::Isolated => "isolated",
            TestFunction::LeftHalf => "left-half",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnzOptions {
    /// Monte Carlo draws of `X` per sample for the inner integral.
    pub inner_draws: usize,
    pub seed: u64,
    /// Batches for the standard error of the mean difference.
    pub batches: usize,
}

impl Default for GnzOptions {
    fn default() -> Self {
        GnzOptions {
            inner_draws: 200,
            seed: 0,
            batches: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnzResidual {
    pub function: TestFunction,
    pub lhs: f64,
    pub rhs: f64,
    pub se: f64,
    /// `(LHS − RHS) / SE`
    pub residual: f64,
}

/// Evaluates both sides per sample with `eval(i, rng) -> (lhs, rhs)` (one
/// entry per test function) and reduces to standardized residuals.
pub(crate) fn residuals<F>(
    n_samples: usize,
    family: &[TestFunction],
    opts: &GnzOptions,
    exec: Execution,
    eval: F,
) -> Vec<GnzResidual>
where
    F: Fn(usize, &mut Rng) -> (Vec<f64>, Vec<f64>) + Sync + Send,
{
    let per_sample = exec.map(n_samples, |i| {
        let mut rng = stream(opts.seed, Purpose::Probe, i as u64);
        eval(i, &mut rng)
    });
    family
        .iter()
        .enumerate()
        .map(|(k, &function)| {
            let lhs: Vec<f64> = per_sample.iter().map(|(l, _)| l[k]).collect();
            let rhs: Vec<f64> = per_sample.iter().map(|(_, r)| r[k]).collect();
            let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            let bm = batch_means(&diff, opts.batches);
            let residual = if bm.se > 0.0 {
                bm.mean / bm.se
            } else if bm.mean == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(bm.mean)
            };
            GnzResidual {
                function,
                lhs: mean(&lhs),
                rhs: mean(&rhs),
                se: bm.se,
                residual,
            }
        })
        .collect()
}
