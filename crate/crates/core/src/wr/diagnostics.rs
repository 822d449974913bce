//! GNZ residuals for the Widom-Rowlinson model and the check that its
//! colour-blind projection is the CRCM with activity `z/q`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::crcm::initial_state;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::MarkedBall;
use crate::gnz::{residuals, GnzOptions, GnzResidual, TestFunction};
use crate::mcmc::{ChainOptions, ChainRun, TraceRow};
use crate::model::boolean::uniform_point;
use crate::model::ModelParams;
use crate::stats::{bonferroni, chi2_homogeneity, ks_two_sample};

use super::{initial_wr_state, ColoredConfiguration};

const MIN_GNZ_SAMPLES: usize = 100;

/// GNZ residuals with Papangelou intensity `z 1_𝒜(ω + δ_X)` against marks
/// uniform over the `q` colours. `drop_indicator` replaces the indicator by
/// one on the right-hand side (negative control).
pub fn gnz_residual_wr(
    samples: &[ColoredConfiguration],
    params: &ModelParams,
    family: &[TestFunction],
    opts: &GnzOptions,
    drop_indicator: bool,
    exec: Execution,
) -> Result<Vec<GnzResidual>> {
    let q = params.colors()?;
    if samples.len() < MIN_GNZ_SAMPLES {
        return Err(Error::InsufficientSamples {
            need: MIN_GNZ_SAMPLES,
            got: samples.len(),
        });
    }
    let window = params.window;
    let scale = params.z * window.volume();
    Ok(residuals(samples.len(), family, opts, exec, |i, rng| {
        let omega = &samples[i];
        let lhs: Vec<f64> = family
            .iter()
            .map(|f| omega.config().balls().iter().map(|x| f.eval(omega.config(), x, true)).sum())
            .collect();
        let mut rhs = vec![0.0; family.len()];
        for _ in 0..opts.inner_draws {
            let x = MarkedBall {
                center: uniform_point(&window, rng),
                radius: params.law.sample(rng),
            };
            let color = rng.random_range(1..=q);
            if drop_indicator || omega.allows(&x, color) {
                for (k, f) in family.iter().enumerate() {
                    rhs[k] += f.eval(omega.config(), &x, false);
                }
            }
        }
        rhs.iter_mut()
            .for_each(|v| *v *= scale / opts.inner_draws as f64);
        (lhs, rhs)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkOptions {
    pub chain: ChainOptions,
    /// Independent (WR, CRCM) chain pairs.
    pub pairs: usize,
    pub seed: u64,
    /// Family-wise level across all pairs and statistics.
    pub alpha: f64,
    /// Activity of the CRCM side; `None` means `z/q`. Anything else is a
    /// negative control.
    pub crcm_z: Option<f64>,
}

impl Default for FkOptions {
    fn default() -> Self {
        FkOptions {
            chain: ChainOptions {
                burn_in: 2_000,
                samples: 400,
                thin: None,
                pilot_sweeps: 500,
                audit_every: 0,
                keep_samples: false,
            },
            pairs: 8,
            seed: 0,
            alpha: 0.01,
            crcm_z: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkPairResult {
    pub pair: usize,
    /// χ² homogeneity on the ball count.
    pub p_count: f64,
    /// χ² homogeneity on the number of components.
    pub p_n_cc: f64,
    /// Kolmogorov-Smirnov on the largest component size.
    pub p_largest: f64,
}

impl FkPairResult {
    pub fn min_p(&self) -> f64 {
        self.p_count.min(self.p_n_cc).min(self.p_largest)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkReport {
    pub pairs: Vec<FkPairResult>,
    /// Per-test level after the Bonferroni correction.
    pub threshold: f64,
    pub rejected: bool,
}

/// Runs `opts.pairs` independent pairs of chains, Widom-Rowlinson at
/// `params` and CRCM at `(z/q, Q, q)`, and compares the colour-blind
/// statistics of their thinned samples.
pub fn fk_consistency_test(params: &ModelParams, opts: &FkOptions, exec: Execution) -> Result<FkReport> {
    let q = params.colors()?;
    if opts.pairs == 0 {
        return Err(Error::InvalidParameter("need at least one chain pair".into()));
    }
    let crcm_params = params.with_z(opts.crcm_z.unwrap_or(params.z / q as f64));
    let mut chain = opts.chain;
    chain.keep_samples = false;
    // chain 2i is the WR side of pair i, chain 2i+1 the CRCM side
    let rows = exec.map(2 * opts.pairs, |k| -> Result<Vec<TraceRow>> {
        let report = if k % 2 == 0 {
            ChainRun::new(initial_wr_state(params, opts.seed, k)?, chain)?.run(params)?.report
        } else {
            ChainRun::new(initial_state(&crcm_params, opts.seed, k)?, chain)?.run(&crcm_params)?.report
        };
        Ok(report.sample_rows)
    });
    let rows: Vec<Vec<TraceRow>> = rows.into_iter().collect::<Result<_>>()?;
    let pairs = rows
        .chunks_exact(2)
        .enumerate()
        .map(|(pair, r)| {
            let ints = |rows: &[TraceRow], f: fn(&TraceRow) -> usize| -> Vec<i64> {
                rows.iter().map(|x| f(x) as i64).collect()
            };
            let floats = |rows: &[TraceRow]| -> Vec<f64> {
                rows.iter().map(|x| x.largest_component as f64).collect()
            };
            Ok(FkPairResult {
                pair,
                p_count: chi2_homogeneity(&ints(&r[0], |x| x.count), &ints(&r[1], |x| x.count))?.p_value,
                p_n_cc: chi2_homogeneity(&ints(&r[0], |x| x.n_cc), &ints(&r[1], |x| x.n_cc))?.p_value,
                p_largest: ks_two_sample(&floats(&r[0]), &floats(&r[1]))?.p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = bonferroni(opts.alpha, 3 * opts.pairs);
    let rejected = pairs.iter().any(|p| p.min_p() < threshold);
    Ok(FkReport {
        pairs,
        threshold,
        rejected,
    })
}
