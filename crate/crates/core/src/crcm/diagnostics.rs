//! Sample-based checks of the finite-volume measure: GNZ residuals and
//! stochastic domination.

use serde::{Deserialize, Serialize};

use crate::analysis::tilted_law;
use crate::connectivity::ClusterLabeling;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Aabb, MarkedBall};
use crate::gnz::{residuals, GnzOptions, GnzResidual, TestFunction};
use crate::model::boolean::uniform_point;
use crate::model::{expected_hits, Configuration, ModelParams};
use crate::stats::{batch_means, BatchMeans};

pub const MIN_GNZ_SAMPLES: usize = 100;

/// GNZ residuals for the CRCM, Papangelou intensity `z q^{ΔN}`. `q_rhs`
/// replaces `q` on the right-hand side (negative controls).
pub fn gnz_residual_crcm(
    samples: &[Configuration],
    params: &ModelParams,
    family: &[TestFunction],
    opts: &GnzOptions,
    q_rhs: Option<f64>,
    exec: Execution,
) -> Result<Vec<GnzResidual>> {
    if samples.len() < MIN_GNZ_SAMPLES {
        return Err(Error::InsufficientSamples {
            need: MIN_GNZ_SAMPLES,
            got: samples.len(),
        });
    }
    let q = q_rhs.unwrap_or(params.q);
    let window = params.window;
    let scale = params.z * window.volume();
    Ok(residuals(samples.len(), family, opts, exec, |i, rng| {
        let omega = &samples[i];
        let labels = ClusterLabeling::build(omega);
        let lhs: Vec<f64> = family
            .iter()
            .map(|f| omega.balls().iter().map(|x| f.eval(omega, x, true)).sum())
            .collect();
        let mut rhs = vec![0.0; family.len()];
        for _ in 0..opts.inner_draws {
            let x = MarkedBall {
                center: uniform_point(&window, rng),
                radius: params.law.sample(rng),
            };
            let w = q.powi(labels.increment(omega, &x) as i32);
            for (k, f) in family.iter().enumerate() {
                rhs[k] += f.eval(omega, &x, false) * w;
            }
        }
        rhs.iter_mut()
            .for_each(|v| *v *= scale / opts.inner_draws as f64);
        (lhs, rhs)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationLine {
    pub empirical: BatchMeans,
    /// Exact mean under the comparison Poisson process.
    pub reference: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// Comparison with `π^{qz,Q}` (only for `q ≥ 1`).
    pub upper_count: Option<DominationLine>,
    pub upper_hits: Option<DominationLine>,
    /// Comparison with `π^{z,Q̃}` (only for positive minimal radius).
    pub lower_count: Option<DominationLine>,
    pub lower_hits: Option<DominationLine>,
    pub tilted_mass: Option<f64>,
}

impl DominationReport {
    pub fn all_hold(&self) -> bool {
        [self.upper_count, self.upper_hits, self.lower_count, self.lower_hits]
            .iter()
            .flatten()
            .all(|l| l.holds)
    }
}

/// Compares increasing statistics (ball count, number of balls hitting
/// `probe`) with the Poisson processes that dominate the measure from above
/// and below. Hit counts are compared only when `probe` dilated by the
/// largest radius stays inside the window, so that every ball hitting it is
/// centred in the window.
pub fn domination_check(
    samples: &[Configuration],
    params: &ModelParams,
    probe: &Aabb,
) -> Result<DominationReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let window = params.window;
    let vol = window.volume();
    let counts: Vec<f64> = samples.iter().map(|c| c.len() as f64).collect();
    let hits: Vec<f64> = samples
        .iter()
        .map(|c| c.balls().iter().filter(|b| b.hits_box(probe)).count() as f64)
        .collect();
    let bc = batch_means(&counts, 20);
    let bh = batch_means(&hits, 20);
    let hits_exact = params
        .law
        .max_radius()
        .is_some_and(|r| probe.dilate(r).is_inside(&window));

    let upper = |reference: f64, e: BatchMeans| DominationLine {
        empirical: e,
        reference,
        holds: e.mean <= reference + 3.0 * e.se,
    };
    let lower = |reference: f64, e: BatchMeans| DominationLine {
        empirical: e,
        reference,
        holds: e.mean >= reference - 3.0 * e.se,
    };

    let (upper_count, upper_hits) = if params.q >= 1.0 {
        let zq = params.q * params.z;
        (
            Some(upper(zq * vol, bc)),
            hits_exact.then(|| upper(expected_hits(probe, zq, &params.law), bh)),
        )
    } else {
        (None, None)
    };
    let r0 = params.law.min_radius();
    let (lower_count, lower_hits, tilted_mass) = if r0 > 0.0 && params.q >= 1.0 {
        let t = tilted_law(&params.law, params.q, r0, params.dim())?;
        let hits_ref = t.expected_hits(probe, params.z);
        (
            Some(lower(params.z * t.mass * vol, bc)),
            hits_exact.then(|| lower(hits_ref, bh)),
            Some(t.mass),
        )
    } else {
        (None, None, None)
    };
    Ok(DominationReport {
        upper_count,
        upper_hits,
        lower_count,
        lower_hits,
        tilted_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_poisson_boolean, RadiusLaw};
    use crate::rng::{stream, Purpose};

    fn poisson_samples(p: &ModelParams, n: usize) -> Vec<Configuration> {
        let mut rng = stream(21, Purpose::Reference, 0);
        (0..n).map(|_| sample_poisson_boolean(p, &mut rng)).collect()
    }

    #[test]
    fn mecke_identity_on_poisson_samples() {
        let p = ModelParams::new(20.0, 1.0, RadiusLaw::Dirac(0.1), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let s = poisson_samples(&p, 2000);
        let r = gnz_residual_crcm(&s, &p, &TestFunction::DEFAULTS, &GnzOptions::default(), None, Execution::default())
            .unwrap();
        for x in &r {
            assert!(x.residual.abs() < 4.0, "{x:?}");
        }
        // q = 2 on the right-hand side is wrong for Poisson samples
        let bad = gnz_residual_crcm(&s, &p, &[TestFunction::One], &GnzOptions::default(), Some(2.0), Execution::default())
            .unwrap();
        assert!(bad[0].residual.abs() > 4.0);
    }

    #[test]
    fn too_few_samples() {
        let p = ModelParams::new(2.0, 1.0, RadiusLaw::Dirac(0.1), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let s = poisson_samples(&p, 10);
        assert!(gnz_residual_crcm(&s, &p, &TestFunction::DEFAULTS, &GnzOptions::default(), None, Execution::Sequential).is_err());
    }

    #[test]
    fn q_one_domination_is_equality() {
        let p = ModelParams::new(3.0, 1.0, RadiusLaw::Dirac(1.0), Aabb::cube(2, 0.0, 4.0).unwrap()).unwrap();
        let s = poisson_samples(&p, 4000);
        let probe = Aabb::cube(2, 1.0, 3.0).unwrap();
        let r = domination_check(&s, &p, &probe).unwrap();
        let uc = r.upper_count.unwrap();
        let lc = r.lower_count.unwrap();
        // with q = 1 the tilt is trivial and both bounds equal π^{z,Q}
        assert_eq!(uc.reference, lc.reference);
        assert!((uc.empirical.mean - uc.reference).abs() < 3.0 * uc.empirical.se);
        let uh = r.upper_hits.unwrap();
        assert!((uh.empirical.mean - uh.reference).abs() < 3.0 * uh.empirical.se);
        assert!(r.all_hold());
    }
}
