//! Self-normalized importance sampling from the Poisson Boolean model, with
//! weights `q^{N_cc}`; exact in the limit and cheap for small `z|Λ|`.

use serde::{Deserialize, Serialize};

use crate::connectivity::count_components;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{sample_poisson_boolean, Configuration, ModelParams};
use crate::rng::{stream, Purpose};

/// Draws per parallel batch; each batch has its own stream.
pub const ORACLE_BATCH: usize = 10_000;
pub const MIN_ESS: f64 = 50.0;

pub type Statistic<'a> = &'a (dyn Fn(&Configuration) -> f64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// One entry per statistic, in order.
    pub estimates: Vec<OracleEstimate>,
    pub ess: f64,
    /// `ln Ẑ` with `Ẑ` the mean weight, an estimate of `Z = E_π[q^{N_cc}]`.
    pub ln_z: f64,
    pub ln_z_se: f64,
    pub n: usize,
}

/// Weighted sums relative to a local maximum log-weight.
#[derive(Clone, Debug)]
struct Accum {
    max: f64,
    s0: f64,
    s00: f64,
    s1: Vec<f64>,
    s11: Vec<f64>,
    s01: Vec<f64>,
}

impl Accum {
    fn rescale(&mut self, new_max: f64) {
        if new_max == self.max {
            return;
        }
        let f = (self.max - new_max).exp();
        let f2 = f * f;
        self.s0 *= f;
        self.s00 *= f2;
        self.s1.iter_mut().for_each(|v| *v *= f);
        self.s11.iter_mut().for_each(|v| *v *= f2);
        self.s01.iter_mut().for_each(|v| *v *= f2);
        self.max = new_max;
    }

    fn merge(mut self, mut other: Accum) -> Accum {
        let m = self.max.max(other.max);
        self.rescale(m);
        other.rescale(m);
        self.s0 += other.s0;
        self.s00 += other.s00;
        for k in 0..self.s1.len() {
            self.s1[k] += other.s1[k];
            self.s11[k] += other.s11[k];
            self.s01[k] += other.s01[k];
        }
        self
    }
}

/// Estimates `E_P[f]` for each statistic, `P` having density `q^{N_cc}/Z`
/// with respect to the Poisson Boolean model on the window.
pub fn importance_oracle(
    params: &ModelParams,
    stats: &[Statistic<'_>],
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<OracleReport> {
    params.require_assumption_a()?;
    if n_samples < 1_000 {
        return Err(Error::InsufficientSamples {
            need: 1_000,
            got: n_samples,
        });
    }
    let ln_q = params.q.ln();
    let batches = n_samples.div_ceil(ORACLE_BATCH);
    let k = stats.len();
    let parts = exec.map(batches, |b| {
        let size = ORACLE_BATCH.min(n_samples - b * ORACLE_BATCH);
        let mut rng = stream(seed, Purpose::Oracle, b as u64);
        let mut lw = Vec::with_capacity(size);
        let mut fv = Vec::with_capacity(size * k);
        for _ in 0..size {
            let c = sample_poisson_boolean(params, &mut rng);
            lw.push(count_components(&c) as f64 * ln_q);
            fv.extend(stats.iter().map(|f| f(&c)));
        }
        let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Accum {
            max,
            s0: 0.0,
            s00: 0.0,
            s1: vec![0.0; k],
            s11: vec![0.0; k],
            s01: vec![0.0; k],
        };
        for (i, l) in lw.iter().enumerate() {
            let w = (l - max).exp();
            let w2 = w * w;
            acc.s0 += w;
            acc.s00 += w2;
            for j in 0..k {
                let f = fv[i * k + j];
                acc.s1[j] += w * f;
                acc.s11[j] += w2 * f * f;
                acc.s01[j] += w2 * f;
            }
        }
        acc
    });
    let acc = parts
        .into_iter()
        .reduce(Accum::merge)
        .expect("at least one batch");
    let ess = acc.s0 * acc.s0 / acc.s00;
    if ess < MIN_ESS {
        return Err(Error::DegenerateWeights { ess, min: MIN_ESS });
    }
    let n = n_samples as f64;
    let estimates = (0..k)
        .map(|j| {
            let mu = acc.s1[j] / acc.s0;
            let var = (acc.s11[j] - 2.0 * mu * acc.s01[j] + mu * mu * acc.s00) / (acc.s0 * acc.s0);
            OracleEstimate {
                estimate: mu,
                se: var.max(0.0).sqrt(),
            }
        })
        .collect();
    let ln_z = acc.max + (acc.s0 / n).ln();
    // relative variance of the mean weight
    let rel = (n * acc.s00 / (acc.s0 * acc.s0) - 1.0).max(0.0) / n;
    Ok(OracleReport {
        estimates,
        ess,
        ln_z,
        ln_z_se: rel.sqrt(),
        n: n_samples,
    })
}

/// Relative entropy rate of the finite-volume measure and its upper bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// `(−ln Ẑ + ln q · Ê[N_cc]) / |Λ|`
    pub rate: f64,
    pub rate_se: f64,
    /// `z + max(ln q, 0) · Ê[count] / |Λ|`
    pub bound: f64,
    pub bound_holds: bool,
    pub margin: f64,
    pub ln_z: f64,
    pub ln_z_se: f64,
    /// `ln Ẑ ≥ −z|Λ|` up to three standard errors.
    pub ln_z_floor_holds: bool,
    pub mean_n_cc: OracleEstimate,
    pub mean_count: OracleEstimate,
}

pub fn entropy_report(params: &ModelParams, n_oracle: usize, seed: u64, exec: Execution) -> Result<EntropyReport> {
    let ncc = |c: &Configuration| count_components(c) as f64;
    let count = |c: &Configuration| c.len() as f64;
    let r = importance_oracle(params, &[&ncc, &count], n_oracle, seed, exec)?;
    let vol = params.window.volume();
    let ln_q = params.q.ln();
    let (e_n, e_c) = (r.estimates[0], r.estimates[1]);
    let rate = (-r.ln_z + ln_q * e_n.estimate) / vol;
    let rate_se = (r.ln_z_se.powi(2) + (ln_q * e_n.se).powi(2)).sqrt() / vol;
    let bound = params.z + ln_q.max(0.0) * e_c.estimate / vol;
    let bound_se = ln_q.max(0.0) * e_c.se / vol;
    let slack = 3.0 * (rate_se.powi(2) + bound_se.powi(2)).sqrt();
    Ok(EntropyReport {
        rate,
        rate_se,
        bound,
        bound_holds: rate <= bound + slack,
        margin: bound - rate,
        ln_z: r.ln_z,
        ln_z_se: r.ln_z_se,
        ln_z_floor_holds: r.ln_z >= -params.mean_count() - 3.0 * r.ln_z_se,
        mean_n_cc: e_n,
        mean_count: e_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::model::RadiusLaw;

    fn tiny(q: f64) -> ModelParams {
        ModelParams::new(2.0, q, RadiusLaw::Dirac(0.3), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn q_one_is_plain_monte_carlo() {
        let count = |c: &Configuration| c.len() as f64;
        let one = |_: &Configuration| 1.0;
        let r = importance_oracle(&tiny(1.0), &[&count, &one], 20_000, 1, Execution::default()).unwrap();
        assert_eq!(r.ess, 20_000.0);
        assert_eq!(r.ln_z, 0.0);
        assert_eq!(r.estimates[1].estimate, 1.0);
        // plain mean of a Poisson(2) count
        assert!((r.estimates[0].estimate - 2.0).abs() < 4.0 * r.estimates[0].se);
    }

    #[test]
    fn constant_statistic_is_exact() {
        let one = |_: &Configuration| 1.0;
        let r = importance_oracle(&tiny(2.0), &[&one], 5_000, 2, Execution::default()).unwrap();
        assert!((r.estimates[0].estimate - 1.0).abs() < 1e-12);
        assert!(r.estimates[0].se < 1e-9);
    }

    #[test]
    fn independent_seeds_agree() {
        let count = |c: &Configuration| c.len() as f64;
        let a = importance_oracle(&tiny(2.0), &[&count], 100_000, 3, Execution::default()).unwrap();
        let b = importance_oracle(&tiny(2.0), &[&count], 100_000, 4, Execution::default()).unwrap();
        let (x, y) = (a.estimates[0], b.estimates[0]);
        assert!((x.estimate - y.estimate).abs() < 3.0 * (x.se.powi(2) + y.se.powi(2)).sqrt());
        // q = 2 favours more components, hence more balls than Poisson(2)
        assert!(x.estimate > 2.0);
    }

    #[test]
    fn sequential_and_parallel_agree_exactly() {
        let count = |c: &Configuration| c.len() as f64;
        let a = importance_oracle(&tiny(2.0), &[&count], 25_000, 5, Execution::Sequential).unwrap();
        let b = importance_oracle(&tiny(2.0), &[&count], 25_000, 5, Execution::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_samples_rejected() {
        let one = |_: &Configuration| 1.0;
        assert!(matches!(
            importance_oracle(&tiny(2.0), &[&one], 10, 0, Execution::Sequential),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn degenerate_weights_detected() {
        // huge q makes a few draws carry all the weight
        let p = ModelParams::new(2.0, 1e12, RadiusLaw::Dirac(0.3), Aabb::cube(2, 0.0, 1.0).unwrap()).unwrap();
        let one = |_: &Configuration| 1.0;
        assert!(matches!(
            importance_oracle(&p, &[&one], 2_000, 0, Execution::Sequential),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn entropy_examples() {
        let r = entropy_report(&tiny(1.0), 10_000, 1, Execution::default()).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.bound, 2.0);
        let r = entropy_report(&tiny(2.0), 100_000, 1, Execution::default()).unwrap();
        assert!(r.bound_holds && r.margin > 0.0);
        assert!(r.ln_z_floor_holds);
        assert!(r.rate >= -3.0 * r.rate_se, "relative entropy is nonnegative");
    }
}
