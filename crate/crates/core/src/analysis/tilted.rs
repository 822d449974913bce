//! The tilted radius measure `Q̃(dR) = q^{−C0 R^d} Q(dR)` with
//! `C0 = (3/R0)^d`, and the resulting decay bound on the density of
//! connected components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{steiner_coefficients, unit_ball_volume, Aabb};
use crate::model::RadiusLaw;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedLaw {
    pub base: RadiusLaw,
    pub q: f64,
    pub dim: usize,
    pub c0: f64,
    /// `Q̃(ℝ+)`, at most one.
    pub mass: f64,
    /// `∫ R^k Q̃(dR)` for `k = 0..=d`.
    pub moments: Vec<f64>,
}

impl TiltedLaw {
    pub fn d_moment(&self) -> f64 {
        self.moments[self.dim]
    }

    /// Mean number of balls hitting `probe` under the stationary Poisson
    /// process with intensity `z` and radius measure `Q̃`.
    pub fn expected_hits(&self, probe: &Aabb, z: f64) -> f64 {
        z * steiner_coefficients(probe)
            .iter()
            .zip(&self.moments)
            .map(|(c, m)| c * m)
            .sum::<f64>()
    }
}

/// Builds `Q̃` for `q ≥ 1` and `R0 = law.min_radius() > 0`; the moments
/// are finite for every base law since the tilt decays super-exponentially.
pub fn tilted_law(law: &RadiusLaw, q: f64, r0: f64, dim: usize) -> Result<TiltedLaw> {
    crate::geometry::check_dim(dim)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("tilted law needs q >= 1, got {q}")));
    }
    if !(r0 > 0.0) || law.min_radius() < r0 {
        return Err(Error::InvalidParameter(format!(
            "tilted law needs 0 < R0 <= min radius {}, got {r0}",
            law.min_radius()
        )));
    }
    let c0 = (3.0 / r0).powi(dim as i32);
    let ln_q = q.ln();
    let d = dim as i32;
    let weight = move |r: f64| (-c0 * ln_q * r.powi(d)).exp();
    let moments: Vec<f64> = (0..=dim)
        .map(|k| law.expectation(|r| r.powi(k as i32) * weight(r)))
        .collect();
    Ok(TiltedLaw {
        base: *law,
        q,
        dim,
        c0,
        mass: moments[0],
        moments,
    })
}

/// `z q exp(−z v_d ∫ R^d Q̃(dR) / 2)`.
pub fn np_bound(z: f64, q: f64, law: &RadiusLaw, r0: f64, dim: usize) -> Result<f64> {
    let t = tilted_law(law, q, r0, dim)?;
    Ok(z * q * (-z * 0.5 * unit_ball_volume(dim) * t.d_moment()).exp())
}
