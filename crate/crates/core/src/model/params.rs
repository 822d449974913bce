use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Aabb};
use crate::model::law::RadiusLaw;

/// Intensity `z`, cluster weight `q`, radius law and window of a
/// finite-volume model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub z: f64,
    pub q: f64,
    pub law: RadiusLaw,
    pub window: Aabb,
}

impl ModelParams {
    pub fn new(z: f64, q: f64, law: RadiusLaw, window: Aabb) -> Result<Self> {
        let p = ModelParams { z, q, law, window };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::InvalidParameter(format!("z must be > 0, got {}", self.z)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must be > 0, got {}", self.q)));
        }
        check_dim(self.window.dim())?;
        if self.window.volume() <= 0.0 {
            return Err(Error::InvalidParameter("window must have positive volume".into()));
        }
        self.law.validate()?;
        if let RadiusLaw::ParetoTail { dim } | RadiusLaw::TruncatedPareto { dim, .. } = self.law {
            if dim != self.dim() {
                return Err(Error::InvalidParameter(format!(
                    "pareto law dimension {dim} differs from window dimension {}",
                    self.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// Expected number of reference points in the window, `z |Λ|`.
    pub fn mean_count(&self) -> f64 {
        self.z * self.window.volume()
    }

    /// `q >= 1` or the radius law has compact support.
    pub fn assumption_a(&self) -> bool {
        self.q >= 1.0 || self.law.bounded_support()
    }

    pub fn require_assumption_a(&self) -> Result<()> {
        if self.assumption_a() {
            Ok(())
        } else {
            Err(Error::AssumptionAViolated {
                q: self.q,
                law: self.law.to_string(),
            })
        }
    }

    /// `q` as a color count; errors unless `q` is an integer >= 2.
    pub fn colors(&self) -> Result<u32> {
        if self.q >= 2.0 && self.q.fract() == 0.0 && self.q <= u32::MAX as f64 {
            Ok(self.q as u32)
        } else {
            Err(Error::InvalidParameter(format!(
                "Widom-Rowlinson models need an integer q >= 2, got {}",
                self.q
            )))
        }
    }

    pub fn with_z(&self, z: f64) -> Self {
        ModelParams { z, ..*self }
    }

    pub fn with_q(&self, q: f64) -> Self {
        ModelParams { q, ..*self }
    }

    pub fn with_window(&self, window: Aabb) -> Self {
        ModelParams { window, ..*self }
    }
}
