//! Radius laws `Q` with the analytic metadata the samplers and bound
//! calculators need.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_inf, ABS_TOL};

/// Distribution of grain radii.
///
/// `ParetoTail { dim }` is the law `(dim-1) R^{-dim} dR` on `[1, ∞)`, whose
/// `dim`-th moment diverges. `TruncatedPareto` is the same density
/// conditioned on `R <= r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RadiusLaw {
    Dirac(f64),
    UniformInterval(f64, f64),
    ParetoTail { dim: usize },
    TruncatedPareto { dim: usize, r_max: f64 },
}

impl RadiusLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            RadiusLaw::Dirac(r) if !(r >= 0.0 && r.is_finite()) => {
                bad(format!("dirac radius must be finite and >= 0, got {r}"))
            }
            RadiusLaw::UniformInterval(a, b) if !(0.0 <= a && a <= b && b.is_finite()) => {
                bad(format!("uniform law needs 0 <= a <= b < inf, got ({a}, {b})"))
            }
            RadiusLaw::ParetoTail { dim } if dim < 2 => {
                bad(format!("pareto exponent dimension must be >= 2, got {dim}"))
            }
            RadiusLaw::TruncatedPareto { dim, r_max } if dim < 2 || !(r_max > 1.0) => bad(
                format!("truncated pareto needs dim >= 2 and r_max > 1, got ({dim}, {r_max})"),
            ),
            _ => Ok(()),
        }
    }

    pub fn bounded_support(&self) -> bool {
        !matches!(self, RadiusLaw::ParetoTail { .. })
    }

    /// Whether `∫ R^d Q(dR) < ∞` in spatial dimension `d`.
    pub fn finite_d_moment(&self, d: usize) -> bool {
        self.moment(d).is_finite()
    }

    pub fn min_radius(&self) -> f64 {
        match *self {
            RadiusLaw::Dirac(r) => r,
            RadiusLaw::UniformInterval(a, _) => a,
            RadiusLaw::ParetoTail { .. } | RadiusLaw::TruncatedPareto { .. } => 1.0,
        }
    }

    /// Supremum of the support, `None` when unbounded.
    pub fn max_radius(&self) -> Option<f64> {
        match *self {
            RadiusLaw::Dirac(r) => Some(r),
            RadiusLaw::UniformInterval(_, b) => Some(b),
            RadiusLaw::ParetoTail { .. } => None,
            RadiusLaw::TruncatedPareto { r_max, .. } => Some(r_max),
        }
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match *self {
            RadiusLaw::Dirac(r) => r,
            RadiusLaw::UniformInterval(a, b) => a + u * (b - a),
            RadiusLaw::ParetoTail { dim } => (1.0 - u).powf(-1.0 / (dim as f64 - 1.0)),
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                let e = dim as f64 - 1.0;
                let mass = 1.0 - r_max.powf(-e);
                (1.0 - u * mass).powf(-1.0 / e).min(r_max)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RadiusLaw::Dirac(r) => r,
            _ => self.from_uniform(rng.random::<f64>()),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        match *self {
            RadiusLaw::Dirac(r0) => {
                if r >= r0 {
                    1.0
                } else {
                    0.0
                }
            }
            RadiusLaw::UniformInterval(a, b) => {
                if b == a {
                    if r >= a {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((r - a) / (b - a)).clamp(0.0, 1.0)
                }
            }
            RadiusLaw::ParetoTail { dim } => {
                if r < 1.0 {
                    0.0
                } else {
                    1.0 - r.powf(1.0 - dim as f64)
                }
            }
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                if r < 1.0 {
                    0.0
                } else if r >= r_max {
                    1.0
                } else {
                    let e = 1.0 - dim as f64;
                    (1.0 - r.powf(e)) / (1.0 - r_max.powf(e))
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.from_uniform(p.clamp(0.0, 1.0 - f64::EPSILON))
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `∫ R^k Q(dR)`, possibly infinite.
    pub fn moment(&self, k: usize) -> f64 {
        let k = k as i32;
        match *self {
            RadiusLaw::Dirac(r) => r.powi(k),
            RadiusLaw::UniformInterval(a, b) => {
                if a == b {
                    a.powi(k)
                } else {
                    (b.powi(k + 1) - a.powi(k + 1)) / ((k + 1) as f64 * (b - a))
                }
            }
            RadiusLaw::ParetoTail { dim } => {
                let s = dim as f64;
                let k = k as f64;
                if k < s - 1.0 {
                    (s - 1.0) / (s - 1.0 - k)
                } else {
                    f64::INFINITY
                }
            }
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                let s = dim as f64;
                let mass = 1.0 - r_max.powf(1.0 - s);
                let p = k as f64 - s + 1.0;
                let raw = if p == 0.0 {
                    r_max.ln()
                } else {
                    (r_max.powf(p) - 1.0) / p
                };
                (s - 1.0) * raw / mass
            }
        }
    }

    /// `∫ R^d Q(dR)` in spatial dimension `d`.
    pub fn d_moment(&self, d: usize) -> f64 {
        self.moment(d)
    }

    /// `∫_{R > h} R^k Q(dR)`, possibly infinite.
    pub fn tail_moment(&self, k: usize, h: f64) -> f64 {
        match *self {
            RadiusLaw::Dirac(r) => {
                if r > h {
                    r.powi(k as i32)
                } else {
                    0.0
                }
            }
            RadiusLaw::UniformInterval(a, b) => {
                if h >= b {
                    0.0
                } else if h <= a {
                    self.moment(k)
                } else {
                    let k = k as i32;
                    (b.powi(k + 1) - h.powi(k + 1)) / ((k + 1) as f64 * (b - a))
                }
            }
            RadiusLaw::ParetoTail { dim } => {
                let s = dim as f64;
                let kf = k as f64;
                if kf >= s - 1.0 {
                    f64::INFINITY
                } else {
                    let h = h.max(1.0);
                    (s - 1.0) / (s - 1.0 - kf) * h.powf(kf - s + 1.0)
                }
            }
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                if h >= r_max {
                    return 0.0;
                }
                let h = h.max(1.0);
                let s = dim as f64;
                let mass = 1.0 - r_max.powf(1.0 - s);
                let p = k as f64 - s + 1.0;
                let raw = if p == 0.0 {
                    (r_max / h).ln()
                } else {
                    (r_max.powf(p) - h.powf(p)) / p
                };
                (s - 1.0) * raw / mass
            }
        }
    }

    /// `∫ g(R) Q(dR)` by closed form (Dirac) or adaptive quadrature.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        match *self {
            RadiusLaw::Dirac(r) => g(r),
            RadiusLaw::UniformInterval(a, b) => {
                if a == b {
                    g(a)
                } else {
                    integrate(&g, a, b, ABS_TOL) / (b - a)
                }
            }
            RadiusLaw::ParetoTail { dim } => {
                let s = dim as f64;
                integrate_to_inf(|r| g(r) * (s - 1.0) * r.powf(-s), 1.0, ABS_TOL)
            }
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                let s = dim as f64;
                let mass = 1.0 - r_max.powf(1.0 - s);
                integrate(|r| g(r) * (s - 1.0) * r.powf(-s), 1.0, r_max, ABS_TOL) / mass
            }
        }
    }
}

impl fmt::Display for RadiusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RadiusLaw::Dirac(r) => write!(f, "dirac({r})"),
            RadiusLaw::UniformInterval(a, b) => write!(f, "uniform({a},{b})"),
            RadiusLaw::ParetoTail { dim } => write!(f, "pareto({dim})"),
            RadiusLaw::TruncatedPareto { dim, r_max } => {
                write!(f, "truncated-pareto({dim},{r_max})")
            }
        }
    }
}

impl FromStr for RadiusLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_err = || Error::Parse(format!("unrecognised radius law `{s}`"));
        let open = s.find('(').ok_or_else(parse_err)?;
        if !s.ends_with(')') {
            return Err(parse_err());
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let args: Vec<&str> = s[open + 1..s.len() - 1]
            .split(',')
            .map(str::trim)
            .filter(|a| !a.is_empty())
            .collect();
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(parse_err)?
                .parse::<f64>()
                .map_err(|_| parse_err())
        };
        let int = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(parse_err)?
                .parse::<usize>()
                .map_err(|_| parse_err())
        };
        let law = match (name.as_str(), args.len()) {
            ("dirac", 1) => RadiusLaw::Dirac(num(0)?),
            ("uniform", 2) => RadiusLaw::UniformInterval(num(0)?, num(1)?),
            ("pareto", 1) => RadiusLaw::ParetoTail { dim: int(0)? },
            ("truncated-pareto", 2) => RadiusLaw::TruncatedPareto {
                dim: int(0)?,
                r_max: num(1)?,
            },
            _ => return Err(parse_err()),
        };
        law.validate()?;
        Ok(law)
    }
}

impl From<RadiusLaw> for String {
    fn from(l: RadiusLaw) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for RadiusLaw {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn dirac_sampling_is_constant() {
        let mut rng = stream(1, Purpose::Misc, 0);
        let law = RadiusLaw::Dirac(0.5);
        assert!((0..100).all(|_| law.sample(&mut rng) == 0.5));
    }

    #[test]
    fn pareto_inversion_at_zero_is_support_minimum() {
        assert_eq!(RadiusLaw::ParetoTail { dim: 2 }.from_uniform(0.0), 1.0);
        assert_eq!(RadiusLaw::ParetoTail { dim: 3 }.from_uniform(0.0), 1.0);
    }

    #[test]
    fn d_moments() {
        assert_eq!(RadiusLaw::Dirac(2.0).d_moment(2), 4.0);
        assert!(RadiusLaw::ParetoTail { dim: 2 }.d_moment(2).is_infinite());
        assert!(RadiusLaw::ParetoTail { dim: 3 }.d_moment(3).is_infinite());
        let u = RadiusLaw::UniformInterval(0.0, 1.0).d_moment(2);
        let oracle = integrate(|r| r * r, 0.0, 1.0, 1e-12);
        assert!((u - oracle).abs() < 1e-12);
        assert!((u - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_pareto_moment_grows_without_bound() {
        let mut prev = 0.0;
        for r_max in [2.0, 10.0, 100.0, 1e3, 1e4, 1e6] {
            let law = RadiusLaw::TruncatedPareto { dim: 2, r_max };
            let m = law.d_moment(2);
            assert!(m.is_finite() && m > prev, "r_max={r_max}: {m} <= {prev}");
            // quadrature cross-check
            let q = law.expectation(|r| r * r);
            assert!((q - m).abs() < 1e-6 * m.max(1.0), "{q} vs {m}");
            prev = m;
        }
        assert!(prev > 1e5);
    }

    #[test]
    fn tail_moments_match_quadrature() {
        let u = RadiusLaw::UniformInterval(0.2, 1.5);
        let q = u.expectation(|r| if r > 0.7 { r * r } else { 0.0 });
        assert!((u.tail_moment(2, 0.7) - q).abs() < 1e-6);
        let t = RadiusLaw::TruncatedPareto { dim: 3, r_max: 20.0 };
        let q = t.expectation(|r| if r > 4.0 { r } else { 0.0 });
        assert!((t.tail_moment(1, 4.0) - q).abs() < 1e-5);
        assert_eq!(RadiusLaw::Dirac(1.0).tail_moment(2, 1.0), 0.0);
    }

    #[test]
    fn descriptors_round_trip() {
        for law in [
            RadiusLaw::Dirac(0.05),
            RadiusLaw::UniformInterval(0.0, 1.0),
            RadiusLaw::ParetoTail { dim: 2 },
            RadiusLaw::TruncatedPareto { dim: 3, r_max: 50.0 },
        ] {
            assert_eq!(law.to_string().parse::<RadiusLaw>().unwrap(), law);
        }
        assert!("gamma(1,2)".parse::<RadiusLaw>().is_err());
        assert!("uniform(2,1)".parse::<RadiusLaw>().is_err());
    }

    #[test]
    fn metadata_invariants() {
        assert!(RadiusLaw::Dirac(1.0).bounded_support());
        assert!(RadiusLaw::Dirac(1.0).finite_d_moment(2));
        let p = RadiusLaw::ParetoTail { dim: 2 };
        assert!(!p.bounded_support());
        assert!(!p.finite_d_moment(2));
        assert_eq!(p.min_radius(), 1.0);
        assert!(RadiusLaw::TruncatedPareto { dim: 2, r_max: 5.0 }.bounded_support());
    }
}
