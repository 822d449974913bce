//! Specific-entropy bounds separating the Widom-Rowlinson measure from the
//! monochromatic ones at small activity.

use crate::error::{Error, Result};
use crate::model::RadiusLaw;
use crate::quad::{integrate, ABS_TOL};

/// Probability that a ball centred uniformly in `[0, y]^d` with radius
/// drawn from `law` lies inside the cube: `∫ ((y − 2R)/y)_+^d Q(dR)`.
pub fn phi_y(law: &RadiusLaw, y: f64, dim: usize) -> Result<f64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidParameter(format!("y must be positive, got {y}")));
    }
    let d = dim as i32;
    let frac = |r: f64| ((y - 2.0 * r) / y).max(0.0);
    let v = match *law {
        RadiusLaw::Dirac(r) => frac(r).powi(d),
        RadiusLaw::UniformInterval(a, b) if a == b => frac(a).powi(d),
        RadiusLaw::UniformInterval(a, b) => {
            // substitute u = (y − 2R)/y
            let (ua, ub) = (frac(a), frac(b));
            y * (ua.powi(d + 1) - ub.powi(d + 1)) / (2.0 * (b - a) * (d + 1) as f64)
        }
        RadiusLaw::ParetoTail { dim: s } => pareto(s, f64::INFINITY, y, d),
        RadiusLaw::TruncatedPareto { dim: s, r_max } => pareto(s, r_max, y, d),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// The integrand vanishes beyond `y/2`, so the range is finite.
fn pareto(s: usize, r_max: f64, y: f64, d: i32) -> f64 {
    let s = s as f64;
    let hi = (0.5 * y).min(r_max);
    if hi <= 1.0 {
        return 0.0;
    }
    let mass = 1.0 - r_max.powf(1.0 - s);
    let f = |r: f64| ((y - 2.0 * r) / y).powi(d) * (s - 1.0) * r.powf(-s);
    integrate(f, 1.0, hi, ABS_TOL) / mass
}

/// Lower bound `(q − 1) z / q` on the specific entropy of any stationary
/// monochromatic measure.
pub fn mono_lower_bound(z: f64, q: f64) -> f64 {
    (q - 1.0) * z / q
}

/// `ln(1 − q + q e^x)`, stable for small and large `x`.
fn log_mix(q: f64, x: f64) -> f64 {
    if x > 30.0 {
        x + q.ln() + (-(q - 1.0) * (-x).exp() / q).ln_1p()
    } else {
        (q * x.exp_m1()).ln_1p()
    }
}

/// `Ψ(z) = z/q − (7/(8 y^d)) ln(1 − q + q e^{z y^d φ/q})`.
pub fn psi(z: f64, q: f64, y: f64, phi: f64, dim: usize) -> f64 {
    let yd = y.powi(dim as i32);
    z / q - 7.0 / (8.0 * yd) * log_mix(q, z * yd * phi / q)
}

/// `Ψ′(z) = 1/q − (7φ/8) e^x / (1 − q + q e^x)` with `x = z y^d φ/q`.
pub fn psi_derivative(z: f64, q: f64, y: f64, phi: f64, dim: usize) -> f64 {
    let x = z * y.powi(dim as i32) * phi / q;
    // e^x / (1 − q + q e^x) = 1 / (q + (1 − q) e^{−x})
    1.0 / q - 0.875 * phi / (q + (1.0 - q) * (-x).exp())
}

/// The unique zero `z_y = (q/(φ y^d)) ln((q−1)/q / (1 − 7φ/8))` of `Ψ′`.
pub fn psi_root(q: f64, y: f64, phi: f64, dim: usize) -> Result<f64> {
    if !(phi > 8.0 / (7.0 * q)) {
        return Err(Error::RootUndefined { phi, q });
    }
    let yd = y.powi(dim as i32);
    Ok(q / (phi * yd) * ((q - 1.0) / q / (1.0 - 0.875 * phi)).ln())
}

/// Upper bound on the specific entropy of the Widom-Rowlinson measure built
/// on `[−n, n]^d` from packed monochromatic copies of `[0, y]^d`:
/// `z + (c_n/(2n)^d − 1) ln(1 − q + q e^{z y^d φ_y/q}) / y^d`.
pub fn wr_entropy_upper(z: f64, q: f64, y: f64, law: &RadiusLaw, n: u32, dim: usize) -> Result<f64> {
    let phi = phi_y(law, y, dim)?;
    let d = dim as i32;
    let side = 2.0 * n as f64;
    let k_n = (side / y).floor().powi(d);
    let total = side.powi(d);
    let yd = y.powi(d);
    let boundary = (total - k_n * yd) / total;
    if boundary > 0.125 {
        return Err(Error::BoundaryFractionTooLarge(boundary));
    }
    Ok(z + (boundary - 1.0) / yd * log_mix(q, z * yd * phi / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn phi_dirac_reference() {
        let p = phi_y(&RadiusLaw::Dirac(1.0), 10.0, 2).unwrap();
        assert!((p - 0.64).abs() < 1e-12);
        assert_eq!(phi_y(&RadiusLaw::Dirac(1.0), 2.0, 2).unwrap(), 0.0);
        assert_eq!(phi_y(&RadiusLaw::Dirac(1.0), 1.5, 3).unwrap(), 0.0);
    }

    #[test]
    fn phi_matches_monte_carlo() {
        let law = RadiusLaw::UniformInterval(0.5, 2.0);
        let y = 7.0;
        let mut rng = stream(4, Purpose::Misc, 0);
        let n = 400_000;
        let inside = (0..n)
            .filter(|_| {
                let r = law.sample(&mut rng);
                (0..2).all(|_| {
                    let x: f64 = rng.random_range(0.0..y);
                    x >= r && x <= y - r
                })
            })
            .count();
        let mc = inside as f64 / n as f64;
        let p = phi_y(&law, y, 2).unwrap();
        assert!((mc - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{mc} vs {p}");
        // closed form against quadrature
        let quad = law.expectation(|r| ((y - 2.0 * r) / y).max(0.0).powi(2));
        assert!((quad - p).abs() < 1e-9);
    }

    #[test]
    fn phi_monotone_and_tends_to_one() {
        for law in [
            RadiusLaw::Dirac(1.0),
            RadiusLaw::UniformInterval(0.2, 1.0),
            RadiusLaw::TruncatedPareto { dim: 2, r_max: 5.0 },
            RadiusLaw::ParetoTail { dim: 3 },
        ] {
            let mut prev = 0.0;
            for k in 1..200 {
                let p = phi_y(&law, 0.5 * k as f64, 2).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!(p >= prev - 1e-12, "{law} at y={}", 0.5 * k as f64);
                prev = p;
            }
            if law.bounded_support() {
                assert!(phi_y(&law, 1e6, 2).unwrap() > 0.9999);
            }
        }
    }

    #[test]
    fn mono_bound() {
        assert_eq!(mono_lower_bound(1.0, 2.0), 0.5);
        let mut prev = 0.0;
        for q in 2..50 {
            let b = mono_lower_bound(1.0, q as f64);
            assert!(b > prev && b < 1.0);
            prev = b;
        }
    }

    #[test]
    fn psi_root_reference() {
        let (q, y, phi) = (2.0, 10.0, 0.64);
        assert_eq!(psi(0.0, q, y, phi, 2), 0.0);
        let zy = psi_root(q, y, phi, 2).unwrap();
        assert!((zy - 2.0 / 64.0 * (0.5f64 / 0.44).ln()).abs() < 1e-15);
        assert!(psi(zy / 2.0, q, y, phi, 2) < 0.0);
        assert!(psi_derivative(zy, q, y, phi, 2).abs() < 1e-12);
        for k in 1..1000 {
            assert!(psi(zy * k as f64 / 1000.0, q, y, phi, 2) < 0.0);
        }
        assert!(matches!(psi_root(2.0, 10.0, 0.5, 2), Err(Error::RootUndefined { .. })));
    }

    #[test]
    fn log_mix_branches_agree() {
        for q in [1.0, 2.0, 3.0] {
            let a = (q * 30.0f64.exp_m1()).ln_1p();
            let b = 30.0 + q.ln() + (-(q - 1.0) * (-30.0f64).exp() / q).ln_1p();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(psi(1e3, 2.0, 10.0, 0.64, 2).is_finite());
    }

    #[test]
    fn wr_upper_bound_properties() {
        let law = RadiusLaw::Dirac(1.0);
        let phi = phi_y(&law, 10.0, 2).unwrap();
        // q = 1: the log term is z y^d φ
        let z = 0.3;
        let u = wr_entropy_upper(z, 1.0, 10.0, &law, 50, 2).unwrap();
        assert!((u - (z - z * phi)).abs() < 1e-12 && u < z);
        let zy = psi_root(2.0, 10.0, phi, 2).unwrap();
        for k in 1..50 {
            let z = zy * k as f64 / 50.0;
            let u = wr_entropy_upper(z, 2.0, 10.0, &law, 50, 2).unwrap();
            assert!(u <= z);
            assert!(u < mono_lower_bound(z, 2.0));
        }
        assert!(matches!(
            wr_entropy_upper(0.1, 2.0, 10.0, &law, 7, 2),
            Err(Error::BoundaryFractionTooLarge(_))
        ));
    }
}
