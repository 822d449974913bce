//! Shield geometry: corner cubes around `Λ̄ = [−α, α]^d` whose two-colour
//! occupation screens `Λ` from distant balls in the Widom-Rowlinson model.

use serde::{Deserialize, Serialize};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, MarkedBall, Point};
use crate::model::boolean::uniform_point;
use crate::model::Configuration;
use crate::rng::{stream, Purpose, Rng};
use crate::wr::ColoredConfiguration;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShieldGeometry {
    pub dim: usize,
    pub alpha: u32,
    pub k: u32,
    pub d1: u32,
    pub d2: u32,
    /// `[−α, α]^d`
    pub lambda_bar: Aabb,
    /// `G = [−(α+k+D1), α+k+D1]^d`
    pub g: Aabb,
    /// Half side of `Δ_k`, `α + 2k + D1 + 1 + D2`.
    pub delta_half: f64,
    pub delta: Aabb,
    /// Inner corner cubes `B_j`: per axis `±[α, α+k]`.
    pub b_cubes: Vec<Aabb>,
    /// Outer corner cubes `C_j`: per axis `±[a+1, a+1+k]` with `a = α+k+D1`.
    pub c_cubes: Vec<Aabb>,
}

/// The `2^d` cubes `s ⊙ [lo, hi]^d` over sign vectors `s`, indexed by the
/// bits of the orthant number (bit set = negative axis).
fn corner_cubes(dim: usize, lo: f64, hi: f64) -> Vec<Aabb> {
    (0..1usize << dim)
        .map(|orthant| {
            let mut a = vec![0.0; dim];
            let mut b = vec![0.0; dim];
            for i in 0..dim {
                if orthant >> i & 1 == 1 {
                    a[i] = -hi;
                    b[i] = -lo;
                } else {
                    a[i] = lo;
                    b[i] = hi;
                }
            }
            Aabb::new(&a, &b).expect("ordered")
        })
        .collect()
}

fn orthant_of(x: &[f64]) -> usize {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v < 0.0)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// Builds the geometry with sufficient closed-form constants:
///
/// * `D1 = ⌈√d (2α + k) − k⌉`: a ball centred in `Λ̄` that leaves `G` has
///   radius at least `k + D1 ≥ √d (2α + k)`, the largest distance from
///   `Λ̄` to any point of a `B` cube.
/// * `D2 = ⌈((d−1)(a+1+k)² + 1)/2 − (k+1)⌉`: a ball centred at `c` outside
///   `Δ_k` that reaches `G` covers the `C` cube of its own orthant. Along
///   the axis where `|c_i| > a+1+k+D2` the squared reach exceeds the squared
///   far distance by `2(|c_i| − a) − 1`, while each other axis loses at
///   most `(a+1+k)²`.
pub fn build_shield(alpha: u32, k: u32, dim: usize) -> Result<ShieldGeometry> {
    crate::geometry::check_dim(dim)?;
    if alpha < 1 || k < alpha {
        return Err(Error::InvalidParameter(format!(
            "shield needs k >= alpha >= 1, got alpha={alpha}, k={k}"
        )));
    }
    let (af, kf, d) = (alpha as f64, k as f64, dim as f64);
    let d1 = (d.sqrt() * (2.0 * af + kf) - kf).ceil().max(0.0) as u32;
    let a = af + kf + d1 as f64;
    let outer = a + 1.0 + kf;
    let d2 = (((d - 1.0) * outer * outer + 1.0) / 2.0 - (kf + 1.0)).ceil().max(0.0) as u32;
    let delta_half = af + 2.0 * kf + d1 as f64 + 1.0 + d2 as f64;
    Ok(ShieldGeometry {
        dim,
        alpha,
        k,
        d1,
        d2,
        lambda_bar: Aabb::centered(dim, af)?,
        g: Aabb::centered(dim, a)?,
        delta_half,
        delta: Aabb::centered(dim, delta_half)?,
        b_cubes: corner_cubes(dim, af, af + kf),
        c_cubes: corner_cubes(dim, a + 1.0, outer),
    })
}

impl ShieldGeometry {
    /// A ball centred in `Λ̄` that meets the complement of `G` covers some
    /// `B` cube. Returns true when the contract holds for `ball`.
    pub fn inner_contract(&self, ball: &MarkedBall) -> bool {
        if !self.lambda_bar.contains(&ball.center) || !ball.leaves_box(&self.g) {
            return true;
        }
        self.b_cubes.iter().any(|c| ball.covers_box(c))
    }

    /// A ball centred outside `Δ_k` that meets `G` covers some `C` cube.
    pub fn outer_contract(&self, ball: &MarkedBall) -> bool {
        if self.delta.contains(&ball.center) || !ball.hits_box(&self.g) {
            return true;
        }
        let own = &self.c_cubes[orthant_of(ball.center.coords())];
        ball.covers_box(own) || self.c_cubes.iter().any(|c| ball.covers_box(c))
    }
}

/// Every `B` and `C` cube contains the centres of two balls of different
/// colours.
pub fn shield_event_wk(config: &ColoredConfiguration, geom: &ShieldGeometry) -> bool {
    geom.b_cubes.iter().chain(&geom.c_cubes).all(|cube| {
        let mut first = None;
        for (i, b) in config.config().balls().iter().enumerate() {
            if cube.contains(&b.center) {
                let c = config.color(i);
                match first {
                    None => first = Some(c),
                    Some(f) if f != c => return true,
                    _ => {}
                }
            }
        }
        false
    })
}

/// Replaces the balls centred in `Λ̄` by `interior` and reports whether
/// the result is allowed with the whole exterior exactly when it is
/// allowed with the exterior centred in `Δ_k`. Requires `config` to be
/// allowed and in `W_k`.
pub fn shield_locality_check(
    config: &ColoredConfiguration,
    interior: &[(MarkedBall, u32)],
    geom: &ShieldGeometry,
) -> Result<bool> {
    if !config.is_allowed() {
        return Err(Error::PreconditionEventFailed("configuration is not allowed".into()));
    }
    if !shield_event_wk(config, geom) {
        return Err(Error::PreconditionEventFailed("W_k".into()));
    }
    if let Some((b, _)) = interior.iter().find(|(b, _)| !geom.lambda_bar.contains(&b.center)) {
        return Err(Error::InvalidParameter(format!("interior ball {b:?} not centred in Λ̄")));
    }
    let with = |keep: &dyn Fn(&MarkedBall) -> bool| -> Result<bool> {
        let (ext, colors): (Vec<MarkedBall>, Vec<u32>) = config
            .config()
            .balls()
            .iter()
            .zip(config.colors())
            .filter(|(b, _)| !geom.lambda_bar.contains(&b.center) && keep(b))
            .map(|(b, c)| (*b, *c))
            .unzip();
        let mut out = ColoredConfiguration::new(
            config.config().empty_like(),
            Vec::new(),
            config.q(),
        )?;
        for (b, c) in ext.into_iter().zip(colors).chain(interior.iter().copied()) {
            out.push(b, c)?;
        }
        Ok(out.is_allowed())
    };
    let full = with(&|_| true)?;
    let local = with(&|b| geom.delta.contains(&b.center))?;
    Ok(full == local)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub trials: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
}

/// Ball centred in `Λ̄` whose radius barely exceeds what it needs to
/// leave `G`.
fn adversarial_inner(g: &ShieldGeometry, rng: &mut Rng) -> MarkedBall {
    let alpha = g.alpha as f64;
    let c: Vec<f64> = (0..g.dim)
        .map(|_| {
            if rng.random::<f64>() < 0.2 {
                if rng.random::<bool>() {
                    alpha
                } else {
                    -alpha
                }
            } else {
                rng.random_range(-alpha..=alpha)
            }
        })
        .collect();
    let a = g.g.hi().coords()[0];
    let reach = a - c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    MarkedBall::at(&c, reach + 1e-9 + rng.random::<f64>().powi(3) * 10.0)
}

/// Ball centred just beyond `Δ_k` along one axis, the other coordinates
/// anywhere, radius barely reaching `G`.
fn adversarial_outer(g: &ShieldGeometry, rng: &mut Rng) -> MarkedBall {
    let h = g.delta_half;
    let axis = rng.random_range(0..g.dim);
    let c: Vec<f64> = (0..g.dim)
        .map(|i| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            if i == axis {
                sign * (h + rng.random::<f64>().powi(4) * 30.0 + 1e-9)
            } else if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random_range(-h - 30.0..h + 30.0)
            }
        })
        .collect();
    let reach = g.g.dist_to_point(&Point::from_slice(&c));
    MarkedBall::at(&c, reach + rng.random::<f64>().powi(3) * 20.0)
}

/// Randomized check of both covering contracts on `trials` adversarial
/// balls each.
pub fn covering_test(geom: &ShieldGeometry, trials: usize, seed: u64) -> CoveringReport {
    let mut rng = stream(seed, Purpose::Probe, 0);
    let mut report = CoveringReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        if !geom.inner_contract(&adversarial_inner(geom, &mut rng)) {
            report.inner_violations += 1;
        }
        if !geom.outer_contract(&adversarial_outer(geom, &mut rng)) {
            report.outer_violations += 1;
        }
    }
    report
}

fn random_color(rng: &mut Rng, q: u32) -> u32 {
    rng.random_range(1..=q)
}

/// Random allowed configuration in `W_k` on `Δ_k ⊕ 5`: a two-colour pair in
/// every corner cube plus exterior balls that keep it allowed.
fn random_shielded(geom: &ShieldGeometry, q: u32, rng: &mut Rng) -> Result<ColoredConfiguration> {
    let window = geom.delta.dilate(5.0);
    let law = crate::model::RadiusLaw::UniformInterval(0.05, 3.0);
    let mut out = ColoredConfiguration::new(Configuration::for_law(window, &law), Vec::new(), q)?;
    for cube in geom.b_cubes.iter().chain(&geom.c_cubes) {
        let a = MarkedBall::new(uniform_point(cube, rng), 0.05)?;
        let b = loop {
            let b = MarkedBall::new(uniform_point(cube, rng), 0.05)?;
            if !b.intersects(&a) {
                break b;
            }
        };
        let c = random_color(rng, q);
        let other = 1 + c % q;
        out.push(a, c)?;
        out.push(b, other)?;
    }
    let extra = rng.random_range(0..200);
    for _ in 0..extra {
        let center = uniform_point(&window, rng);
        if geom.lambda_bar.contains(&center) {
            continue;
        }
        let radius = if rng.random::<f64>() < 0.1 {
            rng.random_range(3.0..60.0)
        } else {
            rng.random_range(0.05..3.0)
        };
        let ball = MarkedBall::new(center, radius)?;
        let color = random_color(rng, q);
        if out.allows(&ball, color) {
            out.push(ball, color)?;
        }
    }
    Ok(out)
}

/// Runs [`shield_locality_check`] on `trials` random configurations in
/// `𝒜 ∩ W_k` with random interiors; returns the number of failures.
pub fn locality_trials(geom: &ShieldGeometry, q: u32, trials: usize, seed: u64) -> Result<usize> {
    let mut rng = stream(seed, Purpose::Probe, 1);
    let mut failures = 0;
    for _ in 0..trials {
        let config = random_shielded(geom, q, &mut rng)?;
        let m = rng.random_range(1..6);
        let interior: Vec<(MarkedBall, u32)> = (0..m)
            .map(|_| {
                let r = rng.random_range(0.05..2.0 * geom.delta_half / 3.0);
                let ball = MarkedBall::new(uniform_point(&geom.lambda_bar, &mut rng), r).expect("valid radius");
                (ball, random_color(&mut rng, q))
            })
            .collect();
        if !shield_locality_check(&config, &interior, geom)? {
            failures += 1;
        }
    }
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    #[test]
    fn reference_constants() {
        let g = build_shield(1, 4, 2).unwrap();
        assert_eq!(g.d1, 5);
        assert_eq!(g.g, Aabb::centered(2, 10.0).unwrap());
        assert_eq!(g.d2, 108);
        assert_eq!(g.delta_half, 1.0 + 8.0 + 5.0 + 1.0 + 108.0);
        assert_eq!(g.b_cubes.len(), 4);
        assert_eq!(g.c_cubes.len(), 4);
        assert!(g.c_cubes.iter().all(|c| c.is_inside(&g.delta) && !c.is_inside(&g.g)));
        assert!(build_shield(3, 2, 2).is_err());
    }

    #[test]
    fn contracts_at_extreme_points() {
        let g = build_shield(1, 4, 2).unwrap();
        // minimal radius that leaves G from a corner of Λ̄
        let b = MarkedBall::at(&[-1.0, 1.0], 9.0);
        assert!(g.inner_contract(&b));
        // just outside Δ_k on one axis, minimal radius reaching G
        let x = g.delta_half + 1e-9;
        let b = MarkedBall::at(&[x, 0.0], x - 10.0);
        assert!(g.outer_contract(&b));
    }

    #[test]
    fn randomized_contracts() {
        let r = covering_test(&build_shield(1, 4, 2).unwrap(), 100_000, 1);
        assert_eq!((r.inner_violations, r.outer_violations), (0, 0));
        let r = covering_test(&build_shield(1, 2, 3).unwrap(), 20_000, 2);
        assert_eq!((r.inner_violations, r.outer_violations), (0, 0));
        let r = covering_test(&build_shield(2, 3, 2).unwrap(), 20_000, 3);
        assert_eq!((r.inner_violations, r.outer_violations), (0, 0));
    }

    #[test]
    fn smaller_d2_breaks_the_outer_contract() {
        let mut g = build_shield(1, 4, 2).unwrap();
        g.d2 -= 20;
        g.delta_half -= 20.0;
        g.delta = Aabb::centered(2, g.delta_half).unwrap();
        let x = g.delta_half + 1e-9;
        assert!(!g.outer_contract(&MarkedBall::at(&[x, 0.0], x - 10.0)));
    }

    #[test]
    fn colored_locality() {
        let g = build_shield(1, 2, 2).unwrap();
        assert_eq!(locality_trials(&g, 2, 300, 4).unwrap(), 0);
    }

    #[test]
    fn shield_event_examples() {
        use crate::model::{Configuration, RadiusLaw};
        let g = build_shield(1, 2, 2).unwrap();
        let w = g.delta;
        let mut balls = Vec::new();
        let mut colors = Vec::new();
        for cube in g.b_cubes.iter().chain(&g.c_cubes) {
            let c = cube.center();
            balls.push(MarkedBall::new(c, 0.1).unwrap());
            balls.push(MarkedBall::new(c.translated(&[0.5, 0.5]), 0.1).unwrap());
            colors.extend([1, 2]);
        }
        let config = Configuration::from_balls(w, &RadiusLaw::Dirac(0.1), balls).unwrap();
        let mono = ColoredConfiguration::new(config.clone(), vec![1; colors.len()], 2).unwrap();
        assert!(!shield_event_wk(&mono, &g));
        let two = ColoredConfiguration::new(config, colors, 2).unwrap();
        assert!(shield_event_wk(&two, &g));
    }
}
