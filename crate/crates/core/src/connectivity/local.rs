//! The local number of connected components and the functionals built on it.

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, Aabb, MarkedBall};
use crate::model::Configuration;

use super::labeling::ClusterLabeling;
use super::union_find::UnionFind;

/// Value of the local component count together with its witness box.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalCcResult {
    pub value: i64,
    /// First probe box from which the difference stayed constant.
    pub stabilization_box: Aabb,
    /// Values observed along the probe sequence.
    pub probes: Vec<i64>,
}

/// Intersecting pairs `(i, j)` with `i < j`.
pub(crate) fn edge_list(config: &Configuration) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    let mut buf = Vec::new();
    for (i, b) in config.balls().iter().enumerate() {
        config.intersecting_into(b, &mut buf);
        edges.extend(buf.iter().filter(|&&j| j > i).map(|&j| (i as u32, j as u32)));
    }
    edges
}

/// Components of the subgraph induced by `keep`.
fn induced_components(n: usize, edges: &[(u32, u32)], keep: &[bool]) -> usize {
    let mut uf = UnionFind::new(n);
    for &(a, b) in edges {
        if keep[a as usize] && keep[b as usize] {
            uf.union(a as usize, b as usize);
        }
    }
    let dropped = keep.iter().filter(|k| !**k).count();
    uf.count() - dropped
}

fn require_inside(lambda: &Aabb, window: &Aabb) -> Result<()> {
    if lambda.dim() != window.dim() || !lambda.is_inside(window) {
        return Err(Error::LambdaNotInWindow(format!("{lambda:?} in {window:?}")));
    }
    Ok(())
}

/// `N_cc(ω_Δ) − N_cc(ω_{Δ∖Λ})` along `Δ_k = dilate(Λ, k·step)` until the
/// centres' bounding box is covered.
pub fn local_cc(config: &Configuration, lambda: &Aabb) -> Result<LocalCcResult> {
    require_inside(lambda, config.window())?;
    let n = config.len();
    let edges = edge_list(config);
    let step = config.max_radius().max(1.0);
    let cover = config.centers_bbox();
    let in_lambda: Vec<bool> = config.centers().map(|c| lambda.contains(c)).collect();

    let mut probes = Vec::new();
    let mut boxes = Vec::new();
    let mut k = 0usize;
    loop {
        let delta = lambda.dilate(k as f64 * step);
        let in_delta: Vec<bool> = config.centers().map(|c| delta.contains(c)).collect();
        let outer: Vec<bool> = in_delta
            .iter()
            .zip(&in_lambda)
            .map(|(d, l)| *d && !*l)
            .collect();
        let v = induced_components(n, &edges, &in_delta) as i64
            - induced_components(n, &edges, &outer) as i64;
        probes.push(v);
        boxes.push(delta);
        let covered = cover.as_ref().is_none_or(|bb| bb.is_inside(&delta));
        if covered {
            break;
        }
        k += 1;
    }
    let value = *probes.last().expect("at least one probe");
    let first_stable = probes
        .iter()
        .rposition(|&v| v != value)
        .map_or(0, |i| i + 1);
    Ok(LocalCcResult {
        value,
        stabilization_box: boxes[first_stable],
        probes,
    })
}

/// The limit value only: `N_cc(ω) − N_cc(ω_{Λ^c})`.
pub fn local_cc_value(config: &Configuration, lambda: &Aabb) -> Result<i64> {
    require_inside(lambda, config.window())?;
    let edges = edge_list(config);
    let all = vec![true; config.len()];
    let outside: Vec<bool> = config.centers().map(|c| !lambda.contains(c)).collect();
    Ok(induced_components(config.len(), &edges, &all) as i64
        - induced_components(config.len(), &edges, &outside) as i64)
}

/// `1 −` number of distinct components of `config` hit by `x`.
pub fn cc_increment(config: &Configuration, x: &MarkedBall) -> i64 {
    ClusterLabeling::build(config).increment(config, x)
}

impl ClusterLabeling {
    /// Change of the component count when `x` is added to `config`.
    pub fn increment(&self, config: &Configuration, x: &MarkedBall) -> i64 {
        let mut comps: Vec<usize> = config
            .intersecting(x)
            .into_iter()
            .map(|j| self.component_of(j))
            .collect();
        comps.sort_unstable();
        comps.dedup();
        1 - comps.len() as i64
    }
}

/// `N^{Λ2}_cc(ω) − N^Λ_cc(ω)` for nested `Λ ⊆ Λ2`; depends only on the balls
/// outside `Λ`.
pub fn compatibility_offset(config: &Configuration, lambda: &Aabb, lambda2: &Aabb) -> Result<i64> {
    if !lambda.is_inside(lambda2) {
        return Err(Error::NestingViolation(format!("{lambda:?} not inside {lambda2:?}")));
    }
    if !lambda2.is_inside(config.window()) {
        return Err(Error::NestingViolation(format!(
            "{lambda2:?} not inside window {:?}",
            config.window()
        )));
    }
    Ok(local_cc_value(config, lambda2)? - local_cc_value(config, lambda)?)
}

/// Outcome of checking the upper and lower bounds on the local count.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsCheck {
    pub value: i64,
    pub upper_ok: bool,
    /// Vacuously true when the lower bound is not asserted.
    pub lower_ok: bool,
    pub k_const: f64,
    /// False when some ball centred in `Λ` has radius above `R0`.
    pub lower_asserted: bool,
    pub count_in_lambda: usize,
    pub count_in_ring: usize,
}

/// The constant `K = 1 − |Δ_{R0}|/v_d` with `Δ_{R0} = dilate(Λ, R0 + 2)`.
pub fn lower_bound_constant(lambda: &Aabb, r0: f64) -> f64 {
    1.0 - lambda.dilate(r0 + 2.0).volume() / unit_ball_volume(lambda.dim())
}

/// Checks `N^Λ ≤ ω(Λ)` and `N^Λ ≥ K − ω(Δ_{R0}∖Λ)`.
pub fn check_bounds(config: &Configuration, lambda: &Aabb, r0: f64) -> Result<BoundsCheck> {
    let value = local_cc_value(config, lambda)?;
    let delta = lambda.dilate(r0 + 2.0);
    let k_const = lower_bound_constant(lambda, r0);
    let mut count_in_lambda = 0;
    let mut count_in_ring = 0;
    let mut lower_asserted = true;
    for b in config.balls() {
        if lambda.contains(&b.center) {
            count_in_lambda += 1;
            if b.radius > r0 {
                lower_asserted = false;
            }
        } else if delta.contains(&b.center) {
            count_in_ring += 1;
        }
    }
    let upper_ok = value <= count_in_lambda as i64;
    let lower_ok = !lower_asserted || value as f64 >= k_const - count_in_ring as f64;
    Ok(BoundsCheck {
        value,
        upper_ok,
        lower_ok,
        k_const,
        lower_asserted,
        count_in_lambda,
        count_in_ring,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::count_components;
    use crate::model::{sample_poisson_boolean, ModelParams, RadiusLaw};
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn window() -> Aabb {
        Aabb::cube(2, -10.0, 10.0).unwrap()
    }

    fn config(balls: &[([f64; 2], f64)]) -> Configuration {
        Configuration::from_balls(
            window(),
            &RadiusLaw::Dirac(1.0),
            balls.iter().map(|(c, r)| MarkedBall::at(c, *r)).collect(),
        )
        .unwrap()
    }

    fn random_config(seed: u64, z: f64, law: RadiusLaw) -> Configuration {
        let p = ModelParams::new(z, 1.0, law, Aabb::cube(2, 0.0, 6.0).unwrap()).unwrap();
        sample_poisson_boolean(&p, &mut stream(seed, Purpose::Misc, 0))
    }

    #[test]
    fn all_inside_gives_total_count() {
        let c = config(&[([0.0, 0.0], 0.2), ([0.5, 0.5], 0.1), ([0.4, 0.0], 0.2)]);
        let lam = Aabb::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(local_cc(&c, &lam).unwrap().value, count_components(&c) as i64);
    }

    #[test]
    fn empty_lambda_gives_zero() {
        let c = config(&[([5.0, 5.0], 3.0), ([-5.0, 5.0], 1.0)]);
        let lam = Aabb::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(local_cc(&c, &lam).unwrap().value, 0);
    }

    #[test]
    fn bridge_ball_example() {
        let c = config(&[([0.0, 0.0], 2.0), ([3.0, 0.0], 1.0), ([-3.0, 0.0], 1.0)]);
        let lam = Aabb::cube(2, -1.0, 1.0).unwrap();
        // direct evaluation at the full window: N(ω) = 1, N(ω∖Λ) = 2
        assert_eq!(count_components(&c), 1);
        assert_eq!(count_components(&c.exclude(&lam)), 2);
        let r = local_cc(&c, &lam).unwrap();
        assert_eq!(r.value, -1);
        assert_eq!(local_cc_value(&c, &lam).unwrap(), -1);
    }

    #[test]
    fn lambda_outside_window_is_rejected() {
        let c = config(&[]);
        let lam = Aabb::cube(2, 5.0, 12.0).unwrap();
        assert!(matches!(local_cc(&c, &lam), Err(Error::LambdaNotInWindow(_))));
    }

    #[test]
    fn increment_examples() {
        let c = config(&[([0.0, 0.0], 1.0), ([4.0, 0.0], 1.0)]);
        assert_eq!(cc_increment(&c, &MarkedBall::at(&[0.0, 5.0], 1.0)), 1);
        assert_eq!(cc_increment(&c, &MarkedBall::at(&[2.0, 0.0], 1.0)), -1);
        assert_eq!(cc_increment(&c, &MarkedBall::at(&[0.0, 1.5], 1.0)), 0);
    }

    #[test]
    fn offset_examples() {
        let c = config(&[([0.0, 0.0], 2.0), ([3.0, 0.0], 1.0), ([-3.0, 0.0], 1.0)]);
        let lam = Aabb::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(compatibility_offset(&c, &lam, &lam).unwrap(), 0);
        let far = config(&[([8.0, 8.0], 0.5)]);
        let big = Aabb::cube(2, -4.0, 4.0).unwrap();
        assert_eq!(compatibility_offset(&far, &lam, &big).unwrap(), 0);
        assert!(matches!(
            compatibility_offset(&c, &big, &lam),
            Err(Error::NestingViolation(_))
        ));
    }

    #[test]
    fn offset_ignores_interior_configuration() {
        let law = RadiusLaw::UniformInterval(0.1, 0.5);
        let base = random_config(3, 3.0, law);
        let lam = Aabb::cube(2, 2.0, 3.5).unwrap();
        let lam2 = Aabb::cube(2, 1.0, 4.5).unwrap();
        let outside = base.exclude(&lam);
        let expected = compatibility_offset(&base, &lam, &lam2).unwrap();
        let mut rng = stream(4, Purpose::Misc, 1);
        for _ in 0..20 {
            let mut c = outside.clone();
            let n = rng.random_range(0..12);
            for _ in 0..n {
                let x = [2.0 + 1.5 * rng.random::<f64>(), 2.0 + 1.5 * rng.random::<f64>()];
                c.push(MarkedBall::at(&x, law.sample(&mut rng))).unwrap();
            }
            assert_eq!(compatibility_offset(&c, &lam, &lam2).unwrap(), expected);
        }
    }

    #[test]
    fn bound_constant_example() {
        let lam = Aabb::cube(2, 0.0, 1.0).unwrap();
        assert_eq!(lam.dilate(3.0).volume(), 49.0);
        let k = lower_bound_constant(&lam, 1.0);
        assert!((k - (1.0 - 49.0 / std::f64::consts::PI)).abs() < 1e-12);
        assert!((k + 14.597).abs() < 1e-3);
    }

    #[test]
    fn empty_configuration_satisfies_bounds() {
        let b = check_bounds(&config(&[]), &Aabb::cube(2, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(b.upper_ok && b.lower_ok && b.lower_asserted);
        assert_eq!(b.value, 0);
    }

    #[test]
    fn oversized_ball_in_lambda_disables_lower_bound() {
        let c = config(&[([0.5, 0.5], 3.0)]);
        let b = check_bounds(&c, &Aabb::cube(2, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(!b.lower_asserted && b.lower_ok);
    }

    #[test]
    fn bounds_hold_on_sampled_configurations() {
        let lam = Aabb::cube(2, 2.5, 3.5).unwrap();
        for seed in 0..300 {
            let c = random_config(seed, 12.0, RadiusLaw::UniformInterval(0.05, 0.6));
            let b = check_bounds(&c, &lam, 0.6).unwrap();
            assert!(b.upper_ok && b.lower_ok, "seed {seed}: {b:?}");
        }
    }

    #[test]
    fn stabilization_witness_is_stable() {
        for seed in 0..20 {
            let c = random_config(seed, 4.0, RadiusLaw::UniformInterval(0.1, 0.8));
            let lam = Aabb::cube(2, 2.0, 3.0).unwrap();
            let r = local_cc(&c, &lam).unwrap();
            let w = r.stabilization_box;
            for extra in [0.5, 1.7, 4.0] {
                let delta = w.dilate(extra);
                let inner = c.restrict(&delta);
                let outer = inner.exclude(&lam);
                let v = count_components(&inner) as i64 - count_components(&outer) as i64;
                assert_eq!(v, r.value);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn increment_is_lambda_independent(seed in 0u64..1_000_000, x0 in 0.5f64..5.5, x1 in 0.5f64..5.5, r in 0.05f64..1.2) {
            let c = random_config(seed, 3.0, RadiusLaw::UniformInterval(0.05, 0.7));
            let x = MarkedBall::at(&[x0, x1], r);
            let inc = cc_increment(&c, &x);
            let mut plus = c.clone();
            plus.push(x).unwrap();
            let small = Aabb::new(&[x0 - 0.1, x1 - 0.1], &[x0 + 0.1, x1 + 0.1]).unwrap();
            let large = Aabb::new(&[(x0 - 2.0).max(0.0), (x1 - 2.0).max(0.0)], &[(x0 + 0.5).min(6.0), (x1 + 3.0).min(6.0)]).unwrap();
            for lam in [small, large] {
                let d = local_cc_value(&plus, &lam).unwrap() - local_cc_value(&c, &lam).unwrap();
                prop_assert_eq!(d, inc);
            }
            prop_assert!(inc <= 1);
        }

        #[test]
        fn increment_lower_bound_for_large_radii(seed in 0u64..1_000_000, r in 0.5f64..3.0) {
            let r0 = 0.5;
            let c = random_config(seed, 2.0, RadiusLaw::UniformInterval(r0, 1.5));
            let x = MarkedBall::at(&[3.0, 3.0], r);
            let c0 = (3.0 / r0).powi(2);
            prop_assert!(cc_increment(&c, &x) as f64 >= -c0 * r * r);
        }

        #[test]
        fn telescoping_in_random_order(seed in 0u64..1_000_000) {
            let c = random_config(seed, 3.0, RadiusLaw::UniformInterval(0.1, 0.6));
            let mut order: Vec<usize> = (0..c.len()).collect();
            order.shuffle(&mut stream(seed, Purpose::Misc, 9));
            let mut acc = c.empty_like();
            let mut total = 0i64;
            for i in order {
                total += cc_increment(&acc, c.ball(i));
                acc.push(*c.ball(i)).unwrap();
            }
            prop_assert_eq!(total, count_components(&c) as i64);
        }

        #[test]
        fn deletion_inverse(seed in 0u64..1_000_000) {
            let c = random_config(seed, 3.0, RadiusLaw::UniformInterval(0.1, 0.6));
            let n = count_components(&c) as i64;
            for i in 0..c.len() {
                let mut minus = c.clone();
                let x = minus.swap_remove(i);
                let inc = cc_increment(&minus, &x);
                prop_assert_eq!(inc, -(count_components(&minus) as i64 - n));
            }
        }
    }
}
