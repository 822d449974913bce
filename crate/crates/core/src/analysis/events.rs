//! Localization events around a bounded region and the check that the local
//! component count only depends on a bounded window on their intersection.

use crate::connectivity::{local_cc_value, ClusterLabeling};
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::model::Configuration;

fn centered_box(dim: usize, half: f64) -> Aabb {
    Aabb::centered(dim, half).expect("nonnegative half side")
}

fn check_ij(i: f64, j: f64) -> Result<()> {
    if !(0.0 < i && i < j) {
        return Err(Error::InvalidParameter(format!("need 0 < i < j, got i={i}, j={j}")));
    }
    Ok(())
}

/// No ball centred outside `Δ_j = [−j, j]^d` intersects `Δ_i`.
pub fn event_aij(config: &Configuration, i: f64, j: f64) -> Result<bool> {
    check_ij(i, j)?;
    let di = centered_box(config.dim(), i);
    let dj = centered_box(config.dim(), j);
    Ok(config
        .balls()
        .iter()
        .all(|b| dj.contains(&b.center) || !b.hits_box(&di)))
}

/// Number of components of `ω_{Δ_j∖Λ}` that meet both `Λ ⊕ B(0, R0)` and the
/// complement of `Δ_i`.
pub fn crossing_components(config: &Configuration, lambda: &Aabb, r0: f64, i: f64, j: f64) -> usize {
    let di = centered_box(config.dim(), i);
    let dj = centered_box(config.dim(), j);
    let ring = config.filter(|b| dj.contains(&b.center) && !lambda.contains(&b.center));
    let labels = ClusterLabeling::build(&ring);
    let mut near = vec![false; labels.count()];
    let mut out = vec![false; labels.count()];
    for (k, b) in ring.balls().iter().enumerate() {
        let c = labels.component_of(k);
        if lambda.dist_to_point(&b.center) <= b.radius + r0 {
            near[c] = true;
        }
        if b.leaves_box(&di) {
            out[c] = true;
        }
    }
    near.iter().zip(&out).filter(|(a, b)| **a && **b).count()
}

/// At most one component of `ω_{Δ_j∖Λ}` meets both `Λ ⊕ B(0, R0)` and the
/// complement of `Δ_i`.
pub fn event_wij(config: &Configuration, lambda: &Aabb, r0: f64, i: f64, j: f64) -> Result<bool> {
    check_ij(i, j)?;
    let di = centered_box(config.dim(), i);
    if !lambda.is_inside(&di) {
        return Err(Error::NestingViolation(format!("{lambda:?} not inside Δ_i = {di:?}")));
    }
    Ok(crossing_components(config, lambda, r0, i, j) <= 1)
}

/// Checks `N^Λ_cc(ω) = N^Λ_cc(ω_{Δ_j})` for `ω` in `A_ij ∩ W_ij`.
///
/// Besides the two events this requires every ball centred in `Λ` to have
/// radius at most `R0` and `Λ ⊕ R0 ⊆ Δ_i`, so that balls centred outside
/// `Δ_j` cannot reach balls centred in `Λ`.
pub fn localization_check(config: &Configuration, lambda: &Aabb, r0: f64, i: f64, j: f64) -> Result<bool> {
    if !event_aij(config, i, j)? {
        return Err(Error::PreconditionEventFailed("A_ij".into()));
    }
    if !event_wij(config, lambda, r0, i, j)? {
        return Err(Error::PreconditionEventFailed("W_ij".into()));
    }
    if config
        .balls()
        .iter()
        .any(|b| lambda.contains(&b.center) && b.radius > r0)
    {
        return Err(Error::PreconditionEventFailed(format!("a ball centred in Λ exceeds R0 = {r0}")));
    }
    let di = centered_box(config.dim(), i);
    if !lambda.dilate(r0).is_inside(&di) {
        return Err(Error::PreconditionEventFailed(format!("Λ ⊕ R0 is not inside Δ_i = {di:?}")));
    }
    let dj = centered_box(config.dim(), j);
    let full = local_cc_value(config, lambda)?;
    let restricted = local_cc_value(&config.restrict(&dj), lambda)?;
    Ok(full == restricted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MarkedBall;
    use crate::model::RadiusLaw;

    fn config(balls: Vec<MarkedBall>) -> Configuration {
        let w = Aabb::centered(2, 30.0).unwrap();
        Configuration::from_balls(w, &RadiusLaw::Dirac(0.5), balls).unwrap()
    }

    /// Chain of tangent unit balls from `(x0, y)` to `(x1, y)`.
    fn chain(x0: f64, x1: f64, y: f64) -> Vec<MarkedBall> {
        let n = ((x1 - x0) / 2.0).floor() as usize;
        (0..=n).map(|k| MarkedBall::at(&[x0 + 2.0 * k as f64, y], 1.0)).collect()
    }

    #[test]
    fn aij_examples() {
        let inside = config(vec![MarkedBall::at(&[1.0, 1.0], 3.0)]);
        assert!(event_aij(&inside, 2.0, 5.0).unwrap());
        let far = config(vec![MarkedBall::at(&[6.0, 0.0], 4.5)]);
        assert!(!event_aij(&far, 2.0, 5.0).unwrap());
        let short = config(vec![MarkedBall::at(&[6.0, 0.0], 3.5)]);
        assert!(event_aij(&short, 2.0, 5.0).unwrap());
    }

    #[test]
    fn wij_examples() {
        let lam = Aabb::centered(2, 1.0).unwrap();
        assert!(event_wij(&config(vec![]), &lam, 1.0, 4.0, 10.0).unwrap());
        let single = config(chain(2.5, 9.0, 0.0));
        assert!(event_wij(&single, &lam, 1.0, 4.0, 10.0).unwrap());
        let mut two = chain(2.5, 9.0, 0.0);
        two.extend(chain(-9.0, -2.5, 0.0));
        assert!(!event_wij(&config(two.clone()), &lam, 1.0, 4.0, 10.0).unwrap());
        // the counterexample is caught by the precondition
        assert!(matches!(
            localization_check(&config(two), &lam, 1.0, 4.0, 10.0),
            Err(Error::PreconditionEventFailed(_))
        ));
    }

    #[test]
    fn everything_inside_dj_is_trivially_local() {
        let lam = Aabb::centered(2, 1.0).unwrap();
        let mut balls = chain(-3.0, 3.0, 0.0);
        balls.push(MarkedBall::at(&[0.0, 0.5], 0.5));
        let c = config(balls);
        assert!(localization_check(&c, &lam, 1.0, 4.0, 8.0).unwrap());
    }

    #[test]
    fn exterior_bridge_requires_w() {
        // two chains leave Δ_i and are joined far away; Λ's ball touches both
        let lam = Aabb::centered(2, 1.0).unwrap();
        let mut balls = chain(1.0, 9.0, 0.0);
        balls.extend(chain(-9.0, -1.0, 0.0));
        balls.extend(chain(-9.0, 9.0, 12.0));
        balls.push(MarkedBall::at(&[-9.0, 6.0], 5.0));
        balls.push(MarkedBall::at(&[9.0, 6.0], 5.0));
        let c = config(balls);
        // the local counts genuinely differ...
        let dj = Aabb::centered(2, 10.0).unwrap();
        assert_ne!(
            local_cc_value(&c, &lam).unwrap(),
            local_cc_value(&c.restrict(&dj), &lam).unwrap()
        );
        // ...and the check refuses to run
        assert!(localization_check(&c, &lam, 1.0, 4.0, 10.0).is_err());
    }
}
