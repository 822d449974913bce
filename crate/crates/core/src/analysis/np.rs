//! Density of connected components estimated through far-left balls.

use crate::connectivity::ClusterLabeling;
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::model::Configuration;
use crate::stats::batch_means;

/// Volume of the translations `t` with `hull + t ⊆ window`, from side
/// lengths so that it is invariant under translating both boxes.
fn fitting_volume(window: &Aabb, hull_sides: &[f64]) -> f64 {
    (0..window.dim())
        .map(|i| (window.side(i) - hull_sides[i]).max(0.0))
        .product()
}

/// Weighted component count of one configuration.
fn weighted_count(config: &Configuration, window: &Aabb, border: f64) -> f64 {
    let labels = ClusterLabeling::build(config);
    labels
        .summaries(config)
        .iter()
        .filter_map(|s| {
            let hull = s.bbox.dilate(border);
            if !hull.is_inside(window) {
                return None;
            }
            let v = fitting_volume(window, &hull.sides());
            (v > 0.0).then(|| 1.0 / v)
        })
        .sum()
}

/// Estimates the number of connected components per unit volume by
/// minus-sampling. Each component is represented by its far-left ball; it
/// is counted only when the bounding box of its union of balls, dilated by
/// `border`, lies inside `window` (so that no ball outside the window with
/// radius at most `border` could touch it, and its far-left ball is centred
/// in the window eroded by `border`). Counted components are weighted by
/// the inverse volume of translations keeping that hull inside the window,
/// which removes the bias against large components; an isolated point
/// has weight `1/|window ⊖ border|`.
///
/// Returns the estimate and a batch-means standard error over samples.
pub fn estimate_np(samples: &[Configuration], window: &Aabb, border: f64) -> Result<(f64, f64)> {
    let eroded = window.erode(border).filter(|b| b.volume() > 0.0);
    if !(border >= 0.0) || eroded.is_none() {
        return Err(Error::ErodedWindowEmpty(border));
    }
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let per_sample: Vec<f64> = samples
        .iter()
        .map(|c| weighted_count(c, window, border))
        .collect();
    let bm = batch_means(&per_sample, 20);
    Ok((bm.mean, bm.se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MarkedBall;
    use crate::model::{sample_poisson_boolean, ModelParams, RadiusLaw};
    use crate::rng::{stream, Purpose};

    #[test]
    fn singletons_and_empty() {
        let w = Aabb::cube(2, 0.0, 10.0).unwrap();
        assert_eq!(estimate_np(&[], &w, 1.0).unwrap(), (0.0, 0.0));
        let balls = vec![
            MarkedBall::at(&[3.0, 3.0], 0.5),
            MarkedBall::at(&[6.0, 6.0], 0.5),
            MarkedBall::at(&[3.0, 7.0], 0.5),
            // centred in the border margin
            MarkedBall::at(&[0.5, 5.0], 0.3),
        ];
        let c = Configuration::from_balls(w, &RadiusLaw::Dirac(0.5), balls).unwrap();
        // hull side 1 + 2 leaves 7 per axis for translations
        let (est, _) = estimate_np(&[c], &w, 1.0).unwrap();
        assert_eq!(est, 3.0 / 49.0);
        // points: the eroded volume
        let pts = vec![MarkedBall::at(&[3.0, 3.0], 0.0), MarkedBall::at(&[6.0, 6.0], 0.0)];
        let c = Configuration::from_balls(w, &RadiusLaw::Dirac(0.0), pts).unwrap();
        assert_eq!(estimate_np(&[c], &w, 1.0).unwrap().0, 2.0 / 64.0);
        assert_eq!(estimate_np(&[], &w, 5.0), Err(Error::ErodedWindowEmpty(5.0)));
    }

    #[test]
    fn clipped_components_are_dropped() {
        let w = Aabb::cube(2, 0.0, 10.0).unwrap();
        // far-left ball inside, but the chain runs out of the window
        let balls = vec![MarkedBall::at(&[5.0, 5.0], 1.0), MarkedBall::at(&[8.5, 5.0], 2.5)];
        let c = Configuration::from_balls(w, &RadiusLaw::Dirac(1.0), balls).unwrap();
        assert_eq!(estimate_np(&[c], &w, 1.0).unwrap().0, 0.0);
    }

    #[test]
    fn translation_invariant() {
        // dyadic coordinates keep every sum exact
        let w = Aabb::cube(2, 0.0, 16.0).unwrap();
        let mut rng = stream(5, Purpose::Misc, 0);
        let s: Vec<Configuration> = (0..30)
            .map(|_| {
                let balls = (0..60)
                    .map(|_| {
                        let x = rand::Rng::random_range(&mut rng, 0..=1024) as f64 / 64.0;
                        let y = rand::Rng::random_range(&mut rng, 0..=1024) as f64 / 64.0;
                        let r = rand::Rng::random_range(&mut rng, 8..=48) as f64 / 64.0;
                        MarkedBall::at(&[x, y], r)
                    })
                    .collect();
                Configuration::from_balls(w, &RadiusLaw::UniformInterval(0.125, 0.75), balls).unwrap()
            })
            .collect();
        let shift = [3.25, -7.5];
        let moved: Vec<Configuration> = s.iter().map(|c| c.translated(&shift)).collect();
        let a = estimate_np(&s, &w, 0.75).unwrap();
        let b = estimate_np(&moved, &w.translated(&shift), 0.75).unwrap();
        assert!(a.0 > 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn poisson_estimate_is_consistent_with_a_larger_window() {
        let law = RadiusLaw::Dirac(0.5);
        let small = ModelParams::new(0.6, 1.0, law, Aabb::cube(2, 0.0, 10.0).unwrap()).unwrap();
        let large = small.with_window(Aabb::cube(2, -5.0, 15.0).unwrap());
        let mut rng = stream(6, Purpose::Reference, 0);
        let a: Vec<Configuration> = (0..600).map(|_| sample_poisson_boolean(&small, &mut rng)).collect();
        let b: Vec<Configuration> = (0..300).map(|_| sample_poisson_boolean(&large, &mut rng)).collect();
        let (ea, sa) = estimate_np(&a, &small.window, 0.5).unwrap();
        let (eb, sb) = estimate_np(&b, &large.window, 0.5).unwrap();
        assert!((ea - eb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{ea}±{sa} vs {eb}±{sb}");
        // isolated balls alone: z e^{−z v_2 (2r)²}
        let isolated = 0.6 * (-0.6 * std::f64::consts::PI).exp();
        assert!(eb > isolated);
    }
}
