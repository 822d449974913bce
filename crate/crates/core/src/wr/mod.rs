//! The q-colour Widom-Rowlinson model: coloured configurations, the
//! sampler, the Fortuin-Kasteleyn colouring kernel and consistency checks.

mod chain;
mod diagnostics;

pub use chain::{initial_wr_state, run_wr, WrMove, WrMoveCounts, WrState};
pub use diagnostics::{fk_consistency_test, gnz_residual_wr, FkOptions, FkPairResult, FkReport};

use serde::{Deserialize, Serialize};

use crate::connectivity::ClusterLabeling;
use crate::error::{Error, Result};
use crate::geometry::MarkedBall;
use crate::model::Configuration;

/// A configuration whose balls carry colours in `1..=q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColoredConfiguration {
    config: Configuration,
    colors: Vec<u32>,
    q: u32,
}

impl ColoredConfiguration {
    pub fn new(config: Configuration, colors: Vec<u32>, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("need q >= 2 colours, got {q}")));
        }
        if colors.len() != config.len() {
            return Err(Error::InvalidParameter(format!(
                "{} colours for {} balls",
                colors.len(),
                config.len()
            )));
        }
        if let Some(c) = colors.iter().find(|&&c| c < 1 || c > q) {
            return Err(Error::InvalidParameter(format!("colour {c} outside 1..={q}")));
        }
        Ok(ColoredConfiguration { config, colors, q })
    }

    /// Every ball gets `color`.
    pub fn monochrome(config: Configuration, color: u32, q: u32) -> Result<Self> {
        let n = config.len();
        Self::new(config, vec![color; n], q)
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn color(&self, ball: usize) -> u32 {
        self.colors[ball]
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    pub fn into_parts(self) -> (Configuration, Vec<u32>) {
        (self.config, self.colors)
    }

    pub fn push(&mut self, ball: MarkedBall, color: u32) -> Result<usize> {
        if color < 1 || color > self.q {
            return Err(Error::InvalidParameter(format!("colour {color} outside 1..={}", self.q)));
        }
        let id = self.config.push(ball)?;
        self.colors.push(color);
        Ok(id)
    }

    /// Whether a ball of colour `color` can be added without overlapping a
    /// ball of another colour.
    pub fn allows(&self, ball: &MarkedBall, color: u32) -> bool {
        self.config
            .intersecting(ball)
            .into_iter()
            .all(|j| self.colors[j] == color)
    }

    /// No two balls of different colours overlap; tangency counts as
    /// overlap.
    pub fn is_allowed(&self) -> bool {
        self.config
            .balls()
            .iter()
            .enumerate()
            .all(|(i, b)| self.allows(b, self.colors[i]))
    }

    pub(crate) fn config_mut(&mut self) -> &mut Configuration {
        &mut self.config
    }

    pub(crate) fn colors_mut(&mut self) -> &mut Vec<u32> {
        &mut self.colors
    }
}

/// Colours each connected component of `config` with an independent
/// uniform colour, components taken in the order of their first ball.
pub fn fk_colorize<R: rand::Rng + ?Sized>(config: &Configuration, q: u32, rng: &mut R) -> Result<ColoredConfiguration> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("need q >= 2 colours, got {q}")));
    }
    let labels = ClusterLabeling::build(config);
    let comp_colors: Vec<u32> = (0..labels.count()).map(|_| rng.random_range(1..=q)).collect();
    let colors = (0..config.len()).map(|i| comp_colors[labels.component_of(i)]).collect();
    ColoredConfiguration::new(config.clone(), colors, q)
}

/// Forgets the colours.
pub fn color_blind(colored: &ColoredConfiguration) -> Configuration {
    colored.config.clone()
}

/// At least two balls carry different colours.
pub fn col_event(colored: &ColoredConfiguration) -> bool {
    colored.colors.windows(2).any(|w| w[0] != w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectivity::{component_stats, count_components};
    use crate::geometry::Aabb;
    use crate::model::{sample_poisson_boolean, ModelParams, RadiusLaw};
    use crate::rng::{stream, Purpose};
    use crate::stats::chi2_goodness_of_fit;

    fn config(balls: Vec<MarkedBall>) -> Configuration {
        Configuration::from_balls(Aabb::cube(2, -5.0, 5.0).unwrap(), &RadiusLaw::Dirac(1.0), balls).unwrap()
    }

    #[test]
    fn allowed_examples() {
        let pair = config(vec![MarkedBall::at(&[0.0, 0.0], 1.0), MarkedBall::at(&[2.0, 0.0], 1.0)]);
        assert!(ColoredConfiguration::monochrome(pair.clone(), 2, 2).unwrap().is_allowed());
        assert!(!ColoredConfiguration::new(pair, vec![1, 2], 2).unwrap().is_allowed());
        let apart = config(vec![MarkedBall::at(&[0.0, 0.0], 1.0), MarkedBall::at(&[2.01, 0.0], 1.0)]);
        assert!(ColoredConfiguration::new(apart, vec![1, 2], 2).unwrap().is_allowed());
        let c = config(vec![MarkedBall::at(&[0.0, 0.0], 1.0)]);
        assert!(ColoredConfiguration::new(c.clone(), vec![3], 2).is_err());
        assert!(ColoredConfiguration::new(c, vec![1], 1).is_err());
    }

    #[test]
    fn col_examples() {
        let two = config(vec![MarkedBall::at(&[-3.0, 0.0], 1.0), MarkedBall::at(&[3.0, 0.0], 1.0)]);
        assert!(!col_event(&ColoredConfiguration::monochrome(config(vec![]), 1, 2).unwrap()));
        assert!(!col_event(&ColoredConfiguration::monochrome(two.clone(), 1, 2).unwrap()));
        assert!(col_event(&ColoredConfiguration::new(two, vec![1, 2], 2).unwrap()));
    }

    #[test]
    fn colorize_is_allowed_and_blind_is_identity() {
        let p = ModelParams::new(30.0, 2.0, RadiusLaw::UniformInterval(0.02, 0.15), Aabb::cube(2, 0.0, 1.0).unwrap())
            .unwrap();
        let mut rng = stream(1, Purpose::Colorize, 0);
        for _ in 0..100 {
            let c = sample_poisson_boolean(&p, &mut rng);
            let col = fk_colorize(&c, 3, &mut rng).unwrap();
            assert!(col.is_allowed());
            let back = color_blind(&col);
            assert_eq!(back.balls(), c.balls());
            assert_eq!(count_components(&back), count_components(&c));
            assert_eq!(component_stats(&back, 8).sizes, component_stats(&c, 8).sizes);
        }
    }

    #[test]
    fn single_component_colour_is_uniform() {
        let c = config(vec![MarkedBall::at(&[0.0, 0.0], 1.0), MarkedBall::at(&[1.0, 0.0], 1.0)]);
        let mut rng = stream(2, Purpose::Colorize, 0);
        let q = 3;
        let mut counts = vec![0.0; q as usize];
        let n = 10_000;
        for _ in 0..n {
            let col = fk_colorize(&c, q, &mut rng).unwrap();
            assert_eq!(col.color(0), col.color(1));
            counts[col.color(0) as usize - 1] += 1.0;
        }
        let expected = vec![n as f64 / q as f64; q as usize];
        assert!(chi2_goodness_of_fit(&counts, &expected).unwrap().p_value > 0.001);
    }

    #[test]
    fn singleton_patterns_are_equally_likely() {
        let c = config(vec![
            MarkedBall::at(&[-3.0, 0.0], 0.5),
            MarkedBall::at(&[0.0, 0.0], 0.5),
            MarkedBall::at(&[3.0, 0.0], 0.5),
        ]);
        let mut rng = stream(3, Purpose::Colorize, 0);
        let mut counts = vec![0.0; 8];
        let mut col_hits = 0;
        let n = 16_000;
        for _ in 0..n {
            let col = fk_colorize(&c, 2, &mut rng).unwrap();
            let idx = col.colors().iter().fold(0, |a, &k| 2 * a + (k - 1) as usize);
            counts[idx] += 1.0;
            col_hits += col_event(&col) as usize;
        }
        assert!(chi2_goodness_of_fit(&counts, &[n as f64 / 8.0; 8]).unwrap().p_value > 0.001);
        // P(Col) = 1 − q^{1−k} with k = 3 components
        let p = col_hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * (0.75 * 0.25 / n as f64).sqrt());
    }
}
