//! Finite configurations of marked balls inside a simulation window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{balls_intersect, Aabb, MarkedBall, Point};
use crate::index::SpatialIndex;
use crate::model::law::RadiusLaw;

/// A finite multiset of balls with a spatial index kept in sync.
///
/// Ball ids are dense positions in `balls()`; removal swaps the last ball
/// into the freed slot. The index is not serialized; it is rebuilt on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "ConfigRepr", try_from = "ConfigRepr")]
pub struct Configuration {
    window: Aabb,
    balls: Vec<MarkedBall>,
    index: SpatialIndex,
}

impl Configuration {
    pub fn new(window: Aabb, index: SpatialIndex) -> Self {
        Configuration {
            window,
            balls: Vec::new(),
            index,
        }
    }

    /// Empty configuration with the default index sizing for `law`.
    pub fn for_law(window: Aabb, law: &RadiusLaw) -> Self {
        let index = SpatialIndex::with_median_radius(&window, law.median());
        Configuration::new(window, index)
    }

    /// Configuration from explicit balls; every centre must lie in `window`.
    pub fn from_balls(window: Aabb, law: &RadiusLaw, balls: Vec<MarkedBall>) -> Result<Self> {
        let mut c = Configuration::for_law(window, law);
        for b in balls {
            c.push(b)?;
        }
        Ok(c)
    }

    /// Same window and index geometry, no balls.
    pub fn empty_like(&self) -> Self {
        let mut index = self.index.clone();
        index.clear();
        Configuration {
            window: self.window,
            balls: Vec::new(),
            index,
        }
    }

    pub fn window(&self) -> &Aabb {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn balls(&self) -> &[MarkedBall] {
        &self.balls
    }

    pub fn ball(&self, id: usize) -> &MarkedBall {
        &self.balls[id]
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn push(&mut self, ball: MarkedBall) -> Result<usize> {
        if ball.center.dim() != self.dim() {
            return Err(Error::InvalidParameter("ball dimension mismatch".into()));
        }
        if !self.window.contains(&ball.center) {
            return Err(Error::InvalidParameter(format!(
                "centre {:?} outside window {:?}",
                ball.center, self.window
            )));
        }
        Ok(self.push_unchecked(ball))
    }

    pub(crate) fn push_unchecked(&mut self, ball: MarkedBall) -> usize {
        let id = self.balls.len();
        self.index.insert(id, &ball);
        self.balls.push(ball);
        id
    }

    /// Removes ball `id`; the previously last ball (if any) now has id `id`.
    pub fn swap_remove(&mut self, id: usize) -> MarkedBall {
        let last = self.balls.len() - 1;
        let removed = self.balls[id];
        self.index.remove(id, &removed);
        if id != last {
            let moved = self.balls[last];
            self.index.relabel(last, id, &moved);
        }
        self.balls.swap_remove(id);
        removed
    }

    /// Ids of stored balls intersecting `ball` (closed balls), sorted.
    pub fn intersecting_into(&self, ball: &MarkedBall, out: &mut Vec<usize>) {
        self.index.candidates_into(ball, out);
        out.retain(|&j| balls_intersect(&self.balls[j], ball));
    }

    pub fn intersecting(&self, ball: &MarkedBall) -> Vec<usize> {
        let mut out = Vec::new();
        self.intersecting_into(ball, &mut out);
        out
    }

    /// Balls with centre in `region` (closed), same window.
    pub fn restrict(&self, region: &Aabb) -> Configuration {
        self.filter(|b| region.contains(&b.center))
    }

    /// Balls with centre outside `region`.
    pub fn exclude(&self, region: &Aabb) -> Configuration {
        self.filter(|b| !region.contains(&b.center))
    }

    pub fn filter<F: Fn(&MarkedBall) -> bool>(&self, keep: F) -> Configuration {
        let mut out = self.empty_like();
        for b in self.balls.iter().filter(|b| keep(b)) {
            out.push_unchecked(*b);
        }
        out
    }

    /// Number of centres in `region`.
    pub fn count_in(&self, region: &Aabb) -> usize {
        self.balls.iter().filter(|b| region.contains(&b.center)).count()
    }

    /// Bounding box of the centres, `None` when empty.
    pub fn centers_bbox(&self) -> Option<Aabb> {
        let first = self.balls.first()?;
        let mut lo = first.center;
        let mut hi = first.center;
        for b in &self.balls[1..] {
            for i in 0..self.dim() {
                let x = b.center.coords()[i];
                lo.coords_mut()[i] = lo.coords()[i].min(x);
                hi.coords_mut()[i] = hi.coords()[i].max(x);
            }
        }
        Some(Aabb::new(lo.coords(), hi.coords()).expect("ordered corners"))
    }

    pub fn max_radius(&self) -> f64 {
        self.balls.iter().map(|b| b.radius).fold(0.0, f64::max)
    }

    /// Rigid translation of balls and window.
    pub fn translated(&self, shift: &[f64]) -> Configuration {
        let window = self.window.translated(shift);
        let mut index = SpatialIndex::new(&window, self.index.cell_size(), self.index.threshold());
        let balls: Vec<MarkedBall> = self
            .balls
            .iter()
            .map(|b| MarkedBall {
                center: b.center.translated(shift),
                radius: b.radius,
            })
            .collect();
        for (i, b) in balls.iter().enumerate() {
            index.insert(i, b);
        }
        Configuration {
            window,
            balls,
            index,
        }
    }

    pub fn centers(&self) -> impl Iterator<Item = &Point> {
        self.balls.iter().map(|b| &b.center)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    window: Aabb,
    cell_size: f64,
    threshold: f64,
    balls: Vec<MarkedBall>,
}

impl From<Configuration> for ConfigRepr {
    fn from(c: Configuration) -> Self {
        ConfigRepr {
            window: c.window,
            cell_size: c.index.cell_size(),
            threshold: c.index.threshold(),
            balls: c.balls,
        }
    }
}

impl TryFrom<ConfigRepr> for Configuration {
    type Error = Error;

    fn try_from(r: ConfigRepr) -> Result<Self> {
        if !(r.cell_size > 0.0 && r.cell_size.is_finite()) {
            return Err(Error::Parse("cell size must be positive".into()));
        }
        let index = SpatialIndex::new(&r.window, r.cell_size, r.threshold);
        let mut c = Configuration::new(r.window, index);
        for b in r.balls {
            c.push(b)?;
        }
        Ok(c)
    }
}
