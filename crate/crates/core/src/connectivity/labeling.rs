//! Static labeling of the connection graph of a configuration.

use std::cmp::Ordering;

use crate::geometry::{Aabb, MarkedBall};
use crate::model::{Configuration, CoverageProbe};

use super::union_find::UnionFind;

/// Partition of the balls of a configuration into connected components of
/// its intersection graph.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    uf: UnionFind,
    /// Component index of each ball; components are numbered in order of
    /// their smallest ball id.
    component: Vec<usize>,
    count: usize,
}

/// Summary of one connected component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSummary {
    pub size: usize,
    /// Bounding box of the union of the component's balls.
    pub bbox: Aabb,
    /// Far-left ball: minimal first coordinate, ties broken by the
    /// remaining coordinates, then radius, then id.
    pub leftmost: usize,
}

impl ClusterLabeling {
    pub fn build(config: &Configuration) -> Self {
        let n = config.len();
        let mut uf = UnionFind::new(n);
        let mut buf = Vec::new();
        for (i, b) in config.balls().iter().enumerate() {
            config.intersecting_into(b, &mut buf);
            for &j in buf.iter().filter(|&&j| j > i) {
                uf.union(i, j);
            }
        }
        Self::from_union_find(uf)
    }

    pub(crate) fn from_union_find(mut uf: UnionFind) -> Self {
        let n = uf.len();
        let mut root_to_comp = vec![usize::MAX; n];
        let mut component = vec![0; n];
        let mut count = 0;
        for (i, slot) in component.iter_mut().enumerate() {
            let r = uf.find(i);
            if root_to_comp[r] == usize::MAX {
                root_to_comp[r] = count;
                count += 1;
            }
            *slot = root_to_comp[r];
        }
        debug_assert_eq!(count, uf.count());
        ClusterLabeling {
            uf,
            component,
            count,
        }
    }

    /// Number of connected components.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn component_of(&self, ball: usize) -> usize {
        self.component[ball]
    }

    pub fn components(&self) -> &[usize] {
        &self.component
    }

    pub fn union_find(&self) -> &UnionFind {
        &self.uf
    }

    /// Component sizes in component order.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &c in &self.component {
            s[c] += 1;
        }
        s
    }

    /// Ball ids grouped by component.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.count];
        for (i, &c) in self.component.iter().enumerate() {
            m[c].push(i);
        }
        m
    }

    pub fn summaries(&self, config: &Configuration) -> Vec<ComponentSummary> {
        self.members()
            .into_iter()
            .map(|ids| {
                let balls = config.balls();
                let mut bbox = balls[ids[0]].bounding_box();
                for &i in &ids[1..] {
                    let b = balls[i].bounding_box();
                    let lo: Vec<f64> = (0..config.dim())
                        .map(|k| bbox.lo().coords()[k].min(b.lo().coords()[k]))
                        .collect();
                    let hi: Vec<f64> = (0..config.dim())
                        .map(|k| bbox.hi().coords()[k].max(b.hi().coords()[k]))
                        .collect();
                    bbox = Aabb::new(&lo, &hi).expect("ordered");
                }
                let leftmost = *ids
                    .iter()
                    .min_by(|&&a, &&b| far_left_order(&balls[a], a, &balls[b], b))
                    .expect("nonempty component");
                ComponentSummary {
                    size: ids.len(),
                    bbox,
                    leftmost,
                }
            })
            .collect()
    }
}

/// Total order used to pick the far-left ball of a component.
pub fn far_left_order(a: &MarkedBall, ia: usize, b: &MarkedBall, ib: usize) -> Ordering {
    for (x, y) in a.center.coords().iter().zip(b.center.coords()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.radius.total_cmp(&b.radius).then(ia.cmp(&ib))
}

/// Number of connected components of the intersection graph.
pub fn count_components(config: &Configuration) -> usize {
    ClusterLabeling::build(config).count()
}

/// Cluster statistics used by percolation diagnostics and estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentStats {
    pub sizes: Vec<usize>,
    pub largest_size: usize,
    /// Fraction of the window covered by the largest component (grid probe).
    pub largest_volume_fraction: f64,
    /// Some component touches two opposite faces of the window.
    pub spanning: bool,
    pub leftmost: Vec<usize>,
}

pub fn component_stats(config: &Configuration, probe_per_axis: usize) -> ComponentStats {
    let labels = ClusterLabeling::build(config);
    if labels.count() == 0 {
        return ComponentStats {
            sizes: Vec::new(),
            largest_size: 0,
            largest_volume_fraction: 0.0,
            spanning: false,
            leftmost: Vec::new(),
        };
    }
    let summaries = labels.summaries(config);
    let sizes: Vec<usize> = summaries.iter().map(|s| s.size).collect();
    let (largest_idx, largest_size) = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, s)| (i, *s))
        .expect("nonempty");
    let window = config.window();
    let members = labels.members();
    let probe = CoverageProbe {
        per_axis: probe_per_axis,
        conservative: false,
    };
    let largest_volume_fraction = probe.covered_fraction(
        members[largest_idx].iter().map(|&i| config.ball(i)),
        window,
    );
    let spanning = summaries.iter().any(|s| {
        (0..config.dim()).any(|k| {
            s.bbox.lo().coords()[k] <= window.lo().coords()[k]
                && s.bbox.hi().coords()[k] >= window.hi().coords()[k]
        })
    });
    ComponentStats {
        sizes,
        largest_size,
        largest_volume_fraction,
        spanning,
        leftmost: summaries.iter().map(|s| s.leftmost).collect(),
    }
}
