//! Uniform hash grid answering "which stored balls can intersect this ball".
//!
//! Balls whose radius exceeds the oversize threshold live in a flat overflow
//! list scanned on every query, so a heavy-tailed radius law never forces a
//! huge cell size on the rest of the configuration.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use crate::geometry::{Aabb, MarkedBall, Point, MAX_DIM};

type CellKey = [i64; MAX_DIM];
type Cells = HashMap<CellKey, Vec<usize>, BuildHasherDefault<DefaultHasher>>;

#[derive(Clone, Debug)]
pub struct SpatialIndex {
    dim: usize,
    origin: Point,
    cell_size: f64,
    threshold: f64,
    cells: Cells,
    overflow: Vec<usize>,
    len: usize,
}

impl SpatialIndex {
    /// Index with explicit cell size and oversize threshold.
    pub fn new(window: &Aabb, cell_size: f64, threshold: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        SpatialIndex {
            dim: window.dim(),
            origin: *window.lo(),
            cell_size,
            threshold: threshold.max(0.0),
            cells: Cells::default(),
            overflow: Vec::new(),
            len: 0,
        }
    }

    /// Default sizing: cell = 2 × median radius, at least the largest window
    /// side / 64; threshold = cell size.
    pub fn with_median_radius(window: &Aabb, median_radius: f64) -> Self {
        let extent = window.sides().into_iter().fold(0.0, f64::max);
        let mut cell = (2.0 * median_radius).max(extent / 64.0);
        if !(cell > 0.0) {
            cell = 1.0;
        }
        SpatialIndex::new(window, cell, cell)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn overflow_len(&self) -> usize {
        self.overflow.len()
    }

    /// Empties the index while keeping its geometry.
    pub fn clear(&mut self) {
        self.cells.clear();
        self.overflow.clear();
        self.len = 0;
    }

    fn key(&self, p: &Point) -> CellKey {
        let mut k = [0i64; MAX_DIM];
        for (i, slot) in k.iter_mut().enumerate().take(self.dim) {
            *slot = ((p.coords()[i] - self.origin.coords()[i]) / self.cell_size).floor() as i64;
        }
        k
    }

    pub fn insert(&mut self, id: usize, ball: &MarkedBall) {
        if ball.radius > self.threshold {
            self.overflow.push(id);
        } else {
            let key = self.key(&ball.center);
            self.cells.entry(key).or_default().push(id);
        }
        self.len += 1;
    }

    /// Removes `id`, which must have been inserted with this `ball`.
    pub fn remove(&mut self, id: usize, ball: &MarkedBall) {
        let found = if ball.radius > self.threshold {
            remove_from(&mut self.overflow, id)
        } else {
            let key = self.key(&ball.center);
            match self.cells.get_mut(&key) {
                Some(list) => {
                    let ok = remove_from(list, id);
                    if list.is_empty() {
                        self.cells.remove(&key);
                    }
                    ok
                }
                None => false,
            }
        };
        debug_assert!(found, "ball {id} not present in index");
        if found {
            self.len -= 1;
        }
    }

    /// Renames a stored id (used when the configuration swap-removes).
    pub fn relabel(&mut self, old: usize, new: usize, ball: &MarkedBall) {
        let list = if ball.radius > self.threshold {
            &mut self.overflow
        } else {
            let key = self.key(&ball.center);
            self.cells.get_mut(&key).expect("relabel of missing cell")
        };
        if let Some(slot) = list.iter_mut().find(|x| **x == old) {
            *slot = new;
        } else {
            debug_assert!(false, "ball {old} not present in index");
        }
    }

    /// Ids of every stored ball that may intersect `ball`, sorted, without
    /// duplicates. A superset of the true intersectors.
    pub fn neighbor_candidates(&self, ball: &MarkedBall) -> Vec<usize> {
        let mut out = Vec::new();
        self.candidates_into(ball, &mut out);
        out
    }

    pub fn candidates_into(&self, ball: &MarkedBall, out: &mut Vec<usize>) {
        out.clear();
        out.extend_from_slice(&self.overflow);
        if !self.cells.is_empty() {
            let reach = ball.radius + self.threshold;
            let mut lo = [0i64; MAX_DIM];
            let mut hi = [0i64; MAX_DIM];
            let mut span: f64 = 1.0;
            for i in 0..self.dim {
                let c = ball.center.coords()[i] - self.origin.coords()[i];
                lo[i] = ((c - reach) / self.cell_size).floor() as i64;
                hi[i] = ((c + reach) / self.cell_size).floor() as i64;
                span *= (hi[i] - lo[i] + 1) as f64;
            }
            if span > 2.0 * self.cells.len() as f64 {
                for (key, ids) in &self.cells {
                    if (0..self.dim).all(|i| lo[i] <= key[i] && key[i] <= hi[i]) {
                        out.extend_from_slice(ids);
                    }
                }
            } else {
                let mut key = lo;
                'outer: loop {
                    if let Some(ids) = self.cells.get(&key) {
                        out.extend_from_slice(ids);
                    }
                    for i in 0..self.dim {
                        if key[i] < hi[i] {
                            key[i] += 1;
                            continue 'outer;
                        }
                        key[i] = lo[i];
                    }
                    break;
                }
            }
        }
        out.sort_unstable();
    }
}

fn remove_from(list: &mut Vec<usize>, id: usize) -> bool {
    match list.iter().position(|x| *x == id) {
        Some(pos) => {
            list.swap_remove(pos);
            true
        }
        None => false,
    }
}
