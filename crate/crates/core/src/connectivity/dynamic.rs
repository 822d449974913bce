//! Component labels maintained under single-ball births and deaths.
//!
//! Births merge the touched components. A death runs interleaved searches
//! from the removed ball's neighbours inside its old component; searches
//! merge when they meet and the last one still open is never completed, so
//! the cost is governed by the pieces that actually split off.

use serde::{Deserialize, Serialize};

use crate::model::Configuration;

use super::labeling::ClusterLabeling;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DynamicClusters {
    /// Component slot of every ball.
    label: Vec<u32>,
    /// Position of every ball inside its slot's member list.
    pos: Vec<u32>,
    members: Vec<Vec<u32>>,
    free: Vec<u32>,
    live: Vec<u32>,
    live_pos: Vec<u32>,
    #[serde(skip)]
    scratch: Scratch,
}

#[derive(Clone, Debug, Default)]
struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
    buf: Vec<usize>,
    /// Search that reached each stamped ball.
    owner: Vec<u32>,
}

impl Scratch {
    fn next_epoch(&mut self, n: usize) -> u32 {
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
            self.owner.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// How a component falls apart when one of its balls is removed.
#[derive(Clone, Debug, PartialEq)]
pub struct RemovalPlan {
    pub ball: usize,
    slot: u32,
    /// Pieces that move to fresh slots; the remaining piece keeps the slot.
    split_off: Vec<Vec<u32>>,
    /// Number of components the old component becomes.
    pub pieces: usize,
}

impl RemovalPlan {
    /// `N_cc(ω) − N_cc(ω∖Y)`, i.e. the increment of re-adding `Y`.
    pub fn increment(&self) -> i64 {
        1 - self.pieces as i64
    }
}

impl DynamicClusters {
    pub fn build(config: &Configuration) -> Self {
        let labels = ClusterLabeling::build(config);
        let n = config.len();
        let mut d = DynamicClusters {
            label: vec![0; n],
            pos: vec![0; n],
            members: labels
                .members()
                .into_iter()
                .map(|m| m.into_iter().map(|i| i as u32).collect())
                .collect(),
            free: Vec::new(),
            live: (0..labels.count() as u32).collect(),
            live_pos: (0..labels.count() as u32).collect(),
            scratch: Scratch::default(),
        };
        for (s, m) in d.members.iter().enumerate() {
            for (p, &i) in m.iter().enumerate() {
                d.label[i as usize] = s as u32;
                d.pos[i as usize] = p as u32;
            }
        }
        d
    }

    /// Number of components.
    pub fn count(&self) -> usize {
        self.live.len()
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    /// Slot ids of the current components, in no particular order.
    pub fn live_slots(&self) -> &[u32] {
        &self.live
    }

    pub fn slot_of(&self, ball: usize) -> u32 {
        self.label[ball]
    }

    pub fn members(&self, slot: u32) -> &[u32] {
        &self.members[slot as usize]
    }

    pub fn largest_size(&self) -> usize {
        self.live
            .iter()
            .map(|&s| self.members[s as usize].len())
            .max()
            .unwrap_or(0)
    }

    /// Distinct slots of balls in `config` that intersect `ball`, sorted.
    /// Balls with id `>= self.len()` are ignored.
    pub fn touching(&mut self, config: &Configuration, ball: &crate::geometry::MarkedBall) -> Vec<u32> {
        let mut buf = std::mem::take(&mut self.scratch.buf);
        config.intersecting_into(ball, &mut buf);
        let mut slots: Vec<u32> = buf
            .iter()
            .filter(|&&j| j < self.label.len())
            .map(|&j| self.label[j])
            .collect();
        self.scratch.buf = buf;
        slots.sort_unstable();
        slots.dedup();
        slots
    }

    /// Increment of the component count if `ball` were added.
    pub fn birth_increment(&mut self, config: &Configuration, ball: &crate::geometry::MarkedBall) -> i64 {
        1 - self.touching(config, ball).len() as i64
    }

    fn alloc_slot(&mut self) -> u32 {
        let s = match self.free.pop() {
            Some(s) => s,
            None => {
                self.members.push(Vec::new());
                self.live_pos.push(NONE);
                (self.members.len() - 1) as u32
            }
        };
        self.live_pos[s as usize] = self.live.len() as u32;
        self.live.push(s);
        s
    }

    fn release_slot(&mut self, s: u32) {
        debug_assert!(self.members[s as usize].is_empty());
        let p = self.live_pos[s as usize] as usize;
        let last = *self.live.last().expect("live slot");
        self.live.swap_remove(p);
        if last != s {
            self.live_pos[last as usize] = p as u32;
        }
        self.live_pos[s as usize] = NONE;
        self.free.push(s);
    }

    fn append(&mut self, slot: u32, ball: u32) {
        let m = &mut self.members[slot as usize];
        self.label[ball as usize] = slot;
        self.pos[ball as usize] = m.len() as u32;
        m.push(ball);
    }

    fn detach(&mut self, ball: u32) {
        let slot = self.label[ball as usize] as usize;
        let p = self.pos[ball as usize] as usize;
        let m = &mut self.members[slot];
        let moved = *m.last().expect("member");
        m.swap_remove(p);
        if moved != ball {
            self.pos[moved as usize] = p as u32;
        }
    }

    /// Registers the ball just pushed to `config` (its id is `config.len() − 1`).
    /// Returns the increment of the component count.
    pub fn insert(&mut self, config: &Configuration) -> i64 {
        let id = config.len() - 1;
        debug_assert_eq!(id, self.label.len());
        let touched = self.touching(config, config.ball(id));
        self.label.push(NONE);
        self.pos.push(NONE);
        if touched.is_empty() {
            let s = self.alloc_slot();
            self.append(s, id as u32);
            return 1;
        }
        let target = *touched
            .iter()
            .max_by_key(|&&s| (self.members[s as usize].len(), std::cmp::Reverse(s)))
            .expect("nonempty");
        for &s in touched.iter().filter(|&&s| s != target) {
            let moved = std::mem::take(&mut self.members[s as usize]);
            for b in moved {
                self.append(target, b);
            }
            self.release_slot(s);
        }
        self.append(target, id as u32);
        1 - touched.len() as i64
    }

    /// Works out how the component of `ball` splits once `ball` is gone.
    pub fn plan_removal(&mut self, config: &Configuration, ball: usize) -> RemovalPlan {
        let slot = self.label[ball];
        let size = self.members[slot as usize].len();
        if size == 1 {
            return RemovalPlan {
                ball,
                slot,
                split_off: Vec::new(),
                pieces: 0,
            };
        }
        let mut buf = std::mem::take(&mut self.scratch.buf);
        let epoch = self.scratch.next_epoch(config.len());
        self.scratch.stamp[ball] = epoch;

        config.intersecting_into(config.ball(ball), &mut buf);
        let nbrs: Vec<u32> = buf
            .iter()
            .filter(|&&j| j != ball && self.label[j] == slot)
            .map(|&j| j as u32)
            .collect();

        // one search per neighbour; `parent` merges searches that met
        let k = nbrs.len();
        let mut parent: Vec<usize> = (0..k).collect();
        let mut queues: Vec<Vec<u32>> = nbrs.iter().map(|&b| vec![b]).collect();
        let mut found: Vec<Vec<u32>> = queues.clone();
        for (g, &b) in nbrs.iter().enumerate() {
            self.scratch.stamp[b as usize] = epoch;
            self.scratch.owner[b as usize] = g as u32;
        }
        fn root(parent: &mut [usize], mut g: usize) -> usize {
            while parent[g] != g {
                parent[g] = parent[parent[g]];
                g = parent[g];
            }
            g
        }
        let mut open: Vec<usize> = (0..k).collect();
        while open.len() > 1 {
            for &g0 in &open {
                if root(&mut parent, g0) != g0 {
                    continue;
                }
                let Some(cur) = queues[g0].pop() else { continue };
                config.intersecting_into(config.ball(cur as usize), &mut buf);
                for &j in &buf {
                    if j == ball || self.label[j] != slot {
                        continue;
                    }
                    let g = root(&mut parent, g0);
                    if self.scratch.stamp[j] != epoch {
                        self.scratch.stamp[j] = epoch;
                        self.scratch.owner[j] = g as u32;
                        queues[g].push(j as u32);
                        found[g].push(j as u32);
                        continue;
                    }
                    let h = root(&mut parent, self.scratch.owner[j] as usize);
                    if h != g {
                        let (big, small) = if found[g].len() >= found[h].len() { (g, h) } else { (h, g) };
                        parent[small] = big;
                        let q = std::mem::take(&mut queues[small]);
                        queues[big].extend(q);
                        let f = std::mem::take(&mut found[small]);
                        found[big].extend(f);
                    }
                }
            }
            let mut next: Vec<usize> = open
                .iter()
                .map(|&g| root(&mut parent, g))
                .filter(|&g| !queues[g].is_empty())
                .collect();
            next.sort_unstable();
            next.dedup();
            open = next;
        }
        self.scratch.buf = buf;

        let mut roots: Vec<usize> = (0..k).filter(|&g| parent[g] == g).collect();
        // the open search, or else the largest piece, keeps the slot
        let keep = match open.first() {
            Some(&g) => g,
            None => *roots.iter().max_by_key(|&&g| (found[g].len(), std::cmp::Reverse(g))).expect("a neighbour"),
        };
        roots.retain(|&g| g != keep);
        let pieces = roots.len() + 1;
        let split_off = roots.into_iter().map(|g| std::mem::take(&mut found[g])).collect();
        RemovalPlan {
            ball,
            slot,
            split_off,
            pieces,
        }
    }

    /// Applies `plan`; the caller then swap-removes the ball from the
    /// configuration (the last ball takes the freed id).
    pub fn apply_removal(&mut self, plan: RemovalPlan) {
        let ball = plan.ball as u32;
        self.detach(ball);
        for piece in plan.split_off {
            let s = self.alloc_slot();
            for b in piece {
                self.detach(b);
                self.append(s, b);
            }
        }
        if self.members[plan.slot as usize].is_empty() {
            self.release_slot(plan.slot);
        }
        let last = (self.label.len() - 1) as u32;
        if last != ball {
            let (s, p) = (self.label[last as usize], self.pos[last as usize]);
            self.members[s as usize][p as usize] = ball;
            self.label[ball as usize] = s;
            self.pos[ball as usize] = p;
        }
        self.label.pop();
        self.pos.pop();
    }

    /// Plans and applies the removal of `ball`; returns the increment of
    /// re-adding it.
    pub fn remove(&mut self, config: &Configuration, ball: usize) -> i64 {
        let plan = self.plan_removal(config, ball);
        let inc = plan.increment();
        self.apply_removal(plan);
        inc
    }

    /// Whether the labels describe exactly the components of `config`.
    pub fn consistent_with(&self, config: &Configuration) -> bool {
        if self.label.len() != config.len() {
            return false;
        }
        let fresh = ClusterLabeling::build(config);
        if fresh.count() != self.count() {
            return false;
        }
        // Same partition iff the map slot -> fresh component is a bijection.
        let mut map = vec![usize::MAX; self.members.len()];
        for i in 0..config.len() {
            let s = self.label[i] as usize;
            let c = fresh.component_of(i);
            if self.members[s].get(self.pos[i] as usize) != Some(&(i as u32)) {
                return false;
            }
            if map[s] == usize::MAX {
                map[s] = c;
            } else if map[s] != c {
                return false;
            }
        }
        let mut seen: Vec<usize> = self.live.iter().map(|&s| map[s as usize]).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len() == self.count()
    }
}
