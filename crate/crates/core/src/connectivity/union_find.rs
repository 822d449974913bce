use serde::{Deserialize, Serialize};

/// Disjoint sets with path compression and union by rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
    count: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            count: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of disjoint sets (roots).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        let mut cur = x;
        while self.parent[cur] as usize != root {
            let next = self.parent[cur] as usize;
            self.parent[cur] = root as u32;
            cur = next;
        }
        root
    }

    /// Find without path compression.
    pub fn root(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns true when they were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
        self.count -= 1;
        true
    }

    /// Appends a fresh singleton and returns its id.
    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id as u32);
        self.rank.push(0);
        self.count += 1;
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_of_distinct_roots_decrements_count(
            n in 1usize..60,
            pairs in proptest::collection::vec((0usize..60, 0usize..60), 0..120),
        ) {
            let mut uf = UnionFind::new(n);
            for (a, b) in pairs {
                let (a, b) = (a % n, b % n);
                let before = uf.count();
                let distinct = uf.find(a) != uf.find(b);
                let merged = uf.union(a, b);
                prop_assert_eq!(merged, distinct);
                prop_assert_eq!(uf.count(), if distinct { before - 1 } else { before });
            }
            let roots = (0..n).filter(|&i| uf.find(i) == i).count();
            prop_assert_eq!(roots, uf.count());
        }
    }
}
