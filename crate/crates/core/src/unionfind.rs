//! Union-find with winding offsets.
//!
//! Each node stores its displacement to its parent, counted in periods of
//! the torus. Closing a cycle whose total displacement is nonzero records a
//! winding vector on the root; the rank of the recorded vectors (0, 1 or 2)
//! says whether the cluster wraps not at all, along one direction class, or
//! around both cycles of the torus.

use crate::lattice::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Winding {
    /// Number of independent winding vectors, at most 2.
    pub rank: u8,
    /// A nonzero winding of the cluster when `rank ≥ 1`.
    pub generator: Cell,
}

impl Winding {
    fn absorb(&mut self, w: Cell) {
        if w == [0, 0] || self.rank == 2 {
            return;
        }
        if self.rank == 0 {
            self.rank = 1;
            self.generator = w;
        } else if i64::from(self.generator[0]) * i64::from(w[1]) != i64::from(self.generator[1]) * i64::from(w[0]) {
            self.rank = 2;
        }
    }

    fn merge(&mut self, other: Winding) {
        match other.rank {
            0 => {}
            1 => self.absorb(other.generator),
            _ => self.rank = 2,
        }
    }

    /// Whether some cycle of the cluster has nonzero winding along axis `d`.
    pub fn wraps_axis(&self, d: usize) -> bool {
        match self.rank {
            0 => false,
            1 => self.generator[d] != 0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindingUnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Displacement from a node to its parent.
    offset: Vec<Cell>,
    winding: Vec<Winding>,
    components: usize,
}

impl WindingUnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            offset: vec![[0, 0]; n],
            winding: vec![Winding::default(); n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `x` and the displacement from `x` to it, compressing the path.
    pub fn find(&mut self, x: usize) -> (usize, Cell) {
        let mut root = x;
        let mut total = [0, 0];
        while self.parent[root] as usize != root {
            let o = self.offset[root];
            total = [total[0] + o[0], total[1] + o[1]];
            root = self.parent[root] as usize;
        }
        // Second pass: point every node on the path straight at the root.
        let mut node = x;
        let mut remaining = total;
        while self.parent[node] as usize != root && node != root {
            let next = self.parent[node] as usize;
            let o = self.offset[node];
            self.parent[node] = root as u32;
            self.offset[node] = remaining;
            remaining = [remaining[0] - o[0], remaining[1] - o[1]];
            node = next;
        }
        (root, total)
    }

    pub fn root(&mut self, x: usize) -> usize {
        self.find(x).0
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.root(a) == self.root(b)
    }

    /// Adds an edge from `a` to `b` whose displacement is `wrap` periods.
    /// Returns the root of the merged cluster.
    pub fn union(&mut self, a: usize, b: usize, wrap: Cell) -> usize {
        let (ra, da) = self.find(a);
        let (rb, db) = self.find(b);
        // Displacement from rb to ra through the new edge: rb → b → a → ra.
        let rb_to_ra = [da[0] - wrap[0] - db[0], da[1] - wrap[1] - db[1]];
        if ra == rb {
            self.winding[ra].absorb(rb_to_ra);
            return ra;
        }
        self.components -= 1;
        let (big, small, small_to_big) =
            if self.size[ra] >= self.size[rb] { (ra, rb, rb_to_ra) } else { (rb, ra, [-rb_to_ra[0], -rb_to_ra[1]]) };
        self.parent[small] = big as u32;
        self.offset[small] = small_to_big;
        self.size[big] += self.size[small];
        let w = self.winding[small];
        self.winding[big].merge(w);
        big
    }

    pub fn size_of_root(&self, root: usize) -> usize {
        self.size[root] as usize
    }

    pub fn size(&mut self, x: usize) -> usize {
        let r = self.root(x);
        self.size[r] as usize
    }

    pub fn winding_of_root(&self, root: usize) -> Winding {
        self.winding[root]
    }

    pub fn winding(&mut self, x: usize) -> Winding {
        let r = self.root(x);
        self.winding[r]
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_root(&self, x: usize) -> bool {
        self.parent[x] as usize == x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_of_three_winds_once() {
        let mut uf = WindingUnionFind::new(3);
        uf.union(0, 1, [0, 0]);
        uf.union(1, 2, [0, 0]);
        assert_eq!(uf.winding(0).rank, 0);
        uf.union(2, 0, [1, 0]);
        let w = uf.winding(1);
        assert_eq!(w.rank, 1);
        assert_eq!(w.generator[1], 0);
        assert!(w.wraps_axis(0) && !w.wraps_axis(1));
    }

    #[test]
    fn contractible_cycle_does_not_wrap() {
        let mut uf = WindingUnionFind::new(4);
        uf.union(0, 1, [1, 0]);
        uf.union(1, 2, [0, 1]);
        uf.union(2, 3, [-1, 0]);
        uf.union(3, 0, [0, -1]);
        assert_eq!(uf.winding(2).rank, 0);
        assert_eq!(uf.components(), 1);
    }

    #[test]
    fn parallel_windings_stay_rank_one() {
        let mut uf = WindingUnionFind::new(2);
        uf.union(0, 1, [1, 1]);
        uf.union(1, 0, [0, 0]);
        uf.union(0, 1, [-1, -1]);
        let w = uf.winding(0);
        assert_eq!(w.rank, 1);
        uf.union(0, 0, [0, 1]);
        assert_eq!(uf.winding(1).rank, 2);
    }

    #[test]
    fn offsets_survive_compression() {
        // A long chain, then a closing edge whose winding depends on every
        // offset along the compressed path.
        let n = 50;
        let mut uf = WindingUnionFind::new(n);
        for i in 0..n - 1 {
            uf.union(i, i + 1, [i32::from(i % 7 == 0), 0]);
        }
        for i in 0..n {
            uf.find(i);
        }
        let crossings = (0..n - 1).filter(|i| i % 7 == 0).count() as i32;
        let (_, d0) = uf.find(0);
        let (_, dn) = uf.find(n - 1);
        assert_eq!(d0[0] - dn[0], crossings);
        uf.union(n - 1, 0, [-crossings, 0]);
        assert_eq!(uf.winding(3).rank, 0);
        uf.union(n - 1, 0, [0, 0]);
        assert_eq!(uf.winding(3).rank, 1);
    }
}
