use crate::error::{Error, Result};
use crate::vec3::Vec3;

use super::morton::{morton_key_unchecked, octant_at, radix_sort_pairs, BoundingCube, MAX_DEPTH};

pub const DEFAULT_LEAF_CAP: usize = 8;

/// Topology of one cell. Particles `start..start + count` in sorted order
/// belong to it; children occupy `first_child..first_child + child_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub start: u32,
    pub count: u32,
    pub first_child: u32,
    pub child_count: u8,
    pub depth: u8,
}

impl Cell {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }

    #[inline]
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start as usize..(self.start + self.count) as usize
    }

    #[inline]
    pub fn children(&self) -> std::ops::Range<usize> {
        self.first_child as usize..self.first_child as usize + self.child_count as usize
    }
}

/// Monopole attributes of a cell: total mass, centre of mass and extent `b_J`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Node {
    pub mass: f64,
    pub com: Vec3,
    /// Upper bound on the distance from `com` to any member particle.
    pub extent: f64,
}

/// Morton-sorted octree. Cells are stored breadth-first, so every child
/// index exceeds its parent's and index 0 is the root.
#[derive(Clone, Debug)]
pub struct Octree {
    pub bbox: BoundingCube,
    /// Sorted Morton keys.
    pub keys: Vec<u64>,
    /// `perm[k]` is the original index of the k-th particle in key order.
    pub perm: Vec<u32>,
    pub cells: Vec<Cell>,
    pub nodes: Vec<Node>,
    /// Positions and masses gathered into key order by [`Octree::calc_node`].
    pub sorted_pos: Vec<Vec3>,
    pub sorted_mass: Vec<f64>,
    pub leaf_cap: usize,
}

/// Sorts particles along the Morton curve and splits cells breadth-first
/// until they hold at most `leaf_cap` particles or reach depth 21. Cells of
/// coincident particles at the depth limit stay as oversized leaves.
pub fn build_tree(pos: &[Vec3], leaf_cap: usize) -> Result<Octree> {
    let n = pos.len();
    if n == 0 {
        return Err(Error::invalid("cannot build a tree over zero particles"));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("too many particles for 32-bit cell indices"));
    }
    if leaf_cap == 0 {
        return Err(Error::invalid("leaf capacity must be at least 1"));
    }
    if let Some(i) = pos.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("particle {i} has a non-finite position")));
    }

    let bbox = BoundingCube::enclosing(pos);
    let mut keys: Vec<u64> = pos.iter().map(|&p| morton_key_unchecked(p, &bbox)).collect();
    let mut perm: Vec<u32> = (0..n as u32).collect();
    radix_sort_pairs(&mut keys, &mut perm);

    let mut cells = vec![Cell {
        start: 0,
        count: n as u32,
        first_child: 0,
        child_count: 0,
        depth: 0,
    }];
    let mut head = 0;
    while head < cells.len() {
        let cell = cells[head];
        if cell.count as usize > leaf_cap && cell.depth < MAX_DEPTH {
            let range = cell.range();
            let slice = &keys[range.clone()];
            let first_child = cells.len() as u32;
            let mut lo = 0;
            while lo < slice.len() {
                let oct = octant_at(slice[lo], cell.depth);
                let hi = lo + slice[lo..].partition_point(|&k| octant_at(k, cell.depth) == oct);
                cells.push(Cell {
                    start: (range.start + lo) as u32,
                    count: (hi - lo) as u32,
                    first_child: 0,
                    child_count: 0,
                    depth: cell.depth + 1,
                });
                lo = hi;
            }
            let child_count = (cells.len() as u32 - first_child) as u8;
            let c = &mut cells[head];
            c.first_child = first_child;
            c.child_count = child_count;
        }
        head += 1;
    }

    Ok(Octree {
        bbox,
        keys,
        perm,
        nodes: vec![Node::default(); cells.len()],
        cells,
        sorted_pos: Vec::new(),
        sorted_mass: Vec::new(),
        leaf_cap,
    })
}

impl Octree {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.is_leaf())
    }

    /// Recomputes every node bottom-up from the current particle state.
    ///
    /// Leaf extents are exact; internal extents use the bound
    /// `max_c(|com_c - com| + b_c)`. Positions may have drifted since the
    /// build: the topology is reused as-is.
    pub fn calc_node(&mut self, mass: &[f64], pos: &[Vec3]) -> Result<()> {
        if mass.len() != self.len() || pos.len() != self.len() {
            return Err(Error::invalid(format!(
                "tree holds {} particles but the system has {}",
                self.len(),
                mass.len()
            )));
        }
        self.sorted_pos.clear();
        self.sorted_pos.extend(self.perm.iter().map(|&i| pos[i as usize]));
        self.sorted_mass.clear();
        self.sorted_mass.extend(self.perm.iter().map(|&i| mass[i as usize]));

        for ci in (0..self.cells.len()).rev() {
            let cell = self.cells[ci];
            let node = if cell.is_leaf() {
                let r = cell.range();
                let ps = &self.sorted_pos[r.clone()];
                let ms = &self.sorted_mass[r];
                let m: f64 = ms.iter().sum();
                let com = ps.iter().zip(ms).map(|(&p, &mi)| p * mi).sum::<Vec3>() / m;
                let extent = ps.iter().map(|&p| (p - com).norm()).fold(0.0, f64::max);
                Node { mass: m, com, extent }
            } else {
                let kids = &self.nodes[cell.children()];
                let m: f64 = kids.iter().map(|k| k.mass).sum();
                let com = kids.iter().map(|k| k.com * k.mass).sum::<Vec3>() / m;
                let extent = kids
                    .iter()
                    .map(|k| (k.com - com).norm() + k.extent)
                    .fold(0.0, f64::max);
                Node { mass: m, com, extent }
            };
            self.nodes[ci] = node;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> (Vec<f64>, Vec<Vec3>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = (0..n)
            .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let mass = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        (mass, pos)
    }

    fn built(mass: &[f64], pos: &[Vec3], leaf_cap: usize) -> Octree {
        let mut t = build_tree(pos, leaf_cap).unwrap();
        t.calc_node(mass, pos).unwrap();
        t
    }

    #[test]
    fn single_particle_is_root_leaf() {
        let p = [Vec3::new(1.0, 2.0, 3.0)];
        let t = built(&[2.0], &p, 8);
        assert_eq!(t.cells.len(), 1);
        assert!(t.cells[0].is_leaf());
        assert_eq!(t.root().com, p[0]);
        assert_eq!(t.root().extent, 0.0);
        assert_eq!(t.root().mass, 2.0);
    }

    #[test]
    fn octant_centres_split_once() {
        let mut pos = Vec::new();
        for ix in 0..2 {
            for iy in 0..2 {
                for iz in 0..2 {
                    pos.push(Vec3::new(ix as f64 - 0.5, iy as f64 - 0.5, iz as f64 - 0.5));
                }
            }
        }
        let t = built(&[1.0; 8], &pos, 1);
        assert_eq!(t.cells[0].child_count, 8);
        assert_eq!(t.cells.len(), 9);
        for c in &t.cells[1..] {
            assert!(c.is_leaf());
            assert_eq!(c.count, 1);
        }
        // brute-force spatial partition: octant from the signs of each coordinate
        for c in &t.cells[1..] {
            let i = t.perm[c.start as usize] as usize;
            let p = pos[i];
            let oct = ((p.x > 0.0) as u64) << 2 | ((p.y > 0.0) as u64) << 1 | (p.z > 0.0) as u64;
            assert_eq!(t.keys[c.start as usize] >> 60, oct);
        }
    }

    #[test]
    fn two_unit_masses() {
        let pos = [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let t = built(&[1.0, 1.0], &pos, 8);
        assert_eq!(t.root().mass, 2.0);
        assert!(t.root().com.norm() < 1e-15);
        assert!((t.root().extent - 1.0).abs() < 1e-15);
        let t = built(&[1.0, 1.0], &pos, 1);
        assert!(t.root().extent >= 1.0);
    }

    #[test]
    fn thousand_points_complete_and_prefix_consistent() {
        let (mass, pos) = random_cloud(1000, 3);
        let t = built(&mass, &pos, 8);
        let leaf_total: u32 = t.leaves().map(|c| c.count).sum();
        assert_eq!(leaf_total, 1000);
        let mut seen = vec![false; 1000];
        for &i in &t.perm {
            assert!(!seen[i as usize]);
            seen[i as usize] = true;
        }
        assert!(t.keys.windows(2).all(|w| w[0] <= w[1]));
        for c in &t.cells {
            let keys = &t.keys[c.range()];
            if c.depth == 0 {
                continue;
            }
            let shift = 63 - 3 * c.depth as u32;
            assert!(keys.iter().all(|&k| k >> shift == keys[0] >> shift));
            assert!(c.count as usize <= 8 || !c.is_leaf() || c.depth == MAX_DEPTH);
        }
    }

    #[test]
    fn root_aggregates_match_direct() {
        let (mass, pos) = random_cloud(512, 9);
        let t = built(&mass, &pos, 8);
        let m: f64 = mass.iter().sum();
        let com = pos.iter().zip(&mass).map(|(&p, &mi)| p * mi).sum::<Vec3>() / m;
        assert!((t.root().mass - m).abs() <= 1e-12 * m);
        assert!((t.root().com - com).norm() <= 1e-12 * com.norm());
    }

    #[test]
    fn extents_bound_every_member() {
        let (mass, pos) = random_cloud(700, 21);
        let t = built(&mass, &pos, 4);
        for (cell, node) in t.cells.iter().zip(&t.nodes) {
            for p in &t.sorted_pos[cell.range()] {
                assert!((*p - node.com).norm() <= node.extent * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn coincident_particles_become_oversized_leaf() {
        let pos = vec![Vec3::new(0.3, 0.3, 0.3); 20];
        let mut pos2 = pos.clone();
        pos2.push(Vec3::new(1.0, 1.0, 1.0));
        let t = built(&vec![1.0; 21], &pos2, 2);
        let big = t.leaves().find(|c| c.count == 20).expect("oversized leaf");
        assert_eq!(big.depth, MAX_DEPTH);
        assert_eq!(t.leaves().map(|c| c.count).sum::<u32>(), 21);
    }

    #[test]
    fn stale_topology_refresh_keeps_bounds() {
        let (mass, pos) = random_cloud(300, 4);
        let mut t = built(&mass, &pos, 8);
        let moved: Vec<Vec3> = pos.iter().map(|&p| p + Vec3::new(p.y * 0.3, -p.x * 0.2, 0.1)).collect();
        t.calc_node(&mass, &moved).unwrap();
        for (cell, node) in t.cells.iter().zip(&t.nodes) {
            for p in &t.sorted_pos[cell.range()] {
                assert!((*p - node.com).norm() <= node.extent * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(build_tree(&[], 8).is_err());
        let mut t = build_tree(&[Vec3::ZERO], 8).unwrap();
        assert!(t.calc_node(&[1.0, 1.0], &[Vec3::ZERO, Vec3::ZERO]).is_err());
    }
}
