//! Breadth-first group traversal with a shared, fixed-capacity interaction list.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perflab::{count_walk_ops, OpCounters, TraversalTrace};
use crate::system::{GravParams, ParticleSystem};
use crate::vec3::Vec3;

use super::direct::direct_sum;
use super::mac::{Opening, TraversalGroup};
use super::octree::{build_tree, Octree, DEFAULT_LEAF_CAP};

pub const DEFAULT_GROUP_SIZE: usize = 32;
pub const DEFAULT_LIST_CAPACITY: usize = 1024;
pub const DEFAULT_FRONTIER_FACTOR: usize = 8;
pub const DEFAULT_BOOTSTRAP_DIRECT_MAX: usize = 65536;
pub const BOOTSTRAP_THETA: f64 = 0.5;

const NO_SOURCE: u32 = u32::MAX;

/// Pseudo-particles queued for the next force burst, stored column-wise.
#[derive(Clone, Debug)]
pub struct InteractionList {
    capacity: usize,
    pos: Vec<Vec3>,
    mass: Vec<f64>,
    /// Sorted-order index for real particles, `NO_SOURCE` for tree nodes.
    source: Vec<u32>,
}

impl InteractionList {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("interaction list capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            pos: Vec::with_capacity(capacity),
            mass: Vec::with_capacity(capacity),
            source: Vec::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.pos.len() >= self.capacity
    }

    fn push(&mut self, pos: Vec3, mass: f64, source: u32) {
        debug_assert!(!self.is_full());
        self.pos.push(pos);
        self.mass.push(mass);
        self.source.push(source);
    }

    fn clear(&mut self) {
        self.pos.clear();
        self.mass.clear();
        self.source.clear();
    }
}

/// Accelerations and potentials accumulated for the members of one group.
#[derive(Clone, Debug, Default)]
pub struct GroupForces {
    pub acc: Vec<Vec3>,
    pub pot: Vec<f64>,
    pub trace: TraversalTrace,
}

struct Walker<'a> {
    tree: &'a Octree,
    group: &'a TraversalGroup,
    params: &'a GravParams,
    out: GroupForces,
}

impl Walker<'_> {
    fn push(&mut self, list: &mut InteractionList, pos: Vec3, mass: f64, source: u32) -> Result<()> {
        list.push(pos, mass, source);
        self.out.trace.list_ops += 1;
        if list.is_full() {
            self.flush(list)?;
        }
        Ok(())
    }

    /// Adds every listed contribution to every member, then empties the list.
    fn flush(&mut self, list: &mut InteractionList) -> Result<()> {
        if list.is_empty() {
            return Ok(());
        }
        let eps2 = self.params.eps * self.params.eps;
        let g = self.params.g;
        for (slot, &k) in self.group.members.iter().enumerate() {
            let ri = self.tree.sorted_pos[k];
            let mut a = Vec3::ZERO;
            let mut phi = 0.0;
            for e in 0..list.len() {
                if list.source[e] == k as u32 {
                    continue;
                }
                let d = list.pos[e] - ri;
                let r2 = d.norm2() + eps2;
                if r2 == 0.0 {
                    let j = list.source[e];
                    return Err(Error::Singularity {
                        i: self.tree.perm[k] as usize,
                        j: if j == NO_SOURCE { usize::MAX } else { self.tree.perm[j as usize] as usize },
                    });
                }
                let inv = 1.0 / r2.sqrt();
                let m_inv = list.mass[e] * inv;
                a += d * (m_inv * inv * inv);
                phi -= m_inv;
            }
            self.out.acc[slot] += a * g;
            self.out.pot[slot] += phi * g;
        }
        self.out.trace.interactions += (self.group.len() * list.len()) as u64;
        self.out.trace.list_ops += 1;
        list.clear();
        Ok(())
    }
}

/// Walks `tree` breadth-first on behalf of `group`.
///
/// Accepted nodes enter `list` as monopoles, rejected leaves contribute their
/// particles, rejected internal nodes queue their children. Whenever the list
/// fills it is flushed into the members' accelerations; a final flush drains
/// it. `frontier_cap` bounds the breadth-first queue.
pub fn walk_tree_group(
    tree: &Octree,
    group: &TraversalGroup,
    list: &mut InteractionList,
    params: &GravParams,
    opening: Opening,
    frontier_cap: usize,
) -> Result<GroupForces> {
    if !list.is_empty() {
        return Err(Error::invalid("interaction list must start empty"));
    }
    let mut w = Walker {
        tree,
        group,
        params,
        out: GroupForces {
            acc: vec![Vec3::ZERO; group.len()],
            pot: vec![0.0; group.len()],
            trace: TraversalTrace::default(),
        },
    };
    let mut frontier: Vec<u32> = vec![0];
    let mut next: Vec<u32> = Vec::new();
    while !frontier.is_empty() {
        for &ci in &frontier {
            let cell = &tree.cells[ci as usize];
            let node = &tree.nodes[ci as usize];
            w.out.trace.mac_evaluations += 1;
            if opening.accepts(node, group, params) {
                w.push(list, node.com, node.mass, NO_SOURCE)?;
            } else if cell.is_leaf() {
                for k in cell.range() {
                    w.push(list, tree.sorted_pos[k], tree.sorted_mass[k], k as u32)?;
                }
            } else {
                next.extend(cell.children().map(|c| c as u32));
                if next.len() > frontier_cap {
                    return Err(Error::FrontierExhausted { cap: frontier_cap });
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    w.flush(list)?;
    Ok(w.out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeConfig {
    pub leaf_cap: usize,
    pub group_size: usize,
    pub list_capacity: usize,
    /// Frontier capacity as a multiple of N.
    pub frontier_factor: usize,
    /// Largest N for which the first accelerations come from direct summation.
    pub bootstrap_direct_max: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            leaf_cap: DEFAULT_LEAF_CAP,
            group_size: DEFAULT_GROUP_SIZE,
            list_capacity: DEFAULT_LIST_CAPACITY,
            frontier_factor: DEFAULT_FRONTIER_FACTOR,
            bootstrap_direct_max: DEFAULT_BOOTSTRAP_DIRECT_MAX,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leaf_cap == 0 || self.group_size == 0 || self.list_capacity == 0 || self.frontier_factor == 0 {
            return Err(Error::invalid("tree configuration values must all be >= 1"));
        }
        Ok(())
    }
}

/// Result of one force evaluation over a set of target particles.
#[derive(Clone, Debug, Default)]
pub struct ForceResult {
    /// Indexed by original particle index; untouched for non-targets.
    pub acc: Vec<Vec3>,
    pub pot: Vec<f64>,
    pub trace: TraversalTrace,
    pub counters: OpCounters,
    pub groups: usize,
    pub targets: usize,
}

impl ForceResult {
    pub fn interactions_per_particle(&self) -> f64 {
        if self.targets == 0 {
            0.0
        } else {
            self.trace.interactions as f64 / self.targets as f64
        }
    }
}

/// Tree force engine: owns the current tree and evaluates group walks.
#[derive(Clone, Debug)]
pub struct TreeGravity {
    pub config: TreeConfig,
    tree: Option<Octree>,
}

impl TreeGravity {
    pub fn new(config: TreeConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, tree: None })
    }

    pub fn tree(&self) -> Option<&Octree> {
        self.tree.as_ref()
    }

    /// Builds a fresh tree (makeTree) without computing node attributes.
    pub fn make_tree(&mut self, pos: &[Vec3]) -> Result<()> {
        self.tree = Some(build_tree(pos, self.config.leaf_cap)?);
        Ok(())
    }

    /// Refreshes node attributes on the current topology (calcNode).
    pub fn calc_node(&mut self, mass: &[f64], pos: &[Vec3]) -> Result<()> {
        match self.tree.as_mut() {
            Some(t) => t.calc_node(mass, pos),
            None => Err(Error::invalid("calc_node called before make_tree")),
        }
    }

    pub fn rebuild(&mut self, mass: &[f64], pos: &[Vec3]) -> Result<()> {
        self.make_tree(pos)?;
        self.calc_node(mass, pos)
    }

    /// Groups consecutive targets in key order, `group_size` at a time.
    pub fn groups(&self, active: Option<&[bool]>, a_old: &[f64]) -> Result<Vec<TraversalGroup>> {
        let tree = self.tree.as_ref().ok_or_else(|| Error::invalid("no tree built"))?;
        let sorted_a: Vec<f64> = tree.perm.iter().map(|&i| a_old[i as usize]).collect();
        let targets: Vec<usize> = (0..tree.len())
            .filter(|&k| active.is_none_or(|m| m[tree.perm[k] as usize]))
            .collect();
        Ok(targets
            .chunks(self.config.group_size)
            .map(|c| TraversalGroup::new(c.to_vec(), &tree.sorted_pos, &sorted_a))
            .collect())
    }

    /// Evaluates forces on the `active` particles (all when `None`) against the
    /// current tree. `a_old` is indexed by original particle index.
    pub fn evaluate(
        &self,
        active: Option<&[bool]>,
        a_old: &[f64],
        params: &GravParams,
        opening: Opening,
    ) -> Result<ForceResult> {
        let tree = self.tree.as_ref().ok_or_else(|| Error::invalid("no tree built"))?;
        let n = tree.len();
        if a_old.len() != n || active.is_some_and(|m| m.len() != n) {
            return Err(Error::invalid("per-particle arrays do not match the tree size"));
        }
        if tree.sorted_pos.len() != n {
            return Err(Error::invalid("tree nodes have not been computed"));
        }
        let groups = self.groups(active, a_old)?;
        let cap = self.config.frontier_factor.saturating_mul(n).max(8);
        let list_cap = self.config.list_capacity;
        let per_group = groups
            .par_iter()
            .map_init(
                || InteractionList::new(list_cap),
                |list, g| {
                    let list = list.as_mut().map_err(|e| Error::invalid(e.to_string()))?;
                    walk_tree_group(tree, g, list, params, opening, cap)
                },
            )
            .collect::<Result<Vec<_>>>()?;

        let mut out = ForceResult {
            acc: vec![Vec3::ZERO; n],
            pot: vec![0.0; n],
            groups: groups.len(),
            ..Default::default()
        };
        for (g, f) in groups.iter().zip(per_group) {
            for (slot, &k) in g.members.iter().enumerate() {
                let i = tree.perm[k] as usize;
                out.acc[i] = f.acc[slot];
                out.pot[i] = f.pot[slot];
            }
            out.targets += g.len();
            out.trace += f.trace;
        }
        out.counters = count_walk_ops(&out.trace);
        Ok(out)
    }

    /// First accelerations for a system without |a_old|: direct summation up
    /// to `bootstrap_direct_max` particles, otherwise one geometric walk.
    pub fn bootstrap(&mut self, sys: &ParticleSystem, params: &GravParams) -> Result<Vec<Vec3>> {
        if sys.len() <= self.config.bootstrap_direct_max {
            return Ok(direct_sum(sys, params)?.0);
        }
        self.rebuild(&sys.mass, &sys.pos)?;
        let r = self.evaluate(None, &sys.acc_old_mag, params, Opening::Geometric { theta: BOOTSTRAP_THETA })?;
        Ok(r.acc)
    }
}

/// Builds a tree and evaluates every particle with the acceleration MAC,
/// using `sys.acc_old_mag` as the reference magnitudes.
pub fn tree_accelerations(sys: &ParticleSystem, params: &GravParams, config: TreeConfig) -> Result<ForceResult> {
    let mut engine = TreeGravity::new(config)?;
    engine.rebuild(&sys.mass, &sys.pos)?;
    engine.evaluate(None, &sys.acc_old_mag, params, Opening::Acceleration)
}
