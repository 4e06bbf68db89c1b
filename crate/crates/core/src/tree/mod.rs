//! Octree construction, node properties, group traversal and the
//! direct-summation reference.

mod accuracy;
mod direct;
mod mac;
mod morton;
mod octree;
mod walk;

pub use accuracy::{force_error, median_sorted, percentile_sorted, ErrorStats};
pub use direct::{direct_potential, direct_sum, pairwise_accel};
pub use mac::{mac_accept, Opening, TraversalGroup};
pub use morton::{morton_key, octant_at, radix_sort_pairs, BoundingCube, BITS_PER_AXIS, MAX_DEPTH};
pub use octree::{build_tree, Cell, Node, Octree, DEFAULT_LEAF_CAP};
pub use walk::{
    tree_accelerations, walk_tree_group, ForceResult, GroupForces, InteractionList, TreeConfig,
    TreeGravity, BOOTSTRAP_THETA, DEFAULT_BOOTSTRAP_DIRECT_MAX, DEFAULT_FRONTIER_FACTOR,
    DEFAULT_GROUP_SIZE, DEFAULT_LIST_CAPACITY,
};
