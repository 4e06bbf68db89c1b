use crate::system::GravParams;
use crate::vec3::Vec3;

use super::octree::Node;

/// Particles that share one interaction list during a traversal.
#[derive(Clone, Debug, PartialEq)]
pub struct TraversalGroup {
    /// Member positions in the tree's key order (indices into `sorted_pos`).
    pub members: Vec<usize>,
    pub center: Vec3,
    pub radius: f64,
    /// Smallest previous-step |a| among the members.
    pub a_min: f64,
}

impl TraversalGroup {
    /// Bounding sphere about the centre of the members' bounding box.
    pub fn new(members: Vec<usize>, positions: &[Vec3], a_old: &[f64]) -> Self {
        debug_assert!(!members.is_empty());
        let (lo, hi) = members.iter().fold(
            (Vec3::splat(f64::INFINITY), Vec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), &k| (lo.min(positions[k]), hi.max(positions[k])),
        );
        let center = (lo + hi) * 0.5;
        let radius = members
            .iter()
            .map(|&k| (positions[k] - center).norm())
            .fold(0.0, f64::max);
        let a_min = members.iter().map(|&k| a_old[k]).fold(f64::INFINITY, f64::min);
        Self { members, center, radius, a_min }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Distance from the group's bounding sphere to `point`, floored at 0.
    #[inline]
    pub fn distance_to(&self, point: Vec3) -> f64 {
        ((self.center - point).norm() - self.radius).max(0.0)
    }
}

/// Opening rule used while walking the tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Opening {
    /// `(G m_J / d^2) (b_J / d)^2 <= dacc * a_min`.
    Acceleration,
    /// `b_J / d <= theta`; used once to obtain the first accelerations.
    Geometric { theta: f64 },
}

/// Acceleration MAC for a node against a whole group. `d` is the distance
/// from the group's bounding sphere, so acceptance implies acceptance for every
/// member individually. Overlap (`d = 0`) always forces descent.
#[inline]
pub fn mac_accept(node: &Node, group: &TraversalGroup, params: &GravParams) -> bool {
    mac_accept_at(node, group.distance_to(node.com), group.a_min, params)
}

#[inline]
pub(crate) fn mac_accept_at(node: &Node, d: f64, a_min: f64, params: &GravParams) -> bool {
    if d <= 0.0 {
        return false;
    }
    let d2 = d * d;
    let b2 = node.extent * node.extent;
    // (G m / d^2) (b / d)^2 <= dacc a_min without dividing
    params.g * node.mass * b2 <= params.dacc * a_min * d2 * d2
}

#[inline]
pub(crate) fn geometric_accept(node: &Node, d: f64, theta: f64) -> bool {
    d > 0.0 && node.extent <= theta * d
}

impl Opening {
    #[inline]
    pub(crate) fn accepts(&self, node: &Node, group: &TraversalGroup, params: &GravParams) -> bool {
        let d = group.distance_to(node.com);
        match *self {
            Opening::Acceleration => mac_accept_at(node, d, group.a_min, params),
            Opening::Geometric { theta } => geometric_accept(node, d, theta),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point_group(at: Vec3, a_min: f64) -> TraversalGroup {
        TraversalGroup { members: vec![0], center: at, radius: 0.0, a_min }
    }

    fn node(mass: f64, extent: f64, com: Vec3) -> Node {
        Node { mass, com, extent }
    }

    fn params(dacc: f64) -> GravParams {
        GravParams { g: 1.0, eps: 0.0, dacc }
    }

    #[test]
    fn direct_substitution_threshold() {
        // LHS = (1 / 100) * (1 / 10)^2 = 1e-4
        let n = node(1.0, 1.0, Vec3::new(10.0, 0.0, 0.0));
        let g = point_group(Vec3::ZERO, 1.0);
        assert!(mac_accept(&n, &g, &params(1e-4)));
        assert!(mac_accept(&n, &g, &params(2e-4)));
        assert!(!mac_accept(&n, &g, &params(0.99e-4)));
    }

    #[test]
    fn overlap_forces_descent() {
        let n = node(1e-9, 1e-9, Vec3::new(0.5, 0.0, 0.0));
        let g = TraversalGroup { members: vec![0], center: Vec3::ZERO, radius: 1.0, a_min: 1e9 };
        assert_eq!(g.distance_to(n.com), 0.0);
        assert!(!mac_accept(&n, &g, &params(1.0)));
    }

    #[test]
    fn group_sphere_encloses_members() {
        let pos = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 2.0, 0.5), Vec3::new(-1.0, 0.3, 0.1)];
        let g = TraversalGroup::new(vec![0, 1, 2], &pos, &[3.0, 1.0, 2.0]);
        for p in &pos {
            assert!((*p - g.center).norm() <= g.radius * (1.0 + 1e-15));
        }
        assert_eq!(g.a_min, 1.0);
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = Vec3> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn monotone_in_dacc(m in 1e-3f64..10.0, b in 0.0f64..2.0, com in arb_vec(20.0),
                            a in 1e-3f64..10.0, d1 in 1e-6f64..1.0, f in 1.0f64..100.0) {
            let n = node(m, b, com);
            let g = point_group(Vec3::ZERO, a);
            if mac_accept(&n, &g, &params(d1)) {
                prop_assert!(mac_accept(&n, &g, &params(d1 * f)));
            }
        }

        #[test]
        fn mass_scale_invariance(m in 1e-3f64..10.0, b in 0.0f64..2.0, com in arb_vec(20.0),
                                 a in 1e-3f64..10.0, dacc in 1e-6f64..1.0, k in 0.01f64..100.0) {
            // scaling every mass by k scales a_min by k too; use power-of-two k to avoid rounding
            let k = 2f64.powi(k.log2().round() as i32);
            let g1 = point_group(Vec3::ZERO, a);
            let g2 = point_group(Vec3::ZERO, a * k);
            prop_assert_eq!(
                mac_accept(&node(m, b, com), &g1, &params(dacc)),
                mac_accept(&node(m * k, b, com), &g2, &params(dacc))
            );
        }

        #[test]
        fn group_test_is_conservative(m in 1e-3f64..10.0, b in 0.0f64..2.0, com in arb_vec(20.0),
                                      pts in proptest::collection::vec((arb_vec(1.0), 1e-2f64..10.0), 1..32),
                                      dacc in 1e-6f64..1.0) {
            let pos: Vec<Vec3> = pts.iter().map(|p| p.0).collect();
            let a: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let g = TraversalGroup::new((0..pos.len()).collect(), &pos, &a);
            let n = node(m, b, com);
            if mac_accept(&n, &g, &params(dacc)) {
                for (p, ai) in pos.iter().zip(&a) {
                    let d = (*p - com).norm();
                    // per-particle form of the criterion
                    let lhs = m / (d * d) * (b / d) * (b / d);
                    prop_assert!(lhs <= dacc * ai * (1.0 + 1e-12));
                }
            }
        }
    }
}
