use std::iter::Sum;
use std::ops::{Add, AddAssign};

/// Abstract instruction tallies, split by execution unit.
///
/// Floating-point counts are single-precision equivalents: the engine runs
/// in `f64`, but the costing table models the single-precision kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounters {
    pub integer: u64,
    pub fp_fma: u64,
    pub fp_add: u64,
    pub fp_mul: u64,
    pub fp_rsqrt: u64,
}

impl OpCounters {
    /// FMA + add + mul; the reciprocal square root runs on a separate unit.
    pub fn fp_total(&self) -> u64 {
        self.fp_fma + self.fp_add + self.fp_mul
    }

    pub fn total(&self) -> u64 {
        self.integer + self.fp_total()
    }

    pub fn is_zero(&self) -> bool {
        *self == OpCounters::default()
    }

    fn scaled(self, k: u64) -> Self {
        Self {
            integer: self.integer * k,
            fp_fma: self.fp_fma * k,
            fp_add: self.fp_add * k,
            fp_mul: self.fp_mul * k,
            fp_rsqrt: self.fp_rsqrt * k,
        }
    }
}

impl Add for OpCounters {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            integer: self.integer + o.integer,
            fp_fma: self.fp_fma + o.fp_fma,
            fp_add: self.fp_add + o.fp_add,
            fp_mul: self.fp_mul + o.fp_mul,
            fp_rsqrt: self.fp_rsqrt + o.fp_rsqrt,
        }
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sum for OpCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// One softened pairwise kernel evaluation.
pub const INTERACTION_COST: OpCounters = OpCounters {
    integer: 0,
    fp_fma: 9,
    fp_add: 3,
    fp_mul: 2,
    fp_rsqrt: 1,
};

/// One acceptance-criterion evaluation (address arithmetic plus the test itself).
pub const MAC_COST: OpCounters = OpCounters {
    integer: 12,
    fp_fma: 0,
    fp_add: 2,
    fp_mul: 3,
    fp_rsqrt: 0,
};

/// One interaction-list push or flush.
pub const LIST_OP_COST: OpCounters = OpCounters {
    integer: 4,
    fp_fma: 0,
    fp_add: 0,
    fp_mul: 0,
    fp_rsqrt: 0,
};

/// Event counts recorded by a tree traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalTrace {
    /// Pairwise kernel evaluations (list entries x group members).
    pub interactions: u64,
    pub mac_evaluations: u64,
    /// List pushes plus flushes.
    pub list_ops: u64,
}

impl Add for TraversalTrace {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            interactions: self.interactions + o.interactions,
            mac_evaluations: self.mac_evaluations + o.mac_evaluations,
            list_ops: self.list_ops + o.list_ops,
        }
    }
}

impl AddAssign for TraversalTrace {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sum for TraversalTrace {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Applies the fixed costing table to a traversal trace.
pub fn count_walk_ops(trace: &TraversalTrace) -> OpCounters {
    INTERACTION_COST.scaled(trace.interactions)
        + MAC_COST.scaled(trace.mac_evaluations)
        + LIST_OP_COST.scaled(trace.list_ops)
}
