use std::ops::{Add, AddAssign};

/// Wall-clock seconds spent in each phase of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub walk_tree: f64,
    pub calc_node: f64,
    pub make_tree: f64,
    pub predict: f64,
    pub correct: f64,
}

impl PhaseTimings {
    pub const NAMES: [&'static str; 5] = ["walkTree", "calcNode", "makeTree", "predict", "correct"];

    pub fn as_array(&self) -> [f64; 5] {
        [self.walk_tree, self.calc_node, self.make_tree, self.predict, self.correct]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Name of the most expensive phase.
    pub fn dominant(&self) -> &'static str {
        let a = self.as_array();
        let (idx, _) = a
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &t)| if t > best.1 { (i, t) } else { best });
        Self::NAMES[idx]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            walk_tree: self.walk_tree * s,
            calc_node: self.calc_node * s,
            make_tree: self.make_tree * s,
            predict: self.predict * s,
            correct: self.correct * s,
        }
    }
}

impl Add for PhaseTimings {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            walk_tree: self.walk_tree + o.walk_tree,
            calc_node: self.calc_node + o.calc_node,
            make_tree: self.make_tree + o.make_tree,
            predict: self.predict + o.predict,
            correct: self.correct + o.correct,
        }
    }
}

impl AddAssign for PhaseTimings {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
