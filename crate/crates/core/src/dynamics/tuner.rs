//! Rebuild-interval autotuning.
//!
//! Walk time is modelled as growing linearly with the number of steps since the
//! last rebuild, `t(k) = t0 + s k`. Rebuilding every `m` steps then costs
//! `t_build / m + t0 + s (m - 1) / 2` per step, minimised over `m`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::perflab::TraversalTrace;

pub const MIN_INTERVAL: usize = 1;
pub const MAX_INTERVAL: usize = 128;

/// Per-event costs used to turn a traversal trace and a particle count into
/// seconds. Defaults were calibrated on a single x86-64 core; only their
/// ratios matter to the tuner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub ns_per_interaction: f64,
    pub ns_per_mac: f64,
    pub ns_per_list_op: f64,
    /// makeTree + calcNode per particle.
    pub ns_per_build_particle: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { ns_per_interaction: 4.7, ns_per_mac: 20.0, ns_per_list_op: 2.0, ns_per_build_particle: 75.0 }
    }
}

impl CostModel {
    pub fn walk_seconds(&self, trace: &TraversalTrace) -> f64 {
        1e-9 * (self.ns_per_interaction * trace.interactions as f64
            + self.ns_per_mac * trace.mac_evaluations as f64
            + self.ns_per_list_op * trace.list_ops as f64)
    }

    pub fn build_seconds(&self, n: usize) -> f64 {
        1e-9 * self.ns_per_build_particle * n as f64
    }
}

/// Where the tuner's timings come from.
///
/// `Modeled` keeps runs reproducible: the rebuild schedule, and therefore
/// every force, depends only on the inputs. `Wall` feeds measured phase times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TunerClock {
    Modeled(CostModel),
    Wall,
}

impl Default for TunerClock {
    fn default() -> Self {
        TunerClock::Modeled(CostModel::default())
    }
}

/// One walk-time measurement since the last rebuild.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkSample {
    pub seconds: f64,
    /// Number of particles the walk served; block steps vary this.
    pub active: usize,
}

/// Per-step cost of rebuilding every `m` steps.
pub fn rebuild_cost(t_build: f64, t0: f64, s: f64, m: usize) -> f64 {
    t_build / m as f64 + t0 + s * (m as f64 - 1.0) / 2.0
}

/// Centred sums `(sxx, sxy, tbar)` of the points `(k, t_k)`.
fn centred_sums(times: &[f64]) -> Option<(f64, f64, f64)> {
    let n = times.len();
    if n < 2 || times.iter().any(|t| !t.is_finite()) {
        return None;
    }
    let nf = n as f64;
    let kbar = (nf - 1.0) / 2.0;
    let tbar = times.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, &t) in times.iter().enumerate() {
        let dk = k as f64 - kbar;
        sxy += dk * (t - tbar);
        sxx += dk * dk;
    }
    Some((sxx, sxy, tbar))
}

/// Least-squares line through `(k, t_k)`, `k = 0, 1, ...`. Returns `(t0, s)`.
pub fn fit_linear(times: &[f64]) -> Option<(f64, f64)> {
    let (sxx, sxy, tbar) = centred_sums(times)?;
    let s = sxy / sxx;
    Some((tbar - s * (times.len() as f64 - 1.0) / 2.0, s))
}

/// Rebuild cycles whose slopes are pooled.
pub const POOLED_CYCLES: usize = 8;

/// Interval minimising [`rebuild_cost`] over `[min, max]`; ties go to the
/// longer interval.
pub fn autotune_rebuild(t_build: f64, t0: f64, s: f64, min: usize, max: usize) -> usize {
    if t_build <= 0.0 || s <= 0.0 {
        return max;
    }
    let mut best = min;
    let mut best_cost = f64::INFINITY;
    for m in min..=max {
        let c = rebuild_cost(t_build, t0, s, m);
        if c <= best_cost * (1.0 + 1e-12) {
            best = m;
            best_cost = best_cost.min(c);
        }
    }
    best
}

/// Tracks walk times between rebuilds and picks the next interval.
#[derive(Clone, Debug)]
pub struct RebuildTuner {
    pub min: usize,
    pub max: usize,
    pub interval: usize,
    /// Fixed interval: never retune.
    pub fixed: bool,
    /// makeTree + calcNode time of the last rebuild.
    pub t_build: f64,
    pub history: Vec<WalkSample>,
    /// `(sxx, sxy)` of recent cycles; short cycles give noisy slopes alone.
    pooled: VecDeque<(f64, f64)>,
}

impl Default for RebuildTuner {
    fn default() -> Self {
        Self {
            min: MIN_INTERVAL,
            max: MAX_INTERVAL,
            interval: 8,
            fixed: false,
            t_build: 0.0,
            history: Vec::new(),
            pooled: VecDeque::new(),
        }
    }
}

impl RebuildTuner {
    pub fn new(min: usize, max: usize, initial: usize) -> Result<Self> {
        if min == 0 || min > max {
            return Err(Error::invalid(format!("bad rebuild bounds [{min}, {max}]")));
        }
        Ok(Self { min, max, interval: initial.clamp(min, max), ..Default::default() })
    }

    pub fn fixed(interval: usize) -> Result<Self> {
        let mut t = Self::new(interval.max(1), interval.max(1), interval)?;
        t.fixed = true;
        Ok(t)
    }

    pub fn record_walk(&mut self, seconds: f64, active: usize) {
        self.history.push(WalkSample { seconds, active });
    }

    /// Walk times rescaled to the mean active count, so steps of different
    /// block sizes are comparable.
    pub fn normalized_history(&self) -> Vec<f64> {
        let h = &self.history;
        if h.is_empty() {
            return Vec::new();
        }
        let mean_active = h.iter().map(|w| w.active as f64).sum::<f64>() / h.len() as f64;
        h.iter()
            .map(|w| if w.active == 0 { 0.0 } else { w.seconds / w.active as f64 * mean_active })
            .collect()
    }

    /// Walk-time growth per step, pooled over the current and recent cycles.
    pub fn slope(&self) -> Option<f64> {
        let (sxx, sxy) = self.pooled.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        (sxx > 0.0).then(|| sxy / sxx)
    }

    /// New interval from the current history, moved towards the cost-model
    /// optimum by at most a factor of two. Without a usable slope (no
    /// cycle of two or more timed steps yet) the current interval is kept,
    /// except that an interval of one is lengthened to two so that a slope
    /// can be measured next time.
    pub fn retune(&mut self) -> usize {
        if self.fixed {
            return self.interval;
        }
        let times = self.normalized_history();
        if times.iter().any(|&t| t > 0.0) {
            if let Some((sxx, sxy, _)) = centred_sums(&times) {
                self.pooled.push_back((sxx, sxy));
                if self.pooled.len() > POOLED_CYCLES {
                    self.pooled.pop_front();
                }
            }
        }
        match self.slope().filter(|s| s.is_finite() && self.t_build.is_finite()) {
            Some(s) => {
                // move at most a factor of two per rebuild; single estimates are noisy
                let target = autotune_rebuild(self.t_build, 0.0, s, self.min, self.max);
                let lo = (self.interval / 2).max(self.min);
                let hi = (self.interval * 2).min(self.max);
                self.interval = target.clamp(lo, hi);
            }
            None => {
                if self.interval < 2 {
                    self.interval = 2.clamp(self.min, self.max);
                }
            }
        }
        self.interval
    }

    /// Called right after a rebuild: retunes from the finished history and
    /// starts a new one with the fresh build time.
    pub fn on_rebuild(&mut self, t_build: f64) -> usize {
        let m = if self.history.is_empty() { self.interval } else { self.retune() };
        self.history.clear();
        self.t_build = t_build;
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let m = autotune_rebuild(10.0, 1.0, 1.0, 1, 128);
        assert!(m == 4 || m == 5, "{m}");
    }

    #[test]
    fn free_rebuild_clamps_to_max() {
        assert_eq!(autotune_rebuild(0.0, 1.0, 1.0, 1, 128), 128);
    }

    #[test]
    fn flat_walk_time_prefers_long_intervals() {
        assert_eq!(autotune_rebuild(5.0, 1.0, 0.0, 1, 128), 128);
    }

    #[test]
    fn expensive_growth_rebuilds_every_step() {
        assert_eq!(autotune_rebuild(0.1, 1.0, 100.0, 1, 128), 1);
    }

    #[test]
    fn fit_recovers_line() {
        let t: Vec<f64> = (0..6).map(|k| 2.0 + 0.5 * k as f64).collect();
        let (t0, s) = fit_linear(&t).unwrap();
        assert!((t0 - 2.0).abs() < 1e-12 && (s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_history_keeps_interval() {
        let mut t = RebuildTuner::new(1, 128, 7).unwrap();
        t.t_build = 1.0;
        t.record_walk(1.0, 10);
        assert_eq!(t.retune(), 7);
    }

    #[test]
    fn slopes_pool_across_cycles() {
        let mut t = RebuildTuner::new(1, 128, 2).unwrap();
        t.t_build = 1.0;
        // two cycles, slopes 1 and 3 with equal weight
        for cycle in [[0.0, 1.0], [0.0, 3.0]] {
            for x in cycle {
                t.record_walk(x, 1);
            }
            t.on_rebuild(1.0);
        }
        assert!((t.slope().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn retune_is_damped() {
        let mut t = RebuildTuner::new(1, 128, 4).unwrap();
        t.t_build = 1.0;
        // flat walk time: optimum is the upper bound, reached by doubling
        for _ in 0..3 {
            t.record_walk(1.0, 1);
            t.record_walk(1.0, 1);
            t.record_walk(1.0 + 1e-12, 1);
        }
        assert_eq!(t.retune(), 8);
    }

    #[test]
    fn interval_one_is_probed() {
        let mut t = RebuildTuner::new(1, 128, 1).unwrap();
        t.t_build = 1.0;
        t.record_walk(1.0, 10);
        assert_eq!(t.retune(), 2);
    }

    #[test]
    fn active_count_normalization() {
        let mut t = RebuildTuner::default();
        t.record_walk(1.0, 100);
        t.record_walk(0.5, 50);
        let h = t.normalized_history();
        assert!((h[0] - h[1]).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn argmin_within_bounds_and_optimal(tb in 0.0f64..1e3, t0 in 0.0f64..10.0, s in -1.0f64..10.0) {
            let m = autotune_rebuild(tb, t0, s, 1, 128);
            prop_assert!((1..=128).contains(&m));
            if tb > 0.0 && s > 0.0 {
                let c = rebuild_cost(tb, t0, s, m);
                for k in 1..=128 {
                    prop_assert!(c <= rebuild_cost(tb, t0, s, k) * (1.0 + 1e-9));
                }
            }
        }

        #[test]
        fn larger_build_cost_never_shortens(tb in 0.01f64..100.0, s in 0.01f64..10.0) {
            let a = autotune_rebuild(tb, 1.0, s, 1, 128);
            let b = autotune_rebuild(2.0 * tb, 1.0, s, 1, 128);
            prop_assert!(b >= a);
        }
    }
}
