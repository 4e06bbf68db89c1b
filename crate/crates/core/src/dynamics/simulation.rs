use std::time::Instant;

use crate::dynamics::blockstep::{assign_block_steps, initial_levels, level_ticks, StepScheme};
use crate::dynamics::integrator::{correct, predict_into, Predicted};
use crate::dynamics::tuner::{RebuildTuner, TunerClock};
use crate::error::Result;
use crate::perflab::{OpCounters, PhaseTimings, TraversalTrace};
use crate::system::{GravParams, ParticleSystem};
use crate::tree::{Opening, TreeConfig, TreeGravity};
use crate::vec3::Vec3;

/// What happened during one block step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub time: f64,
    pub timings: PhaseTimings,
    /// Wall time of the whole step, bookkeeping included.
    pub wall: f64,
    pub rebuilt: bool,
    pub rebuild_interval: usize,
    pub active: usize,
    pub trace: TraversalTrace,
    pub counters: OpCounters,
}

/// Block-step integrator driving a tree force engine.
///
/// Each particle carries its own time in integer ticks; a step advances the
/// particles whose block ends first. Positions of everyone are predicted to
/// that time, node attributes are refreshed on the current tree (rebuilt every
/// `tuner.interval` steps), forces are walked for the active set and then
/// corrected.
///
/// Monopole tree forces do not obey the third law, so on steps where every
/// particle is active the mass-weighted mean acceleration is subtracted
/// (`remove_net_force`). The correction is orders of magnitude below the
/// per-particle force error.
pub struct Simulation {
    pub sys: ParticleSystem,
    pub params: GravParams,
    pub scheme: StepScheme,
    pub tuner: RebuildTuner,
    pub clock: TunerClock,
    pub remove_net_force: bool,
    engine: TreeGravity,
    ticks: Vec<u64>,
    now: u64,
    step_count: u64,
    since_rebuild: usize,
    predicted: Predicted,
}

impl Simulation {
    pub fn new(
        mut sys: ParticleSystem,
        params: GravParams,
        scheme: StepScheme,
        config: TreeConfig,
        tuner: RebuildTuner,
    ) -> Result<Self> {
        sys.validate()?;
        params.validate()?;
        scheme.validate()?;
        let mut engine = TreeGravity::new(config)?;
        let acc = engine.bootstrap(&sys, &params)?;
        sys.set_accelerations(acc);
        sys.level = initial_levels(&sys.acc_old_mag, params.eps, &scheme);
        let n = sys.len();
        let start = (sys.time / scheme.tick_seconds()).round() as u64;
        Ok(Self {
            sys,
            params,
            scheme,
            tuner,
            clock: TunerClock::default(),
            remove_net_force: true,
            engine,
            ticks: vec![start; n],
            now: start,
            step_count: 0,
            since_rebuild: 0,
            predicted: Predicted::default(),
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_count
    }

    /// Current system time.
    pub fn time(&self) -> f64 {
        self.now as f64 * self.scheme.tick_seconds()
    }

    /// Whether every particle sits at the current system time.
    pub fn is_synchronized(&self) -> bool {
        self.ticks.iter().all(|&t| t == self.now)
    }

    /// Snapshot with every particle drifted to the current time.
    pub fn synchronized(&self) -> ParticleSystem {
        let mut out = self.sys.clone();
        let h = self.scheme.tick_seconds();
        let dt: Vec<f64> = self.ticks.iter().map(|&t| (self.now - t) as f64 * h).collect();
        let mut p = Predicted::default();
        predict_into(&self.sys, &dt, &mut p);
        out.pos = p.pos;
        out.vel = p.vel;
        out.time = self.time();
        out
    }

    /// Advances the active block by one step.
    pub fn step(&mut self) -> Result<StepRecord> {
        let wall = Instant::now();
        let n = self.sys.len();
        let h = self.scheme.tick_seconds();
        let next = (0..n)
            .map(|i| self.ticks[i] + level_ticks(self.sys.level[i]))
            .min()
            .unwrap_or(self.now);
        let active: Vec<bool> = (0..n)
            .map(|i| self.ticks[i] + level_ticks(self.sys.level[i]) == next)
            .collect();
        let n_active = active.iter().filter(|&&a| a).count();
        let elapsed: Vec<f64> = self.ticks.iter().map(|&t| (next - t) as f64 * h).collect();
        let mut timings = PhaseTimings::default();

        let t = Instant::now();
        predict_into(&self.sys, &elapsed, &mut self.predicted);
        timings.predict = t.elapsed().as_secs_f64();

        let rebuilt = self.engine.tree().is_none() || self.since_rebuild >= self.tuner.interval;
        if rebuilt {
            let t = Instant::now();
            self.engine.make_tree(&self.predicted.pos)?;
            timings.make_tree = t.elapsed().as_secs_f64();
        }
        let t = Instant::now();
        self.engine.calc_node(&self.sys.mass, &self.predicted.pos)?;
        timings.calc_node = t.elapsed().as_secs_f64();
        if rebuilt {
            let t_build = match self.clock {
                TunerClock::Wall => timings.make_tree + timings.calc_node,
                TunerClock::Modeled(c) => c.build_seconds(n),
            };
            self.tuner.on_rebuild(t_build);
            self.since_rebuild = 0;
        }

        let t = Instant::now();
        let all_active = n_active == n;
        let mut forces = self.engine.evaluate(
            if all_active { None } else { Some(&active) },
            &self.sys.acc_old_mag,
            &self.params,
            Opening::Acceleration,
        )?;
        if all_active && self.remove_net_force {
            let m_tot = self.sys.total_mass();
            let net: Vec3 = self.sys.mass.iter().zip(&forces.acc).map(|(&m, &a)| a * m).sum();
            let shift = net / m_tot;
            forces.acc.iter_mut().for_each(|a| *a -= shift);
        }
        timings.walk_tree = t.elapsed().as_secs_f64();
        let walk_cost = match self.clock {
            TunerClock::Wall => timings.walk_tree,
            TunerClock::Modeled(c) => c.walk_seconds(&forces.trace),
        };
        self.tuner.record_walk(walk_cost, n_active);

        let t = Instant::now();
        correct(&mut self.sys, &self.predicted.pos, &forces.acc, &elapsed, Some(&active));
        for i in 0..n {
            if active[i] {
                self.ticks[i] = next;
            }
        }
        self.now = next;
        assign_block_steps(
            &mut self.sys.level,
            &self.sys.acc_old_mag,
            &self.ticks,
            &active,
            self.params.eps,
            &self.scheme,
        );
        timings.correct = t.elapsed().as_secs_f64();

        self.since_rebuild += 1;
        self.step_count += 1;
        self.sys.time = self.time();
        Ok(StepRecord {
            step: self.step_count,
            time: self.sys.time,
            timings,
            wall: wall.elapsed().as_secs_f64(),
            rebuilt,
            rebuild_interval: self.tuner.interval,
            active: n_active,
            trace: forces.trace,
            counters: forces.counters,
        })
    }

    /// Steps until the system time reaches at least `t_end` and all particles
    /// are synchronized.
    pub fn run_until(&mut self, t_end: f64) -> Result<Vec<StepRecord>> {
        let mut out = Vec::new();
        while self.time() < t_end || !self.is_synchronized() {
            out.push(self.step()?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::diagnostics::diagnostics;

    fn kepler(e: f64) -> ParticleSystem {
        // unit masses, semi-major axis 1 for the relative orbit, start at apocentre
        let m = 0.5;
        let r = 1.0 + e;
        let v_rel = ((1.0 - e) / (1.0 + e)).sqrt(); // G M / a = 1
        let mut s = ParticleSystem::new(
            vec![m, m],
            vec![Vec3::new(-r / 2.0, 0.0, 0.0), Vec3::new(r / 2.0, 0.0, 0.0)],
            vec![Vec3::new(0.0, -v_rel / 2.0, 0.0), Vec3::new(0.0, v_rel / 2.0, 0.0)],
        )
        .unwrap();
        s.to_com_frame();
        s
    }

    fn fixed_step(dt: f64) -> StepScheme {
        StepScheme { eta: f64::INFINITY, dt_max: dt, shared: true }
    }

    fn energy_error(e: f64, steps_per_orbit: u32) -> f64 {
        let period = 2.0 * std::f64::consts::PI;
        let params = GravParams::new(1.0, 0.0, 1e-6).unwrap();
        let mut sim = Simulation::new(
            kepler(e),
            params,
            fixed_step(period / steps_per_orbit as f64),
            TreeConfig::default(),
            RebuildTuner::fixed(1).unwrap(),
        )
        .unwrap();
        let e0 = diagnostics(&sim.synchronized(), &params).unwrap().total;
        let mut worst: f64 = 0.0;
        for _ in 0..steps_per_orbit {
            sim.step().unwrap();
            let e1 = diagnostics(&sim.synchronized(), &params).unwrap().total;
            worst = worst.max(((e1 - e0) / e0).abs());
        }
        worst
    }

    #[test]
    fn circular_orbit_radius_holds() {
        let period = 2.0 * std::f64::consts::PI;
        let params = GravParams::new(1.0, 0.0, 1e-6).unwrap();
        let mut sim = Simulation::new(
            kepler(0.0),
            params,
            fixed_step(period / 1000.0),
            TreeConfig::default(),
            RebuildTuner::fixed(4).unwrap(),
        )
        .unwrap();
        for _ in 0..1000 {
            sim.step().unwrap();
        }
        let s = sim.synchronized();
        let sep = (s.pos[1] - s.pos[0]).norm();
        assert!((sep - 1.0).abs() < 0.01, "{sep}");
    }

    #[test]
    fn energy_error_is_second_order() {
        let e1 = energy_error(0.5, 500);
        let e2 = energy_error(0.5, 1000);
        let slope = (e1 / e2).log2();
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn momentum_conserved_for_pair() {
        let params = GravParams::new(1.0, 0.01, 1e-6).unwrap();
        let mut sim = Simulation::new(
            kepler(0.3),
            params,
            StepScheme { eta: 0.1, dt_max: 0.05, shared: false },
            TreeConfig::default(),
            RebuildTuner::default(),
        )
        .unwrap();
        sim.run_until(5.0).unwrap();
        assert!(sim.synchronized().momentum().norm() < 1e-12);
    }

    #[test]
    fn timings_bounded_by_wall() {
        let params = GravParams::default();
        let mut sim = Simulation::new(
            kepler(0.1),
            params,
            StepScheme::default(),
            TreeConfig::default(),
            RebuildTuner::default(),
        )
        .unwrap();
        for _ in 0..10 {
            let r = sim.step().unwrap();
            assert!(r.timings.as_array().iter().all(|&t| t >= 0.0));
            assert!(r.timings.total() <= r.wall);
            assert!((1..=128).contains(&r.rebuild_interval));
        }
    }

    #[test]
    fn block_steps_keep_particles_on_their_grid() {
        let params = GravParams::new(1.0, 0.01, 1e-4).unwrap();
        let mut sim = Simulation::new(
            kepler(0.8),
            params,
            StepScheme { eta: 0.2, dt_max: 0.25, shared: false },
            TreeConfig::default(),
            RebuildTuner::default(),
        )
        .unwrap();
        for _ in 0..200 {
            sim.step().unwrap();
            for i in 0..sim.sys.len() {
                assert_eq!(sim.ticks[i] % level_ticks(sim.sys.level[i]), 0);
            }
        }
    }

    fn plummer_sim(n: usize, dacc: f64, shared: bool) -> Simulation {
        let s = crate::galactics::sample_plummer(n, 1.0, 1.0, 42).unwrap();
        let params = GravParams::default().with_dacc(dacc);
        Simulation::new(
            s,
            params,
            StepScheme { shared, ..StepScheme::default() },
            TreeConfig::default(),
            RebuildTuner::default(),
        )
        .unwrap()
    }

    #[test]
    fn plummer_conserves_energy_and_momentum() {
        let mut sim = plummer_sim(4096, 2f64.powi(-9), false);
        let p = sim.params;
        let d0 = diagnostics(&sim.synchronized(), &p).unwrap();
        let t = std::time::Instant::now();
        let mut intervals = std::collections::BTreeSet::new();
        for _ in 0..200 {
            intervals.insert(sim.step().unwrap().rebuild_interval);
        }
        let d1 = diagnostics(&sim.synchronized(), &p).unwrap();
        let de = ((d1.total - d0.total) / d0.total).abs();
        let dp = (d1.momentum - d0.momentum).norm();
        eprintln!("dE/E {de:e} dP {dp:e} t {:?} time {} intervals {intervals:?}", t.elapsed(), sim.time());
        assert!(de < 2e-3);
        assert!(dp < 1e-6);
    }

    #[test]
    fn levels_never_jump() {
        let mut sim = plummer_sim(1024, 2f64.powi(-9), false);
        for _ in 0..50 {
            let before = sim.sys.level.clone();
            sim.step().unwrap();
            for (a, b) in before.iter().zip(&sim.sys.level) {
                assert!(a.abs_diff(*b) <= 1);
            }
        }
    }

    fn energy_drift(mut sim: Simulation, t_end: f64) -> f64 {
        let p = sim.params;
        let e0 = diagnostics(&sim.synchronized(), &p).unwrap().total;
        sim.run_until(t_end).unwrap();
        let e1 = diagnostics(&sim.synchronized(), &p).unwrap().total;
        ((e1 - e0) / e0).abs()
    }

    #[test]
    fn block_and_shared_steps_agree() {
        let make = |shared: bool| {
            let s = crate::galactics::sample_hernquist(1024, 1.0, 1.0, 5).unwrap();
            let p = GravParams::default().with_dacc(2f64.powi(-9));
            let scheme = StepScheme { eta: 0.05, dt_max: 1.0 / 16.0, shared };
            Simulation::new(s, p, scheme, TreeConfig::default(), RebuildTuner::default()).unwrap()
        };
        let block = make(false);
        assert!(block.sys.level.iter().min() != block.sys.level.iter().max());
        let eb = energy_drift(block, 0.5);
        let es = energy_drift(make(true), 0.5);
        assert!(eb <= 3.0 * es && es <= 3.0 * eb, "block {eb:e} shared {es:e}");
    }

    #[test]
    fn bound_pair_energy_drift() {
        let params = GravParams::new(1.0, 1.0 / 64.0, 2f64.powi(-20)).unwrap();
        let scheme = StepScheme { eta: 0.5, dt_max: 1.0 / 64.0, shared: false };
        let mut sim =
            Simulation::new(kepler(0.0), params, scheme, TreeConfig::default(), RebuildTuner::default()).unwrap();
        let e0 = diagnostics(&sim.synchronized(), &params).unwrap().total;
        for _ in 0..100 {
            sim.step().unwrap();
        }
        let e1 = diagnostics(&sim.synchronized(), &params).unwrap().total;
        assert!(((e1 - e0) / e0).abs() < 1e-4);
    }

    #[test]
    fn symmetric_static_configuration_keeps_zero_momentum() {
        let pos: Vec<Vec3> = (0..8)
            .map(|k| Vec3::new(if k & 1 == 0 { -1.0 } else { 1.0 }, if k & 2 == 0 { -1.0 } else { 1.0 }, if k & 4 == 0 { -1.0 } else { 1.0 }))
            .collect();
        let s = ParticleSystem::new(vec![1.0; 8], pos, vec![Vec3::ZERO; 8]).unwrap();
        let mut sim = Simulation::new(
            s,
            GravParams::default(),
            StepScheme::default(),
            TreeConfig::default(),
            RebuildTuner::default(),
        )
        .unwrap();
        sim.remove_net_force = false;
        sim.step().unwrap();
        assert!(sim.synchronized().momentum().norm() < 1e-12);
    }
}
