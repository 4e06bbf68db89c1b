//! Experiment drivers shared by the command line and the acceptance suite.

use std::time::Instant;

use crate::dynamics::{RebuildTuner, Simulation, StepRecord, StepScheme};
use crate::error::{Error, Result};
use crate::galactics::sample_plummer;
use crate::io::{fmt, Table, ACCURACY_HEADER, BARRIER_HEADER, COUNTER_HEADER, SCALING_HEADER};
use crate::perflab::{
    classify_regime, flops_estimate, predict_speedup, BarrierBench, HardwareRatios, OpCounters, PhaseTimings, Regime,
};
use crate::system::{GravParams, ParticleSystem};
use crate::tree::{direct_sum, force_error, ErrorStats, Opening, TreeConfig, TreeGravity};

/// `2^-lo ..= 2^-hi` by powers of two, largest first.
pub fn dacc_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

/// 2^-1 down to 2^-20.
pub fn default_dacc_grid() -> Vec<f64> {
    dacc_grid(1, 20)
}

/// Mean of the intervals chosen at rebuilds in the second half of a run.
pub fn steady_state_interval(records: &[StepRecord]) -> f64 {
    let chosen: Vec<f64> = records.iter().filter(|r| r.rebuilt).map(|r| r.rebuild_interval as f64).collect();
    let tail = &chosen[chosen.len() / 2..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyPoint {
    pub dacc: f64,
    pub t_step: f64,
    pub t_walk: f64,
    pub t_node: f64,
    /// Mean makeTree time over the steps that rebuilt.
    pub t_build: f64,
    pub error: ErrorStats,
    pub interactions_per_particle: f64,
    pub counters: OpCounters,
    pub predicted_speedup: f64,
}

/// For each tolerance: one tree evaluation against the direct-sum oracle
/// (with exact `|a_old|`), then `steps` shared steps for timing.
pub fn accuracy_sweep(
    sys: &ParticleSystem,
    params: &GravParams,
    tree: TreeConfig,
    scheme: StepScheme,
    dacc_list: &[f64],
    steps: usize,
    hw: &HardwareRatios,
) -> Result<Vec<AccuracyPoint>> {
    let (oracle, _) = direct_sum(sys, params)?;
    let mut seeded = sys.clone();
    seeded.set_accelerations(oracle.clone());
    let mut out = Vec::with_capacity(dacc_list.len());
    for &dacc in dacc_list {
        let p = params.with_dacc(dacc);
        p.validate()?;
        let mut engine = TreeGravity::new(tree)?;
        engine.rebuild(&seeded.mass, &seeded.pos)?;
        let f = engine.evaluate(None, &seeded.acc_old_mag, &p, Opening::Acceleration)?;
        let error = force_error(&f.acc, &oracle)?;

        let mut sim = Simulation::new(
            sys.clone(),
            p,
            StepScheme { shared: true, ..scheme },
            tree,
            RebuildTuner::default(),
        )?;
        let mut total = PhaseTimings::default();
        let (mut wall, mut builds, mut t_build) = (0.0, 0usize, 0.0);
        for _ in 0..steps {
            let r = sim.step()?;
            total += r.timings;
            wall += r.wall;
            if r.rebuilt {
                builds += 1;
                t_build += r.timings.make_tree;
            }
        }
        let per = 1.0 / steps.max(1) as f64;
        out.push(AccuracyPoint {
            dacc,
            t_step: wall * per,
            t_walk: total.walk_tree * per,
            t_node: total.calc_node * per,
            t_build: if builds > 0 { t_build / builds as f64 } else { 0.0 },
            error,
            interactions_per_particle: f.interactions_per_particle(),
            counters: f.counters,
            predicted_speedup: predict_speedup(&f.counters, hw)?,
        });
    }
    Ok(out)
}

pub fn accuracy_table(points: &[AccuracyPoint]) -> Result<Table> {
    let mut t = Table::new(&ACCURACY_HEADER);
    for p in points {
        t.push(vec![
            fmt(p.dacc),
            fmt(p.t_step),
            fmt(p.t_walk),
            fmt(p.t_node),
            fmt(p.t_build),
            fmt(p.error.median),
            fmt(p.error.p99),
            fmt(p.interactions_per_particle),
            p.counters.integer.to_string(),
            p.counters.fp_total().to_string(),
            fmt(p.predicted_speedup),
        ])?;
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    /// Mean per-step phase times.
    pub timings: PhaseTimings,
    /// Mean wall time per step.
    pub total: f64,
}

impl ScalingPoint {
    pub fn calc_node_share(&self) -> f64 {
        let t = self.timings.total();
        if t > 0.0 {
            self.timings.calc_node / t
        } else {
            0.0
        }
    }
}

/// Mean phase times of `steps` steps on `sys`. The tree is rebuilt every step
/// so every phase is represented in each sample.
pub fn scaling_point(sys: ParticleSystem, params: &GravParams, tree: TreeConfig, steps: usize) -> Result<ScalingPoint> {
    if steps == 0 {
        return Err(Error::invalid("scaling point needs at least one step"));
    }
    let n = sys.len();
    let mut sim = Simulation::new(
        sys,
        *params,
        StepScheme { shared: true, ..StepScheme::default() },
        tree,
        RebuildTuner::fixed(1)?,
    )?;
    let mut total = PhaseTimings::default();
    let mut wall = 0.0;
    for _ in 0..steps {
        let r = sim.step()?;
        total += r.timings;
        wall += r.wall;
    }
    let per = 1.0 / steps as f64;
    Ok(ScalingPoint { n, timings: total.scaled(per), total: wall * per })
}

/// Plummer spheres of each size at the given tolerance.
pub fn scaling_sweep(n_list: &[usize], dacc: f64, seed: u64, steps: usize) -> Result<Vec<ScalingPoint>> {
    let params = GravParams::default().with_dacc(dacc);
    n_list
        .iter()
        .map(|&n| scaling_point(sample_plummer(n, 1.0, 1.0, seed)?, &params, TreeConfig::default(), steps))
        .collect()
}

pub fn scaling_table(points: &[ScalingPoint]) -> Result<Table> {
    let mut t = Table::new(&SCALING_HEADER);
    for p in points {
        let a = p.timings.as_array();
        let mut row = vec![p.n.to_string()];
        row.extend(a.iter().map(|&x| fmt(x)));
        row.push(fmt(p.total));
        row.push(p.timings.dominant().to_string());
        row.push(fmt(p.calc_node_share()));
        t.push(row)?;
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterPoint {
    pub dacc: f64,
    pub counters: OpCounters,
    pub interactions_per_particle: f64,
    pub walk_seconds: f64,
    pub predicted_speedup: f64,
    pub flops: f64,
    pub regime: Regime,
}

/// Sustained Flop/s of the direct-summation kernel on a small Plummer sphere,
/// the reference peak for regime classification.
pub fn calibrate_peak_flops() -> Result<f64> {
    let sys = sample_plummer(2048, 1.0, 1.0, 0)?;
    let params = GravParams::default();
    let mut best: f64 = 0.0;
    for _ in 0..3 {
        let t = Instant::now();
        let (_, c) = direct_sum(&sys, &params)?;
        best = best.max(flops_estimate(&c, t.elapsed().as_secs_f64().max(1e-9))?);
    }
    Ok(best)
}

/// Counter totals of one full force evaluation per tolerance, all on the
/// same tree and the same `|a_old|` (bootstrap accelerations).
pub fn counter_sweep(
    sys: &ParticleSystem,
    params: &GravParams,
    tree: TreeConfig,
    dacc_list: &[f64],
    hw: &HardwareRatios,
    peak_flops: f64,
    regime_fraction: f64,
) -> Result<Vec<CounterPoint>> {
    let mut engine = TreeGravity::new(tree)?;
    let a_old: Vec<f64> = engine.bootstrap(sys, params)?.iter().map(|a| a.norm()).collect();
    engine.rebuild(&sys.mass, &sys.pos)?;
    let mut out = Vec::with_capacity(dacc_list.len());
    for &dacc in dacc_list {
        let p = params.with_dacc(dacc);
        p.validate()?;
        let t = Instant::now();
        let f = engine.evaluate(None, &a_old, &p, Opening::Acceleration)?;
        let walk_seconds = t.elapsed().as_secs_f64().max(1e-9);
        let flops = flops_estimate(&f.counters, walk_seconds)?;
        out.push(CounterPoint {
            dacc,
            counters: f.counters,
            interactions_per_particle: f.interactions_per_particle(),
            walk_seconds,
            predicted_speedup: predict_speedup(&f.counters, hw)?,
            flops,
            regime: classify_regime(flops, peak_flops, regime_fraction),
        });
    }
    Ok(out)
}

pub fn counter_table(points: &[CounterPoint]) -> Result<Table> {
    let mut t = Table::new(&COUNTER_HEADER);
    for p in points {
        let c = &p.counters;
        t.push(vec![
            fmt(p.dacc),
            c.integer.to_string(),
            c.fp_fma.to_string(),
            c.fp_add.to_string(),
            c.fp_mul.to_string(),
            c.fp_rsqrt.to_string(),
            fmt(p.interactions_per_particle),
            fmt(p.predicted_speedup),
            fmt(p.flops),
            p.regime.as_str().to_string(),
        ])?;
    }
    Ok(t)
}

pub fn barrier_table(rows: &[BarrierBench]) -> Result<Table> {
    let mut t = Table::new(&BARRIER_HEADER);
    for b in rows {
        t.push(vec![
            b.workers.to_string(),
            b.phases.to_string(),
            fmt(b.lockfree_ns_per_sync),
            fmt(b.native_ns_per_sync),
            fmt(b.ratio),
            b.violations.to_string(),
        ])?;
    }
    Ok(t)
}
