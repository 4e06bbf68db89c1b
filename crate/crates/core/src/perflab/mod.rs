//! Instruction accounting, the integer/floating-point overlap speed-up model,
//! Flop/s estimation and barrier micro-benchmarks.

mod barrier;
mod counters;
mod model;
mod timings;

pub use barrier::{
    bench_barrier, phase_slot_harness, BarrierBench, BarrierHandle, HarnessReport,
    LockFreeBarrier,
};
pub use counters::{
    count_walk_ops, OpCounters, TraversalTrace, INTERACTION_COST, LIST_OP_COST, MAC_COST,
};
pub use model::{
    classify_regime, flops_estimate, predict_speedup, HardwareRatios, Regime,
    RSQRT_FLOPS,
};
pub use timings::PhaseTimings;
