//! Time integration with hierarchical block steps and tree forces.

mod blockstep;
mod diagnostics;
mod integrator;
mod simulation;
mod tuner;

pub use blockstep::{
    assign_block_steps, desired_level, initial_levels, level_ticks, StepScheme, MAX_LEVEL, TICKS_PER_DT_MAX,
};
pub use diagnostics::{
    diagnostics, kinetic_energy, potential_energy, Diagnostics, DIAGNOSTIC_DACC, DIRECT_POTENTIAL_MAX,
};
pub use integrator::{correct, predict, predict_into, Predicted};
pub use simulation::{Simulation, StepRecord};
pub use tuner::{
    autotune_rebuild, fit_linear, CostModel, TunerClock, rebuild_cost, RebuildTuner, WalkSample, MAX_INTERVAL, MIN_INTERVAL,
};
