//! Snapshots, run configuration and CSV tables.

mod config;
mod snapshot;
mod tables;

pub use config::{ClockKind, RunConfig, FIDUCIAL_DACC};
pub use snapshot::{read_snapshot, write_atomic, write_snapshot, Snapshot, HEADER_LEN, MAGIC, VERSION};
pub use tables::{
    fmt, parse_counters_csv, Table, ACCURACY_HEADER, BARRIER_HEADER, COUNTER_HEADER, DIAG_HEADER, PHASE_HEADER,
    SCALING_HEADER, SPEEDUP_HEADER,
};
