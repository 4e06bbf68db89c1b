//! Octree gravity engine: acceleration-MAC group traversal with shared
//! interaction lists, block time steps with rebuild-interval tuning, galaxy
//! initial conditions, and an instruction-mix performance lab.

pub mod bench;
pub mod dynamics;
pub mod error;
pub mod galactics;
pub mod io;
pub mod perflab;
pub mod system;
pub mod tree;
pub mod vec3;

pub use error::{Error, ErrorClass, Result};
pub use system::{GravParams, ParticleSystem};
pub use vec3::Vec3;
