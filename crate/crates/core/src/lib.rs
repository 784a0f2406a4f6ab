//! Simulator of parallel single-phase droop-controlled inverters in an
//! islanded microgrid, with adaptive virtual resistance for power sharing
//! and DC-link-ripple-based compensation of voltage-sensor offsets.

pub mod analysis;
pub mod avi;
pub mod control;
mod error;
pub mod offsetcomp;
pub mod plant;
pub mod runner;
pub mod sensing;

pub use error::{Error, Result};
pub use runner::{run_scenario, RunArtifacts, Scenario, Simulation};
