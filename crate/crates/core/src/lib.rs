//! Simulation and optimisation library for near-field embodied edge intelligence:
//! spherical-wave channels with beam focusing, radio-aware receding-horizon
//! planning, view-guided uplink scheduling, and opportunistic robot/edge
//! collaboration.

pub mod geometry;
pub mod nfchan;
pub mod ocn;
pub mod output;
pub mod geomworld;
pub mod rep;
pub mod seed;
pub mod vbf;
pub mod scenario;
