//! Time-slotted simulator for a cognitive-radio network whose spectrum
//! sensing is delegated to clusters of low-power sensor nodes.

pub mod sensing_math;
pub mod pu;
pub mod energy;
pub mod topology;
pub mod subsets;
pub mod config;
pub mod engine;
pub mod output;
