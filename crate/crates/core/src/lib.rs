//! Deterministic edge-to-cloud smart-city filtering simulator.

pub mod anomaly;
pub mod bench;
pub mod cli;
pub mod edge;
pub mod kg;
pub mod rng;
pub mod rules;
pub mod scenario;
pub mod sensorgen;
pub mod transport;
