//! Object clustering benchmark engine.
//!
//! Generates parameterized object bases, runs a clustering-oriented traversal
//! workload against a simulated page store, and measures how much a
//! clustering policy reduces transaction I/O.

pub mod cli;
pub mod config;
pub mod error;
pub mod generator;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod storage;
pub mod workload;

pub use error::{Error, Result};
