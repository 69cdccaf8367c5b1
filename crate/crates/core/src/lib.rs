//! Merge-free parallel sliding-window decoding for surface-code memory experiments.

pub mod code_model;
pub mod error;
pub mod experiment;
pub mod fault_analysis;
pub mod io;
pub mod mwpm;
pub mod parallel_engine;
pub mod sampler;
pub mod sim;
pub mod stats;
pub mod windowing;

pub use error::{Error, Result};
