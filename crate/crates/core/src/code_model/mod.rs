//! Surface-code layout and memory-experiment circuits.

mod circuit;
mod layout;

pub use circuit::{
    build_memory_circuit, circuit_from_text, circuit_to_text, CliffordCircuit, Detector, Gate,
    Noise, Operation,
};
pub use layout::{build_rotated_surface_code, Basis, CodeLayout, Stabilizer, X_SCHEDULE, Z_SCHEDULE};
