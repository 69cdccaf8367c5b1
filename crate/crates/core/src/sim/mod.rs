//! Circuit simulators: bit-parallel Pauli frames and a stabilizer tableau.

mod frame;
pub mod tableau;

pub use frame::{
    flip_pauli, noise_precedes_gate, sample_circuit_batch, FrameBatch, Pauli, SampledBatch,
};
