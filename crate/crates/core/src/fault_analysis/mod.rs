//! Fault enumeration, detector error models and matchable decoding graphs.

mod dem;
mod graph;
mod propagate;

pub use dem::{
    build_dem, dem_from_text, dem_to_text, xor_probability, DetectorErrorModel, DetectorInfo,
    ErrorMechanism,
};
pub use graph::{
    decompose_to_graph, edge_weight, DecodingGraph, Edge, Vertex, VertexKind, PROBABILITY_FLOOR,
};
pub use propagate::{enumerate_faults, propagate_fault, Fault, FaultLocation};
