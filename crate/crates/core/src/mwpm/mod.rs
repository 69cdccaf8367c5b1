//! Exact minimum-weight perfect matching decoder with deterministic tie-breaking.

mod blossom;
mod decoder;
mod paths;

pub use blossom::{max_weight_matching, min_weight_perfect_matching};
pub use decoder::{
    brute_force_decode, decode, perturbed_weights, Correction, MatchedPair, Mwpm,
    BRUTE_FORCE_EDGE_LIMIT, PERTURBATION,
};
pub use paths::{shortest_paths, PathTable};
