#![allow(dead_code)]

use mergefree_core::code_model::Basis;
use mergefree_core::fault_analysis::{DecodingGraph, Edge, Vertex, VertexKind};
use rand::Rng;

/// Random small decoding graph with at most `max_edges` edges, some of them
/// into the space boundary and some vertices acting as time boundaries.
pub fn random_graph(rng: &mut impl Rng, max_edges: usize) -> DecodingGraph {
    let n = rng.gen_range(2..=9u32);
    let vertices: Vec<Vertex> = (0..n)
        .map(|k| Vertex {
            detector: k,
            round: k / 3 + 1,
            slot: (0, k as u16),
            kind: if k > 0 && rng.gen_bool(0.1) { VertexKind::TimeBoundary } else { VertexKind::Detector },
        })
        .collect();
    let edge_count = rng.gen_range(1..=max_edges);
    let tied = rng.gen_bool(0.3);
    let edges = (0..edge_count as u32)
        .map(|key| {
            let a = rng.gen_range(0..n);
            let b = if rng.gen_bool(0.25) {
                None
            } else {
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Some(b)
            };
            let weight = if tied { rng.gen_range(1..=3) as f64 } else { rng.gen_range(0.05..6.0) };
            Edge { a, b, probability: 1.0 / (1.0 + weight.exp()), weight, logical: rng.gen_bool(0.3), key }
        })
        .collect();
    DecodingGraph::from_parts(Basis::Z, vertices, edges, Vec::new()).unwrap()
}

/// Random subset of detector vertices.
pub fn random_events(rng: &mut impl Rng, graph: &DecodingGraph) -> Vec<u32> {
    let density = rng.gen_range(0.1..0.7);
    (0..graph.vertices().len() as u32)
        .filter(|&v| graph.vertices()[v as usize].kind == VertexKind::Detector && rng.gen_bool(density))
        .collect()
}
