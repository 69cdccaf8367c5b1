use std::collections::BTreeMap;

use super::plan::WindowPlan;
use crate::error::Result;
use crate::fault_analysis::{DecodingGraph, Edge, Vertex, VertexKind};

/// Decoding graph of window `index`: every detector vertex whose layer lies in
/// the window span, plus one matchable time-boundary vertex for each outside
/// detector reached by a crossing edge. Edges keep their global keys.
///
/// Closed (padded) boundaries have no outside detectors and so no virtual vertices.
pub fn window_subgraph(graph: &DecodingGraph, plan: &WindowPlan, index: usize) -> Result<DecodingGraph> {
    let window = plan.window(index)?;
    let inside = |v: &Vertex| v.kind == VertexKind::Detector && window.contains(v.round as i64);

    let mut local = vec![u32::MAX; graph.vertices().len()];
    let mut vertices = Vec::new();
    for (k, v) in graph.vertices().iter().enumerate() {
        if inside(v) {
            local[k] = vertices.len() as u32;
            vertices.push(*v);
        }
    }
    let mut outside: BTreeMap<u32, u32> = BTreeMap::new();
    for e in graph.edges() {
        let ends: Vec<u32> = e.endpoints().collect();
        if ends.iter().any(|&v| local[v as usize] != u32::MAX) {
            for &v in &ends {
                if local[v as usize] == u32::MAX {
                    outside.entry(graph.vertices()[v as usize].detector).or_insert(v);
                }
            }
        }
    }
    for &v in outside.values() {
        local[v as usize] = vertices.len() as u32;
        vertices.push(Vertex { kind: VertexKind::TimeBoundary, ..graph.vertices()[v as usize] });
    }

    let is_real = |v: u32| graph.vertices()[v as usize].kind == VertexKind::Detector && inside(&graph.vertices()[v as usize]);
    let edges = graph
        .edges()
        .iter()
        .filter(|e| e.endpoints().any(is_real))
        .map(|e| {
            let (a, b) = match e.b {
                Some(b) if !is_real(e.a) => (b, Some(e.a)),
                other => (e.a, other),
            };
            Edge { a: local[a as usize], b: b.map(|b| local[b as usize]), ..*e }
        })
        .collect();
    Ok(graph.derived(vertices, edges))
}
