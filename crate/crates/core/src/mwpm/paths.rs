use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::fault_analysis::{DecodingGraph, VertexKind};

/// Compressed adjacency: for each vertex, `(neighbour, edge index)`; the
/// space boundary has no entry and is reached through `boundary_edges`.
#[derive(Debug, Clone)]
pub(crate) struct Adjacency {
    start: Vec<u32>,
    entries: Vec<(u32, u32)>,
    pub(crate) boundary_edges: Vec<u32>,
}

impl Adjacency {
    pub(crate) fn new(graph: &DecodingGraph) -> Self {
        let n = graph.vertices().len();
        let mut degree = vec![0u32; n + 1];
        let mut boundary_edges = Vec::new();
        for (k, e) in graph.edges().iter().enumerate() {
            match e.b {
                Some(b) => {
                    degree[e.a as usize + 1] += 1;
                    degree[b as usize + 1] += 1;
                }
                None => boundary_edges.push(k as u32),
            }
        }
        for v in 0..n {
            degree[v + 1] += degree[v];
        }
        let start = degree.clone();
        let mut fill = degree;
        let mut entries = vec![(0, 0); start[n] as usize];
        for (k, e) in graph.edges().iter().enumerate() {
            if let Some(b) = e.b {
                entries[fill[e.a as usize] as usize] = (b, k as u32);
                fill[e.a as usize] += 1;
                entries[fill[b as usize] as usize] = (e.a, k as u32);
                fill[b as usize] += 1;
            }
        }
        Self { start, entries, boundary_edges }
    }

    pub(crate) fn neighbours(&self, v: u32) -> &[(u32, u32)] {
        &self.entries[self.start[v as usize] as usize..self.start[v as usize + 1] as usize]
    }
}

/// Single-source shortest paths with true edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    pub source: u32,
    /// Distance to every vertex; `f64::INFINITY` when unreachable.
    pub dist: Vec<f64>,
    /// Edge through which each vertex was reached.
    pub pred: Vec<Option<u32>>,
    /// Distance to the space boundary.
    pub boundary: f64,
    /// Final edge of the shortest path into the space boundary.
    pub boundary_pred: Option<u32>,
}

impl PathTable {
    /// Edge path from the source to `target`, source end first.
    pub fn path_to(&self, graph: &DecodingGraph, target: u32) -> Option<Vec<u32>> {
        if !self.dist[target as usize].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = target;
        while let Some(e) = self.pred[v as usize] {
            path.push(e);
            let edge = &graph.edges()[e as usize];
            v = if edge.a == v { edge.b.expect("interior edge") } else { edge.a };
        }
        path.reverse();
        Some(path)
    }

    /// Edge path from the source into the space boundary.
    pub fn path_to_boundary(&self, graph: &DecodingGraph) -> Option<Vec<u32>> {
        let last = self.boundary_pred?;
        let mut path = self.path_to(graph, graph.edges()[last as usize].a)?;
        path.push(last);
        Some(path)
    }

    /// Distance to the nearest time-boundary vertex.
    pub fn time_boundary_distance(&self, graph: &DecodingGraph) -> f64 {
        graph
            .vertices()
            .iter()
            .zip(&self.dist)
            .filter(|(v, _)| v.kind == VertexKind::TimeBoundary)
            .map(|(_, &d)| d)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra from each source over true weights. All weights must be positive.
pub fn shortest_paths(graph: &DecodingGraph, sources: &[u32]) -> Vec<PathTable> {
    let adj = Adjacency::new(graph);
    let n = graph.vertices().len();
    sources
        .iter()
        .map(|&s| {
            let mut dist = vec![f64::INFINITY; n];
            let mut pred = vec![None; n];
            let mut heap = BinaryHeap::new();
            dist[s as usize] = 0.0;
            heap.push(Reverse((Key(0.0), s)));
            while let Some(Reverse((Key(d), u))) = heap.pop() {
                if d > dist[u as usize] {
                    continue;
                }
                for &(w, e) in adj.neighbours(u) {
                    let nd = d + graph.edges()[e as usize].weight;
                    if nd < dist[w as usize] {
                        dist[w as usize] = nd;
                        pred[w as usize] = Some(e);
                        heap.push(Reverse((Key(nd), w)));
                    }
                }
            }
            let mut boundary = f64::INFINITY;
            let mut boundary_pred = None;
            for &e in &adj.boundary_edges {
                let edge = &graph.edges()[e as usize];
                let d = dist[edge.a as usize] + edge.weight;
                if d < boundary {
                    boundary = d;
                    boundary_pred = Some(e);
                }
            }
            PathTable { source: s, dist, pred, boundary, boundary_pred }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::Basis;
    use crate::fault_analysis::{Edge, Vertex};

    fn vertex(k: u32) -> Vertex {
        Vertex { detector: k, round: 1, slot: (0, 0), kind: VertexKind::Detector }
    }

    fn edge(key: u32, a: u32, b: Option<u32>, weight: f64) -> Edge {
        Edge { a, b, probability: 0.1, weight, logical: false, key }
    }

    #[test]
    fn single_edge_and_self() {
        let g = DecodingGraph::from_parts(
            Basis::Z,
            vec![vertex(0), vertex(1)],
            vec![edge(0, 0, Some(1), 2.3)],
            Vec::new(),
        )
        .unwrap();
        let t = &shortest_paths(&g, &[0])[0];
        assert_eq!(t.dist[0], 0.0);
        assert_eq!(t.dist[1], 2.3);
        assert_eq!(t.boundary, f64::INFINITY);
        assert_eq!(t.path_to(&g, 1), Some(vec![0]));
        assert!(t.path_to_boundary(&g).is_none());
    }

    #[test]
    fn disconnected_is_infinite() {
        let g = DecodingGraph::from_parts(
            Basis::Z,
            vec![vertex(0), vertex(1), vertex(2)],
            vec![edge(0, 0, Some(1), 1.0), edge(1, 2, None, 1.0)],
            Vec::new(),
        )
        .unwrap();
        let t = &shortest_paths(&g, &[0])[0];
        assert!(t.dist[2].is_infinite());
        assert!(t.path_to(&g, 2).is_none());
        assert_eq!(shortest_paths(&g, &[2])[0].path_to_boundary(&g), Some(vec![1]));
    }
}
