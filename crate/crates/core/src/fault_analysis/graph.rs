use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use super::dem::{xor_probability, DetectorErrorModel};
use crate::code_model::Basis;
use crate::error::{Error, Result};

/// Edges lighter than this probability are dropped from decoding graphs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Log-likelihood weight `ln((1 - p) / p)`.
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// A real detector.
    Detector,
    /// Stand-in for the detector just beyond a window's open time boundary.
    /// It is matchable and belongs to the window's vertex set.
    TimeBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vertex {
    /// Global detector id (for time-boundary vertices, the detector it stands in for).
    pub detector: u32,
    pub round: u32,
    pub slot: (u16, u16),
    pub kind: VertexKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: u32,
    /// `None` for edges into the space boundary, which is not a vertex.
    pub b: Option<u32>,
    pub probability: f64,
    pub weight: f64,
    /// Membership in the logical operator `L`.
    pub logical: bool,
    /// Index of this edge in the global graph; shared by every window copy.
    pub key: u32,
}

impl Edge {
    pub fn endpoints(&self) -> impl Iterator<Item = u32> {
        std::iter::once(self.a).chain(self.b)
    }
}

/// Graphlike restriction of a detector error model to one stabilizer type.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingGraph {
    pub basis: Basis,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_of_detector: HashMap<u32, u32>,
    mechanism_edges: Vec<Vec<u32>>,
    lightest_global_weight: f64,
}

impl DecodingGraph {
    /// Assembles a graph from parts. Edge keys must be unique; the
    /// perturbation scale defaults to the lightest edge weight.
    pub fn from_parts(
        basis: Basis,
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        mechanism_edges: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let n = vertices.len() as u32;
        for e in &edges {
            if e.a >= n || e.b.is_some_and(|b| b >= n || b == e.a) {
                return Err(Error::InvalidParameter(format!("edge {} has bad endpoints", e.key)));
            }
            if !(e.weight > 0.0) {
                return Err(Error::InvalidParameter(format!("edge {} has weight {}", e.key, e.weight)));
            }
        }
        let lightest = edges.iter().map(|e| e.weight).fold(f64::INFINITY, f64::min);
        let vertex_of_detector = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VertexKind::Detector)
            .map(|(k, v)| (v.detector, k as u32))
            .collect();
        Ok(Self {
            basis,
            vertices,
            edges,
            vertex_of_detector,
            mechanism_edges,
            lightest_global_weight: if lightest.is_finite() { lightest } else { 1.0 },
        })
    }

    /// Subgraph constructor keeping the parent's perturbation scale.
    pub(crate) fn derived(&self, vertices: Vec<Vertex>, edges: Vec<Edge>) -> Self {
        let mut g = Self::from_parts(self.basis, vertices, edges, Vec::new())
            .expect("subgraph of a valid graph is valid");
        g.lightest_global_weight = self.lightest_global_weight;
        g
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_for_detector(&self, detector: u32) -> Option<u32> {
        self.vertex_of_detector.get(&detector).copied()
    }

    /// Graph edges a DEM mechanism decomposes into (global graphs only).
    pub fn mechanism_edges(&self, mechanism: usize) -> &[u32] {
        self.mechanism_edges.get(mechanism).map_or(&[], Vec::as_slice)
    }

    pub fn mechanism_count(&self) -> usize {
        self.mechanism_edges.len()
    }

    /// Lightest edge weight of the global graph; sets the tie-breaking scale.
    pub fn perturbation_scale(&self) -> f64 {
        self.lightest_global_weight
    }

    pub fn max_round(&self) -> u32 {
        self.vertices.iter().map(|v| v.round).max().unwrap_or(0)
    }

    /// Vertices of odd degree in the edge set (the space boundary is never included).
    pub fn boundary_of(&self, edges: impl IntoIterator<Item = u32>) -> Vec<u32> {
        let mut odd = vec![false; self.vertices.len()];
        for e in edges {
            for v in self.edges[e as usize].endpoints() {
                odd[v as usize] ^= true;
            }
        }
        (0..self.vertices.len() as u32).filter(|&v| odd[v as usize]).collect()
    }

    pub fn logical_parity(&self, edges: impl IntoIterator<Item = u32>) -> bool {
        edges.into_iter().fold(false, |acc, e| acc ^ self.edges[e as usize].logical)
    }

    pub fn total_weight(&self, edges: impl IntoIterator<Item = u32>) -> f64 {
        edges.into_iter().map(|e| self.edges[e as usize].weight).sum()
    }

    /// Whether every vertex reaches the space boundary (or a time boundary).
    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n + 1];
        for e in &self.edges {
            let b = e.b.map_or(n, |b| b as usize);
            adj[e.a as usize].push(b);
            adj[b].push(e.a as usize);
        }
        let mut seen = vec![false; n + 1];
        let mut queue: VecDeque<usize> = VecDeque::new();
        seen[n] = true;
        queue.push_back(n);
        for (k, v) in self.vertices.iter().enumerate() {
            if v.kind == VertexKind::TimeBoundary {
                seen[k] = true;
                queue.push_back(k);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Fewest edges in an undetectable edge set with odd logical parity.
    pub fn logical_distance(&self) -> Option<usize> {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n + 1];
        for e in &self.edges {
            let b = e.b.map_or(n, |b| b as usize);
            adj[e.a as usize].push((b, e.logical));
            adj[b].push((e.a as usize, e.logical));
        }
        let mut dist = vec![[usize::MAX; 2]; n + 1];
        dist[n][0] = 0;
        let mut queue = VecDeque::from([(n, 0usize)]);
        while let Some((u, par)) = queue.pop_front() {
            for &(w, l) in &adj[u] {
                let np = par ^ l as usize;
                if dist[w][np] == usize::MAX {
                    dist[w][np] = dist[u][par] + 1;
                    queue.push_back((w, np));
                }
            }
        }
        (dist[n][1] != usize::MAX).then_some(dist[n][1])
    }

    /// Edge-list CSV: `key,u,v,probability,weight,logical`, with vertices named
    /// `D<detector>`, `T<detector>` for time-boundary stand-ins and `B` for the space boundary.
    pub fn to_csv(&self) -> String {
        let name = |v: u32| {
            let vx = &self.vertices[v as usize];
            match vx.kind {
                VertexKind::Detector => format!("D{}", vx.detector),
                VertexKind::TimeBoundary => format!("T{}", vx.detector),
            }
        };
        let mut out = String::from("key,u,v,probability,weight,logical\n");
        for e in &self.edges {
            let v = e.b.map_or_else(|| "B".to_string(), name);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.key,
                name(e.a),
                v,
                e.probability,
                e.weight,
                e.logical as u8
            );
        }
        out
    }
}

type Component = (u32, Option<u32>, bool);

/// Splits `dets` into known graphlike components whose logical bits XOR to `logical`.
fn split_into_known(
    dets: &[u32],
    logical: bool,
    known: &HashMap<(u32, Option<u32>), u8>,
    out: &mut Vec<Component>,
) -> bool {
    let Some((&first, rest)) = dets.split_first() else {
        return !logical;
    };
    let try_component = |a: u32, b: Option<u32>, remaining: Vec<u32>, out: &mut Vec<Component>| {
        let mask = known.get(&(a, b)).copied().unwrap_or(0);
        for l in [false, true] {
            if mask & (1 << l as u8) == 0 {
                continue;
            }
            out.push((a, b, l));
            if split_into_known(&remaining, logical ^ l, known, out) {
                return true;
            }
            out.pop();
        }
        false
    };
    for (j, &other) in rest.iter().enumerate() {
        let remaining: Vec<u32> =
            rest.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &d)| d).collect();
        if try_component(first, Some(other), remaining, out) {
            return true;
        }
    }
    try_component(first, None, rest.to_vec(), out)
}

/// Restricts the DEM to detectors of `basis` and decomposes every mechanism
/// into edges touching at most two detectors.
///
/// Mechanisms already flipping one or two such detectors define the edge set;
/// larger ones are split into those known edges with matching logical parity.
/// Probabilities of coinciding contributions merge as independent XOR events.
pub fn decompose_to_graph(dem: &DetectorErrorModel, basis: Basis) -> Result<DecodingGraph> {
    let restricted: Vec<Vec<u32>> = dem
        .mechanisms
        .iter()
        .map(|m| {
            m.detectors
                .iter()
                .copied()
                .filter(|&d| dem.detectors[d as usize].basis == basis)
                .collect()
        })
        .collect();

    let mut known: HashMap<(u32, Option<u32>), u8> = HashMap::new();
    for (m, dets) in dem.mechanisms.iter().zip(&restricted) {
        let key = match dets.as_slice() {
            [a] => (*a, None),
            [a, b] => (*a, Some(*b)),
            _ => continue,
        };
        *known.entry(key).or_default() |= 1 << m.logical_flip as u8;
    }

    let mut components: Vec<Vec<Component>> = Vec::with_capacity(dem.mechanisms.len());
    for (index, (m, dets)) in dem.mechanisms.iter().zip(&restricted).enumerate() {
        let parts = match dets.as_slice() {
            [] if !m.logical_flip => Vec::new(),
            [a] => vec![(*a, None, m.logical_flip)],
            [a, b] => vec![(*a, Some(*b), m.logical_flip)],
            _ => {
                let mut out = Vec::new();
                if dets.is_empty() || !split_into_known(dets, m.logical_flip, &known, &mut out) {
                    return Err(Error::Decomposition { index, detectors: dets.clone() });
                }
                out
            }
        };
        components.push(parts);
    }

    let mut merged: BTreeMap<Component, f64> = BTreeMap::new();
    for (m, parts) in dem.mechanisms.iter().zip(&components) {
        for &c in parts {
            let q = merged.entry(c).or_insert(0.0);
            *q = xor_probability(*q, m.probability);
        }
    }

    let mut vertex_ids: Vec<u32> = dem
        .detectors
        .iter()
        .enumerate()
        .filter(|(_, d)| d.basis == basis)
        .map(|(k, _)| k as u32)
        .collect();
    vertex_ids.sort_unstable();
    let vertex_index: HashMap<u32, u32> =
        vertex_ids.iter().enumerate().map(|(k, &d)| (d, k as u32)).collect();
    let vertices = vertex_ids
        .iter()
        .map(|&d| {
            let info = dem.detectors[d as usize];
            Vertex { detector: d, round: info.round, slot: info.slot, kind: VertexKind::Detector }
        })
        .collect();

    let mut edge_index: HashMap<Component, u32> = HashMap::new();
    let mut edges = Vec::new();
    for (&(a, b, logical), &p) in &merged {
        if p < PROBABILITY_FLOOR {
            continue;
        }
        if p >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "merged edge probability {p} is not below 1/2"
            )));
        }
        let key = edges.len() as u32;
        edge_index.insert((a, b, logical), key);
        edges.push(Edge {
            a: vertex_index[&a],
            b: b.map(|b| vertex_index[&b]),
            probability: p,
            weight: edge_weight(p),
            logical,
            key,
        });
    }
    let mechanism_edges = components
        .iter()
        .map(|parts| parts.iter().filter_map(|c| edge_index.get(c).copied()).collect())
        .collect();

    DecodingGraph::from_parts(basis, vertices, edges, mechanism_edges)
}
