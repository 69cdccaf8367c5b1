use std::borrow::Cow;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::blossom::min_weight_perfect_matching;
use super::paths::Adjacency;
use crate::error::{Error, Result};
use crate::fault_analysis::{DecodingGraph, Edge, VertexKind};

const UNREACHABLE: i64 = i64::MAX / 4;

/// Relative size of the tie-breaking perturbation.
pub const PERTURBATION: f64 = 1e-9;
/// Integer weight quantum, relative to the perturbation scale.
const QUANTUM: f64 = 1e-12;

fn mix(key: u32) -> f64 {
    let mut z = (key as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Integer edge weights with the deterministic per-key perturbation
/// `hash(key) · 1e-9 · w_min` folded in. Depends only on the edge's weight,
/// key and the graph's perturbation scale, so window copies agree.
pub fn perturbed_weights(graph: &DecodingGraph) -> Vec<i64> {
    let scale = graph.perturbation_scale().max(1e-3);
    let quantum = scale * QUANTUM;
    graph
        .edges()
        .iter()
        .map(|e| ((e.weight + mix(e.key) * PERTURBATION * scale) / quantum).round() as i64)
        .collect()
}

/// A pair chosen by the matcher and the edge path realizing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedPair {
    pub a: u32,
    /// Partner event, or the time-boundary vertex reached; `None` for the space boundary.
    pub b: Option<u32>,
    /// Edge indices from `a` to `b`.
    pub path: Vec<u32>,
}

/// A correction `C ⊆ E` for one syndrome.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    /// Sorted edge indices into the decoded graph.
    pub edges: Vec<u32>,
    /// Sum of true edge weights.
    pub weight: f64,
    /// Matched pairs; empty for corrections not produced by matching.
    pub pairs: Vec<MatchedPair>,
}

impl Correction {
    pub fn empty() -> Self {
        Self { edges: Vec::new(), weight: 0.0, pairs: Vec::new() }
    }

    fn from_edges(graph: &DecodingGraph, mut edges: Vec<u32>, pairs: Vec<MatchedPair>) -> Self {
        edges.sort_unstable();
        let weight = graph.total_weight(edges.iter().copied());
        Self { edges, weight, pairs }
    }

    /// `∂C`, including time-boundary vertices.
    pub fn boundary(&self, graph: &DecodingGraph) -> Vec<u32> {
        graph.boundary_of(self.edges.iter().copied())
    }

    /// `∂C` restricted to real detector vertices.
    pub fn detector_boundary(&self, graph: &DecodingGraph) -> Vec<u32> {
        let mut b = self.boundary(graph);
        b.retain(|&v| graph.vertices()[v as usize].kind == VertexKind::Detector);
        b
    }

    /// Global edge keys of `C`, sorted.
    pub fn keys(&self, graph: &DecodingGraph) -> Vec<u32> {
        let mut keys: Vec<u32> = self.edges.iter().map(|&e| graph.edges()[e as usize].key).collect();
        keys.sort_unstable();
        keys
    }

    /// `|C ∩ E_region ∩ L| mod 2`.
    pub fn logical_flip(&self, graph: &DecodingGraph, in_region: impl Fn(&Edge) -> bool) -> bool {
        self.edges.iter().map(|&e| &graph.edges()[e as usize]).filter(|e| in_region(e)).fold(false, |acc, e| acc ^ e.logical)
    }

    pub fn total_logical_flip(&self, graph: &DecodingGraph) -> bool {
        graph.logical_parity(self.edges.iter().copied())
    }
}

/// Exact minimum-weight matching decoder for one graph.
///
/// Precomputes adjacency, integer weights and each vertex's distance to the
/// nearest sink (space boundary or time-boundary vertex). Decoding is pure.
#[derive(Debug, Clone)]
pub struct Mwpm<'g> {
    graph: Cow<'g, DecodingGraph>,
    adj: Adjacency,
    weights: Vec<i64>,
    sink_dist: Vec<i64>,
    sink_pred: Vec<Option<u32>>,
}

impl<'g> Mwpm<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        Self::build(Cow::Borrowed(graph))
    }

    /// Decoder owning its graph.
    pub fn owned(graph: DecodingGraph) -> Mwpm<'static> {
        Mwpm::build(Cow::Owned(graph))
    }

    fn build(graph: Cow<'g, DecodingGraph>) -> Self {
        let graph_ref: &DecodingGraph = &graph;
        let adj = Adjacency::new(graph_ref);
        let weights = perturbed_weights(graph_ref);
        let n = graph_ref.vertices().len();
        let mut sink_dist = vec![UNREACHABLE; n];
        let mut sink_pred = vec![None; n];
        let mut heap = BinaryHeap::new();
        for (v, vx) in graph_ref.vertices().iter().enumerate() {
            if vx.kind == VertexKind::TimeBoundary {
                sink_dist[v] = 0;
                heap.push(Reverse((0, v as u32)));
            }
        }
        for &e in &adj.boundary_edges {
            let a = graph_ref.edges()[e as usize].a as usize;
            let w = weights[e as usize];
            if w < sink_dist[a] {
                sink_dist[a] = w;
                sink_pred[a] = Some(e);
                heap.push(Reverse((w, a as u32)));
            }
        }
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > sink_dist[u as usize] {
                continue;
            }
            for &(w, e) in adj.neighbours(u) {
                let nd = d + weights[e as usize];
                if nd < sink_dist[w as usize] {
                    sink_dist[w as usize] = nd;
                    sink_pred[w as usize] = Some(e);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        Self { graph, adj, weights, sink_dist, sink_pred }
    }

    pub fn graph(&self) -> &DecodingGraph {
        &self.graph
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn perturbed_weight(&self, edges: &[u32]) -> i64 {
        edges.iter().map(|&e| self.weights[e as usize]).sum()
    }

    fn other_end(&self, e: u32, v: u32) -> Option<u32> {
        let edge = &self.graph.edges()[e as usize];
        if edge.a == v {
            edge.b
        } else {
            Some(edge.a)
        }
    }

    fn sink_path(&self, from: u32) -> (Option<u32>, Vec<u32>) {
        let mut path = Vec::new();
        let mut v = from;
        loop {
            match self.sink_pred[v as usize] {
                None => return (Some(v), path),
                Some(e) => {
                    path.push(e);
                    match self.other_end(e, v) {
                        Some(w) => v = w,
                        None => return (None, path),
                    }
                }
            }
        }
    }

    /// Dijkstra from `source` up to `radius`, calling `visit(vertex, dist)` on
    /// each settled vertex. Stops early when `visit` returns false.
    fn explore(
        &self,
        source: u32,
        radius: i64,
        dist: &mut [i64],
        pred: &mut [Option<u32>],
        touched: &mut Vec<u32>,
        mut visit: impl FnMut(u32, i64) -> bool,
    ) {
        let mut heap = BinaryHeap::new();
        dist[source as usize] = 0;
        pred[source as usize] = None;
        touched.push(source);
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u as usize] {
                continue;
            }
            if !visit(u, d) {
                break;
            }
            for &(w, e) in self.adj.neighbours(u) {
                let nd = d + self.weights[e as usize];
                if nd < dist[w as usize] && nd < radius {
                    if dist[w as usize] == UNREACHABLE {
                        touched.push(w);
                    }
                    dist[w as usize] = nd;
                    pred[w as usize] = Some(e);
                    heap.push(Reverse((nd, w)));
                }
            }
        }
    }

    fn reset(dist: &mut [i64], pred: &mut [Option<u32>], touched: &mut Vec<u32>) {
        for v in touched.drain(..) {
            dist[v as usize] = UNREACHABLE;
            pred[v as usize] = None;
        }
    }

    fn validate(&self, events: &[u32]) -> Result<Vec<u32>> {
        let mut sorted = events.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &v in &sorted {
            match self.graph.vertices().get(v as usize) {
                Some(vx) if vx.kind == VertexKind::Detector => {}
                _ => return Err(Error::UnknownVertex(v)),
            }
        }
        Ok(sorted)
    }

    /// Minimum-weight correction whose detector boundary equals `events`
    /// (vertex indices of detector vertices).
    pub fn decode(&self, events: &[u32]) -> Result<Correction> {
        let events = self.validate(events)?;
        if events.is_empty() {
            return Ok(Correction::empty());
        }
        let n = self.graph.vertices().len();
        let k = events.len();
        let mut event_index = vec![u32::MAX; n];
        for (i, &v) in events.iter().enumerate() {
            event_index[v as usize] = i as u32;
        }
        let max_sink = events.iter().map(|&v| self.sink_dist[v as usize]).max().unwrap_or(0);

        let mut dist = vec![UNREACHABLE; n];
        let mut pred = vec![None; n];
        let mut touched = Vec::new();
        let mut pairs: Vec<(usize, usize, i64)> = Vec::new();
        for (i, &u) in events.iter().enumerate() {
            let su = self.sink_dist[u as usize];
            let radius = su.saturating_add(max_sink).min(UNREACHABLE);
            self.explore(u, radius, &mut dist, &mut pred, &mut touched, |v, d| {
                let j = event_index[v as usize];
                if j != u32::MAX && (j as usize) > i {
                    let sv = self.sink_dist[v as usize];
                    if d < su.saturating_add(sv) {
                        pairs.push((i, j as usize, d));
                    }
                }
                true
            });
            Self::reset(&mut dist, &mut pred, &mut touched);
        }

        // components of events linked by useful pairs
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j, _) in &pairs {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in 0..k {
            let r = find(&mut parent, i);
            members[r].push(i);
        }
        let mut local = vec![0usize; k];
        let mut component_pairs: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); k];
        for group in &members {
            for (pos, &i) in group.iter().enumerate() {
                local[i] = pos;
            }
        }
        for &(i, j, d) in &pairs {
            let r = find(&mut parent, i);
            component_pairs[r].push((local[i], local[j], d));
        }

        let mut matched: Vec<(usize, Option<usize>)> = Vec::new();
        for (r, group) in members.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let s = group.len();
            let mut edges = std::mem::take(&mut component_pairs[r]);
            for (pos, &i) in group.iter().enumerate() {
                let sd = self.sink_dist[events[i] as usize];
                if sd < UNREACHABLE {
                    edges.push((pos, s + pos, sd));
                }
                for other in pos + 1..s {
                    edges.push((s + pos, s + other, 0));
                }
            }
            let mate = min_weight_perfect_matching(2 * s, &edges).ok_or(Error::NoSolution)?;
            for pos in 0..s {
                let m = mate[pos];
                if m == s + pos {
                    matched.push((group[pos], None));
                } else if m < s && m > pos {
                    matched.push((group[pos], Some(group[m])));
                } else if m >= s {
                    return Err(Error::NoSolution);
                }
            }
        }

        let mut pairs_out = Vec::with_capacity(matched.len());
        let mut parity = vec![false; self.graph.edges().len()];
        for (i, j) in matched {
            let u = events[i];
            let pair = match j {
                None => {
                    let (end, path) = self.sink_path(u);
                    MatchedPair { a: u, b: end, path }
                }
                Some(j) => {
                    let target = events[j];
                    self.explore(u, UNREACHABLE, &mut dist, &mut pred, &mut touched, |v, _| v != target);
                    let mut path = Vec::new();
                    let mut v = target;
                    while let Some(e) = pred[v as usize] {
                        path.push(e);
                        v = self.other_end(e, v).expect("interior edge");
                    }
                    path.reverse();
                    Self::reset(&mut dist, &mut pred, &mut touched);
                    MatchedPair { a: u, b: Some(target), path }
                }
            };
            for &e in &pair.path {
                parity[e as usize] ^= true;
            }
            pairs_out.push(pair);
        }
        let edges = (0..parity.len() as u32).filter(|&e| parity[e as usize]).collect();
        Ok(Correction::from_edges(&self.graph, edges, pairs_out))
    }
}

/// One-shot decode; prefer [`Mwpm`] when decoding many syndromes on one graph.
pub fn decode(graph: &DecodingGraph, events: &[u32]) -> Result<Correction> {
    Mwpm::new(graph).decode(events)
}

/// Largest graph [`brute_force_decode`] accepts.
pub const BRUTE_FORCE_EDGE_LIMIT: usize = 30;

/// Exhaustive minimum over every edge subset whose detector boundary equals
/// `events`, using the same perturbed weights as [`Mwpm`]. Test oracle.
pub fn brute_force_decode(graph: &DecodingGraph, events: &[u32]) -> Result<Correction> {
    let m = graph.edges().len();
    if m > BRUTE_FORCE_EDGE_LIMIT {
        return Err(Error::TooLarge { edges: m, limit: BRUTE_FORCE_EDGE_LIMIT });
    }
    let n = graph.vertices().len();
    let mut target = vec![false; n];
    for &v in events {
        match graph.vertices().get(v as usize) {
            Some(vx) if vx.kind == VertexKind::Detector => target[v as usize] ^= true,
            _ => return Err(Error::UnknownVertex(v)),
        }
    }
    // one parity row per detector vertex: (edge mask, required parity)
    let mut rows: Vec<(u64, bool)> = graph
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, vx)| vx.kind == VertexKind::Detector)
        .map(|(v, _)| {
            let mask = graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.endpoints().any(|x| x as usize == v))
                .fold(0u64, |acc, (k, _)| acc | 1 << k);
            (mask, target[v])
        })
        .collect();

    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..m {
        let Some(r) = (rank..rows.len()).find(|&r| rows[r].0 >> col & 1 == 1) else {
            continue;
        };
        rows.swap(rank, r);
        let (pm, pb) = rows[rank];
        for (idx, row) in rows.iter_mut().enumerate() {
            if idx != rank && row.0 >> col & 1 == 1 {
                row.0 ^= pm;
                row.1 ^= pb;
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r.1) {
        return Err(Error::NoSolution);
    }
    let mut particular = 0u64;
    for (r, &col) in pivots.iter().enumerate() {
        if rows[r].1 {
            particular |= 1 << col;
        }
    }
    let free: Vec<usize> = (0..m).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<u64> = free
        .iter()
        .map(|&f| {
            let mut v = 1u64 << f;
            for (r, &col) in pivots.iter().enumerate() {
                if rows[r].0 >> f & 1 == 1 {
                    v |= 1 << col;
                }
            }
            v
        })
        .collect();

    let weights = perturbed_weights(graph);
    let weigh = |mask: u64| -> i64 {
        let mut w = 0;
        let mut x = mask;
        while x != 0 {
            w += weights[x.trailing_zeros() as usize];
            x &= x - 1;
        }
        w
    };
    let mut current = particular;
    let mut best = (weigh(current), current);
    for step in 1u64..(1u64 << basis.len()) {
        current ^= basis[step.trailing_zeros() as usize];
        let cand = (weigh(current), current);
        if cand < best {
            best = cand;
        }
    }
    let edges = (0..m as u32).filter(|&e| best.1 >> e & 1 == 1).collect();
    Ok(Correction::from_edges(graph, edges, Vec::new()))
}
