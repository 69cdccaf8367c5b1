//! Merge-free parallel window decoding: independent window decodes,
//! core-restricted logical bits combined by XOR, and seam auditing.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fault_analysis::{DecodingGraph, VertexKind};
use crate::mwpm::{shortest_paths, Correction, Mwpm};
use crate::windowing::{window_subgraph, WindowPlan};

/// Per-window probabilities from an external decoder, keyed by `(shot, window)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    table: HashMap<(u64, usize), f64>,
}

impl Predictions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, shot: u64, window: usize, probability: f64) {
        self.table.insert((shot, window), probability);
    }

    pub fn get(&self, shot: u64, window: usize) -> Option<f64> {
        self.table.get(&(shot, window)).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

/// Window decoder used by [`ParallelDecoder::decode`].
#[derive(Debug, Clone, Copy)]
pub enum Inner<'a> {
    Mwpm,
    /// Precomputed probabilities for one shot; a window predicts 1 when `p ≥ 0.5`.
    Predictions { table: &'a Predictions, shot: u64 },
}

/// One window's decoding graph and matcher, with its core edges marked.
#[derive(Debug, Clone)]
pub struct WindowDecoder {
    pub index: usize,
    pub mwpm: Mwpm<'static>,
    /// Per window edge: whether its global key lies in this window's core.
    pub in_core: Vec<bool>,
    /// Smallest and largest global detector id of the window's detector vertices.
    detector_range: Option<(u32, u32)>,
}

impl WindowDecoder {
    pub fn graph(&self) -> &DecodingGraph {
        self.mwpm.graph()
    }

    /// Window vertices carrying events, from sorted global detector ids.
    pub fn local_events(&self, detectors: &[u32]) -> Vec<u32> {
        let Some((lo, hi)) = self.detector_range else { return Vec::new() };
        let g = self.graph();
        let from = detectors.partition_point(|&d| d < lo);
        let to = detectors.partition_point(|&d| d <= hi);
        detectors[from..to.max(from)].iter().filter_map(|&d| g.vertex_for_detector(d)).collect()
    }

    pub fn decode(&self, detectors: &[u32]) -> Result<Correction> {
        self.mwpm.decode(&self.local_events(detectors))
    }

    /// `|C ∩ Eᶜᵢ ∩ L| mod 2`.
    pub fn core_flip(&self, c: &Correction) -> bool {
        c.edges
            .iter()
            .filter(|&&e| self.in_core[e as usize])
            .fold(false, |acc, &e| acc ^ self.graph().edges()[e as usize].logical)
    }
}

#[derive(Debug, Clone)]
pub struct ParallelResult {
    /// `ŷᵢ`, window order.
    pub window_bits: Vec<bool>,
    /// `ŷ = ⊕ᵢ ŷᵢ`.
    pub y: bool,
    /// Window corrections (MWPM inner only).
    pub corrections: Vec<Option<Correction>>,
    /// Seam audit per seam when requested; detector ids.
    pub seams: Option<Vec<Vec<u32>>>,
    pub timings: Vec<Duration>,
}

impl ParallelResult {
    /// Whether any audited seam is non-trivial.
    pub fn seam_syndrome(&self) -> bool {
        self.seams.as_ref().is_some_and(|s| s.iter().any(|v| !v.is_empty()))
    }
}

/// Precomputed window subgraphs and matchers for one global graph and plan.
#[derive(Debug, Clone)]
pub struct ParallelDecoder<'g> {
    pub graph: &'g DecodingGraph,
    pub plan: WindowPlan,
    pub windows: Vec<WindowDecoder>,
    /// Core owner of each global edge.
    pub partition: Vec<usize>,
}

impl<'g> ParallelDecoder<'g> {
    pub fn new(graph: &'g DecodingGraph, plan: WindowPlan) -> Result<Self> {
        let partition = plan.core_partition(graph);
        let windows = (1..=plan.window_count())
            .into_par_iter()
            .map(|index| {
                let sub = window_subgraph(graph, &plan, index)?;
                let in_core = sub.edges().iter().map(|e| partition[e.key as usize] == index).collect();
                let ids = sub.vertices().iter().filter(|v| v.kind == VertexKind::Detector).map(|v| v.detector);
                let detector_range = ids.clone().min().zip(ids.max());
                Ok(WindowDecoder { index, mwpm: Mwpm::owned(sub), in_core, detector_range })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { graph, plan, windows, partition })
    }

    /// Decodes every window independently. Runs on the current rayon pool;
    /// the result does not depend on its size or scheduling.
    pub fn decode(&self, detectors: &[u32], inner: Inner<'_>, audit: bool) -> Result<ParallelResult> {
        let per_window: Vec<(bool, Option<Correction>, Duration)> = self
            .windows
            .par_iter()
            .map(|w| {
                let start = Instant::now();
                let out = match inner {
                    Inner::Mwpm => {
                        let c = w.decode(detectors)?;
                        (w.core_flip(&c), Some(c))
                    }
                    Inner::Predictions { table, shot } => {
                        let p = table
                            .get(shot, w.index)
                            .ok_or(Error::MissingPrediction { shot, window: w.index })?;
                        (p >= 0.5, None)
                    }
                };
                Ok((out.0, out.1, start.elapsed()))
            })
            .collect::<Result<_>>()?;

        let mut window_bits = Vec::with_capacity(per_window.len());
        let mut corrections = Vec::with_capacity(per_window.len());
        let mut timings = Vec::with_capacity(per_window.len());
        for (bit, c, t) in per_window {
            window_bits.push(bit);
            corrections.push(c);
            timings.push(t);
        }
        let seams = if audit && matches!(inner, Inner::Mwpm) {
            let mut seams = Vec::with_capacity(self.windows.len().saturating_sub(1));
            for i in 1..self.windows.len() {
                let left = self.window_correction(i, corrections[i - 1].as_ref().expect("mwpm inner"));
                let right = self.window_correction(i + 1, corrections[i].as_ref().expect("mwpm inner"));
                seams.push(seam_audit(&self.plan, left, right)?);
            }
            Some(seams)
        } else {
            None
        };
        let y = window_bits.iter().fold(false, |acc, &b| acc ^ b);
        Ok(ParallelResult { window_bits, y, corrections, seams, timings })
    }

    pub fn window_correction<'a>(&'a self, index: usize, correction: &'a Correction) -> WindowCorrection<'a> {
        WindowCorrection { index, graph: self.windows[index - 1].graph(), correction }
    }

    /// Weighted buffer size `w_b`: the shortest distance, over every seam, from
    /// a seam vertex to a virtual time-boundary vertex of either adjacent window.
    pub fn weighted_buffer(&self) -> f64 {
        let mut best = f64::INFINITY;
        for seam in 1..self.windows.len() {
            let layer = self.plan.seam_layer(seam);
            for (w, layer) in [(&self.windows[seam - 1], layer), (&self.windows[seam], layer - 1)] {
                let g = w.graph();
                let sources: Vec<u32> = (0..g.vertices().len() as u32)
                    .filter(|&v| {
                        let vx = g.vertices()[v as usize];
                        vx.kind == VertexKind::Detector && vx.round as i64 == layer
                    })
                    .collect();
                for t in shortest_paths(g, &sources) {
                    best = best.min(t.time_boundary_distance(g));
                }
            }
        }
        best
    }
}

/// A window's correction together with the graph it indexes.
#[derive(Debug, Clone, Copy)]
pub struct WindowCorrection<'a> {
    pub index: usize,
    pub graph: &'a DecodingGraph,
    pub correction: &'a Correction,
}

/// Residual syndrome on the seam between adjacent windows `i` and `i + 1`.
///
/// Seam vertices are the detectors of layer `ic + 1`. Every edge touching them
/// lies in core `i` or `i + 1`, and the right window's correction reproduces the
/// events there, so the merge-free correction leaves a defect at `v` exactly when
/// `D = Cᵢ ⊕ Cᵢ₊₁` restricted to core `i` has odd degree at `v`. Returns those
/// detector ids, sorted.
pub fn seam_audit(plan: &WindowPlan, left: WindowCorrection<'_>, right: WindowCorrection<'_>) -> Result<Vec<u32>> {
    if right.index != left.index + 1 {
        return Err(Error::NoOverlap { left: left.index, right: right.index });
    }
    plan.overlap(left.index, right.index)?;
    let layer = plan.seam_layer(left.index) as u32;
    // key -> seam detectors touched, for edges in the left window's core
    let seam_edges = |wc: &WindowCorrection<'_>| -> HashMap<u32, Vec<u32>> {
        wc.correction
            .edges
            .iter()
            .filter_map(|&e| {
                let edge = &wc.graph.edges()[e as usize];
                let ends: Vec<_> = edge.endpoints().map(|v| wc.graph.vertices()[v as usize]).collect();
                let key_round = ends.iter().map(|v| v.round).min()?;
                (plan.owner_of_round(key_round) == left.index).then(|| {
                    let seam = ends.iter().filter(|v| v.round == layer).map(|v| v.detector).collect();
                    (edge.key, seam)
                })
            })
            .collect()
    };
    let (l, r) = (seam_edges(&left), seam_edges(&right));
    let mut parity: HashMap<u32, bool> = HashMap::new();
    for (map, other) in [(&l, &r), (&r, &l)] {
        for (key, ends) in map {
            if !other.contains_key(key) {
                for &d in ends {
                    *parity.entry(d).or_default() ^= true;
                }
            }
        }
    }
    let mut out: Vec<u32> = parity.into_iter().filter(|&(_, odd)| odd).map(|(d, _)| d).collect();
    out.sort_unstable();
    Ok(out)
}

/// Calls `visit` on every edge set of `graph` whose total weight is below
/// `limit`, the empty set included; returns how many there were.
pub fn light_error_sets(graph: &DecodingGraph, limit: f64, mut visit: impl FnMut(&[u32])) -> usize {
    let mut order: Vec<u32> = (0..graph.edges().len() as u32).collect();
    order.sort_by(|&a, &b| graph.edges()[a as usize].weight.total_cmp(&graph.edges()[b as usize].weight));
    let weights: Vec<f64> = order.iter().map(|&e| graph.edges()[e as usize].weight).collect();
    fn walk(order: &[u32], weights: &[f64], from: usize, budget: f64, set: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) -> usize {
        visit(set);
        let mut n = 1;
        for k in from..order.len() {
            // sorted, so nothing later fits either
            if weights[k] >= budget {
                break;
            }
            set.push(order[k]);
            n += walk(order, weights, k + 1, budget - weights[k], set, visit);
            set.pop();
        }
        n
    }
    walk(&order, &weights, 0, limit, &mut Vec::new(), &mut visit)
}

/// Result of [`check_seam_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct SeamBoundCheck {
    pub weighted_buffer: f64,
    /// Error sets examined.
    pub sets: usize,
    /// Sets that left a seam syndrome (at most 16 kept).
    pub violations: Vec<Vec<u32>>,
    pub violation_count: usize,
}

/// Decodes the syndrome of every error set lighter than `w_b / 2` with seam
/// audits on, recording the sets that leave a non-trivial seam.
pub fn check_seam_bound(decoder: &ParallelDecoder<'_>) -> Result<SeamBoundCheck> {
    let g = decoder.graph;
    let w_b = decoder.weighted_buffer();
    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut failure = None;
    let sets = light_error_sets(g, w_b / 2.0, |set| {
        if failure.is_some() {
            return;
        }
        let mut events: Vec<u32> =
            g.boundary_of(set.iter().copied()).into_iter().map(|v| g.vertices()[v as usize].detector).collect();
        events.sort_unstable();
        match decoder.decode(&events, Inner::Mwpm, true) {
            Ok(r) if r.seam_syndrome() => {
                violation_count += 1;
                if violations.len() < 16 {
                    violations.push(set.to_vec());
                }
            }
            Ok(_) => {}
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(SeamBoundCheck { weighted_buffer: w_b, sets, violations, violation_count }),
    }
}

/// Logical prediction of MWPM on the whole graph.
pub fn decode_global(mwpm: &Mwpm<'_>, detectors: &[u32]) -> Result<bool> {
    let g = mwpm.graph();
    let events: Vec<u32> = detectors.iter().filter_map(|&d| g.vertex_for_detector(d)).collect();
    Ok(mwpm.decode(&events)?.total_logical_flip(g))
}

/// Throughput of one worker count.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputRow {
    pub workers: usize,
    pub windows: usize,
    pub rounds: usize,
    pub shots: usize,
    pub seconds: f64,
    /// `seconds / (shots · m · c)`.
    pub seconds_per_round: f64,
}

/// Times parallel MWPM decoding of `shots` (sorted detector lists) on a pool
/// of each worker count, after one warm-up pass.
pub fn benchmark_throughput(
    decoder: &ParallelDecoder<'_>,
    shots: &[Vec<u32>],
    workers: &[usize],
) -> Result<Vec<ThroughputRow>> {
    let mut rows = Vec::with_capacity(workers.len());
    for &n in workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let seconds = pool.install(|| -> Result<f64> {
            for s in shots.iter().take(4) {
                decoder.decode(s, Inner::Mwpm, false)?;
            }
            let start = Instant::now();
            for s in shots {
                decoder.decode(s, Inner::Mwpm, false)?;
            }
            Ok(start.elapsed().as_secs_f64())
        })?;
        let m = decoder.plan.window_count();
        let rounds_per_shot = (m * decoder.plan.core) as f64;
        rows.push(ThroughputRow {
            workers: n,
            windows: m,
            rounds: decoder.plan.rounds,
            shots: shots.len(),
            seconds,
            seconds_per_round: seconds / (shots.len().max(1) as f64 * rounds_per_shot),
        });
    }
    Ok(rows)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(pool.install(f))
}
