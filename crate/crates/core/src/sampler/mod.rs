//! Shot sampling from a detector error model and ground-truth window labels.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fault_analysis::{DecodingGraph, DetectorErrorModel, VertexKind};
use crate::windowing::WindowPlan;

/// Generator for shot `index` of a run keyed by `seed`; independent of any other shot.
pub fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One sampled error configuration and its syndrome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shot {
    /// Fired mechanism ids, ascending.
    pub fired: Vec<u32>,
    /// Detection events, bit `k` of word `k / 64` for detector `k`.
    pub events: Vec<u64>,
    pub y_global: bool,
}

impl Shot {
    pub fn event(&self, detector: u32) -> bool {
        self.events[detector as usize / 64] >> (detector % 64) & 1 == 1
    }

    /// Detectors with an event, ascending.
    pub fn event_detectors(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, &word) in self.events.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                out.push(w as u32 * 64 + x.trailing_zeros());
                x &= x - 1;
            }
        }
        out
    }

    /// Detector vertices of `graph` carrying an event.
    pub fn events_in(&self, graph: &DecodingGraph) -> Vec<u32> {
        graph
            .vertices()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VertexKind::Detector && self.event(v.detector))
            .map(|(k, _)| k as u32)
            .collect()
    }

    /// Global edge set `𝓔`: XOR of the fired mechanisms' edges.
    pub fn fired_edges(&self, graph: &DecodingGraph) -> Vec<u32> {
        let mut edges: Vec<u32> = self.fired.iter().flat_map(|&m| graph.mechanism_edges(m as usize).iter().copied()).collect();
        edges.sort_unstable();
        let mut out: Vec<u32> = Vec::with_capacity(edges.len());
        for e in edges {
            if out.last() == Some(&e) {
                out.pop();
            } else {
                out.push(e);
            }
        }
        out
    }
}

/// Per-window ground truth `yᵢ = |𝓔 ∩ Eᶜᵢ ∩ L| mod 2`, windows in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowLabels {
    pub y: Vec<bool>,
}

impl WindowLabels {
    pub fn combined(&self) -> bool {
        self.y.iter().fold(false, |acc, &b| acc ^ b)
    }
}

/// Mechanisms grouped by probability class `(2^-(k+1), 2^-k]`; candidates are
/// drawn at rate `2^-k` by geometric skipping and thinned to their exact probability.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    dem: &'a DetectorErrorModel,
    classes: Vec<(f64, Vec<u32>)>,
    words: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(dem: &'a DetectorErrorModel) -> Self {
        let mut classes: Vec<(f64, Vec<u32>)> = Vec::new();
        for (k, m) in dem.mechanisms.iter().enumerate() {
            if m.probability <= 0.0 {
                continue;
            }
            let class = (-m.probability.log2()).floor().max(0.0) as i32;
            let rate = 0.5f64.powi(class);
            match classes.iter_mut().find(|(r, _)| *r == rate) {
                Some((_, ids)) => ids.push(k as u32),
                None => classes.push((rate, vec![k as u32])),
            }
        }
        classes.sort_by(|a, b| b.0.total_cmp(&a.0));
        Self { dem, classes, words: dem.detector_count().div_ceil(64) }
    }

    pub fn dem(&self) -> &'a DetectorErrorModel {
        self.dem
    }

    pub fn sample_with(&self, rng: &mut impl Rng) -> Shot {
        let mut fired = Vec::new();
        for (rate, ids) in &self.classes {
            let log_miss = (1.0 - rate).ln();
            let mut pos = 0usize;
            loop {
                if *rate < 1.0 {
                    let u: f64 = 1.0 - rng.gen::<f64>();
                    pos += (u.ln() / log_miss).floor() as usize;
                }
                if pos >= ids.len() {
                    break;
                }
                let id = ids[pos];
                let p = self.dem.mechanisms[id as usize].probability;
                if p >= *rate || rng.gen::<f64>() * rate < p {
                    fired.push(id);
                }
                pos += 1;
            }
        }
        fired.sort_unstable();
        let mut events = vec![0u64; self.words];
        let mut y_global = false;
        for &id in &fired {
            let m = &self.dem.mechanisms[id as usize];
            for &d in &m.detectors {
                events[d as usize / 64] ^= 1 << (d % 64);
            }
            y_global ^= m.logical_flip;
        }
        Shot { fired, events, y_global }
    }

    /// Shot `index` of the run keyed by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Shot {
        self.sample_with(&mut shot_rng(seed, index))
    }
}

/// Samples shot `index` of the run keyed by `seed`.
pub fn sample_shot(dem: &DetectorErrorModel, seed: u64, index: u64) -> Shot {
    Sampler::new(dem).sample(seed, index)
}

/// Ground-truth labels of every window. `partition` is the plan's core
/// assignment of the graph's edges (see [`WindowPlan::core_partition`]).
pub fn derive_window_labels(
    shot: &Shot,
    plan: &WindowPlan,
    graph: &DecodingGraph,
    partition: &[usize],
) -> Result<WindowLabels> {
    let m = plan.window_count();
    let mut y = vec![false; m];
    for e in shot.fired_edges(graph) {
        let owner = partition.get(e as usize).copied().filter(|&w| (1..=m).contains(&w));
        let owner = owner.ok_or(Error::Partition(e as usize))?;
        if graph.edges()[e as usize].logical {
            y[owner - 1] ^= true;
        }
    }
    Ok(WindowLabels { y })
}
