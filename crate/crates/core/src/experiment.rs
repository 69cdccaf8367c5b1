//! Seeded Monte Carlo runs shared by the command line and the acceptance checks.
//! Shot `k` of a run always comes from `shot_rng(seed, k)`, so counts do not
//! depend on the thread pool.

use rayon::prelude::*;

use crate::code_model::{build_memory_circuit, build_rotated_surface_code, Basis, CodeLayout};
use crate::error::{Error, Result};
use crate::fault_analysis::{build_dem, decompose_to_graph, DecodingGraph, DetectorErrorModel};
use crate::mwpm::Mwpm;
use crate::parallel_engine::{decode_global, Inner, ParallelDecoder, Predictions};
use crate::sampler::{derive_window_labels, Sampler};
use crate::windowing::{plan_windows, WindowPlan};

/// Code, noisy memory circuit DEM and decoding graph of one `(d, N, basis, p)`.
#[derive(Debug, Clone)]
pub struct Setup {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub p: f64,
    pub layout: CodeLayout,
    pub dem: DetectorErrorModel,
    pub graph: DecodingGraph,
}

impl Setup {
    pub fn new(distance: usize, rounds: usize, basis: Basis, p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 0.5), got {p}")));
        }
        let layout = build_rotated_surface_code(distance)?;
        let circuit = build_memory_circuit(&layout, rounds, basis, p)?;
        let dem = build_dem(&circuit);
        let graph = decompose_to_graph(&dem, basis)?;
        Ok(Self { distance, rounds, basis, p, layout, dem, graph })
    }

    pub fn plan(&self, buffer: usize, core: usize) -> Result<WindowPlan> {
        plan_windows(self.rounds, buffer, core)
    }
}

/// Shots are processed in blocks of this many per task.
const BLOCK: u64 = 256;

fn blocks(shots: u64) -> impl ParallelIterator<Item = std::ops::Range<u64>> {
    (0..shots.div_ceil(BLOCK)).into_par_iter().map(move |k| k * BLOCK..((k + 1) * BLOCK).min(shots))
}

/// Failures of MWPM on the whole graph.
pub fn run_global(setup: &Setup, shots: u64, seed: u64) -> Result<u64> {
    let sampler = Sampler::new(&setup.dem);
    let mwpm = Mwpm::new(&setup.graph);
    blocks(shots)
        .map(|range| {
            let mut failures = 0;
            for k in range {
                let shot = sampler.sample(seed, k);
                if decode_global(&mwpm, &shot.event_detectors())? != shot.y_global {
                    failures += 1;
                }
            }
            Ok(failures)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Counts from a merge-free parallel run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParallelCounts {
    pub shots: u64,
    pub failures: u64,
    /// Shots with at least one non-trivial seam audit (audited runs only).
    pub seam_shots: u64,
    /// Per window, shots whose bit `ŷᵢ` differs from `yᵢ`.
    pub window_failures: Vec<u64>,
}

impl ParallelCounts {
    fn merge(mut self, other: Self) -> Self {
        self.shots += other.shots;
        self.failures += other.failures;
        self.seam_shots += other.seam_shots;
        if self.window_failures.is_empty() {
            self.window_failures = other.window_failures;
        } else {
            for (a, b) in self.window_failures.iter_mut().zip(other.window_failures) {
                *a += b;
            }
        }
        self
    }
}

/// Runs the merge-free parallel decoder. With `predictions`, window bits come
/// from the table (keyed by shot index) instead of MWPM; seam audits need MWPM.
pub fn run_parallel(
    setup: &Setup,
    plan: &WindowPlan,
    shots: u64,
    seed: u64,
    audit: bool,
    predictions: Option<&Predictions>,
) -> Result<ParallelCounts> {
    let sampler = Sampler::new(&setup.dem);
    let decoder = ParallelDecoder::new(&setup.graph, plan.clone())?;
    let m = plan.window_count();
    blocks(shots)
        .map(|range| {
            let mut c = ParallelCounts { window_failures: vec![0; m], ..Default::default() };
            for k in range {
                let shot = sampler.sample(seed, k);
                let inner = match predictions {
                    Some(table) => Inner::Predictions { table, shot: k },
                    None => Inner::Mwpm,
                };
                let r = decoder.decode(&shot.event_detectors(), inner, audit)?;
                let labels = derive_window_labels(&shot, plan, &setup.graph, &decoder.partition)?;
                c.shots += 1;
                c.failures += (r.y != shot.y_global) as u64;
                c.seam_shots += r.seam_syndrome() as u64;
                for (i, (&a, &b)) in r.window_bits.iter().zip(&labels.y).enumerate() {
                    c.window_failures[i] += (a != b) as u64;
                }
            }
            Ok(c)
        })
        .try_reduce(ParallelCounts::default, |a, b| Ok(a.merge(b)))
}

/// Shots whose window labels fail to XOR to the global label.
pub fn count_label_mismatches(setup: &Setup, plan: &WindowPlan, shots: u64, seed: u64) -> Result<u64> {
    let sampler = Sampler::new(&setup.dem);
    let partition = plan.core_partition(&setup.graph);
    blocks(shots)
        .map(|range| {
            let mut bad = 0;
            for k in range {
                let shot = sampler.sample(seed, k);
                let labels = derive_window_labels(&shot, plan, &setup.graph, &partition)?;
                bad += (labels.combined() != shot.y_global) as u64;
            }
            Ok(bad)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel_engine::with_workers;

    #[test]
    fn counts_do_not_depend_on_pool_size() {
        let s = Setup::new(3, 6, Basis::Z, 0.01).unwrap();
        let plan = s.plan(3, 3).unwrap();
        let one = with_workers(1, || run_parallel(&s, &plan, 600, 7, true, None)).unwrap().unwrap();
        let three = with_workers(3, || run_parallel(&s, &plan, 600, 7, true, None)).unwrap().unwrap();
        assert_eq!(one, three);
        assert_eq!(one.shots, 600);
        assert!(one.failures > 0);
        let g1 = with_workers(1, || run_global(&s, 600, 7)).unwrap().unwrap();
        let g3 = with_workers(3, || run_global(&s, 600, 7)).unwrap().unwrap();
        assert_eq!(g1, g3);
        assert_eq!(count_label_mismatches(&s, &plan, 600, 7).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(Setup::new(3, 3, Basis::Z, 0.5).is_err());
        assert!(Setup::new(3, 3, Basis::Z, -0.1).is_err());
    }
}
