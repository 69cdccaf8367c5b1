//! Fixtures shared by the benchmarks.

use mergefree_core::code_model::Basis;
use mergefree_core::experiment::Setup;
use mergefree_core::sampler::Sampler;

/// Memory experiment plus `shots` sampled detector lists from seed 1.
pub fn fixture(d: usize, rounds: usize, p: f64, shots: u64) -> (Setup, Vec<Vec<u32>>) {
    let setup = Setup::new(d, rounds, Basis::Z, p).expect("valid fixture parameters");
    let sampler = Sampler::new(&setup.dem);
    let events = (0..shots).map(|k| sampler.sample(1, k).event_detectors()).collect();
    (setup, events)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_samples_requested_shots() {
        let (s, ev) = super::fixture(3, 3, 0.01, 10);
        assert_eq!(ev.len(), 10);
        assert!(s.dem.detector_count() > 0);
    }
}
