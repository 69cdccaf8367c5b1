mod common;

use mergefree_core::code_model::{build_memory_circuit, build_rotated_surface_code, Basis};
use mergefree_core::fault_analysis::{build_dem, decompose_to_graph, DecodingGraph};
use mergefree_core::mwpm::{brute_force_decode, shortest_paths, Mwpm};
use mergefree_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circuit_graph(d: usize, rounds: usize, p: f64) -> DecodingGraph {
    let layout = build_rotated_surface_code(d).unwrap();
    let c = build_memory_circuit(&layout, rounds, Basis::Z, p).unwrap();
    decompose_to_graph(&build_dem(&c), Basis::Z).unwrap()
}

#[test]
fn decode_matches_exhaustive_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut solved = 0;
    for trial in 0..10_000 {
        let g = common::random_graph(&mut rng, 25);
        let events = common::random_events(&mut rng, &g);
        let m = Mwpm::new(&g);
        match (m.decode(&events), brute_force_decode(&g, &events)) {
            (Ok(c), Ok(b)) => {
                assert_eq!(m.perturbed_weight(&c.edges), m.perturbed_weight(&b.edges), "trial {trial}");
                assert!((c.weight - b.weight).abs() <= 1e-9 * b.weight.max(1.0), "trial {trial}");
                assert_eq!(c.detector_boundary(&g), events);
                solved += 1;
            }
            (Err(Error::NoSolution), Err(Error::NoSolution)) => {}
            (x, y) => panic!("trial {trial}: {x:?} vs {y:?}"),
        }
    }
    assert!(solved > 5_000);
}

#[test]
fn boundary_equals_events_under_fuzzing() {
    let graphs = [circuit_graph(3, 3, 0.003), circuit_graph(5, 5, 0.003)];
    let decoders: Vec<Mwpm> = graphs.iter().map(Mwpm::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100_000 {
        let m = &decoders[i % 2];
        let n = m.graph().vertices().len() as u32;
        let k = rng.gen_range(0..12);
        let mut events: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        events.sort_unstable();
        events.dedup();
        let c = m.decode(&events).unwrap();
        assert_eq!(c.detector_boundary(m.graph()), events);
    }
}

#[test]
fn decode_never_heavier_than_two_fault_configurations() {
    let g = circuit_graph(3, 3, 0.003);
    let m = Mwpm::new(&g);
    let edges = g.edges().len() as u32;
    for e1 in 0..edges {
        for e2 in e1..edges {
            let set: Vec<u32> = if e1 == e2 { vec![e1] } else { vec![e1, e2] };
            let events = g.boundary_of(set.iter().copied());
            let events: Vec<u32> = events
                .into_iter()
                .filter(|&v| g.vertices()[v as usize].kind == mergefree_core::fault_analysis::VertexKind::Detector)
                .collect();
            let c = m.decode(&events).unwrap();
            assert!(c.weight <= g.total_weight(set.iter().copied()) + 1e-9);
            // fewer than d/2 faults are always corrected
            if e1 == e2 {
                assert_eq!(c.total_logical_flip(&g), g.logical_parity(set.iter().copied()));
            }
        }
    }
}

#[test]
fn shortest_path_distances_agree_with_decoder() {
    let g = circuit_graph(3, 3, 0.003);
    let tables = shortest_paths(&g, &[0, 5]);
    let c = Mwpm::new(&g).decode(&[0]).unwrap();
    assert!((c.weight - tables[0].boundary.min(f64::INFINITY)).abs() < 1e-6);
    assert_eq!(tables[1].dist[5], 0.0);
    let path = tables[0].path_to(&g, 5).unwrap();
    assert!((g.total_weight(path) - tables[0].dist[5]).abs() < 1e-9);
}
