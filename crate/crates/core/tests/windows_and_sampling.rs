use mergefree_core::code_model::{build_memory_circuit, build_rotated_surface_code, Basis, CodeLayout};
use mergefree_core::fault_analysis::{build_dem, decompose_to_graph, DecodingGraph, DetectorErrorModel, VertexKind};
use mergefree_core::mwpm::shortest_paths;
use mergefree_core::sampler::{derive_window_labels, Sampler};
use mergefree_core::sim::sample_circuit_batch;
use mergefree_core::windowing::{extract_window_tensor, plan_windows, window_subgraph, TensorMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(d: usize, rounds: usize, p: f64) -> (CodeLayout, DetectorErrorModel, DecodingGraph) {
    let layout = build_rotated_surface_code(d).unwrap();
    let c = build_memory_circuit(&layout, rounds, Basis::Z, p).unwrap();
    let dem = build_dem(&c);
    let g = decompose_to_graph(&dem, Basis::Z).unwrap();
    (layout, dem, g)
}

fn time_boundary_rounds(g: &DecodingGraph) -> Vec<u32> {
    let mut r: Vec<u32> =
        g.vertices().iter().filter(|v| v.kind == VertexKind::TimeBoundary).map(|v| v.round).collect();
    r.sort_unstable();
    r.dedup();
    r
}

#[test]
fn window_subgraph_boundaries() {
    let (_, _, g) = setup(3, 15, 0.003);
    let plan = plan_windows(15, 3, 3).unwrap();
    assert_eq!(time_boundary_rounds(&window_subgraph(&g, &plan, 1).unwrap()), vec![7]);
    assert_eq!(time_boundary_rounds(&window_subgraph(&g, &plan, 3).unwrap()), vec![3, 13]);
    assert_eq!(time_boundary_rounds(&window_subgraph(&g, &plan, 5).unwrap()), vec![9]);
    assert!(window_subgraph(&g, &plan, 6).is_err());

    let (_, _, g3) = setup(3, 3, 0.003);
    let whole = window_subgraph(&g3, &plan_windows(3, 3, 3).unwrap(), 1).unwrap();
    assert!(time_boundary_rounds(&whole).is_empty());
    assert_eq!(whole.edges().len(), g3.edges().len());
    for (a, b) in whole.edges().iter().zip(g3.edges()) {
        assert_eq!((a.key, a.weight, a.logical), (b.key, b.weight, b.logical));
    }
}

#[test]
fn weighted_buffer_is_b_vertical_edges() {
    let (_, _, g) = setup(3, 15, 0.003);
    let plan = plan_windows(15, 3, 3).unwrap();
    let w = window_subgraph(&g, &plan, 3).unwrap();
    let vertical = |g: &DecodingGraph| {
        g.edges()
            .iter()
            .filter_map(|e| {
                let b = e.b?;
                let (va, vb) = (g.vertices()[e.a as usize], g.vertices()[b as usize]);
                (va.slot == vb.slot && va.round != vb.round).then_some(e.weight)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let lightest_vertical = vertical(&g);
    // right seam of window 3 sits at layer 10; the open boundary is b layers above
    let seam: Vec<u32> =
        (0..w.vertices().len() as u32).filter(|&v| w.vertices()[v as usize].round == 10).collect();
    let tables = shortest_paths(&w, &seam);
    let w_b = tables.iter().map(|t| t.time_boundary_distance(&w)).fold(f64::INFINITY, f64::min);
    assert!((w_b - 3.0 * lightest_vertical).abs() < 1e-9, "w_b={w_b} vertical={lightest_vertical}");
}

#[test]
fn tensors_cover_every_real_layer() {
    let (layout, dem, _) = setup(3, 10, 0.01);
    let plan = plan_windows(10, 3, 3).unwrap();
    let sampler = Sampler::new(&dem);

    let quiet = extract_window_tensor(&[], &plan, 2, &layout, &dem.detectors).unwrap();
    assert_eq!(quiet.count_ones(), 0);
    assert_eq!(quiet.bits.len(), 9 * 16);
    assert!(extract_window_tensor(&[], &plan, 5, &layout, &dem.detectors).is_err());

    // one event in window 2's core lands on exactly one cell
    let det = dem.detectors.iter().position(|d| d.round == 5).unwrap() as u32;
    let t = extract_window_tensor(&[det], &plan, 2, &layout, &dem.detectors).unwrap();
    assert_eq!(t.count_ones(), 1);
    let info = dem.detectors[det as usize];
    assert_eq!(t.get(5 - 1, layout.slot_index((info.slot.0 as usize, info.slot.1 as usize))), 1);

    // 8 of 16 slots per layer are ever mapped
    let maps: Vec<TensorMap> =
        (1..=plan.window_count()).map(|i| TensorMap::new(&plan, i, &layout, &dem.detectors).unwrap()).collect();
    let mut slots = std::collections::BTreeSet::new();
    for map in &maps {
        for &(_, cell) in map.cells() {
            slots.insert(cell % 16);
        }
    }
    assert_eq!(slots.len(), 8);

    // union of window tensors' real layers reproduces the events
    for i in 0..200 {
        let shot = sampler.sample(21, i);
        let mut seen = vec![false; dem.detector_count()];
        for (k, map) in maps.iter().enumerate() {
            let t = map.extract(|d| shot.event(d));
            for &(det, cell) in map.cells() {
                assert_eq!(t.bits[cell as usize] == 1, shot.event(det), "window {}", k + 1);
                seen[det as usize] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        // pad layers of the first window stay zero
        let first = maps[0].extract(|d| shot.event(d));
        assert!(first.bits[..3 * 16].iter().all(|&b| b == 0));
    }
}

#[test]
fn window_labels_xor_to_global_label() {
    let (_, dem, g) = setup(3, 9, 0.01);
    let sampler = Sampler::new(&dem);
    for (rounds_plan, c) in [(9, 3), (9, 1), (9, 9)] {
        let plan = plan_windows(rounds_plan, 3, c).unwrap();
        let partition = plan.core_partition(&g);
        for i in 0..20_000 {
            let shot = sampler.sample(5, i);
            let labels = derive_window_labels(&shot, &plan, &g, &partition).unwrap();
            assert_eq!(labels.y.len(), plan.window_count());
            assert_eq!(labels.combined(), shot.y_global, "shot {i}");
        }
    }
    let plan = plan_windows(9, 3, 3).unwrap();
    let empty = mergefree_core::sampler::Shot { fired: vec![], events: vec![0; 2], y_global: false };
    assert_eq!(derive_window_labels(&empty, &plan, &g, &plan.core_partition(&g)).unwrap().y, vec![false; 3]);
    // a lone logical edge in window 2's core
    let e = g
        .edges()
        .iter()
        .position(|e| e.logical && plan.edge_owner(&g, e) == 2)
        .unwrap();
    let m = (0..g.mechanism_count()).find(|&m| g.mechanism_edges(m) == [e as u32]).unwrap();
    let shot = mergefree_core::sampler::Shot { fired: vec![m as u32], events: vec![0; 2], y_global: true };
    assert_eq!(derive_window_labels(&shot, &plan, &g, &plan.core_partition(&g)).unwrap().y, vec![false, true, false]);
    assert!(derive_window_labels(&shot, &plan, &g, &[]).is_err());
}

#[test]
fn fired_edges_reproduce_basis_events() {
    let (_, dem, g) = setup(3, 3, 0.01);
    let sampler = Sampler::new(&dem);
    for i in 0..2_000 {
        let shot = sampler.sample(8, i);
        let b = g.boundary_of(shot.fired_edges(&g));
        assert_eq!(b, shot.events_in(&g));
        assert_eq!(g.logical_parity(shot.fired_edges(&g)), shot.y_global);
    }
}

#[test]
fn dem_sampling_matches_circuit_monte_carlo() {
    let (layout, dem, _) = setup(3, 3, 0.003);
    let circuit = build_memory_circuit(&layout, 3, Basis::Z, 0.003).unwrap();
    let shots = 100_000u64;
    let sampler = Sampler::new(&dem);
    let mut dem_counts = vec![0u64; dem.detector_count()];
    for i in 0..shots {
        for d in sampler.sample(99, i).event_detectors() {
            dem_counts[d as usize] += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut circ_counts = vec![0u64; dem.detector_count()];
    for _ in 0..shots / 64 {
        let batch = sample_circuit_batch(&circuit, &mut rng);
        for (k, w) in batch.detectors.iter().enumerate() {
            circ_counts[k] += w.count_ones() as u64;
        }
    }
    let circ_shots = (shots / 64 * 64) as f64;
    for k in 0..dem.detector_count() {
        let a = dem_counts[k] as f64 / shots as f64;
        let b = circ_counts[k] as f64 / circ_shots;
        let sigma = (a * (1.0 - a) / shots as f64 + b * (1.0 - b) / circ_shots).sqrt();
        assert!((a - b).abs() < 4.5 * sigma, "detector {k}: {a} vs {b}");
    }
    let within: usize = (0..dem.detector_count())
        .filter(|&k| {
            let a = dem_counts[k] as f64 / shots as f64;
            let b = circ_counts[k] as f64 / circ_shots;
            let sigma = (a * (1.0 - a) / shots as f64 + b * (1.0 - b) / circ_shots).sqrt();
            (a - b).abs() < 3.0 * sigma
        })
        .count();
    assert!(within as f64 >= 0.97 * dem.detector_count() as f64);
}
