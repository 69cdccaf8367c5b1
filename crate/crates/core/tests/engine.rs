use mergefree_core::code_model::{build_memory_circuit, build_rotated_surface_code, Basis};
use mergefree_core::fault_analysis::{build_dem, decompose_to_graph, DecodingGraph, DetectorErrorModel, Edge, VertexKind};
use mergefree_core::mwpm::{Correction, Mwpm};
use mergefree_core::parallel_engine::{
    check_seam_bound, decode_global, seam_audit, with_workers, Inner, ParallelDecoder, Predictions, WindowCorrection,
};
use mergefree_core::sampler::{derive_window_labels, Sampler};
use mergefree_core::windowing::plan_windows;
use mergefree_core::Error;

fn setup(d: usize, rounds: usize, p: f64) -> (DetectorErrorModel, DecodingGraph) {
    let layout = build_rotated_surface_code(d).unwrap();
    let c = build_memory_circuit(&layout, rounds, Basis::Z, p).unwrap();
    let dem = build_dem(&c);
    let g = decompose_to_graph(&dem, Basis::Z).unwrap();
    (dem, g)
}

/// Copy of `g` with time-like edges at weight `time` and space-like edges at 1.
fn time_heavy(g: &DecodingGraph, time: f64) -> DecodingGraph {
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            let ra = g.vertices()[e.a as usize].round;
            let timelike = e.b.is_some_and(|b| g.vertices()[b as usize].round != ra);
            Edge { weight: if timelike { time } else { 1.0 }, ..*e }
        })
        .collect();
    DecodingGraph::from_parts(g.basis, g.vertices().to_vec(), edges, Vec::new()).unwrap()
}

#[test]
fn quiet_shot_predicts_nothing() {
    let (_, g) = setup(3, 9, 0.003);
    let dec = ParallelDecoder::new(&g, plan_windows(9, 3, 3).unwrap()).unwrap();
    let r = dec.decode(&[], Inner::Mwpm, true).unwrap();
    assert_eq!(r.window_bits, vec![false; 3]);
    assert!(!r.y && !r.seam_syndrome());
    assert!(!decode_global(&Mwpm::new(&g), &[]).unwrap());
}

#[test]
fn results_independent_of_worker_count() {
    let (dem, g) = setup(3, 9, 0.006);
    let dec = ParallelDecoder::new(&g, plan_windows(9, 3, 3).unwrap()).unwrap();
    let sampler = Sampler::new(&dem);
    let shots: Vec<Vec<u32>> = (0..300).map(|i| sampler.sample(17, i).event_detectors()).collect();
    let run = |workers| {
        with_workers(workers, || {
            shots
                .iter()
                .map(|s| {
                    let r = dec.decode(s, Inner::Mwpm, true).unwrap();
                    (r.window_bits, r.corrections, r.seams)
                })
                .collect::<Vec<_>>()
        })
        .unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
}

#[test]
fn perfect_window_predictions_give_global_label() {
    let (dem, g) = setup(3, 9, 0.01);
    let plan = plan_windows(9, 3, 3).unwrap();
    let dec = ParallelDecoder::new(&g, plan.clone()).unwrap();
    let sampler = Sampler::new(&dem);
    let mut table = Predictions::new();
    let shots: Vec<_> = (0..500).map(|i| sampler.sample(2, i)).collect();
    for (i, s) in shots.iter().enumerate() {
        let labels = derive_window_labels(s, &plan, &g, &dec.partition).unwrap();
        for (w, &y) in labels.y.iter().enumerate() {
            table.insert(i as u64, w + 1, if y { 0.9 } else { 0.1 });
        }
    }
    for (i, s) in shots.iter().enumerate() {
        let r = dec.decode(&s.event_detectors(), Inner::Predictions { table: &table, shot: i as u64 }, false).unwrap();
        assert_eq!(r.y, s.y_global);
        assert!(r.corrections.iter().all(Option::is_none));
    }
    let missing = dec.decode(&[], Inner::Predictions { table: &table, shot: 9_999 }, false);
    assert_eq!(missing.unwrap_err(), Error::MissingPrediction { shot: 9_999, window: 1 });
}

fn find_edge(g: &DecodingGraph, a: u32, b: u32) -> Option<u32> {
    g.edges().iter().position(|e| e.b.is_some() && ((e.a == a && e.b == Some(b)) || (e.a == b && e.b == Some(a)))).map(|k| k as u32)
}

#[test]
fn degenerate_seam_pair_is_flagged() {
    // two equal-length chains around a plaquette of the space-time lattice,
    // straddling the seam between windows 1 and 2
    let (_, g) = setup(3, 6, 0.003);
    let plan = plan_windows(6, 3, 3).unwrap();
    let dec = ParallelDecoder::new(&g, plan.clone()).unwrap();
    let at = |round: u32| -> Vec<u32> {
        (0..g.vertices().len() as u32).filter(|&v| g.vertices()[v as usize].round == round).collect()
    };
    let same_slot = |x: u32, r: u32| at(r).into_iter().find(|&y| g.vertices()[y as usize].slot == g.vertices()[x as usize].slot);
    let mut square = None;
    'search: for v1 in at(3) {
        for u in at(3) {
            let (Some(h1), Some(v2), Some(u2)) = (find_edge(&g, v1, u), same_slot(u, 4), same_slot(v1, 4)) else {
                continue;
            };
            if let (Some(t1), Some(t2), Some(h2)) = (find_edge(&g, u, v2), find_edge(&g, v1, u2), find_edge(&g, u2, v2)) {
                square = Some(([h1, t1], [t2, h2], v2, u2));
                break 'search;
            }
        }
    }
    let (green, red, v2, u2) = square.expect("plaquette across the seam");
    let local = |w: usize, keys: [u32; 2]| -> Correction {
        let wg = dec.windows[w - 1].graph();
        let mut edges: Vec<u32> =
            keys.iter().map(|&k| wg.edges().iter().position(|e| e.key == k).unwrap() as u32).collect();
        edges.sort_unstable();
        Correction { weight: wg.total_weight(edges.iter().copied()), edges, pairs: Vec::new() }
    };
    let (cl, cr) = (local(1, green), local(2, red));
    let left = WindowCorrection { index: 1, graph: dec.windows[0].graph(), correction: &cl };
    let right = WindowCorrection { index: 2, graph: dec.windows[1].graph(), correction: &cr };
    let audit = seam_audit(&plan, left, right).unwrap();
    let mut expected = vec![g.vertices()[v2 as usize].detector, g.vertices()[u2 as usize].detector];
    expected.sort_unstable();
    assert_eq!(audit, expected);

    let same = local(2, green);
    let right_same = WindowCorrection { index: 2, graph: dec.windows[1].graph(), correction: &same };
    assert!(seam_audit(&plan, left, right_same).unwrap().is_empty());
    assert!(matches!(seam_audit(&plan, right, left), Err(Error::NoOverlap { .. })));
}

#[test]
fn overlapping_windows_share_matching_paths() {
    let (dem, g) = setup(3, 12, 0.008);
    let plan = plan_windows(12, 3, 3).unwrap();
    let dec = ParallelDecoder::new(&g, plan.clone()).unwrap();
    let sampler = Sampler::new(&dem);
    let mut compared = 0;
    for i in 0..3_000 {
        let events = sampler.sample(6, i).event_detectors();
        let r = dec.decode(&events, Inner::Mwpm, false).unwrap();
        for w in 1..plan.window_count() {
            let overlap = plan.overlap(w, w + 1).unwrap();
            let paths = |k: usize| {
                let wg = dec.windows[k - 1].graph();
                r.corrections[k - 1]
                    .as_ref()
                    .unwrap()
                    .pairs
                    .iter()
                    .filter_map(|p| {
                        let inside = p.path.iter().all(|&e| {
                            wg.edges()[e as usize].endpoints().all(|v| {
                                let vx = wg.vertices()[v as usize];
                                vx.kind == VertexKind::Detector && overlap.contains(&(vx.round as i64))
                            }) && wg.edges()[e as usize].b.is_some()
                        });
                        let b = wg.vertices()[p.b? as usize];
                        (inside && b.kind == VertexKind::Detector).then(|| {
                            let a = wg.vertices()[p.a as usize].detector;
                            let ends = (a.min(b.detector), a.max(b.detector));
                            let mut keys: Vec<u32> = p.path.iter().map(|&e| wg.edges()[e as usize].key).collect();
                            keys.sort_unstable();
                            (ends, keys)
                        })
                    })
                    .collect::<std::collections::HashMap<_, _>>()
            };
            let (left, right) = (paths(w), paths(w + 1));
            for (ends, keys) in &left {
                if let Some(other) = right.get(ends) {
                    assert_eq!(keys, other, "shot {i} seam {w}");
                    compared += 1;
                }
            }
        }
    }
    assert!(compared > 100, "only {compared} shared pairs");
}

#[test]
fn parallel_agrees_with_global_decoding() {
    let (dem, g) = setup(3, 9, 0.003);
    let dec = ParallelDecoder::new(&g, plan_windows(9, 3, 3).unwrap()).unwrap();
    let global = Mwpm::new(&g);
    let sampler = Sampler::new(&dem);
    let shots = 20_000;
    let agree = (0..shots)
        .filter(|&i| {
            let events = sampler.sample(31, i).event_detectors();
            dec.decode(&events, Inner::Mwpm, false).unwrap().y == decode_global(&global, &events).unwrap()
        })
        .count();
    assert!(agree as f64 >= 0.98 * shots as f64, "agreement {agree}/{shots}");
}

fn theorem_holds(g: &DecodingGraph, rounds: usize, buffer: usize) -> (f64, usize) {
    let dec = ParallelDecoder::new(g, plan_windows(rounds, buffer, 3).unwrap()).unwrap();
    let check = check_seam_bound(&dec).unwrap();
    assert_eq!(check.violation_count, 0, "b={buffer} sets {:?}", check.violations);
    (check.weighted_buffer, check.sets)
}

#[test]
fn light_error_sets_never_leave_seam_syndromes() {
    let (_, g) = setup(3, 6, 0.003);
    for b in [1, 2] {
        let (w_b, n) = theorem_holds(&g, 6, b);
        assert!(w_b.is_finite() && n >= 1);
    }
    let heavy = time_heavy(&g, 4.0);
    let (w_b, n) = theorem_holds(&heavy, 6, 2);
    assert_eq!(w_b, 8.0);
    assert!(n > 1_000, "{n} sets");
}
