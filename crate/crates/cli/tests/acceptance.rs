//! Acceptance run: one `PASS`/`FAIL` line per criterion, exit status 1 if any
//! fails. Positional arguments select criteria by substring.
//!
//! `cargo test -p mergefree-cli --test acceptance [-- <name>...]`

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use mergefree_cli::{rerun, run, Cli};
use mergefree_core::code_model::Basis;
use mergefree_core::error::Error;
use mergefree_core::experiment::{count_label_mismatches, run_global, run_parallel, Setup};
use mergefree_core::fault_analysis::{DecodingGraph, Edge};
use mergefree_core::io::Manifest;
use mergefree_core::mwpm::{brute_force_decode, Mwpm};
use mergefree_core::parallel_engine::{
    benchmark_throughput, check_seam_bound, with_workers, Inner, ParallelDecoder, ParallelResult,
};
use mergefree_core::sampler::Sampler;
use mergefree_core::stats::{binomial_sigma, curve_crossing, fit_epsilon, independence_estimate, pl_from_epsilon, FitPoint};
use mergefree_core::windowing::plan_windows;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

const SEED: u64 = 20_240_601;

fn threshold() -> Outcome {
    const SHOTS: u64 = 100_000;
    let ps = [0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009];
    let mut curves = Vec::new();
    for d in [3, 5, 7] {
        let mut ler = Vec::new();
        for &p in &ps {
            let setup = Setup::new(d, d, Basis::Z, p)?;
            ler.push(run_global(&setup, SHOTS, SEED)? as f64 / SHOTS as f64);
        }
        curves.push(ler);
    }
    let x35 = curve_crossing(&ps, &curves[0], &curves[1]);
    let x57 = curve_crossing(&ps, &curves[1], &curves[2]);
    let ok = x35.is_some_and(|x| (0.0055..=0.0070).contains(&x));
    let fmt = |c: &[f64]| c.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(" ");
    Ok((
        ok,
        format!(
            "d3/d5 crossing {x35:?} (need [0.0055, 0.0070]); d5/d7 crossing {x57:?}; LER d3 [{}] d5 [{}] d7 [{}]",
            fmt(&curves[0]),
            fmt(&curves[1]),
            fmt(&curves[2])
        ),
    ))
}

fn convergence() -> Outcome {
    const SHOTS: u64 = 100_000;
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [3usize, 5] {
        // whole cores, as close to 100 rounds as possible
        let rounds = (100.0 / d as f64).round() as usize * d;
        let setup = Setup::new(d, rounds, Basis::Z, 0.003)?;
        let global = run_global(&setup, SHOTS, SEED)?;
        let mut rates = Vec::new();
        let mut last = None;
        for b in 1..=d {
            let c = run_parallel(&setup, &setup.plan(b, d)?, SHOTS, SEED, true, None)?;
            rates.push(c.seam_shots as f64 / SHOTS as f64);
            last = Some(c);
        }
        let par = last.expect("b = d ran");
        let (pg, pp) = (global as f64 / SHOTS as f64, par.failures as f64 / SHOTS as f64);
        let sigma = binomial_sigma(global, SHOTS).hypot(binomial_sigma(par.failures, SHOTS));
        let close = (pp - pg).abs() <= 2.0 * sigma;
        let monotone = rates.windows(2).all(|w| w[1] <= w[0]);
        ok &= close && monotone;
        detail.push(format!(
            "d={d} N={rounds}: global {pg:.5} parallel(b=d) {pp:.5} |diff| {:.2}σ; seam rate by b {:?} {}",
            (pp - pg).abs() / sigma,
            rates,
            if monotone { "non-increasing" } else { "NOT monotone" }
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn label_identity() -> Outcome {
    const SHOTS: u64 = 1_000_000;
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [1usize, 3, 14] {
        let setup = Setup::new(3, 3 * m, Basis::Z, 0.003)?;
        let plan = setup.plan(3, 3)?;
        assert_eq!(plan.window_count(), m);
        let bad = count_label_mismatches(&setup, &plan, SHOTS, SEED)?;
        ok &= bad == 0;
        detail.push(format!("m={m}: {bad} mismatches"));
    }
    Ok((ok, format!("{} over {SHOTS} shots each", detail.join(", "))))
}

/// Copy of `g` with time-like edges at weight `time` and space-like edges at 1.
fn time_heavy(g: &DecodingGraph, time: f64) -> Result<DecodingGraph, Error> {
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            let ra = g.vertices()[e.a as usize].round;
            let timelike = e.b.is_some_and(|b| g.vertices()[b as usize].round != ra);
            Edge { weight: if timelike { time } else { 1.0 }, ..*e }
        })
        .collect();
    DecodingGraph::from_parts(g.basis, g.vertices().to_vec(), edges, Vec::new())
}

fn seam_bound() -> Outcome {
    let setup = Setup::new(3, 6, Basis::Z, 0.003)?;
    let heavy = time_heavy(&setup.graph, 4.0)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, g, buffers) in [("circuit", &setup.graph, vec![1, 2]), ("time-heavy", &heavy, vec![1, 2])] {
        for b in buffers {
            let dec = ParallelDecoder::new(g, plan_windows(6, b, 3)?)?;
            let check = check_seam_bound(&dec)?;
            ok &= check.violation_count == 0 && check.sets > 0;
            detail.push(format!(
                "{name} b={b}: w_b={:.3}, {} sets, {} with seam syndrome",
                check.weighted_buffer, check.sets, check.violation_count
            ));
        }
    }
    Ok((ok, detail.join("; ")))
}

fn independence() -> Outcome {
    let est = independence_estimate(&[0.0140, 0.0188, 0.0120]);
    Ok(((est - 0.0435).abs() <= 5e-4, format!("estimate {est:.6} vs 0.0435 ± 5e-4")))
}

fn mwpm_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut solved, mut infeasible, mut mismatched) = (0, 0, 0);
    for _ in 0..10_000 {
        let g = common::random_graph(&mut rng, 25);
        let events = common::random_events(&mut rng, &g);
        match (Mwpm::new(&g).decode(&events), brute_force_decode(&g, &events)) {
            (Ok(c), Ok(b)) if (c.weight - b.weight).abs() <= 1e-9 * b.weight.max(1.0) => solved += 1,
            (Err(Error::NoSolution), Err(Error::NoSolution)) => infeasible += 1,
            _ => mismatched += 1,
        }
    }
    let graphs = [Setup::new(3, 3, Basis::Z, 0.003)?.graph, Setup::new(5, 5, Basis::Z, 0.003)?.graph];
    let decoders: Vec<Mwpm> = graphs.iter().map(Mwpm::new).collect();
    let mut boundary_errors = 0;
    for i in 0..100_000 {
        let m = &decoders[i % 2];
        let n = m.graph().vertices().len() as u32;
        let k = rng.gen_range(0..12);
        let mut events: Vec<u32> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        events.sort_unstable();
        events.dedup();
        if m.decode(&events)?.detector_boundary(m.graph()) != events {
            boundary_errors += 1;
        }
    }
    Ok((
        mismatched == 0 && boundary_errors == 0,
        format!(
            "10^4 random graphs: {solved} equal weight, {infeasible} infeasible on both, {mismatched} mismatched; \
             10^5 fuzzed decodes: {boundary_errors} with boundary != events"
        ),
    ))
}

fn fit_round_trip() -> Outcome {
    const SHOTS: u64 = 100_000;
    let (eps, c) = (0.0145, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    // rounds 5..=70 keep the fidelity above the 0.1 fit floor
    let points: Vec<FitPoint> = (1..=14)
        .map(|k| {
            let n = 5 * k;
            let pl = 0.5 * (1.0 - c * (1.0 - 2.0 * pl_from_epsilon(eps, n).unwrap()));
            let failures = (0..SHOTS).filter(|_| rng.gen_bool(pl)).count();
            FitPoint { rounds: n, pl: failures as f64 / SHOTS as f64, shots: SHOTS }
        })
        .collect();
    let fit = fit_epsilon(&points)?;
    let rel = (fit.epsilon - eps).abs() / eps;
    Ok((
        rel <= 0.02,
        format!("ε̂ = {:.6} (C = {:.4}), relative error {:.3}% over {} points", fit.epsilon, fit.constant, rel * 100.0, points.len()),
    ))
}

fn throughput() -> Outcome {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let d = 3;
    // about the same number of decoded rounds per measurement
    const ROUNDS_PER_RUN: usize = 200_000;
    const REPEATS: usize = 7;
    struct Case {
        setup: Setup,
        shots: Vec<Vec<u32>>,
    }
    let case = |rounds: usize| -> Result<Case, Box<dyn std::error::Error>> {
        let setup = Setup::new(d, rounds, Basis::Z, 0.003)?;
        let sampler = Sampler::new(&setup.dem);
        let shots = (0..(ROUNDS_PER_RUN / rounds) as u64).map(|k| sampler.sample(SEED, k).event_detectors()).collect();
        Ok(Case { setup, shots })
    };
    // workers : windows fixed at 1 : 4 where the host allows it
    let windows = [4usize, 8, 16, 32];
    let cases = windows.iter().map(|&m| case(m * d)).collect::<Result<Vec<_>, _>>()?;
    let decoders = cases
        .iter()
        .map(|c| ParallelDecoder::new(&c.setup.graph, c.setup.plan(d, d)?))
        .collect::<Result<Vec<_>, _>>()?;
    let workers: Vec<usize> = windows.iter().map(|&m| (m / 4).clamp(1, cores)).collect();
    let mut speed_workers = vec![1];
    while speed_workers.last().unwrap() * 2 <= cores {
        speed_workers.push(speed_workers.last().unwrap() * 2);
    }
    // repeats interleaved across cases so drift in host load hits all alike
    let mut best = vec![f64::INFINITY; cases.len()];
    let mut best_speed = vec![f64::INFINITY; speed_workers.len()];
    for _ in 0..REPEATS {
        for (k, dec) in decoders.iter().enumerate() {
            let t = benchmark_throughput(dec, &cases[k].shots, &[workers[k]])?[0].seconds_per_round;
            best[k] = best[k].min(t);
        }
        let last = decoders.len() - 1;
        for (j, row) in benchmark_throughput(&decoders[last], &cases[last].shots, &speed_workers)?.iter().enumerate() {
            best_speed[j] = best_speed[j].min(row.seconds_per_round);
        }
    }
    let mut sorted = best.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[1] + sorted[2]);
    let flat = best.iter().all(|t| (t / median - 1.0).abs() <= 0.20);
    let speedups: Vec<(usize, f64)> = speed_workers.iter().zip(&best_speed).map(|(&w, t)| (w, best_speed[0] / t)).collect();
    let scaled = speedups.iter().all(|&(w, s)| s >= 0.75 * w as f64);
    let rows: Vec<String> = windows
        .iter()
        .zip(&workers)
        .zip(&best)
        .map(|((m, w), t)| format!("N={} workers={w}: {:.3}µs", m * d, t * 1e6))
        .collect();
    Ok((
        flat && scaled,
        format!(
            "per round {} (median {:.3}µs, ±20% {}); speedup {:?} on {cores} core(s) (need ≥ 0.75×workers)",
            rows.join(", "),
            median * 1e6,
            if flat { "held" } else { "VIOLATED" },
            speedups.iter().map(|(w, s)| format!("{w}:{s:.2}")).collect::<Vec<_>>()
        ),
    ))
}

fn outputs(dir: &Path) -> Result<Vec<String>, Box<dyn std::error::Error>> {
    let m = Manifest::from_text(&fs::read_to_string(dir.join("manifest.txt"))?)?;
    Ok(m.get("outputs").unwrap_or_default().split(',').map(String::from).collect())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir()?;
    let p = tmp.path();
    fs::write(p.join("points.csv"), "rounds,pl,shots\n3,0.0421,100000\n9,0.118,100000\n")?;
    fs::write(p.join("pred.csv"), {
        let mut s = String::from("shot,window,probability\n");
        for k in 0..300 {
            for i in 1..=3 {
                s += &format!("{k},{i},{}\n", ((k * 7 + i * 3) % 10) as f64 / 10.0);
            }
        }
        s
    })?;
    let dir = |n: &str| p.join(n).to_string_lossy().into_owned();
    let pred = p.join("pred.csv").to_string_lossy().into_owned();
    let points = p.join("points.csv").to_string_lossy().into_owned();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("build-dem", vec!["build-dem".into(), "--rounds".into(), "5".into()]),
        ("sample", vec!["sample".into(), "--rounds".into(), "9".into(), "--shots".into(), "2000".into()]),
        ("decode-global", vec!["decode".into(), "--decoder".into(), "global".into(), "--shots".into(), "2000".into()]),
        ("decode-parallel", vec!["decode".into(), "--rounds".into(), "12".into(), "--buffer".into(), "2".into(), "--shots".into(), "2000".into(), "--seam-audit".into()]),
        ("decode-predictions", vec!["decode".into(), "--rounds".into(), "9".into(), "--shots".into(), "300".into(), "--inner".into(), "predictions-file".into(), "--predictions".into(), pred]),
        ("sweep", vec!["sweep".into(), "--axis".into(), "b".into(), "--rounds".into(), "9".into(), "--shots".into(), "1000".into()]),
        ("bench", vec!["bench".into(), "--rounds".into(), "9".into(), "--shots".into(), "50".into(), "--worker-counts".into(), "1,2".into()]),
        ("fit", vec!["fit".into(), "--points".into(), points]),
        ("export-dataset", vec!["export-dataset".into(), "--shots".into(), "60".into()]),
    ];
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, mut args) in runs {
        args.push("--out-dir".into());
        args.push(dir(name));
        let outcome = Cli::try_parse_from(std::iter::once("mergefree".to_string()).chain(args))
            .map_err(|e| e.to_string())
            .and_then(|cli| run(&cli).map_err(|e| format!("{e:#}")));
        if let Err(e) = outcome {
            ok = false;
            detail.push(format!("{name}: {e}"));
            continue;
        }
        let first = p.join(name);
        let again = p.join(format!("{name}.rerun"));
        rerun(&first.join("manifest.txt"), Some(again.clone())).map_err(|e| e.to_string())?;
        let mut compared = 0;
        for file in outputs(&first)? {
            // wall-clock timings are measurements, not outputs of the seeded run
            if file == "throughput.csv" {
                continue;
            }
            if fs::read(first.join(&file))? != fs::read(again.join(&file))? {
                ok = false;
                detail.push(format!("{name}: {file} differs"));
            }
            compared += 1;
        }
        detail.push(format!("{name}: {compared} files"));
    }

    // decode_parallel across pools of 1, 2 and 8 workers
    let setup = Setup::new(3, 30, Basis::Z, 0.006)?;
    let dec = ParallelDecoder::new(&setup.graph, setup.plan(3, 3)?)?;
    let sampler = Sampler::new(&setup.dem);
    let shots: Vec<Vec<u32>> = (0..500).map(|k| sampler.sample(SEED, k).event_detectors()).collect();
    let key = |r: &ParallelResult| (r.window_bits.clone(), r.y, r.corrections.clone(), r.seams.clone());
    let runs = [1, 2, 8]
        .iter()
        .map(|&w| {
            with_workers(w, || shots.iter().map(|s| dec.decode(s, Inner::Mwpm, true).map(|r| key(&r))).collect::<Result<Vec<_>, _>>())
        })
        .collect::<Result<Result<Vec<_>, _>, _>>()??;
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    ok &= same;
    detail.push(format!("decode_parallel on 1/2/8 workers over {} shots: {}", shots.len(), if same { "identical" } else { "DIFFERENT" }));
    Ok((ok, detail.join("; ")))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("mwpm-exactness", mwpm_exactness),
        ("window-label-xor", label_identity),
        ("seam-weight-bound", seam_bound),
        ("independence-estimate", independence),
        ("fit-round-trip", fit_round_trip),
        ("determinism", determinism),
        ("throughput", throughput),
        ("threshold", threshold),
        ("merge-free-convergence", convergence),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !ok as usize;
        println!("{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
