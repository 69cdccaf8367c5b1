use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mergefree_core::code_model::{build_memory_circuit, build_rotated_surface_code, circuit_to_text};
use mergefree_core::experiment::{run_global, run_parallel, Setup};
use mergefree_core::fault_analysis::{build_dem, decompose_to_graph, dem_to_text};
use mergefree_core::io::{
    read_fit_points, read_predictions, write_dataset, write_events, write_fit_result, write_index, write_labels,
    write_ler, write_seam_rates, write_throughput, write_window_rates, DatasetHeader, DatasetRecord, EventsHeader,
    IndexEntry, LerRow, SeamRow,
};
use mergefree_core::parallel_engine::{benchmark_throughput, ParallelDecoder, Predictions};
use mergefree_core::sampler::{derive_window_labels, Sampler};
use mergefree_core::stats::fit_epsilon;
use mergefree_core::windowing::{TensorMap, WindowKind};
use mergefree_core::Error;
use rayon::prelude::*;

use crate::args::{check_distance, check_p, Axis, BenchArgs, DecodeArgs, DecoderArg, FitArgs, InnerArg, RunArgs, RunConfig, SweepArgs};
use crate::output::OutputDir;

fn flag(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn build_dem_cmd(args: &RunArgs) -> Result<PathBuf> {
    let c = args.config()?;
    let layout = build_rotated_surface_code(c.distance)?;
    let circuit = build_memory_circuit(&layout, c.rounds, c.basis, c.p)?;
    let dem = build_dem(&circuit);
    let graph = decompose_to_graph(&dem, c.basis)?;
    let mut out = OutputDir::create(&c.out_dir)?;
    out.write("circuit.txt", |w| Ok(w.write_all(circuit_to_text(&circuit).as_bytes())?))?;
    out.write("dem.txt", |w| Ok(w.write_all(dem_to_text(&dem).as_bytes())?))?;
    out.write("graph.csv", |w| Ok(w.write_all(graph.to_csv().as_bytes())?))?;
    Ok(out.finish("build-dem", &args.flags(false)?)?)
}

pub fn sample_cmd(args: &RunArgs) -> Result<PathBuf> {
    let c = args.config()?;
    let setup = Setup::new(c.distance, c.rounds, c.basis, c.p)?;
    let plan = setup.plan(c.buffer, c.core)?;
    let partition = plan.core_partition(&setup.graph);
    let sampler = Sampler::new(&setup.dem);
    let rows = (0..c.shots)
        .into_par_iter()
        .map(|k| {
            let shot = sampler.sample(c.seed, k);
            let labels = derive_window_labels(&shot, &plan, &setup.graph, &partition)?;
            Ok((shot.events, shot.y_global, labels.y))
        })
        .collect::<mergefree_core::Result<Vec<_>>>()?;
    let header = EventsHeader {
        distance: c.distance,
        rounds: c.rounds,
        basis: c.basis,
        detectors: setup.dem.detector_count(),
        shots: c.shots,
    };
    let mut out = OutputDir::create(&c.out_dir)?;
    out.write("events.bin", |w| write_events(w, &header, rows.iter().map(|r| r.0.as_slice())))?;
    out.write("labels.csv", |w| {
        write_labels(w, plan.window_count(), rows.iter().enumerate().map(|(k, r)| (k as u64, r.1, r.2.clone())))
    })?;
    Ok(out.finish("sample", &args.flags(false)?)?)
}

fn ler_row(c: &RunConfig, decoder: DecoderArg, shots: u64, failures: u64) -> LerRow {
    let parallel = decoder == DecoderArg::Parallel;
    LerRow {
        distance: c.distance,
        basis: c.basis,
        p: c.p,
        rounds: c.rounds,
        buffer: if parallel { c.buffer } else { 0 },
        core: if parallel { c.core } else { 0 },
        decoder: if parallel { "parallel" } else { "global" }.to_string(),
        shots,
        failures,
    }
}

fn seam_row(c: &RunConfig, shots: u64, seam_shots: u64) -> SeamRow {
    SeamRow { distance: c.distance, p: c.p, rounds: c.rounds, buffer: c.buffer, core: c.core, shots, seam_shots }
}

fn load_predictions(path: &Path) -> Result<Predictions> {
    let f = File::open(path).with_context(|| format!("opening predictions file {}", path.display()))?;
    Ok(read_predictions(BufReader::new(f)).with_context(|| format!("reading predictions file {}", path.display()))?)
}

pub fn decode_cmd(args: &DecodeArgs) -> Result<PathBuf> {
    let c = args.run.config()?;
    let file_inner = args.inner == InnerArg::PredictionsFile;
    if file_inner && args.decoder == DecoderArg::Global {
        bail!(Error::InvalidParameter("--inner predictions-file needs --decoder parallel".into()));
    }
    if file_inner && args.seam_audit {
        bail!(Error::InvalidParameter("--seam-audit needs --inner mwpm".into()));
    }
    if file_inner != args.predictions.is_some() {
        bail!(Error::InvalidParameter("--predictions is required with, and only with, --inner predictions-file".into()));
    }
    let predictions = args.predictions.as_deref().map(load_predictions).transpose()?;
    let setup = Setup::new(c.distance, c.rounds, c.basis, c.p)?;
    let mut out = OutputDir::create(&c.out_dir)?;
    match args.decoder {
        DecoderArg::Global => {
            let failures = run_global(&setup, c.shots, c.seed)?;
            let row = ler_row(&c, DecoderArg::Global, c.shots, failures);
            out.write("ler.csv", |w| write_ler(w, &[row]))?;
        }
        DecoderArg::Parallel => {
            let plan = setup.plan(c.buffer, c.core)?;
            let counts = run_parallel(&setup, &plan, c.shots, c.seed, args.seam_audit, predictions.as_ref())?;
            let row = ler_row(&c, DecoderArg::Parallel, counts.shots, counts.failures);
            out.write("ler.csv", |w| write_ler(w, &[row]))?;
            out.write("windows.csv", |w| write_window_rates(w, counts.shots, &counts.window_failures))?;
            if args.seam_audit {
                out.write("seam.csv", |w| write_seam_rates(w, &[seam_row(&c, counts.shots, counts.seam_shots)]))?;
            }
        }
    }
    let mut flags = args.run.flags(false)?;
    flags.push(flag("decoder", if args.decoder == DecoderArg::Global { "global" } else { "parallel" }));
    flags.push(flag("inner", if file_inner { "predictions-file" } else { "mwpm" }));
    if let Some(p) = &args.predictions {
        flags.push(flag("predictions", absolute(p)?.display()));
    }
    if args.seam_audit {
        flags.push(flag("seam-audit", true));
    }
    Ok(out.finish("decode", &flags)?)
}

pub const DEFAULT_P_VALUES: [f64; 8] = [0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008, 0.009];

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        bail!(Error::InvalidParameter(format!("{what} values must be positive integers, got {v}")))
    }
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<PathBuf> {
    let base = args.run.config()?;
    let distances = if args.distances.is_empty() { vec![base.distance] } else { args.distances.clone() };
    for &d in &distances {
        check_distance(d)?;
    }
    let values: Vec<f64> = match (args.axis, args.values.is_empty()) {
        (Axis::P, true) => DEFAULT_P_VALUES.to_vec(),
        (Axis::Buffer, true) => (1..=*distances.iter().max().unwrap()).map(|b| b as f64).collect(),
        (Axis::Rounds, true) => bail!(Error::InvalidParameter("--axis rounds needs --values".into())),
        (_, false) => args.values.clone(),
    };
    let run = &args.run;
    let mut ler = Vec::new();
    let mut seams = Vec::new();
    for &d in &distances {
        let at = |rounds: Option<usize>, p: f64, buffer: Option<usize>| RunConfig {
            distance: d,
            rounds: rounds.or(run.rounds).unwrap_or(d),
            p,
            buffer: buffer.or(run.buffer).unwrap_or(d),
            core: run.core.unwrap_or(d),
            ..base.clone()
        };
        let points: Vec<RunConfig> = match args.axis {
            Axis::P => values.iter().map(|&p| check_p(p).map(|_| at(None, p, None))).collect::<Result<_, _>>()?,
            Axis::Rounds => values.iter().map(|&n| as_count(n, "rounds").map(|n| at(Some(n), base.p, None))).collect::<Result<_>>()?,
            Axis::Buffer => values.iter().map(|&b| as_count(b, "buffer").map(|b| at(None, base.p, Some(b)))).collect::<Result<_>>()?,
        };
        if args.axis == Axis::Buffer {
            let c0 = &points[0];
            let setup = Setup::new(d, c0.rounds, c0.basis, c0.p)?;
            ler.push(ler_row(c0, DecoderArg::Global, c0.shots, run_global(&setup, c0.shots, c0.seed)?));
            for c in &points {
                let counts = run_parallel(&setup, &setup.plan(c.buffer, c.core)?, c.shots, c.seed, true, None)?;
                ler.push(ler_row(c, DecoderArg::Parallel, counts.shots, counts.failures));
                seams.push(seam_row(c, counts.shots, counts.seam_shots));
            }
            continue;
        }
        for c in &points {
            let setup = Setup::new(d, c.rounds, c.basis, c.p)?;
            match args.decoder {
                DecoderArg::Global => ler.push(ler_row(c, DecoderArg::Global, c.shots, run_global(&setup, c.shots, c.seed)?)),
                DecoderArg::Parallel => {
                    let counts = run_parallel(&setup, &setup.plan(c.buffer, c.core)?, c.shots, c.seed, args.seam_audit, None)?;
                    ler.push(ler_row(c, DecoderArg::Parallel, counts.shots, counts.failures));
                    if args.seam_audit {
                        seams.push(seam_row(c, counts.shots, counts.seam_shots));
                    }
                }
            }
        }
    }
    let mut out = OutputDir::create(&base.out_dir)?;
    out.write("ler.csv", |w| write_ler(w, &ler))?;
    if !seams.is_empty() {
        out.write("seam.csv", |w| write_seam_rates(w, &seams))?;
    }
    let mut flags = vec![
        flag("distance", base.distance),
        flag("basis", base.basis.as_char().to_ascii_lowercase()),
        flag("p", base.p),
        flag("shots", base.shots),
        flag("seed", base.seed),
        flag("workers", base.workers),
        flag("axis", match args.axis {
            Axis::P => "p",
            Axis::Rounds => "rounds",
            Axis::Buffer => "buffer",
        }),
        flag("values", join(&values)),
        flag("distances", join(&distances)),
        flag("decoder", if args.decoder == DecoderArg::Global { "global" } else { "parallel" }),
    ];
    for (k, v) in [("rounds", run.rounds), ("buffer", run.buffer), ("core", run.core)] {
        if let Some(v) = v {
            flags.push(flag(k, v));
        }
    }
    if args.seam_audit {
        flags.push(flag("seam-audit", true));
    }
    Ok(out.finish("sweep", &flags)?)
}

pub fn bench_cmd(args: &BenchArgs) -> Result<PathBuf> {
    let c = args.run.config()?;
    let mut counts = if args.worker_counts.is_empty() { vec![1, c.workers] } else { args.worker_counts.clone() };
    counts.dedup();
    if counts.contains(&0) {
        bail!(Error::InvalidParameter("worker counts must be positive".into()));
    }
    let setup = Setup::new(c.distance, c.rounds, c.basis, c.p)?;
    let decoder = ParallelDecoder::new(&setup.graph, setup.plan(c.buffer, c.core)?)?;
    let sampler = Sampler::new(&setup.dem);
    let shots: Vec<Vec<u32>> = (0..c.shots).map(|k| sampler.sample(c.seed, k).event_detectors()).collect();
    let rows = benchmark_throughput(&decoder, &shots, &counts)?;
    let mut out = OutputDir::create(&c.out_dir)?;
    out.write("throughput.csv", |w| write_throughput(w, &rows))?;
    let mut flags = args.run.flags(false)?;
    flags.push(flag("worker-counts", join(&counts)));
    Ok(out.finish("bench", &flags)?)
}

pub fn fit_cmd(args: &FitArgs) -> Result<PathBuf> {
    let f = File::open(&args.points).with_context(|| format!("opening fit points {}", args.points.display()))?;
    let points = read_fit_points(BufReader::new(f)).with_context(|| format!("reading fit points {}", args.points.display()))?;
    let fit = fit_epsilon(&points)?;
    let mut out = OutputDir::create(&args.out_dir)?;
    out.write("fit.csv", |w| write_fit_result(w, &fit))?;
    Ok(out.finish("fit", &[flag("points", absolute(&args.points)?.display())])?)
}

const KIND_ORDER: [WindowKind; 4] = [WindowKind::Initial, WindowKind::Bulk, WindowKind::Final, WindowKind::Single];

/// Without `--rounds`, shot `k` runs `(3 + k mod 3)·c` rounds, giving 3 to 5 windows.
pub fn export_dataset_cmd(args: &RunArgs) -> Result<PathBuf> {
    let c = args.config()?;
    let round_choices: Vec<usize> = match args.rounds {
        Some(n) => vec![n],
        None => (3..=5).map(|m| m * c.core).collect(),
    };
    struct Variant {
        setup: Setup,
        plan: mergefree_core::windowing::WindowPlan,
        partition: Vec<usize>,
        maps: Vec<TensorMap>,
    }
    let variants = round_choices
        .iter()
        .map(|&n| -> Result<Variant> {
            let setup = Setup::new(c.distance, n, c.basis, c.p)?;
            let plan = setup.plan(c.buffer, c.core)?;
            let partition = plan.core_partition(&setup.graph);
            let maps = (1..=plan.window_count())
                .map(|i| TensorMap::new(&plan, i, &setup.layout, &setup.dem.detectors))
                .collect::<mergefree_core::Result<_>>()?;
            Ok(Variant { setup, plan, partition, maps })
        })
        .collect::<Result<Vec<_>>>()?;
    let samplers: Vec<Sampler> = variants.iter().map(|v| Sampler::new(&v.setup.dem)).collect();
    let per_shot = (0..c.shots)
        .into_par_iter()
        .map(|k| {
            let which = (k % variants.len() as u64) as usize;
            let v = &variants[which];
            let shot = samplers[which].sample(c.seed, k);
            let labels = derive_window_labels(&shot, &v.plan, &v.setup.graph, &v.partition)?;
            let windows = v
                .maps
                .iter()
                .zip(&labels.y)
                .enumerate()
                .map(|(i, (map, &y))| {
                    let t = map.extract(|d| shot.event(d));
                    let entry = IndexEntry { shot: k, window: i + 1, rounds: v.plan.rounds };
                    (t.kind, DatasetRecord::from_tensor(&t, y), entry)
                })
                .collect::<Vec<_>>();
            Ok((v.plan.rounds, shot.y_global, windows))
        })
        .collect::<mergefree_core::Result<Vec<_>>>()?;

    let mut out = OutputDir::create(&c.out_dir)?;
    for kind in KIND_ORDER {
        let (records, index): (Vec<_>, Vec<_>) = per_shot
            .iter()
            .flat_map(|s| s.2.iter())
            .filter(|w| w.0 == kind)
            .map(|w| (w.1.clone(), w.2))
            .unzip();
        if records.is_empty() {
            continue;
        }
        let header = DatasetHeader {
            distance: c.distance,
            buffer: c.buffer,
            core: c.core,
            kind,
            records: records.len() as u64,
        };
        out.write(&format!("dataset_{kind}.bin"), |w| write_dataset(w, &header, &records))?;
        out.write(&format!("dataset_{kind}.index.csv"), |w| write_index(w, &index))?;
    }
    out.write("global_labels.csv", |w| {
        writeln!(w, "shot,rounds,y_global")?;
        for (k, s) in per_shot.iter().enumerate() {
            writeln!(w, "{k},{},{}", s.0, s.1 as u8)?;
        }
        Ok(())
    })?;
    Ok(out.finish("export-dataset", &args.flags(true)?)?)
}
