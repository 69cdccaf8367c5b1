//! Command surface of the merge-free decoding experiments.
//!
//! Every command writes into `--out-dir` and finishes with `manifest.txt`, a
//! sorted `key=value` file holding the command, every flag needed to repeat
//! it, the output file names, the format version and `git describe` of the
//! build. `mergefree rerun --manifest <file>` repeats a run from that file.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use mergefree_core::io::Manifest;
use mergefree_core::parallel_engine::with_workers;
use mergefree_core::Error;

pub use args::{Cli, Command, RunConfig};
use output::META_KEYS;

/// Runs one parsed command; returns the manifest path.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let workers = match &cli.command {
        Command::BuildDem(a) | Command::Sample(a) | Command::ExportDataset(a) => a.workers,
        Command::Decode(a) => a.run.workers,
        Command::Sweep(a) => a.run.workers,
        Command::Bench(a) => a.run.workers,
        Command::Fit(_) | Command::Rerun(_) => Some(1),
    }
    .unwrap_or_else(args::host_cores);
    if workers == 0 {
        bail!(Error::InvalidParameter("workers must be positive".into()));
    }
    with_workers(workers, || match &cli.command {
        Command::BuildDem(a) => commands::build_dem_cmd(a),
        Command::Sample(a) => commands::sample_cmd(a),
        Command::Decode(a) => commands::decode_cmd(a),
        Command::Sweep(a) => commands::sweep_cmd(a),
        Command::Bench(a) => commands::bench_cmd(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::ExportDataset(a) => commands::export_dataset_cmd(a),
        Command::Rerun(a) => rerun(&a.manifest, a.out_dir.clone()),
    })?
}

/// Command line recorded in a manifest, with `--out-dir` replaced when given.
pub fn manifest_command_line(manifest: &Manifest, out_dir: Option<PathBuf>) -> Result<Vec<OsString>> {
    let command = manifest.get("command").ok_or_else(|| Error::Format("manifest has no command".into()))?;
    if command == "rerun" {
        bail!(Error::Format("manifest records a rerun".into()));
    }
    let mut argv: Vec<OsString> = vec!["mergefree".into(), command.into()];
    for (k, v) in manifest.iter() {
        if META_KEYS.contains(&k) || k == "out-dir" {
            continue;
        }
        argv.push(format!("--{k}").into());
        if k != "seam-audit" {
            argv.push(v.into());
        }
    }
    let dir = match out_dir {
        Some(d) => d.into_os_string(),
        None => manifest.get("out-dir").ok_or_else(|| Error::Format("manifest has no out-dir".into()))?.into(),
    };
    argv.push("--out-dir".into());
    argv.push(dir);
    Ok(argv)
}

pub fn rerun(path: &std::path::Path, out_dir: Option<PathBuf>) -> Result<PathBuf> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let manifest = Manifest::from_text(&text)?;
    let argv = manifest_command_line(&manifest, out_dir)?;
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Format(format!("manifest flags rejected: {}", first_line(&e.to_string()))))?;
    run(&cli)
}

fn first_line(s: &str) -> String {
    s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim().to_string()
}

/// Machine-readable class of a failure.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::InvalidParameter(_) => "invalid-config",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::MissingPrediction { .. } => "missing-prediction",
            Error::Domain(_) => "domain",
            _ => "decode",
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "internal"
}

/// One line: `error: kind=<kind> message="<text>"`.
pub fn error_line(kind: &str, message: &str) -> String {
    let flat = message.split_whitespace().collect::<Vec<_>>().join(" ").replace('"', "'");
    format!("error: kind={kind} message=\"{flat}\"")
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_line("usage", &first_line(&e.to_string())));
            return 2;
        }
    };
    match run(&cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(error_kind(&e), &format!("{e:#}")));
            1
        }
    }
}
