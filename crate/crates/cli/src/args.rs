use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mergefree_core::code_model::Basis;
use mergefree_core::Error;

#[derive(Debug, Clone, Parser)]
#[command(name = "mergefree", version, about = "Seeded merge-free parallel window decoding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the memory circuit, its detector error model and decoding graph.
    BuildDem(RunArgs),
    /// Sample shots into an events file and a label sidecar.
    Sample(RunArgs),
    /// Decode sampled shots and write logical error rates.
    Decode(DecodeArgs),
    /// Decode over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Time parallel decoding for several worker counts.
    Bench(BenchArgs),
    /// Fit a per-round error rate to (rounds, pl) points.
    Fit(FitArgs),
    /// Export window tensors and labels for an external window decoder.
    ExportDataset(RunArgs),
    /// Re-run a command from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BuildDem(_) => "build-dem",
            Command::Sample(_) => "sample",
            Command::Decode(_) => "decode",
            Command::Sweep(_) => "sweep",
            Command::Bench(_) => "bench",
            Command::Fit(_) => "fit",
            Command::ExportDataset(_) => "export-dataset",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Z,
    X,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Z => Basis::Z,
            BasisArg::X => Basis::X,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Global,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnerArg {
    Mwpm,
    PredictionsFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    P,
    #[value(name = "rounds", alias = "N", alias = "n")]
    Rounds,
    #[value(name = "buffer", alias = "b")]
    Buffer,
}

/// Flags shared by every experiment command.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Code distance.
    #[arg(long, default_value_t = 3)]
    pub distance: usize,
    /// Measurement rounds; defaults to the distance.
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, value_enum, default_value = "z")]
    pub basis: BasisArg,
    /// Physical error rate of the circuit noise model.
    #[arg(long, default_value_t = 0.003)]
    pub p: f64,
    /// Window buffer layers; defaults to the distance.
    #[arg(long)]
    pub buffer: Option<usize>,
    /// Window core layers; defaults to the distance.
    #[arg(long)]
    pub core: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Thread pool size; defaults to the host's cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value = "parallel")]
    pub decoder: DecoderArg,
    /// Window decoder of the parallel path.
    #[arg(long, value_enum, default_value = "mwpm")]
    pub inner: InnerArg,
    /// `shot,window,probability` file for `--inner predictions-file`.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Audit every seam and write seam rates.
    #[arg(long)]
    pub seam_audit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Axis values; `p` defaults to 0.002..0.009, `buffer` to 1..=d.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// Distances to sweep; defaults to `--distance`.
    #[arg(long, value_delimiter = ',')]
    pub distances: Vec<usize>,
    /// Decoder for the `p` and `rounds` axes; the buffer axis runs both.
    #[arg(long, value_enum, default_value = "global")]
    pub decoder: DecoderArg,
    #[arg(long)]
    pub seam_audit: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Worker counts to time; defaults to 1 and the pool size.
    #[arg(long, value_delimiter = ',')]
    pub worker_counts: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// `rounds,pl,shots` CSV.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Validated parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub p: f64,
    pub buffer: usize,
    pub core: usize,
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
}

pub fn host_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

pub fn check_distance(d: usize) -> Result<(), Error> {
    if d < 3 || d % 2 == 0 {
        return Err(invalid(format!("distance must be odd and at least 3, got {d}")));
    }
    Ok(())
}

pub fn check_p(p: f64) -> Result<(), Error> {
    if !(p.is_finite() && (0.0..0.5).contains(&p)) {
        return Err(invalid(format!("p must lie in [0, 0.5), got {p}")));
    }
    Ok(())
}

impl RunArgs {
    /// Resolves defaults and checks every precondition.
    pub fn config(&self) -> Result<RunConfig, Error> {
        let d = self.distance;
        check_distance(d)?;
        check_p(self.p)?;
        let cfg = RunConfig {
            distance: d,
            rounds: self.rounds.unwrap_or(d),
            basis: self.basis.into(),
            p: self.p,
            buffer: self.buffer.unwrap_or(d),
            core: self.core.unwrap_or(d),
            shots: self.shots,
            seed: self.seed,
            workers: self.workers.unwrap_or_else(host_cores),
            out_dir: self.out_dir.clone(),
        };
        for (name, v) in [("rounds", cfg.rounds), ("buffer", cfg.buffer), ("core", cfg.core), ("workers", cfg.workers)] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if cfg.shots == 0 {
            return Err(invalid("shots must be positive".into()));
        }
        Ok(cfg)
    }

    /// Flags that reproduce this run, defaults filled in except `rounds`
    /// when `keep_rounds_open`.
    pub fn flags(&self, keep_rounds_open: bool) -> Result<Vec<(String, String)>, Error> {
        let c = self.config()?;
        let mut f = vec![
            ("distance".to_string(), c.distance.to_string()),
            ("basis".to_string(), c.basis.as_char().to_ascii_lowercase().to_string()),
            ("p".to_string(), c.p.to_string()),
            ("buffer".to_string(), c.buffer.to_string()),
            ("core".to_string(), c.core.to_string()),
            ("shots".to_string(), c.shots.to_string()),
            ("seed".to_string(), c.seed.to_string()),
            ("workers".to_string(), c.workers.to_string()),
        ];
        if !keep_rounds_open || self.rounds.is_some() {
            f.push(("rounds".to_string(), c.rounds.to_string()));
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mergefree").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_follow_distance() {
        let Command::Decode(a) = parse(&["decode", "--distance", "5", "--out-dir", "o"]).command else { panic!() };
        let c = a.run.config().unwrap();
        assert_eq!((c.rounds, c.buffer, c.core), (5, 5, 5));
        assert_eq!(a.decoder, DecoderArg::Parallel);
        assert_eq!(a.inner, InnerArg::Mwpm);
    }

    #[test]
    fn validation() {
        let bad = [
            vec!["sample", "--distance", "4", "--out-dir", "o"],
            vec!["sample", "--p", "0.7", "--out-dir", "o"],
            vec!["sample", "--core", "0", "--out-dir", "o"],
            vec!["sample", "--shots", "0", "--out-dir", "o"],
        ];
        for args in bad {
            let Command::Sample(a) = parse(&args).command else { panic!() };
            assert!(a.config().is_err(), "{args:?}");
        }
    }

    #[test]
    fn sweep_lists_and_axis_aliases() {
        let Command::Sweep(s) = parse(&["sweep", "--axis", "N", "--values", "3,6", "--distances", "3,5", "--out-dir", "o"]).command
        else {
            panic!()
        };
        assert_eq!(s.axis, Axis::Rounds);
        assert_eq!(s.values, vec![3.0, 6.0]);
        assert_eq!(s.distances, vec![3, 5]);
    }

    #[test]
    fn flags_are_kebab_case() {
        assert!(Cli::try_parse_from(["mergefree", "decode", "--out-dir", "o", "--seam-audit", "--inner", "predictions-file"]).is_ok());
        assert!(Cli::try_parse_from(["mergefree", "decode", "--out_dir", "o"]).is_err());
    }
}
