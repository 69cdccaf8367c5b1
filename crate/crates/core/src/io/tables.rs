//! CSV tables. Every file starts with a header line; floats are written in
//! shortest round-trip form.
//!
//! | table        | columns |
//! |--------------|---------|
//! | predictions  | `shot,window,probability` (window 1-based, probability in [0, 1]) |
//! | fit points   | `rounds,pl,shots` |
//! | fit result   | `epsilon,constant,residual,points,dropped` |
//! | LER          | `d,basis,p,rounds,b,c,decoder,shots,failures,ler,sigma` |
//! | seam rate    | `d,p,rounds,b,c,shots,seam_shots,rate` |
//! | window rates | `window,shots,failures,rate` |
//! | throughput   | `workers,windows,rounds,shots,seconds,seconds_per_round` |
//! | DEP curves   | `round,weight,rate` |
//! | correlation  | `round,<round>…` square matrix |

use std::io::{Read, Write};

use super::events::csv_err;
use crate::code_model::Basis;
use crate::error::{Error, Result};
use crate::parallel_engine::{Predictions, ThroughputRow};
use crate::stats::{binomial_sigma, CorrelationMatrix, DepCurves, FitPoint, FitResult};

fn table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    for r in rows {
        out.write_record(&r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn records(r: impl Read, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let found = rd.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse { line: 1, msg: format!("expected header {:?}", header.join(",")) });
    }
    rd.records()
        .enumerate()
        .map(|(k, rec)| rec.map(|r| (k + 2, r)).map_err(|e| Error::Parse { line: k + 2, msg: e.to_string() }))
        .collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, line: usize, i: usize, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let s = rec.get(i).ok_or(Error::Parse { line, msg: format!("missing {name}") })?;
    s.parse().map_err(|e| Error::Parse { line, msg: format!("{name}: {e}") })
}

/// Parses a prediction file. Rejects probabilities outside `[0, 1]`, window 0
/// and duplicate `(shot, window)` pairs.
pub fn read_predictions(r: impl Read) -> Result<Predictions> {
    let mut p = Predictions::new();
    for (line, rec) in records(r, &["shot", "window", "probability"])? {
        let shot: u64 = field(&rec, line, 0, "shot")?;
        let window: usize = field(&rec, line, 1, "window")?;
        let prob: f64 = field(&rec, line, 2, "probability")?;
        if window == 0 {
            return Err(Error::Parse { line, msg: "windows are numbered from 1".into() });
        }
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Parse { line, msg: format!("probability {prob} outside [0, 1]") });
        }
        if p.get(shot, window).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate prediction for shot {shot}, window {window}") });
        }
        p.insert(shot, window, prob);
    }
    Ok(p)
}

/// Writes predictions sorted by `(shot, window)`.
pub fn write_predictions(w: impl Write, rows: &[(u64, usize, f64)]) -> Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    table(
        w,
        &["shot", "window", "probability"],
        sorted.into_iter().map(|(s, i, p)| vec![s.to_string(), i.to_string(), p.to_string()]),
    )
}

pub fn read_fit_points(r: impl Read) -> Result<Vec<FitPoint>> {
    records(r, &["rounds", "pl", "shots"])?
        .into_iter()
        .map(|(line, rec)| {
            Ok(FitPoint {
                rounds: field(&rec, line, 0, "rounds")?,
                pl: field(&rec, line, 1, "pl")?,
                shots: field(&rec, line, 2, "shots")?,
            })
        })
        .collect()
}

pub fn write_fit_points(w: impl Write, points: &[FitPoint]) -> Result<()> {
    table(
        w,
        &["rounds", "pl", "shots"],
        points.iter().map(|p| vec![p.rounds.to_string(), p.pl.to_string(), p.shots.to_string()]),
    )
}

pub fn write_fit_result(w: impl Write, fit: &FitResult) -> Result<()> {
    table(
        w,
        &["epsilon", "constant", "residual", "points", "dropped"],
        [vec![
            fit.epsilon.to_string(),
            fit.constant.to_string(),
            fit.residual.to_string(),
            fit.fidelities.len().to_string(),
            fit.dropped.len().to_string(),
        ]],
    )
}

/// Logical error count of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LerRow {
    pub distance: usize,
    pub basis: Basis,
    pub p: f64,
    pub rounds: usize,
    pub buffer: usize,
    pub core: usize,
    /// `global` or `parallel`.
    pub decoder: String,
    pub shots: u64,
    pub failures: u64,
}

impl LerRow {
    pub fn ler(&self) -> f64 {
        self.failures as f64 / self.shots.max(1) as f64
    }

    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.failures, self.shots)
    }
}

pub fn write_ler(w: impl Write, rows: &[LerRow]) -> Result<()> {
    table(
        w,
        &["d", "basis", "p", "rounds", "b", "c", "decoder", "shots", "failures", "ler", "sigma"],
        rows.iter().map(|r| {
            vec![
                r.distance.to_string(),
                r.basis.to_string(),
                r.p.to_string(),
                r.rounds.to_string(),
                r.buffer.to_string(),
                r.core.to_string(),
                r.decoder.clone(),
                r.shots.to_string(),
                r.failures.to_string(),
                r.ler().to_string(),
                r.sigma().to_string(),
            ]
        }),
    )
}

pub fn read_ler(r: impl Read) -> Result<Vec<LerRow>> {
    let head = ["d", "basis", "p", "rounds", "b", "c", "decoder", "shots", "failures", "ler", "sigma"];
    records(r, &head)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(LerRow {
                distance: field(&rec, line, 0, "d")?,
                basis: rec[1].parse().map_err(|e: Error| Error::Parse { line, msg: e.to_string() })?,
                p: field(&rec, line, 2, "p")?,
                rounds: field(&rec, line, 3, "rounds")?,
                buffer: field(&rec, line, 4, "b")?,
                core: field(&rec, line, 5, "c")?,
                decoder: rec[6].to_string(),
                shots: field(&rec, line, 7, "shots")?,
                failures: field(&rec, line, 8, "failures")?,
            })
        })
        .collect()
}

/// Fraction of shots with a non-trivial seam audit.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamRow {
    pub distance: usize,
    pub p: f64,
    pub rounds: usize,
    pub buffer: usize,
    pub core: usize,
    pub shots: u64,
    pub seam_shots: u64,
}

impl SeamRow {
    pub fn rate(&self) -> f64 {
        self.seam_shots as f64 / self.shots.max(1) as f64
    }
}

pub fn write_seam_rates(w: impl Write, rows: &[SeamRow]) -> Result<()> {
    table(
        w,
        &["d", "p", "rounds", "b", "c", "shots", "seam_shots", "rate"],
        rows.iter().map(|r| {
            vec![
                r.distance.to_string(),
                r.p.to_string(),
                r.rounds.to_string(),
                r.buffer.to_string(),
                r.core.to_string(),
                r.shots.to_string(),
                r.seam_shots.to_string(),
                r.rate().to_string(),
            ]
        }),
    )
}

/// Per-window mismatch counts of a parallel run, windows numbered from 1.
pub fn write_window_rates(w: impl Write, shots: u64, failures: &[u64]) -> Result<()> {
    table(
        w,
        &["window", "shots", "failures", "rate"],
        failures.iter().enumerate().map(|(i, &f)| {
            vec![(i + 1).to_string(), shots.to_string(), f.to_string(), (f as f64 / shots.max(1) as f64).to_string()]
        }),
    )
}

pub fn write_throughput(w: impl Write, rows: &[ThroughputRow]) -> Result<()> {
    table(
        w,
        &["workers", "windows", "rounds", "shots", "seconds", "seconds_per_round"],
        rows.iter().map(|r| {
            vec![
                r.workers.to_string(),
                r.windows.to_string(),
                r.rounds.to_string(),
                r.shots.to_string(),
                r.seconds.to_string(),
                r.seconds_per_round.to_string(),
            ]
        }),
    )
}

pub fn write_dep_curves(w: impl Write, curves: &DepCurves) -> Result<()> {
    table(
        w,
        &["round", "weight", "rate"],
        curves.by_round.iter().map(|(&(r, wt), &v)| vec![r.to_string(), wt.to_string(), v.to_string()]),
    )
}

pub fn write_correlation(w: impl Write, m: &CorrelationMatrix) -> Result<()> {
    let mut head = vec!["round".to_string()];
    head.extend(m.rounds.iter().map(|r| r.to_string()));
    let head_ref: Vec<&str> = head.iter().map(String::as_str).collect();
    table(
        w,
        &head_ref,
        m.rounds.iter().zip(&m.values).map(|(r, row)| {
            let mut rec = vec![r.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_parse() {
        let text = "shot,window,probability\n0,1,0.2\n0,2,0.5\n1,1,1\n";
        let p = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.get(0, 2), Some(0.5));
        assert!(read_predictions("shot,window,probability\n0,0,0.2\n".as_bytes()).is_err());
        assert!(read_predictions("shot,window,probability\n0,1,1.2\n".as_bytes()).is_err());
        assert!(read_predictions("shot,window,probability\n0,1,0.1\n0,1,0.3\n".as_bytes()).is_err());
        assert!(read_predictions("shot,win,probability\n".as_bytes()).is_err());
        let err = read_predictions("shot,window,probability\n0,1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn predictions_round_trip() {
        let rows = vec![(3, 2, 0.25), (0, 1, 0.75), (3, 1, 1e-9)];
        let mut bytes = Vec::new();
        write_predictions(&mut bytes, &rows).unwrap();
        assert!(String::from_utf8(bytes.clone()).unwrap().starts_with("shot,window,probability\n0,1,0.75\n3,1,"));
        let p = read_predictions(bytes.as_slice()).unwrap();
        for (s, i, v) in rows {
            assert_eq!(p.get(s, i), Some(v));
        }
    }

    #[test]
    fn fit_points_round_trip() {
        let pts = vec![FitPoint { rounds: 3, pl: 0.0421, shots: 100_000 }, FitPoint { rounds: 9, pl: 0.1, shots: 5 }];
        let mut bytes = Vec::new();
        write_fit_points(&mut bytes, &pts).unwrap();
        assert_eq!(read_fit_points(bytes.as_slice()).unwrap(), pts);
    }

    #[test]
    fn ler_round_trip() {
        let rows = vec![LerRow {
            distance: 3,
            basis: Basis::Z,
            p: 0.003,
            rounds: 9,
            buffer: 3,
            core: 3,
            decoder: "parallel".into(),
            shots: 1000,
            failures: 17,
        }];
        let mut bytes = Vec::new();
        write_ler(&mut bytes, &rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.ends_with("3,Z,0.003,9,3,3,parallel,1000,17,0.017,0.004087909000944126\n"), "{text}");
        assert_eq!(read_ler(bytes.as_slice()).unwrap(), rows);
    }
}
