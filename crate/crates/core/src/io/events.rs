//! Detection-event files and label sidecars.
//!
//! Event file layout, all integers little-endian:
//!
//! | offset | size | field                    |
//! |--------|------|--------------------------|
//! | 0      | 4    | magic `MFEV`             |
//! | 4      | 2    | format version (1)       |
//! | 6      | 2    | distance `d`             |
//! | 8      | 4    | rounds `N`               |
//! | 12     | 1    | basis, ASCII `Z` or `X`  |
//! | 13     | 3    | zero                     |
//! | 16     | 4    | detector count `D`       |
//! | 20     | 8    | shot count `S`           |
//! | 28     | ...  | `S` rows of `⌈D/8⌉` bytes |
//!
//! Detector `k` of a row is bit `k % 8` (LSB first) of byte `k / 8`.
//! Unused high bits of the last byte are zero.

use std::io::{Read, Write};

use crate::code_model::Basis;
use crate::error::{Error, Result};

pub const EVENTS_MAGIC: [u8; 4] = *b"MFEV";
pub const EVENTS_VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventsHeader {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub detectors: usize,
    pub shots: u64,
}

impl EventsHeader {
    pub fn row_bytes(&self) -> usize {
        self.detectors.div_ceil(8)
    }

    fn encode(&self) -> Result<[u8; HEADER_LEN]> {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&EVENTS_MAGIC);
        h[4..6].copy_from_slice(&EVENTS_VERSION.to_le_bytes());
        h[6..8].copy_from_slice(&narrow::<u16>(self.distance, "distance")?.to_le_bytes());
        h[8..12].copy_from_slice(&narrow::<u32>(self.rounds, "rounds")?.to_le_bytes());
        h[12] = self.basis.as_char() as u8;
        h[16..20].copy_from_slice(&narrow::<u32>(self.detectors, "detector count")?.to_le_bytes());
        h[20..28].copy_from_slice(&self.shots.to_le_bytes());
        Ok(h)
    }

    fn decode(h: &[u8; HEADER_LEN]) -> Result<Self> {
        if h[0..4] != EVENTS_MAGIC {
            return Err(Error::Format("not an events file".into()));
        }
        let version = u16::from_le_bytes([h[4], h[5]]);
        if version != EVENTS_VERSION {
            return Err(Error::Format(format!("unsupported events version {version}")));
        }
        let basis = match h[12] {
            b'Z' => Basis::Z,
            b'X' => Basis::X,
            other => return Err(Error::Format(format!("bad basis byte {other:#04x}"))),
        };
        Ok(Self {
            distance: u16::from_le_bytes([h[6], h[7]]) as usize,
            rounds: u32::from_le_bytes(h[8..12].try_into().unwrap()) as usize,
            basis,
            detectors: u32::from_le_bytes(h[16..20].try_into().unwrap()) as usize,
            shots: u64::from_le_bytes(h[20..28].try_into().unwrap()),
        })
    }
}

fn narrow<T: TryFrom<usize>>(value: usize, what: &str) -> Result<T> {
    T::try_from(value).map_err(|_| Error::Format(format!("{what} {value} does not fit the header field")))
}

/// Writes an event file. `rows` are packed `u64` bitsets (bit `k` of word
/// `k / 64`) and must number exactly `header.shots`.
pub fn write_events<'a>(
    mut w: impl Write,
    header: &EventsHeader,
    rows: impl IntoIterator<Item = &'a [u64]>,
) -> Result<()> {
    w.write_all(&header.encode()?)?;
    let nbytes = header.row_bytes();
    let mut buf = vec![0u8; nbytes];
    let mut count = 0u64;
    for row in rows {
        if row.len() * 64 < header.detectors {
            return Err(Error::Format(format!("row {count} is shorter than {} detectors", header.detectors)));
        }
        for (k, byte) in buf.iter_mut().enumerate() {
            *byte = (row[k / 8] >> (8 * (k % 8))) as u8;
        }
        if header.detectors % 8 != 0 {
            buf[nbytes - 1] &= (1u8 << (header.detectors % 8)) - 1;
        }
        w.write_all(&buf)?;
        count += 1;
    }
    if count != header.shots {
        return Err(Error::Format(format!("header declares {} shots, wrote {count}", header.shots)));
    }
    Ok(())
}

/// Reads an event file into packed `u64` rows.
pub fn read_events(mut r: impl Read) -> Result<(EventsHeader, Vec<Vec<u64>>)> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).map_err(|_| Error::Format("truncated events header".into()))?;
    let header = EventsHeader::decode(&h)?;
    let nbytes = header.row_bytes();
    let words = header.detectors.div_ceil(64);
    let mut buf = vec![0u8; nbytes];
    let mut rows = Vec::with_capacity(header.shots.min(1 << 24) as usize);
    for s in 0..header.shots {
        r.read_exact(&mut buf).map_err(|_| Error::Format(format!("truncated events row {s}")))?;
        let mut row = vec![0u64; words];
        for (k, &byte) in buf.iter().enumerate() {
            row[k / 8] |= (byte as u64) << (8 * (k % 8));
        }
        rows.push(row);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after last events row".into()));
    }
    Ok((header, rows))
}

/// Label sidecar rows: `shot,y_global,y_1,…,y_m` with a header line.
pub fn write_labels(w: impl Write, windows: usize, rows: impl IntoIterator<Item = (u64, bool, Vec<bool>)>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut head = vec!["shot".to_string(), "y_global".to_string()];
    head.extend((1..=windows).map(|i| format!("y_{i}")));
    out.write_record(&head).map_err(csv_err)?;
    for (shot, y, per_window) in rows {
        if per_window.len() != windows {
            return Err(Error::Format(format!("shot {shot}: {} window labels, expected {windows}", per_window.len())));
        }
        let mut rec = vec![shot.to_string(), bit(y).to_string()];
        rec.extend(per_window.iter().map(|&b| bit(b).to_string()));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a label sidecar into `(shot, y_global, window bits)`.
pub fn read_labels(r: impl Read) -> Result<Vec<(u64, bool, Vec<bool>)>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let field = |i: usize| rec.get(i).ok_or(Error::Parse { line, msg: "missing field".into() });
        let shot = field(0)?.parse().map_err(|e| Error::Parse { line, msg: format!("shot: {e}") })?;
        let y = parse_bit(field(1)?, line)?;
        let bits = (2..rec.len()).map(|i| parse_bit(&rec[i], line)).collect::<Result<_>>()?;
        out.push((shot, y, bits));
    }
    Ok(out)
}

fn bit(b: bool) -> u8 {
    b as u8
}

fn parse_bit(s: &str, line: usize) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse { line, msg: format!("expected 0 or 1, got {other:?}") }),
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
