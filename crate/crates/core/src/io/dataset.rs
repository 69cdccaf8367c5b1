//! Window datasets for external per-window decoders.
//!
//! One file per window kind. Layout, integers little-endian:
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `MFWD`                       |
//! | 4      | 2    | format version (1)                 |
//! | 6      | 2    | distance `d`                       |
//! | 8      | 2    | buffer `b`                         |
//! | 10     | 2    | core `c`                           |
//! | 12     | 1    | window kind: 0 initial, 1 bulk, 2 final, 3 single |
//! | 13     | 3    | zero                               |
//! | 16     | 4    | bits per record, `(b+c+b)(d+1)² + 1` |
//! | 20     | 8    | record count                       |
//! | 28     | ...  | records of `⌈bits/8⌉` bytes         |
//!
//! Record bit `k < (b+c+b)(d+1)²` is tensor cell `k` (layer-major, slot
//! `(i, j)` at `j(d+1) + i`); the last bit is the window label `yᵢ`.
//! Bits are packed LSB first.
//!
//! Each dataset file has an index sidecar `shot,window,rounds` listing the
//! source of every record in order.

use std::io::{Read, Write};

use super::events::csv_err;
use crate::error::{Error, Result};
use crate::windowing::{WindowKind, WindowTensor};

pub const DATASET_MAGIC: [u8; 4] = *b"MFWD";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub distance: usize,
    pub buffer: usize,
    pub core: usize,
    pub kind: WindowKind,
    pub records: u64,
}

impl DatasetHeader {
    pub fn tensor_bits(&self) -> usize {
        (2 * self.buffer + self.core) * (self.distance + 1) * (self.distance + 1)
    }

    pub fn record_bits(&self) -> usize {
        self.tensor_bits() + 1
    }

    pub fn record_bytes(&self) -> usize {
        self.record_bits().div_ceil(8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    /// Tensor cells, one `0`/`1` byte each.
    pub bits: Vec<u8>,
    pub label: bool,
}

impl DatasetRecord {
    pub fn from_tensor(tensor: &WindowTensor, label: bool) -> Self {
        Self { bits: tensor.bits.clone(), label }
    }
}

fn kind_from_code(code: u8) -> Result<WindowKind> {
    [WindowKind::Initial, WindowKind::Bulk, WindowKind::Final, WindowKind::Single]
        .into_iter()
        .find(|k| k.code() == code)
        .ok_or_else(|| Error::Format(format!("unknown window kind code {code}")))
}

fn u16_field(value: usize, what: &str) -> Result<[u8; 2]> {
    u16::try_from(value)
        .map(u16::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what} {value} does not fit the header field")))
}

pub fn write_dataset(mut w: impl Write, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<()> {
    if records.len() as u64 != header.records {
        return Err(Error::Format(format!("header declares {} records, got {}", header.records, records.len())));
    }
    let mut h = [0u8; HEADER_LEN];
    h[0..4].copy_from_slice(&DATASET_MAGIC);
    h[4..6].copy_from_slice(&DATASET_VERSION.to_le_bytes());
    h[6..8].copy_from_slice(&u16_field(header.distance, "distance")?);
    h[8..10].copy_from_slice(&u16_field(header.buffer, "buffer")?);
    h[10..12].copy_from_slice(&u16_field(header.core, "core")?);
    h[12] = header.kind.code();
    h[16..20].copy_from_slice(&(header.record_bits() as u32).to_le_bytes());
    h[20..28].copy_from_slice(&header.records.to_le_bytes());
    w.write_all(&h)?;
    let cells = header.tensor_bits();
    let mut buf = vec![0u8; header.record_bytes()];
    for (n, rec) in records.iter().enumerate() {
        if rec.bits.len() != cells {
            return Err(Error::Format(format!("record {n} has {} cells, expected {cells}", rec.bits.len())));
        }
        buf.fill(0);
        for (k, _) in rec.bits.iter().enumerate().filter(|(_, &b)| b != 0) {
            buf[k / 8] |= 1 << (k % 8);
        }
        if rec.label {
            buf[cells / 8] |= 1 << (cells % 8);
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_dataset(mut r: impl Read) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).map_err(|_| Error::Format("truncated dataset header".into()))?;
    if h[0..4] != DATASET_MAGIC {
        return Err(Error::Format("not a window dataset file".into()));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    if version != DATASET_VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let header = DatasetHeader {
        distance: u16::from_le_bytes([h[6], h[7]]) as usize,
        buffer: u16::from_le_bytes([h[8], h[9]]) as usize,
        core: u16::from_le_bytes([h[10], h[11]]) as usize,
        kind: kind_from_code(h[12])?,
        records: u64::from_le_bytes(h[20..28].try_into().unwrap()),
    };
    let declared = u32::from_le_bytes(h[16..20].try_into().unwrap()) as usize;
    if declared != header.record_bits() {
        return Err(Error::Format(format!("record size {declared} bits disagrees with d, b, c")));
    }
    let cells = header.tensor_bits();
    let mut buf = vec![0u8; header.record_bytes()];
    let mut records = Vec::with_capacity(header.records.min(1 << 24) as usize);
    for n in 0..header.records {
        r.read_exact(&mut buf).map_err(|_| Error::Format(format!("truncated dataset record {n}")))?;
        let bits = (0..cells).map(|k| buf[k / 8] >> (k % 8) & 1).collect();
        let label = buf[cells / 8] >> (cells % 8) & 1 == 1;
        records.push(DatasetRecord { bits, label });
    }
    Ok((header, records))
}

/// Provenance of one dataset record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub shot: u64,
    pub window: usize,
    pub rounds: usize,
}

pub fn write_index(w: impl Write, entries: &[IndexEntry]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["shot", "window", "rounds"]).map_err(csv_err)?;
    for e in entries {
        out.write_record([e.shot.to_string(), e.window.to_string(), e.rounds.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_index(r: impl Read) -> Result<Vec<IndexEntry>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let num = |i: usize| -> Result<u64> {
            rec.get(i)
                .ok_or(Error::Parse { line, msg: "missing field".into() })?
                .parse()
                .map_err(|e| Error::Parse { line, msg: format!("{e}") })
        };
        out.push(IndexEntry { shot: num(0)?, window: num(1)? as usize, rounds: num(2)? as usize });
    }
    Ok(out)
}
