use std::collections::HashMap;
use std::fmt::Write as _;

use super::propagate::{enumerate_faults, propagate_all, Fault};
use crate::code_model::{Basis, CliffordCircuit};
use crate::error::{Error, Result};

/// XOR-combines the probabilities of two independent events.
pub fn xor_probability(q: f64, p: f64) -> f64 {
    q * (1.0 - p) + p * (1.0 - q)
}

/// Independent fault channel of the detector error model.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMechanism {
    pub probability: f64,
    /// Sorted detector ids flipped by the mechanism.
    pub detectors: Vec<u32>,
    pub logical_flip: bool,
    /// First circuit fault that produced this signature.
    pub provenance: Option<Fault>,
}

/// Where a detector sits: time layer, lattice slot and stabilizer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorInfo {
    pub round: u32,
    pub slot: (u16, u16),
    pub basis: Basis,
    pub weight: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorErrorModel {
    pub distance: usize,
    /// Measurement rounds `N`; detector layers run `1..=N+1`.
    pub rounds: usize,
    pub basis: Basis,
    pub mechanisms: Vec<ErrorMechanism>,
    pub detectors: Vec<DetectorInfo>,
}

impl DetectorErrorModel {
    pub fn detector_count(&self) -> usize {
        self.detectors.len()
    }

    pub fn round_count(&self) -> usize {
        self.rounds
    }
}

/// Builds the detector error model of a noisy circuit.
///
/// Mechanisms sharing a `(detectors, logical_flip)` signature are merged as
/// independent XOR events; the result is sorted by signature.
pub fn build_dem(circuit: &CliffordCircuit) -> DetectorErrorModel {
    let faults = enumerate_faults(circuit);
    let bare: Vec<Fault> = faults.iter().map(|(f, _)| *f).collect();
    let signatures = propagate_all(circuit, &bare);

    let mut index: HashMap<(Vec<u32>, bool), usize> = HashMap::new();
    let mut mechanisms: Vec<ErrorMechanism> = Vec::new();
    for ((fault, p), (dets, flip)) in faults.iter().zip(signatures) {
        if dets.is_empty() && !flip {
            continue;
        }
        match index.get(&(dets.clone(), flip)) {
            Some(&k) => {
                let m = &mut mechanisms[k];
                m.probability = xor_probability(m.probability, *p);
            }
            None => {
                index.insert((dets.clone(), flip), mechanisms.len());
                mechanisms.push(ErrorMechanism {
                    probability: *p,
                    detectors: dets,
                    logical_flip: flip,
                    provenance: Some(*fault),
                });
            }
        }
    }
    mechanisms.sort_by(|a, b| {
        a.detectors.cmp(&b.detectors).then(a.logical_flip.cmp(&b.logical_flip))
    });

    let detectors = circuit
        .detectors
        .iter()
        .map(|d| DetectorInfo { round: d.round, slot: d.slot, basis: d.basis, weight: d.weight })
        .collect();
    DetectorErrorModel {
        distance: circuit.distance,
        rounds: circuit.rounds,
        basis: circuit.basis,
        mechanisms,
        detectors,
    }
}

const DEM_HEADER: &str = "# mergefree-dem 1";

/// Serializes a DEM: a header, one `error(p) D.. [L0]` line per mechanism,
/// then one `detector(round, i, j, basis, weight) D<k>` line per detector.
pub fn dem_to_text(dem: &DetectorErrorModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{DEM_HEADER} distance={} rounds={} basis={}",
        dem.distance, dem.rounds, dem.basis
    );
    for m in &dem.mechanisms {
        let _ = write!(out, "error({})", m.probability);
        for d in &m.detectors {
            let _ = write!(out, " D{d}");
        }
        if m.logical_flip {
            out.push_str(" L0");
        }
        out.push('\n');
    }
    for (k, d) in dem.detectors.iter().enumerate() {
        let _ = writeln!(
            out,
            "detector({}, {}, {}, {}, {}) D{k}",
            d.round, d.slot.0, d.slot.1, d.basis, d.weight
        );
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_target(tok: &str, prefix: char, line: usize) -> Result<u32> {
    tok.strip_prefix(prefix)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(line, format!("bad target {tok:?}")))
}

/// Parses the format written by [`dem_to_text`]. Provenance is not serialized.
pub fn dem_from_text(text: &str) -> Result<DetectorErrorModel> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty DEM"))?;
    let rest = header.strip_prefix(DEM_HEADER).ok_or_else(|| perr(1, "missing DEM header"))?;
    let mut distance = None;
    let mut rounds = None;
    let mut basis = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| perr(1, "bad header field"))?;
        match k {
            "distance" => distance = v.parse().ok(),
            "rounds" => rounds = v.parse().ok(),
            "basis" => basis = v.parse().ok(),
            _ => return Err(perr(1, format!("unknown header field {k}"))),
        }
    }
    let mut mechanisms = Vec::new();
    let mut detectors: Vec<(u32, DetectorInfo)> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("error(") {
            let (p, targets) = rest.split_once(')').ok_or_else(|| perr(n, "unclosed error("))?;
            let probability: f64 = p.parse().map_err(|_| perr(n, "bad probability"))?;
            let mut dets = Vec::new();
            let mut logical_flip = false;
            for tok in targets.split_whitespace() {
                if tok.starts_with('L') {
                    parse_target(tok, 'L', n)?;
                    logical_flip = !logical_flip;
                } else {
                    dets.push(parse_target(tok, 'D', n)?);
                }
            }
            mechanisms.push(ErrorMechanism { probability, detectors: dets, logical_flip, provenance: None });
        } else if let Some(rest) = line.strip_prefix("detector(") {
            let (args, target) = rest.split_once(')').ok_or_else(|| perr(n, "unclosed detector("))?;
            let f: Vec<&str> = args.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(perr(n, "detector needs 5 coordinates"));
            }
            let num = |s: &str| -> Result<u32> { s.parse().map_err(|_| perr(n, "bad coordinate")) };
            let info = DetectorInfo {
                round: num(f[0])?,
                slot: (num(f[1])? as u16, num(f[2])? as u16),
                basis: f[3].parse()?,
                weight: num(f[4])? as u8,
            };
            detectors.push((parse_target(target.trim(), 'D', n)?, info));
        } else {
            return Err(perr(n, format!("unrecognized line {line:?}")));
        }
    }
    detectors.sort_by_key(|(k, _)| *k);
    if detectors.iter().enumerate().any(|(i, (k, _))| i as u32 != *k) {
        return Err(perr(0, "detector ids not contiguous"));
    }
    let dem = DetectorErrorModel {
        distance: distance.ok_or_else(|| perr(1, "missing distance"))?,
        rounds: rounds.ok_or_else(|| perr(1, "missing rounds"))?,
        basis: basis.ok_or_else(|| perr(1, "missing basis"))?,
        mechanisms,
        detectors: detectors.into_iter().map(|(_, d)| d).collect(),
    };
    if dem.mechanisms.iter().any(|m| m.detectors.iter().any(|&d| d as usize >= dem.detectors.len())) {
        return Err(perr(0, "mechanism references unknown detector"));
    }
    Ok(dem)
}
