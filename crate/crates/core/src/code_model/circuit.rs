//! Noisy syndrome-extraction circuits for surface-code memory experiments.
//!
//! Each round resets the ancillas, runs four CNOT layers following the
//! stabilizer schedules, and measures the ancillas. Noise follows the
//! uniform circuit-level model: reset and measurement flips with
//! probability `p`, two-qubit depolarizing after every CNOT layer, and
//! one-qubit depolarizing on every qubit idling through a CNOT layer and on
//! data qubits during ancilla measurement and reset.
//!
//! Detectors live on time layers `1..=N` (one per measurement round) plus
//! layer `N + 1`, which compares the final transversal data readout with
//! the last round of memory-basis stabilizer measurements.

use std::fmt::Write as _;

use super::layout::{Basis, CodeLayout};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Reset to |0⟩.
    ResetZ,
    /// Reset to |+⟩.
    ResetX,
    /// Controlled-NOT; targets are `(control, target)` pairs.
    Cx,
    MeasureZ,
    MeasureX,
    Idle,
}

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::ResetZ => "R",
            Gate::ResetX => "RX",
            Gate::Cx => "CX",
            Gate::MeasureZ => "M",
            Gate::MeasureX => "MX",
            Gate::Idle => "I",
        }
    }

    fn from_name(name: &str) -> Option<Gate> {
        Some(match name {
            "R" => Gate::ResetZ,
            "RX" => Gate::ResetX,
            "CX" => Gate::Cx,
            "M" => Gate::MeasureZ,
            "MX" => Gate::MeasureX,
            "I" => Gate::Idle,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        if self == Gate::Cx {
            2
        } else {
            1
        }
    }

    pub fn is_measurement(self) -> bool {
        matches!(self, Gate::MeasureZ | Gate::MeasureX)
    }
}

/// Noise attached to an operation.
///
/// `Flip` on a reset prepares the orthogonal state (X after `R`, Z after
/// `RX`); on a measurement it flips the reported outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Flip(f64),
    Depolarize1(f64),
    Depolarize2(f64),
}

impl Noise {
    pub fn probability(self) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Flip(p) | Noise::Depolarize1(p) | Noise::Depolarize2(p) => p,
        }
    }

    fn tag(self) -> Option<String> {
        match self {
            Noise::None => None,
            Noise::Flip(p) => Some(format!("FLIP({p})")),
            Noise::Depolarize1(p) => Some(format!("DEP1({p})")),
            Noise::Depolarize2(p) => Some(format!("DEP2({p})")),
        }
    }

    fn parse(tag: &str) -> Option<Noise> {
        let open = tag.find('(')?;
        let inner = tag.strip_suffix(')')?.get(open + 1..)?;
        let p: f64 = inner.parse().ok()?;
        match &tag[..open] {
            "FLIP" => Some(Noise::Flip(p)),
            "DEP1" => Some(Noise::Depolarize1(p)),
            "DEP2" => Some(Noise::Depolarize2(p)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operation {
    pub gate: Gate,
    /// Qubit indices; consecutive pairs for `Cx`.
    pub targets: Vec<u32>,
    pub noise: Noise,
}

impl Operation {
    /// Number of fault sites: one per qubit, one per pair for `Cx`.
    pub fn site_count(&self) -> usize {
        self.targets.len() / self.gate.arity()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detector {
    /// Time layer, 1-based; layer `rounds + 1` is the data-readout layer.
    pub round: u32,
    /// Lattice slot of the stabilizer.
    pub slot: (u16, u16),
    pub basis: Basis,
    /// Support weight of the stabilizer (2 or 4).
    pub weight: u8,
    /// Measurement record indices XORed by this detector.
    pub measurements: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordCircuit {
    pub distance: usize,
    pub rounds: usize,
    pub basis: Basis,
    pub qubit_count: usize,
    pub operations: Vec<Operation>,
    pub measurement_count: usize,
    pub detectors: Vec<Detector>,
    /// Measurement record indices XORed by the logical observable.
    pub observable: Vec<u32>,
}

impl CliffordCircuit {
    /// Measurement record index of the first outcome produced by each operation.
    pub fn measurement_offsets(&self) -> Vec<u32> {
        let mut offsets = Vec::with_capacity(self.operations.len());
        let mut next = 0u32;
        for op in &self.operations {
            offsets.push(next);
            if op.gate.is_measurement() {
                next += op.targets.len() as u32;
            }
        }
        offsets
    }

    pub fn noise_annotation_count(&self) -> usize {
        self.operations.iter().filter(|op| op.noise != Noise::None).count()
    }
}

/// Builds the `rounds`-round memory experiment in `basis` with uniform noise strength `p`.
pub fn build_memory_circuit(
    layout: &CodeLayout,
    rounds: usize,
    basis: Basis,
    p: f64,
) -> Result<CliffordCircuit> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    if !(0.0..0.5).contains(&p) {
        return Err(Error::InvalidParameter(format!("noise strength {p} outside [0, 0.5)")));
    }

    let d = layout.distance;
    let data: Vec<u32> = (0..(d * d) as u32).collect();
    let stabs = layout.all_stabilizers();
    let anc_of = |b: Basis| -> Vec<u32> {
        stabs.iter().filter(|s| s.basis == b).map(|s| s.ancilla as u32).collect()
    };
    let x_anc = anc_of(Basis::X);
    let z_anc = anc_of(Basis::Z);
    let qubit_count = layout.qubit_count();

    let mut ops: Vec<Operation> = Vec::new();
    let push = |ops: &mut Vec<Operation>, gate: Gate, targets: Vec<u32>, noise: Noise| {
        if !targets.is_empty() {
            ops.push(Operation { gate, targets, noise });
        }
    };
    let reset_gate = |b: Basis| if b == Basis::Z { Gate::ResetZ } else { Gate::ResetX };
    let measure_gate = |b: Basis| if b == Basis::Z { Gate::MeasureZ } else { Gate::MeasureX };

    // measurement record index per (round, stabilizer), keyed by ancilla order
    let mut record: Vec<Vec<u32>> = Vec::with_capacity(rounds);
    let mut next_measurement = 0u32;

    for round in 0..rounds {
        if round == 0 {
            push(&mut ops, reset_gate(basis), data.clone(), Noise::Flip(p));
        } else {
            push(&mut ops, Gate::Idle, data.clone(), Noise::Depolarize1(p));
        }
        push(&mut ops, Gate::ResetZ, z_anc.clone(), Noise::Flip(p));
        push(&mut ops, Gate::ResetX, x_anc.clone(), Noise::Flip(p));

        for layer in 0..4 {
            let mut pairs = Vec::new();
            let mut busy = vec![false; qubit_count];
            for s in &stabs {
                if let Some(q) = s.schedule[layer] {
                    let (c, t) = match s.basis {
                        Basis::X => (s.ancilla, q),
                        Basis::Z => (q, s.ancilla),
                    };
                    pairs.push(c as u32);
                    pairs.push(t as u32);
                    busy[c] = true;
                    busy[t] = true;
                }
            }
            let idle: Vec<u32> =
                (0..qubit_count as u32).filter(|&q| !busy[q as usize]).collect();
            push(&mut ops, Gate::Cx, pairs, Noise::Depolarize2(p));
            push(&mut ops, Gate::Idle, idle, Noise::Depolarize1(p));
        }

        // measurement outcomes are recorded in ancilla order within each op
        let mut by_ancilla = vec![0u32; qubit_count];
        for &q in &z_anc {
            by_ancilla[q as usize] = next_measurement;
            next_measurement += 1;
        }
        for &q in &x_anc {
            by_ancilla[q as usize] = next_measurement;
            next_measurement += 1;
        }
        push(&mut ops, Gate::MeasureZ, z_anc.clone(), Noise::Flip(p));
        push(&mut ops, Gate::MeasureX, x_anc.clone(), Noise::Flip(p));
        push(&mut ops, Gate::Idle, data.clone(), Noise::Depolarize1(p));
        record.push(stabs.iter().map(|s| by_ancilla[s.ancilla]).collect());
    }

    let data_offset = next_measurement;
    push(&mut ops, measure_gate(basis), data.clone(), Noise::Flip(p));
    let measurement_count = (data_offset as usize) + data.len();

    let mut detectors = Vec::new();
    for round in 0..rounds {
        for (k, s) in stabs.iter().enumerate() {
            let current = record[round][k];
            let measurements = if round == 0 {
                if s.basis != basis {
                    continue;
                }
                vec![current]
            } else {
                vec![record[round - 1][k], current]
            };
            detectors.push(Detector {
                round: round as u32 + 1,
                slot: (s.slot.0 as u16, s.slot.1 as u16),
                basis: s.basis,
                weight: s.weight() as u8,
                measurements,
            });
        }
    }
    for (k, s) in stabs.iter().enumerate() {
        if s.basis != basis {
            continue;
        }
        let mut measurements: Vec<u32> = vec![record[rounds - 1][k]];
        measurements.extend(s.support().map(|q| data_offset + q as u32));
        detectors.push(Detector {
            round: rounds as u32 + 1,
            slot: (s.slot.0 as u16, s.slot.1 as u16),
            basis: s.basis,
            weight: s.weight() as u8,
            measurements,
        });
    }
    let observable = layout.logical_support(basis).iter().map(|&q| data_offset + q as u32).collect();

    Ok(CliffordCircuit {
        distance: d,
        rounds,
        basis,
        qubit_count,
        operations: ops,
        measurement_count,
        detectors,
        observable,
    })
}

const CIRCUIT_HEADER: &str = "MERGEFREE-CIRCUIT 1";

fn join(values: &[u32]) -> String {
    let mut out = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

/// Serializes a circuit to the line-oriented text format.
pub fn circuit_to_text(circuit: &CliffordCircuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CIRCUIT_HEADER}");
    let _ = writeln!(out, "DISTANCE {}", circuit.distance);
    let _ = writeln!(out, "ROUNDS {}", circuit.rounds);
    let _ = writeln!(out, "BASIS {}", circuit.basis);
    let _ = writeln!(out, "QUBITS {}", circuit.qubit_count);
    for op in &circuit.operations {
        let _ = write!(out, "{} {}", op.gate.name(), join(&op.targets));
        if let Some(tag) = op.noise.tag() {
            let _ = write!(out, " NOISE {tag}");
        }
        out.push('\n');
    }
    for det in &circuit.detectors {
        let _ = writeln!(
            out,
            "DETECTOR {} {} {} {} {} {}",
            det.round,
            det.slot.0,
            det.slot.1,
            det.basis,
            det.weight,
            join(&det.measurements)
        );
    }
    let _ = writeln!(out, "OBSERVABLE {}", join(&circuit.observable));
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("bad number {tok:?}")))
}

/// Parses the text format written by [`circuit_to_text`].
pub fn circuit_from_text(text: &str) -> Result<CliffordCircuit> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, CIRCUIT_HEADER)) => {}
        _ => return Err(parse_err(1, "missing circuit header")),
    }
    let mut header = |key: &str| -> Result<String> {
        let (n, line) = lines.next().ok_or_else(|| parse_err(0, "truncated header"))?;
        line.strip_prefix(key)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| parse_err(n, format!("expected {key}")))
    };
    let distance = parse_num(&header("DISTANCE")?, 2)?;
    let rounds = parse_num(&header("ROUNDS")?, 3)?;
    let basis = header("BASIS")?.parse()?;
    let qubit_count = parse_num(&header("QUBITS")?, 5)?;

    let mut operations = Vec::new();
    let mut detectors = Vec::new();
    let mut observable = None;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        match head {
            "DETECTOR" => {
                let fields: Vec<&str> = toks.collect();
                if fields.len() < 6 {
                    return Err(parse_err(n, "short DETECTOR line"));
                }
                detectors.push(Detector {
                    round: parse_num(fields[0], n)?,
                    slot: (parse_num(fields[1], n)?, parse_num(fields[2], n)?),
                    basis: fields[3].parse()?,
                    weight: parse_num(fields[4], n)?,
                    measurements: fields[5..]
                        .iter()
                        .map(|t| parse_num(t, n))
                        .collect::<Result<_>>()?,
                });
            }
            "OBSERVABLE" => {
                observable = Some(toks.map(|t| parse_num(t, n)).collect::<Result<Vec<u32>>>()?);
            }
            name => {
                let gate =
                    Gate::from_name(name).ok_or_else(|| parse_err(n, format!("unknown op {name}")))?;
                let mut targets = Vec::new();
                let mut noise = Noise::None;
                while let Some(tok) = toks.next() {
                    if tok == "NOISE" {
                        let tag = toks.next().ok_or_else(|| parse_err(n, "missing noise tag"))?;
                        noise = Noise::parse(tag)
                            .ok_or_else(|| parse_err(n, format!("bad noise tag {tag}")))?;
                    } else {
                        targets.push(parse_num(tok, n)?);
                    }
                }
                if targets.len() % gate.arity() != 0 {
                    return Err(parse_err(n, "odd CX target list"));
                }
                operations.push(Operation { gate, targets, noise });
            }
        }
    }
    let measurement_count = operations
        .iter()
        .filter(|op| op.gate.is_measurement())
        .map(|op| op.targets.len())
        .sum();
    Ok(CliffordCircuit {
        distance,
        rounds,
        basis,
        qubit_count,
        operations,
        measurement_count,
        detectors,
        observable: observable.ok_or_else(|| parse_err(0, "missing OBSERVABLE"))?,
    })
}
