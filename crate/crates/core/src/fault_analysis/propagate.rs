use rayon::prelude::*;

use crate::code_model::{CliffordCircuit, Gate, Noise};
use crate::error::{Error, Result};
use crate::sim::{flip_pauli, noise_precedes_gate, FrameBatch, Pauli};

/// A noise site: operation index and site index within it (qubit, or pair for `CX`).
///
/// Faults act right after the gate, except on measurements where they act
/// right before it (and so flip the reported outcome).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultLocation {
    pub op: usize,
    pub site: usize,
}

/// An elementary fault: a Pauli on the qubit(s) of one site.
/// `paulis[1]` is the Pauli on the target of a `CX` pair and identity otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fault {
    pub location: FaultLocation,
    pub paulis: [Pauli; 2],
}

impl Fault {
    pub fn single(op: usize, site: usize, pauli: Pauli) -> Self {
        Self { location: FaultLocation { op, site }, paulis: [pauli, Pauli::I] }
    }

    pub fn is_identity(&self) -> bool {
        self.paulis == [Pauli::I, Pauli::I]
    }
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "op{}:site{}:{}{}",
            self.location.op,
            self.location.site,
            self.paulis[0].symbol(),
            self.paulis[1].symbol()
        )
    }
}

/// Every elementary fault of the circuit with its probability, in circuit order.
///
/// Depolarizing channels split into equiprobable Pauli faults: 3 at `p/3`
/// for one qubit, 15 at `p/15` for two.
pub fn enumerate_faults(circuit: &CliffordCircuit) -> Vec<(Fault, f64)> {
    let mut out = Vec::new();
    for (k, op) in circuit.operations.iter().enumerate() {
        match op.noise {
            Noise::None => {}
            Noise::Flip(p) => {
                if p > 0.0 {
                    for site in 0..op.site_count() {
                        out.push((Fault::single(k, site, flip_pauli(op.gate)), p));
                    }
                }
            }
            Noise::Depolarize1(p) => {
                if p > 0.0 {
                    for site in 0..op.site_count() {
                        for pauli in [Pauli::X, Pauli::Z, Pauli::Y] {
                            out.push((Fault::single(k, site, pauli), p / 3.0));
                        }
                    }
                }
            }
            Noise::Depolarize2(p) => {
                if p > 0.0 {
                    for site in 0..op.site_count() {
                        for code in 1u8..16 {
                            let fault = Fault {
                                location: FaultLocation { op: k, site },
                                paulis: [Pauli(code & 3), Pauli(code >> 2)],
                            };
                            out.push((fault, p / 15.0));
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_location(circuit: &CliffordCircuit, fault: &Fault) -> Result<()> {
    let FaultLocation { op, site } = fault.location;
    let bad = || Error::UnknownLocation { op, target: site };
    let operation = circuit.operations.get(op).ok_or_else(bad)?;
    if site >= operation.site_count() {
        return Err(bad());
    }
    if operation.gate != Gate::Cx && fault.paulis[1] != Pauli::I {
        return Err(bad());
    }
    Ok(())
}

/// Detectors flipped by a fault (sorted) and whether it flips the observable.
pub fn propagate_fault(circuit: &CliffordCircuit, fault: &Fault) -> Result<(Vec<u32>, bool)> {
    check_location(circuit, fault)?;
    let offsets = circuit.measurement_offsets();
    Ok(propagate_batch(circuit, &offsets, std::slice::from_ref(fault)).remove(0))
}

/// Propagates up to 64 faults sorted by location, one lane each.
pub(crate) fn propagate_batch(
    circuit: &CliffordCircuit,
    offsets: &[u32],
    faults: &[Fault],
) -> Vec<(Vec<u32>, bool)> {
    debug_assert!(faults.len() <= 64);
    let mut results = vec![(Vec::new(), false); faults.len()];
    let Some(first) = faults.first() else {
        return results;
    };
    let mut batch = FrameBatch::new(circuit.qubit_count, circuit.measurement_count);
    let mut next = 0;
    for k in first.location.op..circuit.operations.len() {
        let op = &circuit.operations[k];
        let start = next;
        while next < faults.len() && faults[next].location.op == k {
            next += 1;
        }
        let inject = |batch: &mut FrameBatch| {
            for (lane, fault) in faults.iter().enumerate().take(next).skip(start) {
                let arity = op.gate.arity();
                let site = fault.location.site;
                for (j, &pauli) in fault.paulis.iter().enumerate().take(arity) {
                    batch.inject(op.targets[site * arity + j] as usize, pauli, 1 << lane);
                }
            }
        };
        if noise_precedes_gate(op.gate) {
            inject(&mut batch);
            batch.apply_gate(op, offsets[k]);
        } else {
            batch.apply_gate(op, offsets[k]);
            inject(&mut batch);
        }
    }
    for (index, det) in circuit.detectors.iter().enumerate() {
        let mut word = batch.parity(&det.measurements);
        while word != 0 {
            let lane = word.trailing_zeros() as usize;
            word &= word - 1;
            results[lane].0.push(index as u32);
        }
    }
    let mut obs = batch.parity(&circuit.observable);
    while obs != 0 {
        let lane = obs.trailing_zeros() as usize;
        obs &= obs - 1;
        results[lane].1 = true;
    }
    results
}

/// Propagates every fault, 64 per batch, in parallel; output keeps input order.
pub(crate) fn propagate_all(circuit: &CliffordCircuit, faults: &[Fault]) -> Vec<(Vec<u32>, bool)> {
    let offsets = circuit.measurement_offsets();
    faults
        .par_chunks(64)
        .map(|chunk| propagate_batch(circuit, &offsets, chunk))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
