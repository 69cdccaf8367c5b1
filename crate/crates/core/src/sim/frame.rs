//! Bit-parallel Pauli-frame propagation through memory circuits.
//!
//! A frame tracks the Pauli error carried by each qubit relative to the
//! noiseless reference execution; bit `k` of every word belongs to lane `k`,
//! so 64 independent faults or shots propagate at once.

use rand::Rng;

use crate::code_model::{CliffordCircuit, Gate, Noise, Operation};

/// Single-qubit Pauli encoded as bit 0 = X component, bit 1 = Z component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pauli(pub u8);

impl Pauli {
    pub const I: Pauli = Pauli(0);
    pub const X: Pauli = Pauli(1);
    pub const Z: Pauli = Pauli(2);
    pub const Y: Pauli = Pauli(3);

    pub fn has_x(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn has_z(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn symbol(self) -> char {
        ['I', 'X', 'Z', 'Y'][self.0 as usize & 3]
    }
}

/// Batch of 64 Pauli frames plus the measurement flips they caused.
pub struct FrameBatch {
    x: Vec<u64>,
    z: Vec<u64>,
    flips: Vec<u64>,
}

impl FrameBatch {
    pub fn new(qubit_count: usize, measurement_count: usize) -> Self {
        Self {
            x: vec![0; qubit_count],
            z: vec![0; qubit_count],
            flips: vec![0; measurement_count],
        }
    }

    pub fn clear(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
        self.flips.fill(0);
    }

    /// XORs `pauli` onto qubit `q` in the lanes selected by `mask`.
    pub fn inject(&mut self, q: usize, pauli: Pauli, mask: u64) {
        if pauli.has_x() {
            self.x[q] ^= mask;
        }
        if pauli.has_z() {
            self.z[q] ^= mask;
        }
    }

    /// Applies the noiseless action of `op`; measurement flips land at
    /// record indices starting from `first_measurement`.
    pub fn apply_gate(&mut self, op: &Operation, first_measurement: u32) {
        match op.gate {
            Gate::ResetZ | Gate::ResetX => {
                for &q in &op.targets {
                    self.x[q as usize] = 0;
                    self.z[q as usize] = 0;
                }
            }
            Gate::Cx => {
                for pair in op.targets.chunks_exact(2) {
                    let (c, t) = (pair[0] as usize, pair[1] as usize);
                    self.x[t] ^= self.x[c];
                    self.z[c] ^= self.z[t];
                }
            }
            Gate::MeasureZ => {
                for (k, &q) in op.targets.iter().enumerate() {
                    self.flips[first_measurement as usize + k] = self.x[q as usize];
                    self.z[q as usize] = 0;
                }
            }
            Gate::MeasureX => {
                for (k, &q) in op.targets.iter().enumerate() {
                    self.flips[first_measurement as usize + k] = self.z[q as usize];
                    self.x[q as usize] = 0;
                }
            }
            Gate::Idle => {}
        }
    }

    pub fn flips(&self) -> &[u64] {
        &self.flips
    }

    pub fn parity(&self, measurements: &[u32]) -> u64 {
        measurements.iter().fold(0, |acc, &m| acc ^ self.flips[m as usize])
    }
}

/// Whether faults on `op` act before the gate (measurements) or after it.
pub fn noise_precedes_gate(gate: Gate) -> bool {
    gate.is_measurement()
}

/// The Pauli a `Flip` noise tag applies on a qubit for the given gate.
pub fn flip_pauli(gate: Gate) -> Pauli {
    match gate {
        Gate::ResetZ | Gate::MeasureZ => Pauli::X,
        Gate::ResetX | Gate::MeasureX => Pauli::Z,
        Gate::Cx | Gate::Idle => Pauli::X,
    }
}

fn bernoulli_word<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    let mut word = 0u64;
    for lane in 0..64 {
        if rng.gen::<f64>() < p {
            word |= 1 << lane;
        }
    }
    word
}

fn inject_random<R: Rng + ?Sized>(batch: &mut FrameBatch, op: &Operation, rng: &mut R) {
    match op.noise {
        Noise::None => {}
        Noise::Flip(p) => {
            let pauli = flip_pauli(op.gate);
            for &q in &op.targets {
                let mask = bernoulli_word(rng, p);
                batch.inject(q as usize, pauli, mask);
            }
        }
        Noise::Depolarize1(p) => {
            for &q in &op.targets {
                let hits = bernoulli_word(rng, p);
                let mut rest = hits;
                while rest != 0 {
                    let lane = rest.trailing_zeros();
                    rest &= rest - 1;
                    let pauli = Pauli(rng.gen_range(1..4));
                    batch.inject(q as usize, pauli, 1 << lane);
                }
            }
        }
        Noise::Depolarize2(p) => {
            for pair in op.targets.chunks_exact(2) {
                let hits = bernoulli_word(rng, p);
                let mut rest = hits;
                while rest != 0 {
                    let lane = rest.trailing_zeros();
                    rest &= rest - 1;
                    let k: u8 = rng.gen_range(1..16);
                    batch.inject(pair[0] as usize, Pauli(k & 3), 1 << lane);
                    batch.inject(pair[1] as usize, Pauli(k >> 2), 1 << lane);
                }
            }
        }
    }
}

/// Detection events and observable flips of one 64-shot circuit-level batch.
pub struct SampledBatch {
    /// One word per detector.
    pub detectors: Vec<u64>,
    pub observable: u64,
}

/// Samples 64 shots directly from the circuit's noise channels.
///
/// This is the circuit-level Monte Carlo reference used to validate
/// detector error models; it never looks at a DEM.
pub fn sample_circuit_batch<R: Rng + ?Sized>(circuit: &CliffordCircuit, rng: &mut R) -> SampledBatch {
    let mut batch = FrameBatch::new(circuit.qubit_count, circuit.measurement_count);
    let offsets = circuit.measurement_offsets();
    for (op, &offset) in circuit.operations.iter().zip(&offsets) {
        if noise_precedes_gate(op.gate) {
            inject_random(&mut batch, op, rng);
            batch.apply_gate(op, offset);
        } else {
            batch.apply_gate(op, offset);
            inject_random(&mut batch, op, rng);
        }
    }
    SampledBatch {
        detectors: circuit.detectors.iter().map(|d| batch.parity(&d.measurements)).collect(),
        observable: batch.parity(&circuit.observable),
    }
}
