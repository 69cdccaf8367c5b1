//! Stabilizer-tableau simulation (Aaronson–Gottesman) of memory circuits.
//!
//! Used as the ground-truth check that detectors and the logical observable
//! are deterministic in the absence of noise; frame propagation relies on it.

use rand::Rng;

use crate::code_model::{CliffordCircuit, Gate};

pub struct Tableau {
    n: usize,
    // rows 0..n destabilizers, n..2n stabilizers, 2n scratch
    x: Vec<bool>,
    z: Vec<bool>,
    r: Vec<bool>,
}

impl Tableau {
    /// All qubits in |0⟩.
    pub fn new(n: usize) -> Self {
        let rows = 2 * n + 1;
        let mut t = Self { n, x: vec![false; rows * n], z: vec![false; rows * n], r: vec![false; rows] };
        for i in 0..n {
            t.x[i * n + i] = true;
            t.z[(i + n) * n + i] = true;
        }
        t
    }

    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => z2 as i32 - x2 as i32,
            (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
            (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
        }
    }

    fn rowsum(&mut self, h: usize, i: usize) {
        let n = self.n;
        let mut total = 2 * self.r[h] as i32 + 2 * self.r[i] as i32;
        for j in 0..n {
            total += Self::g(self.x[i * n + j], self.z[i * n + j], self.x[h * n + j], self.z[h * n + j]);
        }
        self.r[h] = total.rem_euclid(4) == 2;
        for j in 0..n {
            self.x[h * n + j] ^= self.x[i * n + j];
            self.z[h * n + j] ^= self.z[i * n + j];
        }
    }

    pub fn h(&mut self, a: usize) {
        let n = self.n;
        for row in 0..2 * n {
            let (xa, za) = (self.x[row * n + a], self.z[row * n + a]);
            self.r[row] ^= xa & za;
            self.x[row * n + a] = za;
            self.z[row * n + a] = xa;
        }
    }

    pub fn cx(&mut self, a: usize, b: usize) {
        let n = self.n;
        for row in 0..2 * n {
            let (xa, za) = (self.x[row * n + a], self.z[row * n + a]);
            let (xb, zb) = (self.x[row * n + b], self.z[row * n + b]);
            self.r[row] ^= xa & zb & !(xb ^ za);
            self.x[row * n + b] = xb ^ xa;
            self.z[row * n + a] = za ^ zb;
        }
    }

    pub fn pauli_x(&mut self, a: usize) {
        let n = self.n;
        for row in 0..2 * n {
            self.r[row] ^= self.z[row * n + a];
        }
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) -> bool {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&row| self.x[row * n + a]) {
            for row in 0..2 * n {
                if row != p && self.x[row * n + a] {
                    self.rowsum(row, p);
                }
            }
            let d = p - n;
            for j in 0..n {
                self.x[d * n + j] = self.x[p * n + j];
                self.z[d * n + j] = self.z[p * n + j];
                self.x[p * n + j] = false;
                self.z[p * n + j] = j == a;
            }
            self.r[d] = self.r[p];
            let outcome = rng.gen::<bool>();
            self.r[p] = outcome;
            outcome
        } else {
            let s = 2 * n;
            for j in 0..n {
                self.x[s * n + j] = false;
                self.z[s * n + j] = false;
            }
            self.r[s] = false;
            for i in 0..n {
                if self.x[i * n + a] {
                    self.rowsum(s, i + n);
                }
            }
            self.r[s]
        }
    }
}

/// Runs the circuit noiselessly, returning the full measurement record.
pub fn run_noiseless<R: Rng + ?Sized>(circuit: &CliffordCircuit, rng: &mut R) -> Vec<bool> {
    let mut t = Tableau::new(circuit.qubit_count);
    let mut record = Vec::with_capacity(circuit.measurement_count);
    for op in &circuit.operations {
        match op.gate {
            Gate::ResetZ | Gate::ResetX => {
                for &q in &op.targets {
                    if t.measure_z(q as usize, rng) {
                        t.pauli_x(q as usize);
                    }
                    if op.gate == Gate::ResetX {
                        t.h(q as usize);
                    }
                }
            }
            Gate::Cx => {
                for pair in op.targets.chunks_exact(2) {
                    t.cx(pair[0] as usize, pair[1] as usize);
                }
            }
            Gate::MeasureZ => {
                for &q in &op.targets {
                    record.push(t.measure_z(q as usize, rng));
                }
            }
            Gate::MeasureX => {
                for &q in &op.targets {
                    t.h(q as usize);
                    record.push(t.measure_z(q as usize, rng));
                    t.h(q as usize);
                }
            }
            Gate::Idle => {}
        }
    }
    record
}
