//! Rotated surface-code layout.
//!
//! Coordinates use a doubled grid: data qubit `(col, row)` with
//! `col, row ∈ 0..d` sits at `(2·col + 1, 2·row + 1)`, and the ancilla of
//! lattice slot `(i, j)` with `i, j ∈ 0..=d` sits at `(2i, 2j)`. The slots form
//! the `(d+1) × (d+1)` array used by window tensors, so encoding a stabilizer
//! into a tensor is the index map `j·(d+1) + i`.
//!
//! A slot hosts an X-type stabilizer when `i + j` is even and a Z-type one
//! when it is odd. Weight-2 X stabilizers live on the top and bottom rows
//! (`j = 0`, `j = d`), weight-2 Z stabilizers on the left and right columns.
//! Logical Z is the bottom data row (`row = 0`); logical X is the left data
//! column (`col = 0`).

use crate::error::{Error, Result};

/// Pauli basis of a stabilizer, measurement, or memory experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Z => 'Z',
        }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Basis::X),
            "Z" | "z" => Ok(Basis::Z),
            other => Err(Error::InvalidParameter(format!("unknown basis {other:?}"))),
        }
    }
}

/// Data-qubit offsets (doubled coordinates) visited by X ancillas, one per
/// CNOT layer. The last two share a row, so a mid-schedule ancilla fault
/// spreads perpendicular to the X-error logical chains.
pub const X_SCHEDULE: [(i32, i32); 4] = [(-1, -1), (1, -1), (-1, 1), (1, 1)];
/// Z ancillas swap the middle two steps; the last two share a column.
pub const Z_SCHEDULE: [(i32, i32); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub basis: Basis,
    /// Lattice slot `(i, j)` on the `(d+1) × (d+1)` grid.
    pub slot: (usize, usize),
    /// Qubit index of the ancilla.
    pub ancilla: usize,
    /// Data qubit touched in each CNOT layer, `None` where the support is cut by a boundary.
    pub schedule: [Option<usize>; 4],
}

impl Stabilizer {
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.schedule.iter().flatten().copied()
    }

    pub fn weight(&self) -> usize {
        self.schedule.iter().flatten().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeLayout {
    pub distance: usize,
    /// Doubled coordinates of data qubit `k`; data qubits are qubits `0..d²`.
    pub data_qubits: Vec<(i32, i32)>,
    pub x_stabilizers: Vec<Stabilizer>,
    pub z_stabilizers: Vec<Stabilizer>,
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
}

impl CodeLayout {
    pub fn qubit_count(&self) -> usize {
        self.data_qubits.len() + self.x_stabilizers.len() + self.z_stabilizers.len()
    }

    /// Side length of the stabilizer lattice, `d + 1`.
    pub fn lattice_side(&self) -> usize {
        self.distance + 1
    }

    pub fn slot_index(&self, slot: (usize, usize)) -> usize {
        slot.1 * self.lattice_side() + slot.0
    }

    pub fn stabilizers(&self, basis: Basis) -> &[Stabilizer] {
        match basis {
            Basis::X => &self.x_stabilizers,
            Basis::Z => &self.z_stabilizers,
        }
    }

    /// All stabilizers ordered by ancilla qubit index.
    pub fn all_stabilizers(&self) -> Vec<&Stabilizer> {
        let mut all: Vec<&Stabilizer> =
            self.x_stabilizers.iter().chain(self.z_stabilizers.iter()).collect();
        all.sort_by_key(|s| s.ancilla);
        all
    }

    pub fn logical_support(&self, basis: Basis) -> &[usize] {
        match basis {
            Basis::X => &self.logical_x_support,
            Basis::Z => &self.logical_z_support,
        }
    }
}

/// Builds the distance-`d` rotated surface code.
pub fn build_rotated_surface_code(d: usize) -> Result<CodeLayout> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "code distance must be odd and at least 3, got {d}"
        )));
    }
    let data_qubits: Vec<(i32, i32)> = (0..d)
        .flat_map(|row| (0..d).map(move |col| (2 * col as i32 + 1, 2 * row as i32 + 1)))
        .collect();
    let data_index = |x: i32, y: i32| -> Option<usize> {
        if x <= 0 || y <= 0 || x >= 2 * d as i32 || y >= 2 * d as i32 {
            return None;
        }
        Some(((y - 1) / 2) as usize * d + ((x - 1) / 2) as usize)
    };

    let mut x_stabilizers = Vec::new();
    let mut z_stabilizers = Vec::new();
    let mut next_ancilla = d * d;
    for j in 0..=d {
        for i in 0..=d {
            let basis = if (i + j) % 2 == 0 { Basis::X } else { Basis::Z };
            let on_row_edge = j == 0 || j == d;
            let on_col_edge = i == 0 || i == d;
            let present = match (on_row_edge, on_col_edge) {
                (true, true) => false,
                (true, false) => basis == Basis::X,
                (false, true) => basis == Basis::Z,
                (false, false) => true,
            };
            if !present {
                continue;
            }
            let order = match basis {
                Basis::X => X_SCHEDULE,
                Basis::Z => Z_SCHEDULE,
            };
            let (cx, cy) = (2 * i as i32, 2 * j as i32);
            let schedule = order.map(|(dx, dy)| data_index(cx + dx, cy + dy));
            let stab = Stabilizer { basis, slot: (i, j), ancilla: next_ancilla, schedule };
            next_ancilla += 1;
            match basis {
                Basis::X => x_stabilizers.push(stab),
                Basis::Z => z_stabilizers.push(stab),
            }
        }
    }

    let logical_z_support = (0..d).collect();
    let logical_x_support = (0..d).map(|row| row * d).collect();
    Ok(CodeLayout {
        distance: d,
        data_qubits,
        x_stabilizers,
        z_stabilizers,
        logical_z_support,
        logical_x_support,
    })
}
