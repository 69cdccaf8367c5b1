use super::plan::{WindowKind, WindowPlan};
use crate::code_model::CodeLayout;
use crate::error::Result;
use crate::fault_analysis::DetectorInfo;

/// Binary syndrome block of shape `(b+c+b) × (d+1) × (d+1)`, layer-major,
/// slot `(i, j)` at `j·(d+1) + i` within a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowTensor {
    pub index: usize,
    pub kind: WindowKind,
    pub layers: usize,
    pub side: usize,
    pub bits: Vec<u8>,
}

impl WindowTensor {
    pub fn get(&self, layer: usize, slot: usize) -> u8 {
        self.bits[layer * self.side * self.side + slot]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

/// Fixed detector-to-cell map of one window.
#[derive(Debug, Clone)]
pub struct TensorMap {
    index: usize,
    kind: WindowKind,
    layers: usize,
    side: usize,
    cells: Vec<(u32, u32)>,
}

impl TensorMap {
    pub fn new(plan: &WindowPlan, index: usize, layout: &CodeLayout, detectors: &[DetectorInfo]) -> Result<Self> {
        let window = plan.window(index)?;
        let side = layout.lattice_side();
        let cells = detectors
            .iter()
            .enumerate()
            .filter(|(_, d)| window.contains(d.round as i64))
            .map(|(k, d)| {
                let layer = (d.round as i64 - window.start) as usize;
                let slot = layout.slot_index((d.slot.0 as usize, d.slot.1 as usize));
                (k as u32, (layer * side * side + slot) as u32)
            })
            .collect();
        Ok(Self { index, kind: window.kind, layers: plan.window_len(), side, cells })
    }

    /// `(detector, cell)` pairs covered by the window.
    pub fn cells(&self) -> &[(u32, u32)] {
        &self.cells
    }

    pub fn extract(&self, event: impl Fn(u32) -> bool) -> WindowTensor {
        let mut bits = vec![0u8; self.layers * self.side * self.side];
        for &(det, cell) in &self.cells {
            if event(det) {
                bits[cell as usize] = 1;
            }
        }
        WindowTensor { index: self.index, kind: self.kind, layers: self.layers, side: self.side, bits }
    }
}

/// Window `index`'s syndrome tensor; pad layers and empty slots stay zero.
pub fn extract_window_tensor(
    events: &[u32],
    plan: &WindowPlan,
    index: usize,
    layout: &CodeLayout,
    detectors: &[DetectorInfo],
) -> Result<WindowTensor> {
    let map = TensorMap::new(plan, index, layout, detectors)?;
    Ok(map.extract(|d| events.binary_search(&d).is_ok()))
}
