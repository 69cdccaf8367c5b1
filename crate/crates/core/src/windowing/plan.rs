use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fault_analysis::{DecodingGraph, Edge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Initial,
    Bulk,
    Final,
    /// The only window of a plan: initial and final at once.
    Single,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Initial => "initial",
            WindowKind::Bulk => "bulk",
            WindowKind::Final => "final",
            WindowKind::Single => "single",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(WindowKind::Initial),
            "bulk" => Ok(WindowKind::Bulk),
            "final" => Ok(WindowKind::Final),
            "single" => Ok(WindowKind::Single),
            _ => Err(Error::InvalidParameter(format!("unknown window kind {s:?}"))),
        }
    }
}

/// One window on the padded round axis. Rounds are detector layers; layer
/// `N + 1` holds the final data readout and rounds outside `1..=N+1` are zero pads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    /// 1-based.
    pub index: usize,
    pub kind: WindowKind,
    pub start: i64,
    pub core_start: i64,
    pub core_end: i64,
    pub end: i64,
}

impl Window {
    pub fn span(&self) -> RangeInclusive<i64> {
        self.start..=self.end
    }

    pub fn core(&self) -> RangeInclusive<i64> {
        self.core_start..=self.core_end
    }

    pub fn left_buffer(&self) -> RangeInclusive<i64> {
        self.start..=self.core_start - 1
    }

    pub fn right_buffer(&self) -> RangeInclusive<i64> {
        self.core_end + 1..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, round: i64) -> bool {
        self.span().contains(&round)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    /// Measurement rounds `N`.
    pub rounds: usize,
    pub buffer: usize,
    pub core: usize,
    pub windows: Vec<Window>,
}

/// Splits `N` rounds into `m = ⌈N/c⌉` windows of `b + c + b` layers; window
/// `i` spans layers `(i-1)c+1-b ..= ic+b`.
pub fn plan_windows(rounds: usize, buffer: usize, core: usize) -> Result<WindowPlan> {
    if rounds == 0 || buffer == 0 || core == 0 {
        return Err(Error::InvalidParameter(format!(
            "rounds, buffer and core must be positive (got N={rounds}, b={buffer}, c={core})"
        )));
    }
    let m = rounds.div_ceil(core);
    let (b, c) = (buffer as i64, core as i64);
    let windows = (1..=m)
        .map(|index| {
            let kind = match (index == 1, index == m) {
                (true, true) => WindowKind::Single,
                (true, false) => WindowKind::Initial,
                (false, true) => WindowKind::Final,
                (false, false) => WindowKind::Bulk,
            };
            let core_start = (index as i64 - 1) * c + 1;
            let core_end = index as i64 * c;
            Window { index, kind, start: core_start - b, core_start, core_end, end: core_end + b }
        })
        .collect();
    Ok(WindowPlan { rounds, buffer, core, windows })
}

impl WindowPlan {
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    /// Layers per window, `b + c + b`.
    pub fn window_len(&self) -> usize {
        2 * self.buffer + self.core
    }

    /// `m · c`: rounds covered by the cores, padding included.
    pub fn padded_rounds(&self) -> usize {
        self.window_count() * self.core
    }

    /// Last layer carrying data (the readout layer).
    pub fn last_layer(&self) -> i64 {
        self.rounds as i64 + 1
    }

    pub fn window(&self, index: usize) -> Result<&Window> {
        index
            .checked_sub(1)
            .and_then(|k| self.windows.get(k))
            .ok_or(Error::WindowIndex { index, windows: self.window_count() })
    }

    /// Whether the window has virtual vertices below its first layer.
    pub fn open_left(&self, w: &Window) -> bool {
        w.start > 1
    }

    /// Whether the window has virtual vertices above its last layer.
    pub fn open_right(&self, w: &Window) -> bool {
        w.end < self.last_layer()
    }

    /// Window whose core owns an edge keyed by layer `round` (its earliest endpoint layer).
    /// The readout layer and anything past the last core belongs to the final window.
    pub fn owner_of_round(&self, round: u32) -> usize {
        let r = round.max(1) as usize;
        r.div_ceil(self.core).min(self.window_count())
    }

    pub fn edge_owner(&self, graph: &DecodingGraph, edge: &Edge) -> usize {
        let round = edge.endpoints().map(|v| graph.vertices()[v as usize].round).min().unwrap_or(1);
        self.owner_of_round(round)
    }

    /// Core assignment of every edge of a global graph, indexed like its edges.
    pub fn core_partition(&self, graph: &DecodingGraph) -> Vec<usize> {
        graph.edges().iter().map(|e| self.edge_owner(graph, e)).collect()
    }

    /// First layer of window `i + 1`'s core; the seam between windows `i` and `i + 1`.
    pub fn seam_layer(&self, seam: usize) -> i64 {
        (seam * self.core) as i64 + 1
    }

    /// Overlap of windows `left` and `right`.
    pub fn overlap(&self, left: usize, right: usize) -> Result<RangeInclusive<i64>> {
        let (a, b) = (self.window(left)?, self.window(right)?);
        let lo = a.start.max(b.start);
        let hi = a.end.min(b.end);
        if lo > hi || left == right {
            return Err(Error::NoOverlap { left, right });
        }
        Ok(lo..=hi)
    }
}
