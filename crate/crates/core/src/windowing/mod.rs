//! Round-axis windows with buffers and zero padding, per-window tensors and subgraphs.

mod plan;
mod subgraph;
mod tensor;

pub use plan::{plan_windows, Window, WindowKind, WindowPlan};
pub use subgraph::window_subgraph;
pub use tensor::{extract_window_tensor, TensorMap, WindowTensor};
