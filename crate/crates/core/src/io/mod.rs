//! File formats: detection events, labels, window datasets, predictions,
//! result tables and run manifests.

mod dataset;
mod events;
mod manifest;
mod tables;

pub use dataset::{
    read_dataset, read_index, write_dataset, write_index, DatasetHeader, DatasetRecord, IndexEntry,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use events::{read_events, read_labels, write_events, write_labels, EventsHeader, EVENTS_MAGIC, EVENTS_VERSION};
pub use manifest::{Manifest, FORMAT_VERSION};
pub use tables::{
    read_fit_points, read_ler, read_predictions, write_correlation, write_dep_curves, write_fit_points,
    write_fit_result, write_ler, write_predictions, write_seam_rates, write_throughput, write_window_rates, LerRow, SeamRow,
};
