//! Synthetic datasets, file formats and accuracy metrics.

mod generate;
pub mod io;
mod metrics;

pub use generate::{
    filament_spine, gen_dataset, DatasetKind, DatasetParams, DiskGeometry, FilamentGeometry, Geometry, RingsGeometry,
    ShellGeometry, StringsGeometry,
};
pub use metrics::{confusion_stats, ConfusionStats, MetricFlag};
