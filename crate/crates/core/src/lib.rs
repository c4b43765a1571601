//! Target- and context-aware selection of particles in 3D point clouds.
//!
//! The crate builds an adaptive kernel density field over a particle cloud
//! ([`field`]), follows its gradient to local maxima ([`flow`]), extracts
//! iso-density components and meshes ([`surface`]) and combines these into
//! the point, brush and paint selection techniques plus a purely geometric
//! baseline ([`techniques`]). [`data`] holds dataset generators, accuracy
//! metrics and file formats.

pub mod data;
pub mod error;
pub mod field;
pub mod flow;
mod geom;
pub mod surface;
pub mod techniques;

pub use data::{confusion_stats, ConfusionStats};
pub use error::{Error, Result};
pub use field::{DensityGrid, GridSpec, ParticleCloud, SmoothingConfig};
pub use flow::{FlowConfig, FlowResult, MaxLine};
pub use geom::{point_polyline_distance, point_segment_distance, Vec3};
pub use surface::{ComponentGrid, TriangleMesh};
pub use techniques::{Scene, Selection, Stroke, Technique};
