//! Iso-density selection volumes: connected super-threshold components,
//! their Marching Cubes meshes, and particle membership.

mod components;
mod mesh;
mod tables;

pub use components::{label_components, CellMask, ComponentGrid};
pub use mesh::{extract_mesh, TriangleMesh};

use rayon::prelude::*;

use crate::field::{DensityGrid, ParticleCloud};

/// Particles whose interpolated density clears `threshold` and whose cell
/// belongs to one of the `keep` components. Indices ascend.
pub fn classify_particles(
    cloud: &ParticleCloud,
    field: &DensityGrid,
    threshold: f64,
    components: &ComponentGrid,
    keep: &[u32],
) -> Vec<usize> {
    if keep.is_empty() {
        return Vec::new();
    }
    let spec = field.spec();
    cloud
        .positions()
        .par_iter()
        .enumerate()
        .filter_map(|(idx, p)| {
            let [i, j, k] = spec.containing_cell(p)?;
            let label = components.label(spec.cell_index(i, j, k));
            if label == 0 || !keep.contains(&label) {
                return None;
            }
            let rho = field.sample_density(p).ok()?;
            (rho >= threshold).then_some(idx)
        })
        .collect()
}
