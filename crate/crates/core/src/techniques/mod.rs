//! Selection techniques over a prepared [`Scene`].
//!
//! - [`meta_point`]: threshold from the density under the pointer, keep the
//!   component around the maximum it flows to.
//! - [`meta_brush`]: MaxLine through the maxima reached from a stroke,
//!   candidate particles flowing into a tube around it, and components of
//!   their smoothing ellipsoids.
//! - [`meta_paint`]: threshold from the density along the stroke, keep the
//!   component of the most-voted maximum.
//! - [`baseline_brush`]: particles inside the swept sphere of the stroke.

mod baseline;
mod brush;
mod paint;
mod point;
mod selection;
mod stroke;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use baseline::{baseline_brush, combine, CombineMode};
pub use brush::{initial_volume, meta_brush, InitialVolume};
pub use paint::meta_paint;
pub use point::{meta_point, meta_point_streaming};
pub use selection::{adjust_threshold, slider_threshold, Anchor, Flag, Selection, SLIDER_MAX, SLIDER_MIN};
pub use stroke::{SampleRecord, Stroke, StrokeFile, StrokeSample};

use crate::error::{Error, Result};
use crate::field::{self, DensityGrid, GridSpec, ParticleCloud, SmoothingConfig, SpatialHash};
use crate::flow::{ascend_batch, FlowConfig};
use crate::geom::point_polyline_distance;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Point,
    Brush,
    Paint,
    Baseline,
}

impl Technique {
    pub fn as_str(self) -> &'static str {
        match self {
            Technique::Point => "point",
            Technique::Brush => "brush",
            Technique::Paint => "paint",
            Technique::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(Technique::Point),
            "brush" => Ok(Technique::Brush),
            "paint" => Ok(Technique::Paint),
            "baseline" => Ok(Technique::Baseline),
            other => Err(Error::invalid(format!("unknown technique '{other}'"))),
        }
    }
}

/// Particle cloud with smoothing lengths, its density field and the flow
/// settings used by every technique.
///
/// Gradient-ascent destinations of all particles are computed on first use
/// and cached; a scene is immutable otherwise and can be shared across
/// threads.
#[derive(Debug)]
pub struct Scene {
    cloud: ParticleCloud,
    field: DensityGrid,
    flow: FlowConfig,
    destinations: OnceLock<Vec<Option<Vec3>>>,
}

impl Scene {
    /// Pairs a cloud with a precomputed field. Smoothing lengths are derived
    /// with the default configuration when the cloud carries none.
    pub fn new(mut cloud: ParticleCloud, field: DensityGrid) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::invalid("scene needs at least one particle"));
        }
        if cloud.adaptive_lengths().is_none() {
            cloud.compute_smoothing_lengths(&SmoothingConfig::default())?;
        }
        Ok(Self {
            cloud,
            field,
            flow: FlowConfig::default(),
            destinations: OnceLock::new(),
        })
    }

    /// Computes smoothing lengths, a covering grid of `dims` nodes and the
    /// density field.
    pub fn build(cloud: ParticleCloud, dims: [usize; 3], config: &SmoothingConfig) -> Result<Self> {
        Self::build_with_progress(cloud, dims, config, &|_, _| {})
    }

    pub fn build_with_progress(
        mut cloud: ParticleCloud,
        dims: [usize; 3],
        config: &SmoothingConfig,
        progress: &(dyn Fn(usize, usize) + Sync),
    ) -> Result<Self> {
        cloud.compute_smoothing_lengths(config)?;
        let spec = GridSpec::covering(&cloud, dims)?;
        let field = field::estimate_density_with_progress(&cloud, &spec, progress)?;
        Self::new(cloud, field)
    }

    pub fn with_flow_config(mut self, flow: FlowConfig) -> Self {
        self.flow = flow;
        self.destinations = OnceLock::new();
        self
    }

    pub fn cloud(&self) -> &ParticleCloud {
        &self.cloud
    }

    pub fn field(&self) -> &DensityGrid {
        &self.field
    }

    pub fn flow_config(&self) -> &FlowConfig {
        &self.flow
    }

    pub fn into_parts(self) -> (ParticleCloud, DensityGrid) {
        (self.cloud, self.field)
    }

    /// Default marker radius: two cell edges.
    pub fn default_radius(&self) -> f64 {
        2.0 * self.field.spec().min_cell_size()
    }

    /// Stroke resampling spacing: half a cell edge.
    pub fn sample_spacing(&self) -> f64 {
        0.5 * self.field.spec().min_cell_size()
    }

    /// Tolerance under which ascent destinations are merged.
    pub fn merge_tolerance(&self) -> f64 {
        self.field.spec().cell_diagonal()
    }

    /// Where each particle's gradient ascent ends; `None` for particles
    /// outside the grid box.
    pub fn particle_destinations(&self) -> &[Option<Vec3>] {
        self.destinations.get_or_init(|| {
            // Ascending in cell order keeps neighbouring paths in cache; each
            // ascent is independent so the result does not depend on order.
            let spec = self.field.spec();
            let positions = self.cloud.positions();
            let mut order: Vec<usize> = (0..positions.len()).collect();
            order.sort_by_key(|&i| {
                spec.containing_cell(&positions[i])
                    .map_or(usize::MAX, |[x, y, z]| spec.cell_index(x, y, z))
            });
            let seeds: Vec<Vec3> = order.iter().map(|&i| positions[i]).collect();
            let mut out = vec![None; positions.len()];
            for (i, r) in order.into_iter().zip(ascend_batch(&self.field, &seeds, &self.flow)) {
                out[i] = r.ok().map(|r| r.destination);
            }
            out
        })
    }

    /// Resampled stroke points that fall inside the grid box.
    pub(crate) fn stroke_seeds(&self, stroke: &Stroke) -> Vec<Vec3> {
        let spec = self.field.spec();
        stroke
            .resampled(self.sample_spacing())
            .into_iter()
            .filter(|p| spec.contains(p))
            .collect()
    }
}

/// Indices along `axis` whose coordinate `box_min + (i + offset) h` lies in
/// `[lo, hi]`, limited to `0..count`. `offset` is 0 for nodes, 0.5 for cells.
pub(crate) fn axis_range(
    spec: &GridSpec,
    axis: usize,
    lo: f64,
    hi: f64,
    offset: f64,
    count: usize,
) -> std::ops::Range<usize> {
    let h = spec.cell_size()[axis];
    let o = spec.box_min()[axis];
    let a = ((lo - o) / h - offset).ceil().max(0.0);
    let b = ((hi - o) / h - offset).floor() + 1.0;
    let a = (a as usize).min(count);
    let b = (b.clamp(0.0, count as f64) as usize).max(a);
    a..b
}

/// Indices (from `ids`) of the points lying within `radius` of `line`.
pub(crate) fn near_polyline(ids: &[usize], points: &[Vec3], line: &[Vec3], radius: f64) -> Vec<usize> {
    debug_assert_eq!(ids.len(), points.len());
    if points.is_empty() || line.is_empty() {
        return Vec::new();
    }
    let hash = SpatialHash::new(points, Vec3::repeat(radius.max(f64::MIN_POSITIVE)));
    let mut hit = vec![false; points.len()];
    let segments: Vec<&[Vec3]> = if line.len() == 1 {
        vec![line]
    } else {
        line.windows(2).collect()
    };
    for seg in segments {
        let (lo, hi) = crate::geom::padded_bounds(seg, radius);
        hash.for_each_in_box(&lo, &hi, |i| {
            if !hit[i] && point_polyline_distance(&points[i], seg) <= radius {
                hit[i] = true;
            }
        });
    }
    let mut out: Vec<usize> = hit
        .iter()
        .enumerate()
        .filter(|(_, h)| **h)
        .map(|(i, _)| ids[i])
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests;
