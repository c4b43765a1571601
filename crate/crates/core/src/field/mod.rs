//! Continuous density field over a regular node grid.
//!
//! A [`DensityGrid`] stores node densities for a box `B` and answers
//! trilinear value and gradient queries anywhere inside it. Node values are
//! held as `f32` (the persisted precision); all arithmetic is `f64`.

mod kde;
mod spatial;

pub use kde::{
    adaptive_smoothing_lengths, epanechnikov, estimate_density, estimate_density_with_progress,
    global_smoothing_lengths, percentile, LogBase, SmoothingConfig, KERNEL_NORM,
};
pub(crate) use spatial::SpatialHash;

use crate::error::{Error, Result};
use crate::Vec3;

/// Default node count per axis.
pub const DEFAULT_DIMS: [usize; 3] = [100, 100, 100];

/// Particle positions with optional ground truth and smoothing lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    positions: Vec<Vec3>,
    labels: Option<Vec<bool>>,
    global_lengths: Option<Vec3>,
    adaptive_lengths: Option<Vec<Vec3>>,
}

impl ParticleCloud {
    pub fn new(positions: Vec<Vec3>) -> Self {
        Self {
            positions,
            labels: None,
            global_lengths: None,
            adaptive_lengths: None,
        }
    }

    pub fn with_labels(positions: Vec<Vec3>, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != positions.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} particles",
                labels.len(),
                positions.len()
            )));
        }
        Ok(Self {
            labels: Some(labels),
            ..Self::new(positions)
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn global_lengths(&self) -> Option<Vec3> {
        self.global_lengths
    }

    pub fn adaptive_lengths(&self) -> Option<&[Vec3]> {
        self.adaptive_lengths.as_deref()
    }

    /// Computes global and per-particle smoothing lengths and stores them.
    pub fn compute_smoothing_lengths(&mut self, config: &SmoothingConfig) -> Result<()> {
        let global = global_smoothing_lengths(self, config)?;
        let adaptive = adaptive_smoothing_lengths(self, global, config)?;
        self.global_lengths = Some(global);
        self.adaptive_lengths = Some(adaptive);
        Ok(())
    }

    /// Installs externally computed smoothing lengths.
    pub fn set_smoothing_lengths(&mut self, global: Vec3, adaptive: Vec<Vec3>) -> Result<()> {
        if adaptive.len() != self.positions.len() {
            return Err(Error::invalid("one adaptive length triple per particle required"));
        }
        let positive = |l: &Vec3| l.iter().all(|v| v.is_finite() && *v > 0.0);
        if !positive(&global) || !adaptive.iter().all(positive) {
            return Err(Error::invalid("smoothing lengths must be finite and > 0"));
        }
        self.global_lengths = Some(global);
        self.adaptive_lengths = Some(adaptive);
        Ok(())
    }

    /// Axis-aligned bounding box of the positions, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = self.positions.first()?;
        Some(
            self.positions
                .iter()
                .fold((*first, *first), |(lo, hi), p| (lo.inf(p), hi.sup(p))),
        )
    }
}

/// Box `B` and node counts of the regular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    box_min: Vec3,
    box_max: Vec3,
    dims: [usize; 3],
    cell: Vec3,
}

impl GridSpec {
    pub fn new(box_min: Vec3, box_max: Vec3, dims: [usize; 3]) -> Result<Self> {
        if !(box_min.iter().chain(box_max.iter()).all(|v| v.is_finite())) {
            return Err(Error::invalid("grid box must be finite"));
        }
        if (0..3).any(|k| box_max[k] <= box_min[k]) {
            return Err(Error::invalid("grid box_max must exceed box_min on every axis"));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::invalid("grid needs at least 2 nodes per axis"));
        }
        if dims.iter().any(|&n| n > u32::MAX as usize) {
            return Err(Error::invalid("grid dimension too large"));
        }
        let ext = box_max - box_min;
        let cell = Vec3::new(
            ext.x / (dims[0] - 1) as f64,
            ext.y / (dims[1] - 1) as f64,
            ext.z / (dims[2] - 1) as f64,
        );
        Ok(Self {
            box_min,
            box_max,
            dims,
            cell,
        })
    }

    /// Smallest box around the cloud, grown on each axis by the largest
    /// adaptive smoothing length so that no kernel is truncated.
    pub fn covering(cloud: &ParticleCloud, dims: [usize; 3]) -> Result<Self> {
        let (lo, hi) = cloud
            .bounds()
            .ok_or_else(|| Error::invalid("cannot fit a grid to an empty cloud"))?;
        let lengths = cloud
            .adaptive_lengths()
            .ok_or_else(|| Error::invalid("adaptive smoothing lengths not computed"))?;
        let pad = lengths.iter().fold(Vec3::zeros(), |acc, l| acc.sup(l));
        Self::new(lo - pad, hi + pad, dims)
    }

    pub fn box_min(&self) -> Vec3 {
        self.box_min
    }

    pub fn box_max(&self) -> Vec3 {
        self.box_max
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn cell_dims(&self) -> [usize; 3] {
        [self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_dims().iter().product()
    }

    /// Edge lengths of one grid cell.
    pub fn cell_size(&self) -> Vec3 {
        self.cell
    }

    pub fn min_cell_size(&self) -> f64 {
        self.cell_size().min()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_size().norm()
    }

    /// Node index in x-fastest order.
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.cell_size();
        Vec3::new(
            self.axis_coord(0, i, h.x),
            self.axis_coord(1, j, h.y),
            self.axis_coord(2, k, h.z),
        )
    }

    // Last node sits exactly on box_max.
    pub(crate) fn axis_coord(&self, axis: usize, i: usize, h: f64) -> f64 {
        if i + 1 == self.dims[axis] {
            self.box_max[axis]
        } else {
            self.box_min[axis] + i as f64 * h
        }
    }

    /// Cell index in x-fastest order over the `(n-1)^3` cells.
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [cx, cy, _] = self.cell_dims();
        i + cx * (j + cy * k)
    }

    pub fn cell_coords(&self, index: usize) -> [usize; 3] {
        let [cx, cy, _] = self.cell_dims();
        [index % cx, (index / cx) % cy, index / (cx * cy)]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.cell_size();
        self.box_min + Vec3::new((i as f64 + 0.5) * h.x, (j as f64 + 0.5) * h.y, (k as f64 + 0.5) * h.z)
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.grid_coords(p).is_some()
    }

    /// Continuous node coordinates of `p`, or `None` outside the box.
    ///
    /// Points within a relative 1e-9 of the box are clamped onto it, and
    /// coordinates within 1e-9 of an integer snap to that node so that node
    /// positions reproduce stored values exactly.
    pub fn grid_coords(&self, p: &Vec3) -> Option<[f64; 3]> {
        let h = self.cell_size();
        let mut out = [0.0; 3];
        for axis in 0..3 {
            let n = (self.dims[axis] - 1) as f64;
            let mut u = (p[axis] - self.box_min[axis]) / h[axis];
            if !u.is_finite() || u < -1e-9 * n.max(1.0) || u > n + 1e-9 * n.max(1.0) {
                return None;
            }
            u = u.clamp(0.0, n);
            // u >= 0 here, so truncation rounds; avoids a libm call.
            let r = (u + 0.5) as u64 as f64;
            if (u - r).abs() < 1e-9 {
                u = r;
            }
            out[axis] = u;
        }
        Some(out)
    }

    /// Cell holding `p`; points on a shared face go to the lower-index cell.
    pub fn containing_cell(&self, p: &Vec3) -> Option<[usize; 3]> {
        let u = self.grid_coords(p)?;
        let cells = self.cell_dims();
        let mut out = [0usize; 3];
        for axis in 0..3 {
            let c = (u[axis].ceil() as i64 - 1).clamp(0, cells[axis] as i64 - 1);
            out[axis] = c as usize;
        }
        Some(out)
    }
}

/// Node densities of a regular grid plus the global smoothing lengths used
/// to build them.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    spec: GridSpec,
    values: Vec<f32>,
    global_lengths: Vec3,
    peak: f32,
}

impl DensityGrid {
    pub fn from_values(spec: GridSpec, values: Vec<f32>, global_lengths: Vec3) -> Result<Self> {
        if values.len() != spec.node_count() {
            return Err(Error::invalid(format!(
                "expected {} node values, got {}",
                spec.node_count(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "node {bad} has invalid density {}",
                values[bad]
            )));
        }
        let peak = values.iter().fold(0.0f32, |m, v| m.max(*v));
        Ok(Self {
            spec,
            values,
            global_lengths,
            peak,
        })
    }

    /// Grid filled by evaluating `f` at every node position.
    pub fn from_fn(spec: GridSpec, global_lengths: Vec3, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        let [nx, ny, nz] = spec.dims();
        let mut values = Vec::with_capacity(spec.node_count());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(f(&spec.node_position(i, j, k)) as f32);
                }
            }
        }
        Self::from_values(spec, values, global_lengths)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn global_lengths(&self) -> Vec3 {
        self.global_lengths
    }

    pub fn node_value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.spec.node_index(i, j, k)] as f64
    }

    pub fn peak(&self) -> f64 {
        f64::from(self.peak)
    }

    /// Trilinear density at `p`.
    pub fn sample_density(&self, p: &Vec3) -> Result<f64> {
        let u = self.spec.grid_coords(p).ok_or(Error::OutOfDomain(*p))?;
        Ok(self.interpolate(u))
    }

    fn interpolate(&self, u: [f64; 3]) -> f64 {
        let dims = self.spec.dims();
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for axis in 0..3 {
            let i = (u[axis] as usize).min(dims[axis] - 2);
            base[axis] = i;
            t[axis] = u[axis] - i as f64;
        }
        let [i, j, k] = base;
        let [tx, ty, tz] = t;
        let v = |di: usize, dj: usize, dk: usize| self.node_value(i + di, j + dj, k + dk);
        let lerp = |a: f64, b: f64, s: f64| {
            if s == 0.0 {
                a
            } else if s == 1.0 {
                b
            } else {
                a + (b - a) * s
            }
        };
        let c00 = lerp(v(0, 0, 0), v(1, 0, 0), tx);
        let c10 = lerp(v(0, 1, 0), v(1, 1, 0), tx);
        let c01 = lerp(v(0, 0, 1), v(1, 0, 1), tx);
        let c11 = lerp(v(0, 1, 1), v(1, 1, 1), tx);
        let c0 = lerp(c00, c10, ty);
        let c1 = lerp(c01, c11, ty);
        lerp(c0, c1, tz)
    }

    /// Gradient of the trilinear field by differences of [`sample_density`]
    /// with a step of half a cell per axis; one-sided near the boundary.
    ///
    /// [`sample_density`]: DensityGrid::sample_density
    pub fn sample_gradient(&self, p: &Vec3) -> Result<Vec3> {
        self.gradient_with_step(p, self.spec.cell_size() * 0.5)
    }

    /// Same as [`sample_gradient`](Self::sample_gradient) with an explicit
    /// per-axis step.
    pub fn gradient_with_step(&self, p: &Vec3, step: Vec3) -> Result<Vec3> {
        // Offsets are applied in node coordinates so the box test and the
        // coordinate transform run once per call.
        let u = self.spec.grid_coords(p).ok_or(Error::OutOfDomain(*p))?;
        let h = self.spec.cell_size();
        let dims = self.spec.dims();
        let mut g = Vec3::zeros();
        for axis in 0..3 {
            let n = (dims[axis] - 1) as f64;
            let d = step[axis] / h[axis];
            let mut fwd = u;
            let mut back = u;
            fwd[axis] += d;
            back[axis] -= d;
            let can_fwd = fwd[axis] <= n;
            let can_back = back[axis] >= 0.0;
            let s = step[axis];
            g[axis] = match (can_back, can_fwd) {
                (true, true) => (self.interpolate(fwd) - self.interpolate(back)) / (2.0 * s),
                (false, true) => (self.interpolate(fwd) - self.interpolate(u)) / s,
                (true, false) => (self.interpolate(u) - self.interpolate(back)) / s,
                (false, false) => 0.0,
            };
        }
        Ok(g)
    }

    /// Hessian by central differences of the sampled gradient.
    pub fn sample_hessian(&self, p: &Vec3) -> Result<nalgebra::Matrix3<f64>> {
        let step = self.spec.cell_size() * 0.5;
        let mut cols = [Vec3::zeros(); 3];
        for (axis, col) in cols.iter_mut().enumerate() {
            let mut fwd = *p;
            let mut back = *p;
            fwd[axis] = (fwd[axis] + step[axis]).min(self.spec.box_max()[axis]);
            back[axis] = (back[axis] - step[axis]).max(self.spec.box_min()[axis]);
            let span = fwd[axis] - back[axis];
            *col = if span > 0.0 {
                (self.sample_gradient(&fwd)? - self.sample_gradient(&back)?) / span
            } else {
                Vec3::zeros()
            };
        }
        let h = nalgebra::Matrix3::from_columns(&cols);
        Ok((h + h.transpose()) * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_spec(n: usize) -> GridSpec {
        GridSpec::new(Vec3::zeros(), Vec3::repeat(1.0), [n, n, n]).unwrap()
    }

    fn ramp(spec: GridSpec) -> DensityGrid {
        // Values are integers, hence exact in f32.
        let h = spec.cell_size();
        DensityGrid::from_fn(spec, Vec3::repeat(0.1), |p| {
            (p.x / h.x).round() * 3.0 + (p.y / h.y).round() + 5.0 * (p.z / h.z).round()
        })
        .unwrap()
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(GridSpec::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0), [4, 4, 4]).is_err());
        assert!(GridSpec::new(Vec3::zeros(), Vec3::repeat(1.0), [4, 1, 4]).is_err());
    }

    #[test]
    fn node_values_are_reproduced_exactly() {
        let spec = unit_spec(7);
        let values: Vec<f32> = (0..spec.node_count())
            .map(|i| ((i * 37) % 101) as f32 * 0.173)
            .collect();
        let field = DensityGrid::from_values(spec, values.clone(), Vec3::repeat(1.0)).unwrap();
        for (idx, v) in values.iter().enumerate() {
            let [i, j, k] = spec.node_coords(idx);
            let p = spec.node_position(i, j, k);
            assert_eq!(field.sample_density(&p).unwrap(), *v as f64);
        }
    }

    #[test]
    fn cell_center_is_mean_of_corners() {
        let spec = unit_spec(5);
        let values: Vec<f32> = (0..spec.node_count()).map(|i| (i % 13) as f32).collect();
        let field = DensityGrid::from_values(spec, values, Vec3::repeat(1.0)).unwrap();
        let c = spec.cell_center(1, 2, 3);
        let mut mean = 0.0;
        for (di, dj, dk) in corners() {
            mean += field.node_value(1 + di, 2 + dj, 3 + dk);
        }
        mean /= 8.0;
        assert!((field.sample_density(&c).unwrap() - mean).abs() < 1e-12);
    }

    fn corners() -> impl Iterator<Item = (usize, usize, usize)> {
        (0..8).map(|c| (c & 1, (c >> 1) & 1, (c >> 2) & 1))
    }

    #[test]
    fn constant_field_is_constant_with_zero_gradient() {
        let spec = unit_spec(6);
        let field = DensityGrid::from_fn(spec, Vec3::repeat(1.0), |_| 2.5).unwrap();
        for p in [
            Vec3::new(0.13, 0.77, 0.5),
            Vec3::new(0.0, 1.0, 0.999),
            Vec3::repeat(0.5),
        ] {
            assert_eq!(field.sample_density(&p).unwrap(), 2.5);
            assert_eq!(field.sample_gradient(&p).unwrap(), Vec3::zeros());
        }
    }

    #[test]
    fn linear_field_has_exact_gradient_including_boundary() {
        let spec = unit_spec(9);
        let field = ramp(spec);
        let h = spec.cell_size();
        let expect = Vec3::new(3.0 / h.x, 1.0 / h.y, 5.0 / h.z);
        for p in [
            Vec3::new(0.31, 0.52, 0.77),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.99, 0.01),
        ] {
            let g = field.sample_gradient(&p).unwrap();
            assert!((g - expect).norm() <= 1e-6 * expect.norm(), "{g} vs {expect}");
        }
    }

    #[test]
    fn out_of_domain_is_reported() {
        let field = ramp(unit_spec(4));
        let p = Vec3::new(1.1, 0.5, 0.5);
        assert!(matches!(field.sample_density(&p), Err(Error::OutOfDomain(_))));
        assert!(matches!(field.sample_gradient(&p), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn face_points_resolve_to_lower_cell() {
        let spec = unit_spec(5);
        let on_face = Vec3::new(0.5, 0.1, 0.1);
        assert_eq!(spec.containing_cell(&on_face), Some([1, 0, 0]));
        assert_eq!(spec.containing_cell(&Vec3::zeros()), Some([0, 0, 0]));
        assert_eq!(spec.containing_cell(&Vec3::repeat(1.0)), Some([3, 3, 3]));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let spec = unit_spec(2);
        assert!(DensityGrid::from_values(spec, vec![0.0; 7], Vec3::repeat(1.0)).is_err());
        let mut v = vec![0.0; 8];
        v[3] = -1.0;
        assert!(DensityGrid::from_values(spec, v, Vec3::repeat(1.0)).is_err());
    }
}
