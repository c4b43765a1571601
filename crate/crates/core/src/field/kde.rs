//! Adaptive Epanechnikov kernel density estimation on the node grid.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use super::{DensityGrid, GridSpec, ParticleCloud, SpatialHash};
use crate::error::{Error, Result};
use crate::Vec3;

/// Normalisation of the 3D Epanechnikov kernel, `15 / (8π)`.
pub const KERNEL_NORM: f64 = 15.0 / (8.0 * PI);

/// `1 - x²` inside the unit interval, zero outside.
#[inline]
pub fn epanechnikov(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0 - x * x
    } else {
        0.0
    }
}

#[inline]
fn kernel_sq(q2: f64) -> f64 {
    if q2 < 1.0 {
        1.0 - q2
    } else {
        0.0
    }
}

/// Logarithm used in the `2 (P80 - P20) / log N` bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
    Two,
}

impl LogBase {
    fn log(self, n: f64) -> f64 {
        match self {
            LogBase::Natural => n.ln(),
            LogBase::Ten => n.log10(),
            LogBase::Two => n.log2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConfig {
    pub log_base: LogBase,
    /// Sensitivity exponent of the per-particle scale factor.
    pub alpha: f64,
    /// Upper clamp for the scale factor of isolated particles.
    pub max_scale: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            log_base: LogBase::Natural,
            alpha: 0.5,
            max_scale: 10.0,
        }
    }
}

/// Percentile `q` (0..=100) of sorted data, interpolating linearly between
/// the closest order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Per-axis global smoothing lengths `2 (P80 - P20) / log N`.
///
/// Axes with a zero inter-percentile range fall back to `1e-6` times the
/// cloud extent on that axis (or the largest extent, or 1 when the cloud
/// is a single point).
pub fn global_smoothing_lengths(cloud: &ParticleCloud, config: &SmoothingConfig) -> Result<Vec3> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "smoothing lengths need at least 2 particles, got {n}"
        )));
    }
    let log_n = config.log_base.log(n as f64);
    let (lo, hi) = cloud.bounds().expect("non-empty");
    let extent = hi - lo;
    let fallback_extent = if extent.max() > 0.0 { extent.max() } else { 1.0 };

    let mut out = Vec3::zeros();
    let mut coords = Vec::with_capacity(n);
    for axis in 0..3 {
        coords.clear();
        coords.extend(cloud.positions().iter().map(|p| p[axis]));
        coords.sort_by(f64::total_cmp);
        let range = percentile(&coords, 80.0) - percentile(&coords, 20.0);
        out[axis] = if range > 0.0 {
            2.0 * range / log_n
        } else {
            let e = if extent[axis] > 0.0 {
                extent[axis]
            } else {
                fallback_extent
            };
            1e-6 * e
        };
    }
    Ok(out)
}

/// Two-stage adaptive lengths: a pilot density with the fixed global
/// lengths, then `λ_j = (pilot_j / g)^-α` with `g` the geometric mean of
/// the pilot densities.
pub fn adaptive_smoothing_lengths(cloud: &ParticleCloud, global: Vec3, config: &SmoothingConfig) -> Result<Vec<Vec3>> {
    if !global.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(Error::invalid("global smoothing lengths must be finite and > 0"));
    }
    if cloud.is_empty() {
        return Err(Error::invalid("empty cloud"));
    }
    let positions = cloud.positions();
    let n = positions.len() as f64;
    let hash = SpatialHash::new(positions, global);
    let norm = KERNEL_NORM / (n * global.x * global.y * global.z);

    let pilot: Vec<f64> = positions
        .par_iter()
        .map(|p| {
            let mut sum = 0.0;
            hash.for_each_in_box(&(p - global), &(p + global), |i| {
                let d = (positions[i] - p).component_div(&global);
                sum += kernel_sq(d.norm_squared());
            });
            norm * sum
        })
        .collect();

    let positive: Vec<f64> = pilot.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return Ok(vec![global * config.max_scale; positions.len()]);
    }
    let log_mean = positive.iter().map(|v| v.ln()).sum::<f64>() / positive.len() as f64;
    let g = log_mean.exp();

    Ok(pilot
        .iter()
        .map(|&rho| {
            let scale = if rho > 0.0 {
                (rho / g).powf(-config.alpha).min(config.max_scale)
            } else {
                config.max_scale
            };
            global * scale
        })
        .collect())
}

/// Node densities for `cloud` on `spec`. Requires adaptive lengths.
pub fn estimate_density(cloud: &ParticleCloud, spec: &GridSpec) -> Result<DensityGrid> {
    estimate_density_with_progress(cloud, spec, &|_, _| {})
}

/// [`estimate_density`] reporting `(planes_done, planes_total)` as z-planes
/// of the grid complete.
///
/// Each z-plane gathers the particles whose kernel reaches it, in particle
/// index order, so the per-node sum order does not depend on scheduling.
pub fn estimate_density_with_progress(
    cloud: &ParticleCloud,
    spec: &GridSpec,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<DensityGrid> {
    if cloud.is_empty() {
        return Err(Error::invalid("density of an empty cloud"));
    }
    let lengths = cloud
        .adaptive_lengths()
        .ok_or_else(|| Error::invalid("adaptive smoothing lengths not computed"))?;
    let global = cloud
        .global_lengths()
        .ok_or_else(|| Error::invalid("global smoothing lengths not computed"))?;
    let positions = cloud.positions();
    if let Some(p) = positions.iter().find(|p| !spec.contains(p)) {
        return Err(Error::invalid(format!(
            "grid box does not cover particle at ({}, {}, {})",
            p.x, p.y, p.z
        )));
    }

    let [nx, ny, nz] = spec.dims();
    let h = spec.cell_size();
    let lo = spec.box_min();

    let mut planes: Vec<Vec<u32>> = vec![Vec::new(); nz];
    for (j, (p, l)) in positions.iter().zip(lengths).enumerate() {
        let (a, b) = node_range(p.z, l.z, lo.z, h.z, nz);
        for plane in &mut planes[a..b] {
            plane.push(j as u32);
        }
    }

    let xs: Vec<f64> = (0..nx).map(|i| spec.axis_coord(0, i, h.x)).collect();
    let ys: Vec<f64> = (0..ny).map(|i| spec.axis_coord(1, i, h.y)).collect();
    let done = AtomicUsize::new(0);
    let scale = KERNEL_NORM / positions.len() as f64;

    let slabs: Vec<Vec<f32>> = planes
        .par_iter()
        .enumerate()
        .map(|(k, members)| {
            let z = spec.axis_coord(2, k, h.z);
            let mut acc = vec![0.0f64; nx * ny];
            for &j in members {
                let p = &positions[j as usize];
                let l = &lengths[j as usize];
                let dz = (p.z - z) / l.z;
                let dz2 = dz * dz;
                if dz2 >= 1.0 {
                    continue;
                }
                let w = 1.0 / (l.x * l.y * l.z);
                let (ya, yb) = node_range(p.y, l.y * (1.0 - dz2).sqrt(), lo.y, h.y, ny);
                for (jj, y) in ys.iter().enumerate().take(yb).skip(ya) {
                    let dy = (p.y - y) / l.y;
                    let rem = 1.0 - dz2 - dy * dy;
                    if rem <= 0.0 {
                        continue;
                    }
                    let (xa, xb) = node_range(p.x, l.x * rem.sqrt(), lo.x, h.x, nx);
                    let row = &mut acc[jj * nx..(jj + 1) * nx];
                    for (slot, x) in row[xa..xb].iter_mut().zip(&xs[xa..xb]) {
                        let dx = (p.x - x) / l.x;
                        *slot += w * kernel_sq(dx * dx + dy * dy + dz2);
                    }
                }
            }
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            progress(finished, nz);
            acc.into_iter().map(|v| (scale * v) as f32).collect()
        })
        .collect();

    DensityGrid::from_values(*spec, slabs.concat(), global)
}

/// Half-open node index range along one axis that may lie within `radius`
/// of `center`; one node of slack on each side.
fn node_range(center: f64, radius: f64, origin: f64, h: f64, n: usize) -> (usize, usize) {
    let a = ((center - radius - origin) / h).floor() as i64;
    let b = ((center + radius - origin) / h).ceil() as i64 + 1;
    (a.clamp(0, n as i64) as usize, b.clamp(0, n as i64) as usize)
}
