use std::ops::Range;

use super::selection::{resolve, Anchor, Flag, Selection};
use super::{axis_range, near_polyline, Scene, Stroke, Technique};
use crate::error::{Error, Result};
use crate::flow::{ascend_batch, build_maxline, dedupe_maxima};
use crate::surface::CellMask;
use crate::Vec3;

/// Cell mask covered by the smoothing ellipsoids of a set of particles and
/// the mean node density inside those ellipsoids.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialVolume {
    pub mask: CellMask,
    pub rho0: f64,
}

/// Builds the initial volume of interest from candidate particle indices.
///
/// A cell belongs to the mask when its center lies inside some candidate's
/// ellipsoid, or when it contains a candidate. `rho0` averages the nodes
/// inside the ellipsoids; when the ellipsoids are thinner than the grid and
/// enclose no node, the corners of the masked cells are averaged instead.
pub fn initial_volume(scene: &Scene, candidates: &[usize]) -> Result<InitialVolume> {
    let cloud = scene.cloud();
    let field = scene.field();
    let spec = field.spec();
    let lengths = cloud
        .adaptive_lengths()
        .ok_or_else(|| Error::invalid("cloud has no smoothing lengths"))?;
    let positions = cloud.positions();
    let dims = spec.dims();
    let cdims = spec.cell_dims();

    // Node and cell-centre coordinates per axis, shared by every candidate.
    let h = spec.cell_size();
    let node_axis: [Vec<f64>; 3] = std::array::from_fn(|a| (0..dims[a]).map(|i| spec.axis_coord(a, i, h[a])).collect());
    let cell_axis: [Vec<f64>; 3] = std::array::from_fn(|a| {
        (0..cdims[a])
            .map(|i| spec.box_min()[a] + (i as f64 + 0.5) * h[a])
            .collect()
    });

    let mut mask = CellMask::empty(spec);
    let mut inside_node = vec![false; spec.node_count()];
    for &j in candidates {
        let (Some(r), Some(l)) = (positions.get(j), lengths.get(j)) else {
            return Err(Error::invalid(format!("candidate {j} is not a particle index")));
        };
        let lo = r - l;
        let hi = r + l;

        let cells: [_; 3] = std::array::from_fn(|a| axis_range(spec, a, lo[a], hi[a], 0.5, cdims[a]));
        for_each_inside(&cells, &cell_axis, r, l, |i, jj, k| {
            mask.insert(spec.cell_index(i, jj, k))
        });
        let nodes: [_; 3] = std::array::from_fn(|a| axis_range(spec, a, lo[a], hi[a], 0.0, dims[a]));
        for_each_inside(&nodes, &node_axis, r, l, |i, jj, k| {
            inside_node[spec.node_index(i, jj, k)] = true
        });

        if let Some([i, jj, k]) = spec.containing_cell(r) {
            mask.insert(spec.cell_index(i, jj, k));
        }
    }

    let values = field.values();
    let (mut sum, mut count) = (0.0, 0usize);
    for (v, _) in values.iter().zip(&inside_node).filter(|(_, inside)| **inside) {
        sum += f64::from(*v);
        count += 1;
    }
    if count == 0 {
        for cell in mask.iter() {
            let [i, j, k] = spec.cell_coords(cell);
            for corner in 0..8 {
                sum += field.node_value(i + (corner & 1), j + ((corner >> 1) & 1), k + (corner >> 2));
                count += 1;
            }
        }
    }
    let rho0 = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(InitialVolume { mask, rho0 })
}

/// Calls `f` for every grid point in `ranges` whose normalised offset from
/// `center` has squared length at most 1. Terms are summed x, y, z as in
/// `norm_squared`, so the test matches a direct evaluation bit for bit.
fn for_each_inside(
    ranges: &[Range<usize>; 3],
    coords: &[Vec<f64>; 3],
    center: &Vec3,
    lengths: &Vec3,
    mut f: impl FnMut(usize, usize, usize),
) {
    let sq = |a: usize, range: &Range<usize>| -> Vec<f64> {
        range
            .clone()
            .map(|i| {
                let d = (coords[a][i] - center[a]) / lengths[a];
                d * d
            })
            .collect()
    };
    let (dx, dy, dz) = (sq(0, &ranges[0]), sq(1, &ranges[1]), sq(2, &ranges[2]));
    for (k, &z) in ranges[2].clone().zip(&dz) {
        if z > 1.0 {
            continue;
        }
        for (j, &y) in ranges[1].clone().zip(&dy) {
            if y + z > 1.0 {
                continue;
            }
            for (i, &x) in ranges[0].clone().zip(&dx) {
                if x + y + z <= 1.0 {
                    f(i, j, k);
                }
            }
        }
    }
}

/// Brush selection along a stroke. See the module docs for the pipeline.
pub fn meta_brush(scene: &Scene, stroke: &Stroke) -> Result<Selection> {
    let field = scene.field();
    let seeds = scene.stroke_seeds(stroke);
    if seeds.is_empty() {
        return Err(Error::invalid("stroke does not enter the grid box"));
    }
    let flows: Vec<_> = ascend_batch(field, &seeds, scene.flow_config())
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let clusters = dedupe_maxima(&flows, scene.merge_tolerance());
    if clusters.is_empty() {
        return Ok(Selection::empty(
            Technique::Brush,
            Anchor::None,
            Flag::NoStructureNearStroke,
        ));
    }
    let maxima: Vec<Vec3> = clusters.iter().map(|c| c.position).collect();
    let maxline = build_maxline(field, &maxima, scene.flow_config())?;

    let destinations = scene.particle_destinations();
    let (ids, points): (Vec<usize>, Vec<Vec3>) = destinations
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.map(|d| (i, d)))
        .unzip();
    let candidates = near_polyline(&ids, &points, &maxline.polyline, stroke.radius());
    if candidates.is_empty() {
        let anchor = Anchor::Brush { maxline, candidates };
        return Ok(Selection::empty(Technique::Brush, anchor, Flag::NoStructureNearStroke));
    }
    let volume = initial_volume(scene, &candidates)?;
    let anchor = Anchor::Brush { maxline, candidates };
    resolve(
        scene,
        Technique::Brush,
        volume.rho0,
        0.0,
        Some(volume.mask),
        anchor,
        Vec::new(),
    )
}
