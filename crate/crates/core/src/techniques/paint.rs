use super::selection::{resolve, Anchor, Flag, Selection};
use super::{axis_range, Scene, Stroke, Technique};
use crate::error::{Error, Result};
use crate::flow::{ascend_batch, dedupe_maxima};
use crate::geom::{padded_bounds, point_polyline_distance};

/// Paint selection: base threshold from the mean node density in a tube
/// around the stroke, then the single component holding the maximum that
/// most stroke samples flow to.
pub fn meta_paint(scene: &Scene, stroke: &Stroke) -> Result<Selection> {
    let field = scene.field();
    let spec = field.spec();
    let radius = field.global_lengths().sum() / 3.0;
    let line = stroke.polyline();

    let (lo, hi) = padded_bounds(&line, radius);
    let dims = spec.dims();
    let range = |axis: usize| axis_range(spec, axis, lo[axis], hi[axis], 0.0, dims[axis]);
    let (mut sum, mut count) = (0.0, 0usize);
    for k in range(2) {
        for j in range(1) {
            for i in range(0) {
                if point_polyline_distance(&spec.node_position(i, j, k), &line) <= radius {
                    sum += field.node_value(i, j, k);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::invalid("no grid node lies inside the stroke tunnel"));
    }
    let rho0 = sum / count as f64;

    let seeds = scene.stroke_seeds(stroke);
    let flows: Vec<_> = ascend_batch(field, &seeds, scene.flow_config())
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let clusters = dedupe_maxima(&flows, scene.merge_tolerance());
    // Earliest cluster wins ties.
    let winner = clusters
        .iter()
        .fold(None, |best: Option<&crate::flow::MaximumCluster>, c| match best {
            Some(b) if b.votes >= c.votes => Some(b),
            _ => Some(c),
        });
    let Some(winner) = winner else {
        return Ok(Selection::empty(Technique::Paint, Anchor::None, Flag::NoStructure));
    };
    let anchor = Anchor::Paint {
        maximum: winner.position,
        votes: winner.votes,
    };
    if rho0 <= 0.0 {
        return Ok(Selection::empty(Technique::Paint, anchor, Flag::NoStructure));
    }
    resolve(scene, Technique::Paint, rho0, 0.0, None, anchor, Vec::new())
}
