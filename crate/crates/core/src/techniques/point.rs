use super::selection::{resolve, Anchor, Flag, Selection};
use super::{Scene, Technique};
use crate::error::{Error, Result};
use crate::flow::ascend;
use crate::Vec3;

/// Pointer selection over a drag: every sample re-derives the threshold from
/// the density under the pointer and keeps the component around the maximum
/// reached from it. Returns the selection for the last sample inside the box.
pub fn meta_point(scene: &Scene, samples: &[Vec3]) -> Result<Selection> {
    meta_point_streaming(scene, samples, &mut |_| {})
}

/// [`meta_point`] that hands each intermediate selection to `observer`.
pub fn meta_point_streaming(
    scene: &Scene,
    samples: &[Vec3],
    observer: &mut dyn FnMut(&Selection),
) -> Result<Selection> {
    let spec = scene.field().spec();
    let mut last = None;
    for p in samples.iter().filter(|p| spec.contains(p)) {
        let sel = select_at(scene, p)?;
        observer(&sel);
        last = Some(sel);
    }
    last.ok_or_else(|| Error::invalid("no pointer sample inside the grid box"))
}

fn select_at(scene: &Scene, pointer: &Vec3) -> Result<Selection> {
    let field = scene.field();
    let threshold = field.sample_density(pointer)?;
    if threshold <= 0.0 {
        let anchor = Anchor::Point {
            pointer: *pointer,
            maximum: *pointer,
        };
        return Ok(Selection::empty(Technique::Point, anchor, Flag::NoStructure));
    }
    let flow = ascend(field, pointer, scene.flow_config())?;
    let anchor = Anchor::Point {
        pointer: *pointer,
        maximum: flow.destination,
    };
    resolve(scene, Technique::Point, threshold, 0.0, None, anchor, Vec::new())
}
