use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{near_polyline, Stroke};
use crate::field::ParticleCloud;

/// Particles within the stroke radius of the stroke polyline.
pub fn baseline_brush(cloud: &ParticleCloud, stroke: &Stroke) -> Vec<usize> {
    let ids: Vec<usize> = (0..cloud.len()).collect();
    near_polyline(&ids, cloud.positions(), &stroke.polyline(), stroke.radius())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    #[default]
    Union,
    Subtract,
}

/// `a ∪ b` or `a \ b`, ascending and free of duplicates.
pub fn combine(a: &[usize], b: &[usize], mode: CombineMode) -> Vec<usize> {
    let left: BTreeSet<usize> = a.iter().copied().collect();
    let right: BTreeSet<usize> = b.iter().copied().collect();
    match mode {
        CombineMode::Union => left.union(&right).copied().collect(),
        CombineMode::Subtract => left.difference(&right).copied().collect(),
    }
}
