use serde::{Deserialize, Serialize};

use super::{Scene, Technique};
use crate::error::{Error, Result};
use crate::flow::MaxLine;
use crate::surface::{classify_particles, extract_mesh, label_components, CellMask, TriangleMesh};
use crate::Vec3;

/// Slider range: thresholds span `[rho0 / 16, 16 rho0]`.
pub const SLIDER_MIN: f64 = -4.0;
pub const SLIDER_MAX: f64 = 4.0;

/// Effective threshold `2^s * rho0`.
pub fn slider_threshold(rho0: f64, s: f64) -> f64 {
    rho0 * s.exp2()
}

/// What a technique re-derives its kept components from.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchor {
    /// Pointer position and the maximum reached from it.
    Point {
        pointer: Vec3,
        maximum: Vec3,
    },
    /// MaxLine and the candidate particles whose ellipsoids form the mask.
    Brush {
        maxline: MaxLine,
        candidates: Vec<usize>,
    },
    /// Most-voted maximum.
    Paint {
        maximum: Vec3,
        votes: usize,
    },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// Zero density at the input or a density-free neighbourhood.
    NoStructure,
    /// No particle flows into the tunnel around the MaxLine.
    NoStructureNearStroke,
    /// The anchor maximum sits in a cell below the threshold.
    AnchorUnlabeled,
    /// Requested slider value was outside [-4, 4].
    SliderClamped,
}

impl Flag {
    pub fn describe(self) -> &'static str {
        match self {
            Flag::NoStructure => "no structure at the input position",
            Flag::NoStructureNearStroke => "no structure near stroke",
            Flag::AnchorUnlabeled => "anchor maximum lies outside every component",
            Flag::SliderClamped => "slider value clamped to [-4, 4]",
        }
    }
}

/// Result of a selection technique.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub technique: Technique,
    pub rho0: f64,
    pub s: f64,
    pub threshold: f64,
    /// Kept component ids, ascending.
    pub kept: Vec<u32>,
    pub mask: Option<CellMask>,
    /// Selected particle indices, ascending.
    pub particles: Vec<usize>,
    pub mesh: TriangleMesh,
    pub anchor: Anchor,
    pub flags: Vec<Flag>,
}

impl Selection {
    pub(crate) fn empty(technique: Technique, anchor: Anchor, flag: Flag) -> Self {
        Self {
            technique,
            rho0: 0.0,
            s: 0.0,
            threshold: 0.0,
            kept: Vec::new(),
            mask: None,
            particles: Vec::new(),
            mesh: TriangleMesh::default(),
            anchor,
            flags: vec![flag],
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

/// Labels components at `2^s rho0` under `mask`, keeps those selected by the
/// anchor rule, classifies particles and meshes the kept components.
pub(crate) fn resolve(
    scene: &Scene,
    technique: Technique,
    rho0: f64,
    s: f64,
    mask: Option<CellMask>,
    anchor: Anchor,
    mut flags: Vec<Flag>,
) -> Result<Selection> {
    let threshold = slider_threshold(rho0, s);
    if threshold.is_nan() || threshold <= 0.0 {
        if !flags.contains(&Flag::NoStructure) {
            flags.push(Flag::NoStructure);
        }
        return Ok(Selection {
            rho0,
            s,
            threshold,
            mask,
            flags,
            ..Selection::empty(technique, anchor, Flag::NoStructure)
        });
    }
    let field = scene.field();
    let components = label_components(field, threshold, mask.as_ref())?;
    let anchors: Vec<Vec3> = match &anchor {
        Anchor::Point { maximum, .. } | Anchor::Paint { maximum, .. } => vec![*maximum],
        Anchor::Brush { maxline, .. } => maxline.maxima.clone(),
        Anchor::None => Vec::new(),
    };
    let mut kept = Vec::new();
    for p in &anchors {
        if let Some(id) = components.component_containing(p)? {
            kept.push(id);
        }
    }
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() && !anchors.is_empty() {
        flags.push(Flag::AnchorUnlabeled);
    }
    let particles = classify_particles(scene.cloud(), field, threshold, &components, &kept);
    let mesh = extract_mesh(field, threshold, &components, &kept)?;
    Ok(Selection {
        technique,
        rho0,
        s,
        threshold,
        kept,
        mask,
        particles,
        mesh,
        anchor,
        flags,
    })
}

/// Re-thresholds a selection at `2^s rho0` keeping its anchor and mask.
/// `s` outside [-4, 4] is clamped and flagged.
pub fn adjust_threshold(scene: &Scene, selection: &Selection, s: f64) -> Result<Selection> {
    if selection.technique == Technique::Baseline {
        return Err(Error::invalid("baseline selections have no density threshold"));
    }
    if s.is_nan() {
        return Err(Error::invalid("slider value is NaN"));
    }
    let mut flags: Vec<Flag> = selection
        .flags
        .iter()
        .copied()
        .filter(|f| matches!(f, Flag::NoStructure | Flag::NoStructureNearStroke))
        .collect();
    let clamped = s.clamp(SLIDER_MIN, SLIDER_MAX);
    if clamped != s {
        flags.push(Flag::SliderClamped);
    }
    if flags
        .iter()
        .any(|f| matches!(f, Flag::NoStructure | Flag::NoStructureNearStroke))
    {
        let mut out = selection.clone();
        out.s = clamped;
        out.flags = flags;
        return Ok(out);
    }
    resolve(
        scene,
        selection.technique,
        selection.rho0,
        clamped,
        selection.mask.clone(),
        selection.anchor.clone(),
        flags,
    )
}
