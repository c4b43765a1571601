//! Steps shared by the command line and the HTTP service, so that both
//! produce byte-identical selection files.

use std::path::Path;

use metacast_core::data::io::{self, SelectionFile};
use metacast_core::techniques::{adjust_threshold, baseline_brush, meta_brush, meta_paint, meta_point};
use metacast_core::{Result, Scene, Selection, Stroke, Technique};

/// A finished selection: the engine state (absent for the geometric
/// baseline) and the record written to disk or served.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub selection: Option<Selection>,
    pub record: SelectionFile,
}

impl Outcome {
    fn from_selection(selection: Selection) -> Self {
        let record = SelectionFile::from_selection(&selection);
        Self {
            selection: Some(selection),
            record,
        }
    }

    /// OBJ text of the selection mesh; empty mesh for the baseline.
    pub fn mesh_obj(&self) -> String {
        match &self.selection {
            Some(sel) => sel.mesh.to_obj(sel.threshold, &sel.kept),
            None => metacast_core::TriangleMesh::default().to_obj(0.0, &[]),
        }
    }
}

pub fn load_scene(cloud: &Path, field: &Path) -> Result<Scene> {
    Scene::new(io::read_cloud_file(cloud)?, io::read_field_file(field)?)
}

/// Runs `technique` with `stroke` and, when `s` is given, moves the slider.
/// Point strokes are treated as a pointer drag over their samples.
pub fn select(scene: &Scene, technique: Technique, stroke: &Stroke, s: Option<f64>) -> Result<Outcome> {
    let selection = match technique {
        Technique::Baseline => {
            let particles = baseline_brush(scene.cloud(), stroke);
            return Ok(Outcome {
                selection: None,
                record: SelectionFile::from_particles(Technique::Baseline, particles),
            });
        }
        Technique::Point => meta_point(scene, &stroke.polyline())?,
        Technique::Brush => meta_brush(scene, stroke)?,
        Technique::Paint => meta_paint(scene, stroke)?,
    };
    match s {
        Some(s) => adjust(scene, &selection, s),
        None => Ok(Outcome::from_selection(selection)),
    }
}

pub fn adjust(scene: &Scene, selection: &Selection, s: f64) -> Result<Outcome> {
    adjust_threshold(scene, selection, s).map(Outcome::from_selection)
}
