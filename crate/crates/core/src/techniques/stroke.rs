use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeSample {
    pub position: Vec3,
    /// Seconds since the start of the interaction.
    pub t: f64,
}

/// Ordered 3D input polyline with a marker radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    samples: Vec<StrokeSample>,
    radius: f64,
}

impl Stroke {
    pub fn new(samples: Vec<StrokeSample>, radius: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("stroke has no samples"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("stroke radius must be > 0, got {radius}")));
        }
        if samples
            .iter()
            .any(|s| !s.t.is_finite() || s.position.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::invalid("stroke samples must be finite"));
        }
        if samples.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::invalid("stroke timestamps must be non-decreasing"));
        }
        Ok(Self { samples, radius })
    }

    /// Stroke from positions with timestamps 0, 1, 2, ...
    pub fn from_points(points: &[Vec3], radius: f64) -> Result<Self> {
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, p)| StrokeSample {
                position: *p,
                t: i as f64,
            })
            .collect();
        Self::new(samples, radius)
    }

    pub fn samples(&self) -> &[StrokeSample] {
        &self.samples
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("stroke radius must be > 0, got {radius}")));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn polyline(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.position).collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .sum()
    }

    /// Points at uniform arc-length spacing of at most `spacing`, both
    /// endpoints included. A zero-length stroke yields its first point.
    pub fn resampled(&self, spacing: f64) -> Vec<Vec3> {
        assert!(spacing > 0.0, "resampling spacing must be positive");
        let line = self.polyline();
        let total = self.arc_length();
        if total == 0.0 {
            return vec![line[0]];
        }
        let n = (total / spacing).ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity(n + 1);
        out.push(line[0]);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for i in 1..n {
            let target = total * i as f64 / n as f64;
            loop {
                let len = (line[seg + 1] - line[seg]).norm();
                if seg_start + len >= target || seg + 2 == line.len() {
                    let t = if len > 0.0 {
                        ((target - seg_start) / len).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    out.push(line[seg] + (line[seg + 1] - line[seg]) * t);
                    break;
                }
                seg_start += len;
                seg += 1;
            }
        }
        out.push(*line.last().expect("non-empty"));
        out
    }
}

/// Stroke file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeFile {
    pub technique: super::Technique,
    pub radius: f64,
    #[serde(default)]
    pub mode: super::CombineMode,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub t: f64,
}

impl StrokeFile {
    pub fn to_stroke(&self) -> Result<Stroke> {
        let samples = self
            .samples
            .iter()
            .map(|s| StrokeSample {
                position: Vec3::new(s.x, s.y, s.z),
                t: s.t,
            })
            .collect();
        Stroke::new(samples, self.radius)
    }

    pub fn from_stroke(technique: super::Technique, mode: super::CombineMode, stroke: &Stroke) -> Self {
        Self {
            technique,
            radius: stroke.radius(),
            mode,
            samples: stroke
                .samples()
                .iter()
                .map(|s| SampleRecord {
                    x: s.position.x,
                    y: s.position.y,
                    z: s.position.z,
                    t: s.t,
                })
                .collect(),
        }
    }
}
