use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ParticleCloud;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Disk,
    Rings,
    Shell,
    Strings,
    Filament,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 5] = [
        DatasetKind::Disk,
        DatasetKind::Rings,
        DatasetKind::Shell,
        DatasetKind::Strings,
        DatasetKind::Filament,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Disk => "disk",
            DatasetKind::Rings => "rings",
            DatasetKind::Shell => "shell",
            DatasetKind::Strings => "strings",
            DatasetKind::Filament => "filament",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown dataset kind '{s}'")))
    }
}

/// Thin disk in the xy-plane whose density falls off as `(1 - r/radius)^falloff`.
/// Targets fill `r < core_radius`, interferers the rest of the disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGeometry {
    pub radius: f64,
    pub core_radius: f64,
    pub thickness: f64,
    pub falloff: f64,
}

/// Two half rings of uniform density in perpendicular planes, offset by `gap`
/// along x. Targets are the middle `arc_fraction` of each half ring. Half of
/// the interferers continue the rings, the other half fill the cube of half
/// width `box_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingsGeometry {
    pub radius: f64,
    pub tube: f64,
    pub gap: f64,
    pub arc_fraction: f64,
    pub box_half: f64,
}

/// Upper hemispherical shell (targets) over a half ball of interferers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellGeometry {
    pub inner: f64,
    pub outer: f64,
    pub ball: f64,
}

/// Straight central string along z (interferers) with a helical string wound
/// around it (targets). Both have a Gaussian cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StringsGeometry {
    pub length: f64,
    pub helix_radius: f64,
    pub pitch: f64,
    pub sigma: f64,
}

/// Sinusoidal filament along x with a Gaussian cross-section (targets) in a
/// box of uniform noise (interferers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilamentGeometry {
    pub length: f64,
    pub amplitude: f64,
    pub wavelength: f64,
    pub sigma: f64,
    pub box_half: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Disk(DiskGeometry),
    Rings(RingsGeometry),
    Shell(ShellGeometry),
    Strings(StringsGeometry),
    Filament(FilamentGeometry),
}

impl Geometry {
    pub fn default_for(kind: DatasetKind) -> Self {
        match kind {
            DatasetKind::Disk => Geometry::Disk(DiskGeometry {
                radius: 1.0,
                core_radius: 0.4,
                thickness: 0.05,
                falloff: 2.0,
            }),
            DatasetKind::Rings => Geometry::Rings(RingsGeometry {
                radius: 0.6,
                tube: 0.04,
                gap: 0.3,
                arc_fraction: 1.0 / 3.0,
                box_half: 1.0,
            }),
            DatasetKind::Shell => Geometry::Shell(ShellGeometry {
                inner: 0.8,
                outer: 0.95,
                ball: 0.5,
            }),
            DatasetKind::Strings => Geometry::Strings(StringsGeometry {
                length: 2.0,
                helix_radius: 0.3,
                pitch: 0.5,
                sigma: 0.03,
            }),
            DatasetKind::Filament => Geometry::Filament(FilamentGeometry {
                length: 1.6,
                amplitude: 0.2,
                wavelength: 0.8,
                sigma: 0.03,
                box_half: 1.0,
            }),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            Geometry::Disk(_) => DatasetKind::Disk,
            Geometry::Rings(_) => DatasetKind::Rings,
            Geometry::Shell(_) => DatasetKind::Shell,
            Geometry::Strings(_) => DatasetKind::Strings,
            Geometry::Filament(_) => DatasetKind::Filament,
        }
    }

    /// Multiplies every length by `c`; exponents and fractions are kept.
    pub fn scaled(&self, c: f64) -> Self {
        match *self {
            Geometry::Disk(g) => Geometry::Disk(DiskGeometry {
                radius: g.radius * c,
                core_radius: g.core_radius * c,
                thickness: g.thickness * c,
                falloff: g.falloff,
            }),
            Geometry::Rings(g) => Geometry::Rings(RingsGeometry {
                radius: g.radius * c,
                tube: g.tube * c,
                gap: g.gap * c,
                arc_fraction: g.arc_fraction,
                box_half: g.box_half * c,
            }),
            Geometry::Shell(g) => Geometry::Shell(ShellGeometry {
                inner: g.inner * c,
                outer: g.outer * c,
                ball: g.ball * c,
            }),
            Geometry::Strings(g) => Geometry::Strings(StringsGeometry {
                length: g.length * c,
                helix_radius: g.helix_radius * c,
                pitch: g.pitch * c,
                sigma: g.sigma * c,
            }),
            Geometry::Filament(g) => Geometry::Filament(FilamentGeometry {
                length: g.length * c,
                amplitude: g.amplitude * c,
                wavelength: g.wavelength * c,
                sigma: g.sigma * c,
                box_half: g.box_half * c,
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Geometry::Disk(g) => {
                positive("radius", g.radius)?;
                positive("core_radius", g.core_radius)?;
                positive("thickness", g.thickness)?;
                if !(g.falloff >= 0.0 && g.falloff.is_finite()) {
                    return Err(Error::invalid("falloff must be a finite non-negative exponent"));
                }
                if g.core_radius >= g.radius {
                    return Err(Error::invalid("core_radius must be smaller than radius"));
                }
            }
            Geometry::Rings(g) => {
                positive("radius", g.radius)?;
                positive("tube", g.tube)?;
                positive("box_half", g.box_half)?;
                if !(g.gap.is_finite() && g.gap >= 0.0) {
                    return Err(Error::invalid("gap must be finite and non-negative"));
                }
                if !(g.arc_fraction > 0.0 && g.arc_fraction < 1.0) {
                    return Err(Error::invalid("arc_fraction must lie in (0, 1)"));
                }
            }
            Geometry::Shell(g) => {
                positive("inner", g.inner)?;
                positive("outer", g.outer)?;
                positive("ball", g.ball)?;
                if g.inner >= g.outer {
                    return Err(Error::invalid("shell inner radius must be below the outer radius"));
                }
            }
            Geometry::Strings(g) => {
                positive("length", g.length)?;
                positive("helix_radius", g.helix_radius)?;
                positive("pitch", g.pitch)?;
                positive("sigma", g.sigma)?;
            }
            Geometry::Filament(g) => {
                positive("length", g.length)?;
                positive("wavelength", g.wavelength)?;
                positive("sigma", g.sigma)?;
                positive("box_half", g.box_half)?;
                if !(g.amplitude.is_finite() && g.amplitude >= 0.0) {
                    return Err(Error::invalid("amplitude must be finite and non-negative"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub target_count: usize,
    pub noise_count: usize,
    pub seed: u64,
    pub geometry: Geometry,
}

impl DatasetParams {
    /// Default geometry for `kind`.
    pub fn new(kind: DatasetKind, target_count: usize, noise_count: usize, seed: u64) -> Self {
        Self {
            target_count,
            noise_count,
            seed,
            geometry: Geometry::default_for(kind),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        self.geometry.kind()
    }
}

/// Generates a labelled cloud: the first `target_count` particles are the
/// targets. Coordinates are rounded to `f32` so every file format stores
/// them exactly.
pub fn gen_dataset(params: &DatasetParams) -> Result<ParticleCloud> {
    params.geometry.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (nt, nn) = (params.target_count, params.noise_count);
    let mut points = Vec::with_capacity(nt + nn);
    match params.geometry {
        Geometry::Disk(g) => {
            let core = g.core_radius / g.radius;
            points.extend((0..nt).map(|_| disk_point(&mut rng, &g, 0.0, core)));
            points.extend((0..nn).map(|_| disk_point(&mut rng, &g, core, 1.0)));
        }
        Geometry::Rings(g) => {
            let ring_noise = nn / 2;
            let (lo, hi) = (0.5 - 0.5 * g.arc_fraction, 0.5 + 0.5 * g.arc_fraction);
            for i in 0..nt {
                let u = lo + (hi - lo) * rng.random::<f64>();
                points.push(ring_point(&mut rng, &g, i % 2, u));
            }
            for i in 0..ring_noise {
                // Outer arcs on both ends, measured in the same half-ring parameter.
                let v = rng.random::<f64>() * (1.0 - g.arc_fraction);
                let u = if v < lo { v } else { v + (hi - lo) };
                points.push(ring_point(&mut rng, &g, i % 2, u));
            }
            points.extend((ring_noise..nn).map(|_| cube_point(&mut rng, g.box_half)));
        }
        Geometry::Shell(g) => {
            points.extend((0..nt).map(|_| {
                let r = radius_in_shell(&mut rng, g.inner, g.outer);
                upper_direction(&mut rng) * r
            }));
            points.extend((0..nn).map(|_| {
                let r = radius_in_shell(&mut rng, 0.0, g.ball);
                upper_direction(&mut rng) * r
            }));
        }
        Geometry::Strings(g) => {
            let normal = Normal::new(0.0, g.sigma).map_err(|e| Error::invalid(e.to_string()))?;
            for _ in 0..nt {
                let z = (rng.random::<f64>() - 0.5) * g.length;
                let phase = TAU * z / g.pitch;
                let spine = Vec3::new(g.helix_radius * phase.cos(), g.helix_radius * phase.sin(), z);
                points.push(spine + gaussian(&mut rng, &normal));
            }
            for _ in 0..nn {
                let z = (rng.random::<f64>() - 0.5) * g.length;
                points.push(Vec3::new(0.0, 0.0, z) + gaussian(&mut rng, &normal));
            }
        }
        Geometry::Filament(g) => {
            let normal = Normal::new(0.0, g.sigma).map_err(|e| Error::invalid(e.to_string()))?;
            for _ in 0..nt {
                let x = (rng.random::<f64>() - 0.5) * g.length;
                points.push(filament_spine(&g, x) + gaussian(&mut rng, &normal));
            }
            points.extend((0..nn).map(|_| cube_point(&mut rng, g.box_half)));
        }
    }
    let points = points.into_iter().map(quantize).collect();
    let labels = (0..nt + nn).map(|i| i < nt).collect();
    ParticleCloud::with_labels(points, labels)
}

/// Spine point of the default filament at abscissa `x`.
pub fn filament_spine(g: &FilamentGeometry, x: f64) -> Vec3 {
    Vec3::new(x, g.amplitude * (TAU * x / g.wavelength).sin(), 0.0)
}

fn quantize(p: Vec3) -> Vec3 {
    p.map(|v| f64::from(v as f32))
}

fn gaussian(rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> Vec3 {
    Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
}

fn cube_point(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        (2.0 * rng.random::<f64>() - 1.0) * half,
        (2.0 * rng.random::<f64>() - 1.0) * half,
        (2.0 * rng.random::<f64>() - 1.0) * half,
    )
}

/// Rejection sample of the disk profile restricted to `lo <= r/radius < hi`.
fn disk_point(rng: &mut ChaCha8Rng, g: &DiskGeometry, lo: f64, hi: f64) -> Vec3 {
    loop {
        // Uniform in area over the annulus, then thinned by the profile.
        let u = lo * lo + (hi * hi - lo * lo) * rng.random::<f64>();
        let rho = u.sqrt();
        let keep = (1.0 - rho).powf(g.falloff);
        if rng.random::<f64>() < keep {
            let phi = TAU * rng.random::<f64>();
            let z = (rng.random::<f64>() - 0.5) * g.thickness;
            let r = rho * g.radius;
            return Vec3::new(r * phi.cos(), r * phi.sin(), z);
        }
    }
}

/// Point on half ring `which` at parameter `u` in [0, 1] along the arc, with
/// a uniform offset inside the tube.
fn ring_point(rng: &mut ChaCha8Rng, g: &RingsGeometry, which: usize, u: f64) -> Vec3 {
    let angle = PI * u;
    let offset = loop {
        let o = cube_point(rng, g.tube);
        if o.norm_squared() <= g.tube * g.tube {
            break o;
        }
    };
    let (c, s) = (g.radius * angle.cos(), g.radius * angle.sin());
    let center = if which == 0 {
        // xy-plane, opening towards -y.
        Vec3::new(c - 0.5 * g.gap, s, 0.0)
    } else {
        // xz-plane, opening towards -z.
        Vec3::new(c + 0.5 * g.gap, 0.0, s)
    };
    center + offset
}

/// Radius uniform in volume between `inner` and `outer`. Works on the ratio
/// so that scaling both radii scales the result exactly.
fn radius_in_shell(rng: &mut ChaCha8Rng, inner: f64, outer: f64) -> f64 {
    let q = inner / outer;
    let a = q * q * q;
    outer * (a + (1.0 - a) * rng.random::<f64>()).cbrt()
}

fn upper_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.random();
    let phi = TAU * rng.random::<f64>();
    let s = (1.0 - z * z).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}
