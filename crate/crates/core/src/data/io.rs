//! File formats: cloud CSV and binary, density grid binary, stroke and
//! selection JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::ConfusionStats;
use crate::error::{Error, Result};
use crate::field::{DensityGrid, GridSpec, ParticleCloud};
use crate::flow::MaxLine;
use crate::techniques::{initial_volume, Anchor, Flag, Scene, Selection, StrokeFile, Technique};
use crate::Vec3;

pub const CLOUD_MAGIC: &[u8; 4] = b"MTCC";
pub const FIELD_MAGIC: &[u8; 4] = b"MTCF";
pub const FORMAT_VERSION: u32 = 1;
/// Bytes before the first node value of a field file.
pub const FIELD_HEADER_LEN: usize = 4 + 4 + 3 * 4 + 6 * 8 + 3 * 8;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

// ---------------------------------------------------------------- clouds

/// Reads `x,y,z[,label]` rows after a matching header line. Labels accept
/// `0/1` and `true/false`.
pub fn read_cloud_csv<R: Read>(reader: R) -> Result<ParticleCloud> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = csv.records();
    let line_of = |r: &csv::StringRecord| format!("line {}", r.position().map_or(0, |p| p.line()));
    let csv_error = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::parse(format!("line {line}"), e.to_string())
    };

    let header = records
        .next()
        .ok_or_else(|| Error::parse("line 1", "missing header"))?
        .map_err(csv_error)?;
    let names: Vec<String> = header.iter().map(str::to_ascii_lowercase).collect();
    let has_labels = match names.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y", "z"] => false,
        ["x", "y", "z", "label"] => true,
        _ => {
            return Err(Error::parse(
                line_of(&header),
                format!("expected header 'x,y,z' or 'x,y,z,label', found '{}'", names.join(",")),
            ))
        }
    };

    let expected = if has_labels { 4 } else { 3 };
    let mut positions = Vec::new();
    let mut labels = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != expected {
            return Err(Error::parse(
                line_of(&record),
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for (slot, text) in xyz.iter_mut().zip(record.iter()) {
            *slot = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_of(&record), format!("invalid coordinate '{text}'")))?;
        }
        positions.push(Vec3::from(xyz));
        if has_labels {
            labels.push(match &record[3] {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::parse(line_of(&record), format!("invalid label '{other}'"))),
            });
        }
    }
    if has_labels {
        ParticleCloud::with_labels(positions, labels)
    } else {
        Ok(ParticleCloud::new(positions))
    }
}

/// Writes the shortest text that parses back to the identical `f64`.
pub fn write_cloud_csv<W: Write>(mut writer: W, cloud: &ParticleCloud) -> Result<()> {
    let labels = cloud.labels();
    writeln!(writer, "{}", if labels.is_some() { "x,y,z,label" } else { "x,y,z" })?;
    for (i, p) in cloud.positions().iter().enumerate() {
        write!(writer, "{},{},{}", p.x, p.y, p.z)?;
        match labels {
            Some(l) => writeln!(writer, ",{}", u8::from(l[i]))?,
            None => writeln!(writer)?,
        }
    }
    writer.flush()?;
    Ok(())
}

/// Binary cloud: magic, version, count, `f32` triples and, when the cloud is
/// labelled, one byte per particle.
pub fn write_cloud_binary<W: Write>(mut writer: W, cloud: &ParticleCloud) -> Result<()> {
    writer.write_all(CLOUD_MAGIC)?;
    writer.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    writer.write_u64::<LittleEndian>(cloud.len() as u64)?;
    for p in cloud.positions() {
        for v in p.iter() {
            writer.write_f32::<LittleEndian>(*v as f32)?;
        }
    }
    if let Some(labels) = cloud.labels() {
        let bytes: Vec<u8> = labels.iter().map(|&l| u8::from(l)).collect();
        writer.write_all(&bytes)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_cloud_binary<R: Read>(mut reader: R) -> Result<ParticleCloud> {
    let mut magic = [0u8; 4];
    read_exact(&mut reader, &mut magic, 0)?;
    if &magic != CLOUD_MAGIC {
        return Err(Error::parse("byte 0", "not a binary cloud (bad magic)"));
    }
    let version = reader.read_u32::<LittleEndian>().map_err(|e| eof(e, 4))?;
    if version != FORMAT_VERSION {
        return Err(Error::parse("byte 4", format!("unsupported version {version}")));
    }
    let count = reader.read_u64::<LittleEndian>().map_err(|e| eof(e, 8))?;
    let count = usize::try_from(count).map_err(|_| Error::parse("byte 8", "particle count too large"))?;
    let mut positions = Vec::with_capacity(count.min(1 << 24));
    let mut offset = 16;
    for _ in 0..count {
        let mut xyz = [0.0; 3];
        for v in &mut xyz {
            *v = f64::from(reader.read_f32::<LittleEndian>().map_err(|e| eof(e, offset))?);
            offset += 4;
        }
        positions.push(Vec3::from(xyz));
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if rest.is_empty() {
        return Ok(ParticleCloud::new(positions));
    }
    if rest.len() != count {
        return Err(Error::parse(
            format!("byte {offset}"),
            format!("expected {count} label bytes or none, found {}", rest.len()),
        ));
    }
    let labels = rest
        .iter()
        .enumerate()
        .map(|(i, b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::parse(
                format!("byte {}", offset + i),
                format!("invalid label byte {other}"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    ParticleCloud::with_labels(positions, labels)
}

/// Reads a cloud file, binary when it starts with the binary magic and CSV
/// otherwise.
pub fn read_cloud_file(path: &Path) -> Result<ParticleCloud> {
    let mut reader = open(path)?;
    let is_binary = reader.fill_buf()?.starts_with(CLOUD_MAGIC);
    let result = if is_binary {
        read_cloud_binary(reader)
    } else {
        read_cloud_csv(reader)
    };
    result.map_err(|e| with_path(e, path))
}

/// Writes binary for a `.mtcc` extension, CSV otherwise.
pub fn write_cloud_file(path: &Path, cloud: &ParticleCloud) -> Result<()> {
    let writer = create(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtcc")) {
        write_cloud_binary(writer, cloud)
    } else {
        write_cloud_csv(writer, cloud)
    }
}

/// Parses a cloud from an in-memory upload, detecting the format as
/// [`read_cloud_file`] does.
pub fn parse_cloud_bytes(bytes: &[u8]) -> Result<ParticleCloud> {
    if bytes.starts_with(CLOUD_MAGIC) {
        read_cloud_binary(bytes)
    } else {
        read_cloud_csv(bytes)
    }
}

// ---------------------------------------------------------------- fields

pub fn write_field<W: Write>(mut writer: W, field: &DensityGrid) -> Result<()> {
    let spec = field.spec();
    writer.write_all(FIELD_MAGIC)?;
    writer.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    for n in spec.dims() {
        writer.write_u32::<LittleEndian>(n as u32)?;
    }
    for v in spec
        .box_min()
        .iter()
        .chain(spec.box_max().iter())
        .chain(field.global_lengths().iter())
    {
        writer.write_f64::<LittleEndian>(*v)?;
    }
    for v in field.values() {
        writer.write_f32::<LittleEndian>(*v)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_field<R: Read>(mut reader: R) -> Result<DensityGrid> {
    let mut magic = [0u8; 4];
    read_exact(&mut reader, &mut magic, 0)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::parse("byte 0", "not a density grid file (bad magic)"));
    }
    let version = reader.read_u32::<LittleEndian>().map_err(|e| eof(e, 4))?;
    if version != FORMAT_VERSION {
        return Err(Error::parse("byte 4", format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for (k, d) in dims.iter_mut().enumerate() {
        *d = reader.read_u32::<LittleEndian>().map_err(|e| eof(e, 8 + 4 * k))? as usize;
    }
    let mut meta = [0.0f64; 9];
    for (k, v) in meta.iter_mut().enumerate() {
        *v = reader.read_f64::<LittleEndian>().map_err(|e| eof(e, 20 + 8 * k))?;
    }
    let box_min = Vec3::new(meta[0], meta[1], meta[2]);
    let box_max = Vec3::new(meta[3], meta[4], meta[5]);
    let lengths = Vec3::new(meta[6], meta[7], meta[8]);
    let spec = GridSpec::new(box_min, box_max, dims).map_err(|e| Error::parse("byte 8", e.to_string()))?;

    let count = spec.node_count();
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 4 * count {
        return Err(Error::parse(
            format!("byte {FIELD_HEADER_LEN}"),
            format!("expected {} bytes of node values, found {}", 4 * count, bytes.len()),
        ));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DensityGrid::from_values(spec, values, lengths)
        .map_err(|e| Error::parse(format!("byte {FIELD_HEADER_LEN}"), e.to_string()))
}

pub fn read_field_file(path: &Path) -> Result<DensityGrid> {
    read_field(open(path)?).map_err(|e| with_path(e, path))
}

pub fn write_field_file(path: &Path, field: &DensityGrid) -> Result<()> {
    write_field(create(path)?, field)
}

// ---------------------------------------------------------------- strokes

pub fn parse_stroke_json(text: &str) -> Result<StrokeFile> {
    serde_json::from_str(text).map_err(|e| json_error("stroke", &e))
}

pub fn read_stroke_file(path: &Path) -> Result<StrokeFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    parse_stroke_json(&text).map_err(|e| with_path(e, path))
}

pub fn write_stroke_file(path: &Path, stroke: &StrokeFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(stroke).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------- selections

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnchorRecord {
    Point {
        pointer: [f64; 3],
        maximum: [f64; 3],
    },
    Brush {
        maxima: Vec<[f64; 3]>,
        polyline: Vec<[f64; 3]>,
        #[serde(default)]
        straight_segments: Vec<usize>,
        candidates: Vec<usize>,
    },
    Paint {
        maximum: [f64; 3],
        votes: usize,
    },
    None,
}

impl AnchorRecord {
    fn from_anchor(anchor: &Anchor) -> Self {
        let arr = |v: &Vec3| [v.x, v.y, v.z];
        match anchor {
            Anchor::Point { pointer, maximum } => AnchorRecord::Point {
                pointer: arr(pointer),
                maximum: arr(maximum),
            },
            Anchor::Brush { maxline, candidates } => AnchorRecord::Brush {
                maxima: maxline.maxima.iter().map(arr).collect(),
                polyline: maxline.polyline.iter().map(arr).collect(),
                straight_segments: maxline.straight_segments.clone(),
                candidates: candidates.clone(),
            },
            Anchor::Paint { maximum, votes } => AnchorRecord::Paint {
                maximum: arr(maximum),
                votes: *votes,
            },
            Anchor::None => AnchorRecord::None,
        }
    }

    fn to_anchor(&self) -> Anchor {
        let vec = |a: &[f64; 3]| Vec3::from(*a);
        match self {
            AnchorRecord::Point { pointer, maximum } => Anchor::Point {
                pointer: vec(pointer),
                maximum: vec(maximum),
            },
            AnchorRecord::Brush {
                maxima,
                polyline,
                straight_segments,
                candidates,
            } => Anchor::Brush {
                maxline: MaxLine {
                    maxima: maxima.iter().map(vec).collect(),
                    polyline: polyline.iter().map(vec).collect(),
                    straight_segments: straight_segments.clone(),
                },
                candidates: candidates.clone(),
            },
            AnchorRecord::Paint { maximum, votes } => Anchor::Paint {
                maximum: vec(maximum),
                votes: *votes,
            },
            AnchorRecord::None => Anchor::None,
        }
    }
}

/// On-disk selection. The anchor is kept so that a stored selection can be
/// re-thresholded later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub technique: Technique,
    pub rho0: f64,
    pub s: f64,
    pub threshold: f64,
    pub kept_components: Vec<u32>,
    pub particles: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<ConfusionStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
    #[serde(default = "no_anchor")]
    pub anchor: AnchorRecord,
}

fn no_anchor() -> AnchorRecord {
    AnchorRecord::None
}

impl SelectionFile {
    pub fn from_selection(selection: &Selection) -> Self {
        Self {
            technique: selection.technique,
            rho0: selection.rho0,
            s: selection.s,
            threshold: selection.threshold,
            kept_components: selection.kept.clone(),
            particles: selection.particles.clone(),
            stats: None,
            flags: selection.flags.clone(),
            anchor: AnchorRecord::from_anchor(&selection.anchor),
        }
    }

    /// Stored record for a geometric selection that has no threshold.
    pub fn from_particles(technique: Technique, particles: Vec<usize>) -> Self {
        Self {
            technique,
            rho0: 0.0,
            s: 0.0,
            threshold: 0.0,
            kept_components: Vec::new(),
            particles,
            stats: None,
            flags: Vec::new(),
            anchor: AnchorRecord::None,
        }
    }

    /// Rebuilds the in-memory selection against `scene`. A brush mask is
    /// recomputed from the stored candidates; the mesh is left empty.
    pub fn restore(&self, scene: &Scene) -> Result<Selection> {
        let anchor = self.anchor.to_anchor();
        let mask = match &anchor {
            Anchor::Brush { candidates, .. } if !candidates.is_empty() => Some(initial_volume(scene, candidates)?.mask),
            _ => None,
        };
        if let Some(&bad) = self.particles.iter().find(|&&i| i >= scene.cloud().len()) {
            return Err(Error::invalid(format!(
                "selection refers to particle {bad} beyond the cloud"
            )));
        }
        Ok(Selection {
            technique: self.technique,
            rho0: self.rho0,
            s: self.s,
            threshold: self.threshold,
            kept: self.kept_components.clone(),
            mask,
            particles: self.particles.clone(),
            mesh: Default::default(),
            anchor,
            flags: self.flags.clone(),
        })
    }

    /// Compact JSON followed by a newline; the exact bytes written to disk
    /// and served over HTTP.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string(self).expect("selection serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error("selection", &e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text).map_err(|e| with_path(e, path))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

// ---------------------------------------------------------------- helpers

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], offset: usize) -> Result<()> {
    reader.read_exact(buf).map_err(|e| eof(e, offset))
}

fn eof(e: std::io::Error, offset: usize) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::parse(format!("byte {offset}"), "unexpected end of file")
    } else {
        Error::Io(e)
    }
}

fn json_error(what: &str, e: &serde_json::Error) -> Error {
    Error::parse(
        format!("line {} column {}", e.line(), e.column()),
        format!("invalid {what} JSON: {e}"),
    )
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    }
}
