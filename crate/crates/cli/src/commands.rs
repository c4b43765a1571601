//! Subcommands of the `metacast` binary.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 when the inputs cannot be
//! read or the engine rejects them. Diagnostics go to standard error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use metacast_core::data::io::{self, SelectionFile};
use metacast_core::data::{confusion_stats, gen_dataset, DatasetKind, DatasetParams};
use metacast_core::{Result, Scene, SmoothingConfig, Technique};

use crate::pipeline;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "metacast", version, about = "Density-guided point cloud selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset.
    Gen {
        #[arg(value_parser = parse_kind)]
        kind: DatasetKind,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        noise: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV, or the binary cloud format when the extension is `.mtcc`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the density field of a cloud.
    Density {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Nodes per axis, either `N` or `NX,NY,NZ`.
        #[arg(long, default_value = "100", value_parser = parse_dims)]
        grid: [usize; 3],
    },
    /// Run a selection technique on a stroke.
    Select {
        #[arg(value_parser = parse_technique)]
        technique: Technique,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        stroke: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Slider value applied after the selection.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        /// Also write the selection surface as OBJ.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Overrides the radius stored in the stroke file.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Move the slider of a saved selection.
    Adjust {
        #[arg(long)]
        sel: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Score a selection against the labels of a cloud.
    Metrics {
        #[arg(long)]
        sel: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Write the stats into a copy of the selection file as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API for the viewer on localhost. `METACAST_PORT`, when
    /// set, takes precedence over `--port`.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn parse_kind(s: &str) -> std::result::Result<DatasetKind, String> {
    s.parse().map_err(|e: metacast_core::Error| e.to_string())
}

fn parse_technique(s: &str) -> std::result::Result<Technique, String> {
    s.parse().map_err(|e: metacast_core::Error| e.to_string())
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected N or NX,NY,NZ".into()),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            kind,
            target,
            noise,
            seed,
            out,
        } => {
            let cloud = gen_dataset(&DatasetParams::new(kind, target, noise, seed))?;
            io::write_cloud_file(&out, &cloud)
        }
        Command::Density { cloud, out, grid } => {
            let cloud = io::read_cloud_file(&cloud)?;
            let scene = Scene::build_with_progress(cloud, grid, &SmoothingConfig::default(), &|done, total| {
                log::debug!("density {done}/{total}")
            })?;
            io::write_field_file(&out, scene.field())
        }
        Command::Select {
            technique,
            cloud,
            field,
            stroke,
            out,
            s,
            mesh,
            radius,
        } => {
            let scene = pipeline::load_scene(&cloud, &field)?;
            let mut stroke = io::read_stroke_file(&stroke)?.to_stroke()?;
            if let Some(r) = radius {
                stroke = stroke.with_radius(r)?;
            }
            let outcome = pipeline::select(&scene, technique, &stroke, s)?;
            finish(&outcome, &out, mesh.as_deref())
        }
        Command::Adjust {
            sel,
            cloud,
            field,
            s,
            out,
            mesh,
        } => {
            let scene = pipeline::load_scene(&cloud, &field)?;
            let selection = SelectionFile::read(&sel)?.restore(&scene)?;
            let outcome = pipeline::adjust(&scene, &selection, s)?;
            finish(&outcome, &out, mesh.as_deref())
        }
        Command::Metrics { sel, truth, out } => {
            let mut record = SelectionFile::read(&sel)?;
            let cloud = io::read_cloud_file(&truth)?;
            let labels = cloud
                .labels()
                .ok_or_else(|| metacast_core::Error::InvalidInput(format!("{} has no labels", truth.display())))?;
            let stats = confusion_stats(&record.particles, labels)?;
            println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
            if let Some(out) = out {
                record.stats = Some(stats);
                record.write(&out)?;
            }
            Ok(())
        }
        Command::Serve { port } => crate::service::serve(port_override(std::env::var("METACAST_PORT").ok(), port)?),
    }
}

fn port_override(env: Option<String>, flag: u16) -> Result<u16> {
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| metacast_core::Error::InvalidInput(format!("METACAST_PORT '{v}' is not a port number"))),
        None => Ok(flag),
    }
}

fn finish(outcome: &pipeline::Outcome, out: &std::path::Path, mesh: Option<&std::path::Path>) -> Result<()> {
    outcome.record.write(out)?;
    for flag in &outcome.record.flags {
        eprintln!("note: {}", flag.describe());
    }
    if let Some(path) = mesh {
        std::fs::write(path, outcome.mesh_obj()).map_err(metacast_core::Error::Io)?;
    }
    Ok(())
}
