use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::tables::TRI_TABLE;
use super::ComponentGrid;
use crate::error::{Error, Result};
use crate::field::DensityGrid;
use crate::Vec3;

/// Corner offsets in table order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Corner pairs of the twelve cube edges in table order.
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [3, 2],
    [0, 3],
    [4, 5],
    [5, 6],
    [7, 6],
    [4, 7],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Iso-surface triangles tagged with the component they bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub components: Vec<u32>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// ASCII OBJ with a leading comment carrying the threshold and ids.
    pub fn to_obj(&self, threshold: f64, component_ids: &[u32]) -> String {
        let ids: Vec<String> = component_ids.iter().map(u32::to_string).collect();
        let mut out = String::with_capacity(64 + 40 * (self.vertices.len() + self.triangles.len()));
        let _ = writeln!(out, "# metacast threshold={threshold} components={}", ids.join(","));
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }
}

/// Grid edge identity: lower node index and axis.
fn edge_key(node: usize, axis: usize) -> u64 {
    node as u64 * 3 + axis as u64
}

/// Marching Cubes over the cells of the kept components.
///
/// Vertices are shared between cells through their grid edge, numbered in
/// order of first use while scanning cells, so output is deterministic.
pub fn extract_mesh(
    field: &DensityGrid,
    threshold: f64,
    components: &ComponentGrid,
    keep: &[u32],
) -> Result<TriangleMesh> {
    if let Some(bad) = keep.iter().find(|&&id| id == 0 || id > components.component_count()) {
        return Err(Error::invalid(format!("unknown component id {bad}")));
    }
    if components.spec() != field.spec() {
        return Err(Error::invalid("component grid does not match the field"));
    }
    if keep.is_empty() {
        return Ok(TriangleMesh::default());
    }
    let spec = field.spec();
    let [nx, ny, _] = spec.dims();
    let [cx, cy, cz] = spec.cell_dims();
    let labels = components.labels();

    // Per z-slab: triangles as edge keys plus the owning component.
    type Tri = ([u64; 3], u32);
    let slabs: Vec<Vec<Tri>> = (0..cz)
        .into_par_iter()
        .map(|k| {
            let mut tris = Vec::new();
            for j in 0..cy {
                for i in 0..cx {
                    let label = labels[spec.cell_index(i, j, k)];
                    if label == 0 || !keep.contains(&label) {
                        continue;
                    }
                    let mut case = 0usize;
                    for (bit, c) in CORNERS.iter().enumerate() {
                        if field.node_value(i + c[0], j + c[1], k + c[2]) < threshold {
                            case |= 1 << bit;
                        }
                    }
                    let row = &TRI_TABLE[case];
                    for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                        let mut keys = [0u64; 3];
                        for (slot, &e) in keys.iter_mut().zip(tri) {
                            let [a, b] = EDGES[e as usize];
                            let lo = CORNERS[a];
                            let axis = (0..3).find(|&d| CORNERS[b][d] != lo[d]).expect("edge has an axis");
                            let node = (i + lo[0]) + nx * ((j + lo[1]) + ny * (k + lo[2]));
                            *slot = edge_key(node, axis);
                        }
                        tris.push((keys, label));
                    }
                }
            }
            tris
        })
        .collect();

    let mut mesh = TriangleMesh::default();
    let mut ids: HashMap<u64, u32> = HashMap::new();
    for (keys, label) in slabs.into_iter().flatten() {
        let mut tri = [0u32; 3];
        for (slot, key) in tri.iter_mut().zip(keys) {
            *slot = *ids.entry(key).or_insert_with(|| {
                mesh.vertices.push(edge_vertex(field, threshold, key));
                (mesh.vertices.len() - 1) as u32
            });
        }
        mesh.triangles.push(tri);
        mesh.components.push(label);
    }
    Ok(mesh)
}

/// Linear crossing on a grid edge, always interpolated from its lower node.
fn edge_vertex(field: &DensityGrid, threshold: f64, key: u64) -> Vec3 {
    let spec = field.spec();
    let node = (key / 3) as usize;
    let axis = (key % 3) as usize;
    let [i, j, k] = spec.node_coords(node);
    let mut upper = [i, j, k];
    upper[axis] += 1;
    let v0 = field.node_value(i, j, k);
    let v1 = field.node_value(upper[0], upper[1], upper[2]);
    let p0 = spec.node_position(i, j, k);
    let p1 = spec.node_position(upper[0], upper[1], upper[2]);
    let t = if v1 != v0 {
        ((threshold - v0) / (v1 - v0)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let mut p = p0;
    p[axis] = p0[axis] + t * (p1[axis] - p0[axis]);
    p
}
