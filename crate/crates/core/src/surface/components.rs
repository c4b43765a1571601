use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::field::{DensityGrid, GridSpec};
use crate::Vec3;

/// Subset of grid cells, indexed like [`GridSpec::cell_index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    cells: Vec<bool>,
}

impl CellMask {
    pub fn empty(spec: &GridSpec) -> Self {
        Self {
            cells: vec![false; spec.cell_count()],
        }
    }

    pub fn from_cells(cells: Vec<bool>) -> Self {
        Self { cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn insert(&mut self, cell: usize) {
        self.cells[cell] = true;
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.get(cell).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| i)
    }
}

/// Connected super-threshold cells of a density grid.
///
/// Label 0 marks cells below the threshold or outside the mask; components
/// are numbered from 1 in scan order of their first cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentGrid {
    spec: GridSpec,
    threshold: f64,
    labels: Vec<u32>,
    count: u32,
}

impl ComponentGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> u32 {
        self.labels[cell]
    }

    pub fn component_count(&self) -> u32 {
        self.count
    }

    pub fn component_ids(&self) -> impl Iterator<Item = u32> {
        1..=self.count
    }

    /// Number of cells in each component, indexed by `id - 1`.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count as usize];
        for &l in &self.labels {
            if l > 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }

    /// Label of the cell holding `p`; `None` for unlabeled cells.
    pub fn component_containing(&self, p: &Vec3) -> Result<Option<u32>> {
        let [i, j, k] = self.spec.containing_cell(p).ok_or(Error::OutOfDomain(*p))?;
        let label = self.labels[self.spec.cell_index(i, j, k)];
        Ok((label != 0).then_some(label))
    }
}

/// Marks each node that clears the threshold.
fn nodes_at_or_above(field: &DensityGrid, threshold: f64) -> Vec<bool> {
    field.values().iter().map(|&v| v as f64 >= threshold).collect()
}

/// Whether any of the cell's eight corner nodes is flagged.
fn cell_has_flagged_corner(spec: &GridSpec, flags: &[bool], i: usize, j: usize, k: usize) -> bool {
    (0..8).any(|c| flags[spec.node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))])
}

/// Labels 6-connected components of cells that have at least one corner node
/// with density `>= threshold`. Cells outside `mask` are excluded first.
pub fn label_components(field: &DensityGrid, threshold: f64, mask: Option<&CellMask>) -> Result<ComponentGrid> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::invalid(format!("threshold must be > 0, got {threshold}")));
    }
    let spec = *field.spec();
    if let Some(m) = mask {
        if m.len() != spec.cell_count() {
            return Err(Error::invalid("mask does not match the grid"));
        }
    }
    let flags = nodes_at_or_above(field, threshold);
    let [cx, cy, cz] = spec.cell_dims();
    let n = spec.cell_count();

    let mut active = vec![false; n];
    for k in 0..cz {
        for j in 0..cy {
            for i in 0..cx {
                let idx = spec.cell_index(i, j, k);
                active[idx] = mask.is_none_or(|m| m.contains(idx)) && cell_has_flagged_corner(&spec, &flags, i, j, k);
            }
        }
    }

    let mut labels = vec![0u32; n];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !active[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(cell) = queue.pop_front() {
            let [i, j, k] = spec.cell_coords(cell);
            let mut visit = |ni: usize, nj: usize, nk: usize| {
                let idx = spec.cell_index(ni, nj, nk);
                if active[idx] && labels[idx] == 0 {
                    labels[idx] = count;
                    queue.push_back(idx);
                }
            };
            if i > 0 {
                visit(i - 1, j, k);
            }
            if i + 1 < cx {
                visit(i + 1, j, k);
            }
            if j > 0 {
                visit(i, j - 1, k);
            }
            if j + 1 < cy {
                visit(i, j + 1, k);
            }
            if k > 0 {
                visit(i, j, k - 1);
            }
            if k + 1 < cz {
                visit(i, j, k + 1);
            }
        }
    }

    Ok(ComponentGrid {
        spec,
        threshold,
        labels,
        count,
    })
}
