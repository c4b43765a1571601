//! Gradient flow on a density grid: ascent from seeds to local maxima,
//! merging of destinations, and the MaxLine through successive maxima.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::DensityGrid;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Integration step as a fraction of the smallest cell edge.
    pub step_fraction: f64,
    /// Gradient tolerance relative to `peak density / cell size`.
    pub gradient_tolerance: f64,
    /// Minimum displacement, as a fraction of the cell edge, below which a
    /// path is considered stalled.
    pub min_move_fraction: f64,
    pub max_steps: usize,
    /// Weight of the pull towards the next maximum when tracing a MaxLine.
    pub pull_weight: f64,
    /// Evaluate the Hessian at converged destinations.
    pub compute_hessian: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step_fraction: 0.5,
            gradient_tolerance: 1e-8,
            min_move_fraction: 1e-3,
            max_steps: 10_000,
            pull_weight: 2.0,
            compute_hessian: false,
        }
    }
}

impl FlowConfig {
    pub fn step(&self, field: &DensityGrid) -> f64 {
        self.step_fraction * field.spec().min_cell_size()
    }

    fn gradient_tol(&self, field: &DensityGrid) -> f64 {
        self.gradient_tolerance * field.peak() / field.spec().min_cell_size()
    }
}

/// Outcome of following the gradient from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub seed: Vec3,
    pub destination: Vec3,
    pub steps: usize,
    pub converged: bool,
    /// Largest Hessian eigenvalue at the destination, when requested.
    pub lambda1: Option<f64>,
    /// Set when `lambda1` is not negative, i.e. the destination is not a
    /// strict maximum (flat region, saddle).
    pub degenerate: bool,
}

fn clamp_to_box(field: &DensityGrid, p: &Vec3) -> Vec3 {
    let spec = field.spec();
    p.sup(&spec.box_min()).inf(&spec.box_max())
}

/// Follows the normalised gradient from `seed` until it stalls at a maximum.
pub fn ascend(field: &DensityGrid, seed: &Vec3, config: &FlowConfig) -> Result<FlowResult> {
    trace(field, seed, config, None)
}

/// [`ascend`] that also records every accepted position, seed included.
pub fn ascend_path(field: &DensityGrid, seed: &Vec3, config: &FlowConfig) -> Result<(FlowResult, Vec<Vec3>)> {
    let mut path = Vec::new();
    let result = trace(field, seed, config, Some(&mut path))?;
    Ok((result, path))
}

fn trace(
    field: &DensityGrid,
    seed: &Vec3,
    config: &FlowConfig,
    mut path: Option<&mut Vec<Vec3>>,
) -> Result<FlowResult> {
    if !field.spec().contains(seed) {
        return Err(Error::OutOfDomain(*seed));
    }
    let base = config.step(field);
    let min_move = config.min_move_fraction * field.spec().min_cell_size();
    let gtol = config.gradient_tol(field);

    let mut p = clamp_to_box(field, seed);
    let mut rho = field.sample_density(&p)?;
    let mut step = base;
    let mut steps = 0;
    if let Some(path) = path.as_deref_mut() {
        path.push(p);
    }

    let converged = loop {
        if steps >= config.max_steps {
            break false;
        }
        steps += 1;
        let g = field.sample_gradient(&p)?;
        let gnorm = g.norm();
        if gnorm <= gtol {
            break true;
        }
        let raw = p + g * (step / gnorm);
        let q = clamp_to_box(field, &raw);
        if (q - p).norm() <= min_move {
            // A path pinned against the box wall has not found a maximum.
            break q == raw;
        }
        let rq = field.sample_density(&q)?;
        // Strict increase: on a plateau of the interpolant the finite-difference
        // gradient can point across it and equal-density moves would cycle.
        if rq > rho {
            p = q;
            rho = rq;
            step = (step * 2.0).min(base);
            if let Some(path) = path.as_deref_mut() {
                path.push(p);
            }
        } else {
            step *= 0.5;
            if step <= min_move {
                break true;
            }
        }
    };

    let mut result = FlowResult {
        seed: *seed,
        destination: p,
        steps,
        converged,
        lambda1: None,
        degenerate: false,
    };
    if config.compute_hessian && converged {
        let lambda1 = largest_hessian_eigenvalue(field, &p)?;
        result.lambda1 = Some(lambda1);
        result.degenerate = lambda1 >= 0.0;
    }
    Ok(result)
}

/// Largest eigenvalue of the finite-difference Hessian at `p`.
pub fn largest_hessian_eigenvalue(field: &DensityGrid, p: &Vec3) -> Result<f64> {
    let h = field.sample_hessian(p)?;
    let eig = nalgebra::SymmetricEigen::new(h);
    Ok(eig.eigenvalues.max())
}

/// Element-wise [`ascend`] over `seeds`, in parallel, order preserved.
pub fn ascend_batch(field: &DensityGrid, seeds: &[Vec3], config: &FlowConfig) -> Vec<Result<FlowResult>> {
    seeds.par_iter().map(|s| ascend(field, s, config)).collect()
}

/// One merged destination with the seeds that reached it.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximumCluster {
    /// First destination that founded the cluster.
    pub position: Vec3,
    pub votes: usize,
    /// Indices into the input results, ascending.
    pub seeds: Vec<usize>,
}

/// Greedy merge of converged destinations: each joins the first existing
/// representative within `tol`, otherwise founds a new one. Clusters keep the
/// order in which they were founded.
pub fn dedupe_maxima(results: &[FlowResult], tol: f64) -> Vec<MaximumCluster> {
    let mut clusters: Vec<MaximumCluster> = Vec::new();
    for (idx, r) in results.iter().enumerate().filter(|(_, r)| r.converged) {
        match clusters.iter_mut().find(|c| (c.position - r.destination).norm() <= tol) {
            Some(c) => {
                c.votes += 1;
                c.seeds.push(idx);
            }
            None => clusters.push(MaximumCluster {
                position: r.destination,
                votes: 1,
                seeds: vec![idx],
            }),
        }
    }
    clusters
}

/// Polyline through an ordered sequence of maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxLine {
    pub maxima: Vec<Vec3>,
    pub polyline: Vec<Vec3>,
    /// Segments (by index of their first maximum) that hit the step limit and
    /// were closed with a straight line.
    pub straight_segments: Vec<usize>,
}

/// Connects successive maxima by integrating a blend of the normalised
/// gradient and a weighted pull towards the next maximum.
pub fn build_maxline(field: &DensityGrid, maxima: &[Vec3], config: &FlowConfig) -> Result<MaxLine> {
    let first = maxima
        .first()
        .ok_or_else(|| Error::invalid("MaxLine needs at least one maximum"))?;
    if let Some(p) = maxima.iter().find(|p| !field.spec().contains(p)) {
        return Err(Error::OutOfDomain(*p));
    }
    if maxima.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("consecutive maxima must be distinct"));
    }
    let step = config.step(field);
    let gtol = config.gradient_tol(field);

    let mut polyline = vec![*first];
    let mut straight_segments = Vec::new();
    for (seg, pair) in maxima.windows(2).enumerate() {
        let target = pair[1];
        let mut p = pair[0];
        let mut reached = false;
        for _ in 0..config.max_steps {
            let to = target - p;
            let dist = to.norm();
            if dist <= step {
                reached = true;
                break;
            }
            let g = field.sample_gradient(&p)?;
            let gnorm = g.norm();
            let climb = if gnorm < gtol || gnorm == 0.0 {
                Vec3::zeros()
            } else {
                g / gnorm
            };
            let dir = climb + to * (config.pull_weight / dist);
            p = clamp_to_box(field, &(p + dir * (step / dir.norm())));
            polyline.push(p);
        }
        if !reached {
            straight_segments.push(seg);
            let gap = target - p;
            let n = (gap.norm() / step).ceil().max(1.0) as usize;
            for i in 1..n {
                polyline.push(p + gap * (i as f64 / n as f64));
            }
        }
        polyline.push(target);
    }
    Ok(MaxLine {
        maxima: maxima.to_vec(),
        polyline,
        straight_segments,
    })
}
