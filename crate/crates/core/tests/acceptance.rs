//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so the report is printed even when every check
//! passes. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p metacast-core --test acceptance -- 3 7`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use metacast_core::data::io::{self, SelectionFile};
use metacast_core::data::{confusion_stats, gen_dataset, ConfusionStats, DatasetKind, DatasetParams};
use metacast_core::field::{estimate_density, DensityGrid, GridSpec, ParticleCloud, SmoothingConfig, KERNEL_NORM};
use metacast_core::flow::{ascend_path, FlowConfig};
use metacast_core::surface::{classify_particles, extract_mesh, label_components};
use metacast_core::techniques::{
    adjust_threshold, baseline_brush, meta_brush, meta_paint, meta_point, Anchor, Flag, Scene, Selection, Stroke,
    Technique,
};
use metacast_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(u32, &str, Check); 11] = [
        (1, "kde matches brute force", kde_oracle),
        (2, "gradient consistency and convergence", gradient_check),
        (3, "ascent reaches bump centres monotonically", ascent_check),
        (4, "components split at the saddle, meshes closed", components_and_mesh),
        (5, "classification matches flood-fill oracle", classification_oracle),
        (6, "threshold law and monotone selections", threshold_law),
        (7, "scripted stroke accuracy", scripted_accuracy),
        (8, "brush offset robustness", offset_robustness),
        (9, "F1 and MCC reference values", metrics_vectors),
        (10, "performance budget", performance_budget),
        (11, "pipeline determinism", determinism),
    ];
    let wanted: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();

    let mut failed = 0;
    for (n, name, check) in checks {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name} ({}; {:.1}s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- fixtures

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn stroke_file(name: &str) -> Stroke {
    io::read_stroke_file(&data_dir().join(name))
        .unwrap()
        .to_stroke()
        .unwrap()
}

const DIMS: [usize; 3] = [100, 100, 100];

fn build_scene(params: &DatasetParams) -> Scene {
    let cloud = gen_dataset(params).unwrap();
    Scene::build(cloud, DIMS, &SmoothingConfig::default()).unwrap()
}

fn shell_params() -> DatasetParams {
    DatasetParams::new(DatasetKind::Shell, 20_000, 20_000, 7)
}

fn filament_params() -> DatasetParams {
    DatasetParams::new(DatasetKind::Filament, 5_000, 20_000, 11)
}

fn disk_params() -> DatasetParams {
    DatasetParams::new(DatasetKind::Disk, 20_000, 18_000, 5)
}

fn shell_scene() -> &'static Scene {
    static SCENE: OnceLock<Scene> = OnceLock::new();
    SCENE.get_or_init(|| build_scene(&shell_params()))
}

fn filament_scene() -> &'static Scene {
    static SCENE: OnceLock<Scene> = OnceLock::new();
    SCENE.get_or_init(|| build_scene(&filament_params()))
}

fn disk_scene() -> &'static Scene {
    static SCENE: OnceLock<Scene> = OnceLock::new();
    SCENE.get_or_init(|| build_scene(&disk_params()))
}

fn stats(scene: &Scene, particles: &[usize]) -> ConfusionStats {
    confusion_stats(particles, scene.cloud().labels().unwrap()).unwrap()
}

/// Best F1 over the integer slider values, with the winning `s`.
fn best_f1(scene: &Scene, sel: &Selection) -> (f64, f64) {
    (-4..=4)
        .map(|s| {
            let adj = adjust_threshold(scene, sel, f64::from(s)).unwrap();
            (stats(scene, &adj.particles).f1, f64::from(s))
        })
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |best, cur| if cur.0 > best.0 { cur } else { best },
        )
}

fn gaussian(p: &Vec3, c: &Vec3, sigma: f64) -> f64 {
    (-(p - c).norm_squared() / (2.0 * sigma * sigma)).exp()
}

fn unit_grid(n: usize) -> GridSpec {
    GridSpec::new(Vec3::repeat(-1.0), Vec3::repeat(1.0), [n, n, n]).unwrap()
}

// ---------------------------------------------------------------- 1

fn kde_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Vec3> = (0..200)
        .map(|i| {
            let c = if i % 2 == 0 {
                Vec3::new(-0.3, 0.0, 0.1)
            } else {
                Vec3::new(0.4, 0.2, -0.2)
            };
            c + Vec3::new(
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
            )
        })
        .collect();
    let start = Instant::now();
    let mut cloud = ParticleCloud::new(points);
    cloud.compute_smoothing_lengths(&SmoothingConfig::default()).unwrap();
    let spec = GridSpec::covering(&cloud, [32, 32, 32]).unwrap();
    let field = estimate_density(&cloud, &spec).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    // Direct summation over every particle for every node, no culling.
    let lengths = cloud.adaptive_lengths().unwrap();
    let n = cloud.len() as f64;
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    let [nx, ny, nz] = spec.dims();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let node = spec.node_position(i, j, k);
                let mut sum = 0.0;
                for (p, l) in cloud.positions().iter().zip(lengths) {
                    let x2 = (node - p).component_div(l).norm_squared();
                    if x2 < 1.0 {
                        sum += (1.0 - x2) / (l.x * l.y * l.z);
                    }
                }
                let expected = 15.0 / (8.0 * std::f64::consts::PI * n) * sum;
                let got = field.node_value(i, j, k);
                if expected == 0.0 {
                    if got != 0.0 {
                        worst = f64::INFINITY;
                    }
                } else {
                    nonzero += 1;
                    worst = worst.max((got - expected).abs() / expected);
                }
            }
        }
    }
    assert_eq!(KERNEL_NORM, 15.0 / (8.0 * std::f64::consts::PI));
    Outcome::new(
        worst <= 1e-6 && elapsed < 5.0,
        format!("max rel err {worst:.2e} over {nonzero} non-zero nodes, estimate {elapsed:.2}s"),
    )
}

// ---------------------------------------------------------------- 2

type Analytic = (&'static str, fn(&Vec3) -> f64, fn(&Vec3) -> Vec3);

fn analytic_fields() -> [Analytic; 3] {
    fn gauss(p: &Vec3) -> f64 {
        gaussian(p, &Vec3::new(0.1, -0.2, 0.05), 0.4)
    }
    fn gauss_grad(p: &Vec3) -> Vec3 {
        let c = Vec3::new(0.1, -0.2, 0.05);
        -(p - c) / (0.4 * 0.4) * gauss(p)
    }
    fn sines(p: &Vec3) -> f64 {
        2.0 + (1.3 * p.x).sin() * (0.9 * p.y).cos() * (1.1 * p.z + 0.3).sin()
    }
    fn sines_grad(p: &Vec3) -> Vec3 {
        let (a, b, c) = (1.3 * p.x, 0.9 * p.y, 1.1 * p.z + 0.3);
        Vec3::new(
            1.3 * a.cos() * b.cos() * c.sin(),
            -0.9 * a.sin() * b.sin() * c.sin(),
            1.1 * a.sin() * b.cos() * c.cos(),
        )
    }
    fn cubic(p: &Vec3) -> f64 {
        (0.5 * p.x).exp() + p.y * p.y * p.y + 2.0 + p.x * p.z
    }
    fn cubic_grad(p: &Vec3) -> Vec3 {
        Vec3::new(0.5 * (0.5 * p.x).exp() + p.z, 3.0 * p.y * p.y, p.x)
    }
    [
        ("gaussian", gauss, gauss_grad),
        ("sine product", sines, sines_grad),
        ("exp+cubic", cubic, cubic_grad),
    ]
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<Vec3> = (0..100)
        .map(|_| {
            Vec3::new(
                rng.random_range(-0.8..0.8),
                rng.random_range(-0.8..0.8),
                rng.random_range(-0.8..0.8),
            )
        })
        .collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, f, grad) in analytic_fields() {
        let coarse = DensityGrid::from_fn(unit_grid(33), Vec3::repeat(0.1), f).unwrap();
        let fine = DensityGrid::from_fn(unit_grid(65), Vec3::repeat(0.1), f).unwrap();

        // Central differences of the interpolated density with a half-cell step.
        let h = coarse.spec().cell_size() * 0.5;
        let mut fd_err = 0.0f64;
        for p in &points {
            let mut fd = Vec3::zeros();
            for axis in 0..3 {
                let mut e = Vec3::zeros();
                e[axis] = h[axis];
                fd[axis] = (coarse.sample_density(&(p + e)).unwrap() - coarse.sample_density(&(p - e)).unwrap())
                    / (2.0 * h[axis]);
            }
            let g = coarse.sample_gradient(p).unwrap();
            fd_err = fd_err.max((g - fd).norm() / fd.norm().max(1e-12));
        }

        let max_err = |field: &DensityGrid| {
            points
                .iter()
                .map(|p| (field.sample_gradient(p).unwrap() - grad(p)).norm())
                .fold(0.0f64, f64::max)
        };
        let ratio = max_err(&coarse) / max_err(&fine);
        pass &= fd_err < 1e-6 && ratio >= 3.0;
        notes.push(format!("{name}: fd {fd_err:.1e}, halving x{ratio:.2}"));
    }
    Outcome::new(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 3

const BUMP_X: f64 = 0.5;
const BUMP_SIGMA: f64 = 0.35;
/// Unequal heights so the saddle does not sit on a grid-symmetric plateau.
const BUMP_AMPS: [f64; 2] = [1.0, 0.7];

fn two_bump(p: &Vec3) -> f64 {
    BUMP_AMPS[0] * gaussian(p, &Vec3::new(-BUMP_X, 0.0, 0.0), BUMP_SIGMA)
        + BUMP_AMPS[1] * gaussian(p, &Vec3::new(BUMP_X, 0.0, 0.0), BUMP_SIGMA)
}

/// Maxima of [`two_bump`] on the x axis, by bisection on the analytic
/// derivative inside each bump's half.
fn two_bump_peaks() -> [Vec3; 2] {
    let s2 = BUMP_SIGMA * BUMP_SIGMA;
    let d = |x: f64| {
        -BUMP_AMPS[0] * (x + BUMP_X) / s2 * (-(x + BUMP_X).powi(2) / (2.0 * s2)).exp()
            - BUMP_AMPS[1] * (x - BUMP_X) / s2 * (-(x - BUMP_X).powi(2) / (2.0 * s2)).exp()
    };
    let root = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if d(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    [
        Vec3::new(root(-1.0, -0.1), 0.0, 0.0),
        Vec3::new(root(0.1, 1.0), 0.0, 0.0),
    ]
}

fn ascent_check() -> Outcome {
    let field = DensityGrid::from_fn(unit_grid(64), Vec3::repeat(0.1), two_bump).unwrap();
    let centres = two_bump_peaks();
    let diag = field.spec().cell_diagonal();
    let slack = 1e-9 * field.peak();
    let cfg = FlowConfig::default();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut converged, mut near, mut monotone) = (0, 0, true);
    for _ in 0..500 {
        let seed = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let (result, path) = ascend_path(&field, &seed, &cfg).unwrap();
        let mut prev = field.sample_density(&seed).unwrap();
        for p in &path {
            let d = field.sample_density(p).unwrap();
            monotone &= d >= prev - slack;
            prev = d;
        }
        if result.converged {
            converged += 1;
            if centres.iter().any(|c| (result.destination - c).norm() <= diag) {
                near += 1;
            }
        }
    }
    Outcome::new(
        converged > 0 && near == converged && monotone,
        format!("{near}/{converged} converged destinations within a cell diagonal, monotone={monotone}"),
    )
}

// ---------------------------------------------------------------- 4

fn components_and_mesh() -> Outcome {
    let field = DensityGrid::from_fn(unit_grid(32), Vec3::repeat(0.1), |p| {
        gaussian(p, &Vec3::new(-0.45, 0.0, 0.0), 0.2) + gaussian(p, &Vec3::new(0.45, 0.0, 0.0), 0.2)
    })
    .unwrap();
    let saddle = 2.0 * (-(0.45f64 * 0.45) / (2.0 * 0.04)).exp();
    let peak = 1.0 + (-(0.9f64 * 0.9) / (2.0 * 0.04)).exp();
    let above = saddle + 0.25 * (peak - saddle);
    let below = 0.75 * saddle;
    let n_above = label_components(&field, above, None).unwrap().component_count();
    let n_below = label_components(&field, below, None).unwrap().component_count();

    let sphere = DensityGrid::from_fn(unit_grid(32), Vec3::repeat(0.1), |p| gaussian(p, &Vec3::zeros(), 0.3)).unwrap();
    let mut closed = true;
    let mut worst_dev = 0.0f64;
    let mut triangles = 0;
    for (f, thr) in [(&sphere, 0.5), (&field, above), (&field, below)] {
        let comps = label_components(f, thr, None).unwrap();
        let keep: Vec<u32> = comps.component_ids().collect();
        let mesh = extract_mesh(f, thr, &comps, &keep).unwrap();
        triangles += mesh.triangles.len();
        let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &mesh.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        closed &= !mesh.triangles.is_empty() && edges.values().all(|&c| c == 2);
        for v in &mesh.vertices {
            worst_dev = worst_dev.max((f.sample_density(v).unwrap() - thr).abs() / thr);
        }
    }
    Outcome::new(
        n_above == 2 && n_below == 1 && closed && worst_dev <= 0.02,
        format!(
            "components above/below saddle {n_above}/{n_below}, {triangles} triangles closed={closed}, max vertex deviation {:.3}%",
            worst_dev * 100.0
        ),
    )
}

// ---------------------------------------------------------------- 5

/// Selected particles by an independent flood fill: cells are open when any
/// corner reaches the threshold, the fill starts from the anchor's cell and
/// walks face neighbours; particles count when their interpolated density
/// reaches the threshold and their cell was reached.
fn flood_fill_oracle(field: &DensityGrid, cloud: &ParticleCloud, threshold: f64, anchor: &Vec3) -> Vec<usize> {
    let spec = field.spec();
    let [cx, cy, cz] = spec.cell_dims();
    let open = |i: usize, j: usize, k: usize| {
        (0..8).any(|c| field.node_value(i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2)) >= threshold)
    };
    let locate = |p: &Vec3| {
        let u = (p - spec.box_min()).component_div(&spec.cell_size());
        let idx = |v: f64, n: usize| ((v.ceil() as isize - 1).max(0) as usize).min(n - 1);
        (idx(u.x, cx), idx(u.y, cy), idx(u.z, cz))
    };
    let start = locate(anchor);
    let mut reached = vec![false; cx * cy * cz];
    let id = |(i, j, k): (usize, usize, usize)| i + cx * (j + cy * k);
    if open(start.0, start.1, start.2) {
        let mut queue = VecDeque::from([start]);
        reached[id(start)] = true;
        while let Some((i, j, k)) = queue.pop_front() {
            let mut next = Vec::new();
            if i > 0 {
                next.push((i - 1, j, k));
            }
            if i + 1 < cx {
                next.push((i + 1, j, k));
            }
            if j > 0 {
                next.push((i, j - 1, k));
            }
            if j + 1 < cy {
                next.push((i, j + 1, k));
            }
            if k > 0 {
                next.push((i, j, k - 1));
            }
            if k + 1 < cz {
                next.push((i, j, k + 1));
            }
            for c in next {
                if !reached[id(c)] && open(c.0, c.1, c.2) {
                    reached[id(c)] = true;
                    queue.push_back(c);
                }
            }
        }
    }
    cloud
        .positions()
        .iter()
        .enumerate()
        .filter(|(_, p)| reached[id(locate(p))] && field.sample_density(p).unwrap() >= threshold)
        .map(|(i, _)| i)
        .collect()
}

fn classification_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut sizes = Vec::new();
    for _ in 0..10 {
        let bumps: Vec<(Vec3, f64, f64)> = (0..rng.random_range(2..=4))
            .map(|_| {
                (
                    Vec3::new(
                        rng.random_range(-0.6..0.6),
                        rng.random_range(-0.6..0.6),
                        rng.random_range(-0.6..0.6),
                    ),
                    rng.random_range(0.1..0.25),
                    rng.random_range(0.5..1.5),
                )
            })
            .collect();
        let dims = rng.random_range(12..24);
        let field = DensityGrid::from_fn(unit_grid(dims), Vec3::repeat(0.1), |p| {
            bumps.iter().map(|(c, s, a)| a * gaussian(p, c, *s)).sum()
        })
        .unwrap();
        let threshold = field.peak() * rng.random_range(0.1..0.7);
        let positions: Vec<Vec3> = (0..rng.random_range(300..1000))
            .map(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let cloud = ParticleCloud::new(positions);
        let anchor = bumps[0].0;

        let comps = label_components(&field, threshold, None).unwrap();
        let keep: Vec<u32> = comps.component_containing(&anchor).unwrap().into_iter().collect();
        let got = classify_particles(&cloud, &field, threshold, &comps, &keep);
        let expected = flood_fill_oracle(&field, &cloud, threshold, &anchor);
        if got == expected {
            agree += 1;
        }
        sizes.push(expected.len());
    }
    Outcome::new(
        agree == 10,
        format!("{agree}/10 cases agree, oracle set sizes {sizes:?}"),
    )
}

// ---------------------------------------------------------------- 6

fn shell_selections() -> Vec<Selection> {
    let scene = shell_scene();
    let paint = meta_paint(scene, &stroke_file("shell_paint.json")).unwrap();
    let brush = meta_brush(scene, &stroke_file("shell_paint.json")).unwrap();
    let pointer = Vec3::new(0.0, 0.6, 0.6);
    let point = meta_point(scene, &[pointer]).unwrap();
    vec![point, brush, paint]
}

fn threshold_law() -> Outcome {
    let scene = shell_scene();
    let mut pass = true;
    let mut notes = Vec::new();
    for sel in shell_selections() {
        let mut exact = true;
        let mut monotone = true;
        let mut counts = Vec::new();
        let mut previous: Option<Selection> = None;
        for s in [-4i32, -2, 0, 2, 4] {
            let adj = adjust_threshold(scene, &sel, f64::from(s)).unwrap();
            let expected = if s >= 0 {
                sel.rho0 * f64::from(1u32 << s)
            } else {
                sel.rho0 / f64::from(1u32 << -s)
            };
            exact &= adj.threshold.to_bits() == expected.to_bits();
            counts.push(adj.particles.len());
            let anchored = !adj.kept.is_empty() && !adj.has_flag(Flag::AnchorUnlabeled);
            if let Some(prev) = &previous {
                if anchored {
                    let before: BTreeSet<usize> = prev.particles.iter().copied().collect();
                    monotone &= adj.particles.iter().all(|i| before.contains(i));
                }
            }
            previous = Some(adj);
        }
        pass &= exact && monotone && sel.flags.is_empty();
        notes.push(format!(
            "{}: exact={exact} monotone={monotone} counts {counts:?}",
            sel.technique
        ));
    }
    Outcome::new(pass, notes.join("; "))
}

// ---------------------------------------------------------------- 7

fn scripted_accuracy() -> Outcome {
    let shell = shell_scene();
    let paint = meta_paint(shell, &stroke_file("shell_paint.json")).unwrap();
    let (paint_f1, paint_s) = best_f1(shell, &paint);

    let filament = filament_scene();
    let stroke = stroke_file("filament_brush.json");
    let brush = meta_brush(filament, &stroke).unwrap();
    let (brush_f1, brush_s) = best_f1(filament, &brush);
    let baseline_f1 = stats(filament, &baseline_brush(filament.cloud(), &stroke)).f1;

    let disk = disk_scene();
    let pointer = stroke_file("disk_point.json").polyline();
    let point = meta_point(disk, &pointer).unwrap();
    let (point_f1, point_s) = best_f1(disk, &point);

    Outcome::new(
        paint_f1 >= 0.9 && brush_f1 >= 0.9 && point_f1 >= 0.85 && baseline_f1 < brush_f1,
        format!(
            "paint/shell F1 {paint_f1:.3} (s={paint_s}), brush/filament F1 {brush_f1:.3} (s={brush_s}), \
             baseline/filament F1 {baseline_f1:.3}, point/disk F1 {point_f1:.3} (s={point_s})"
        ),
    )
}

// ---------------------------------------------------------------- 8

fn offset_robustness() -> Outcome {
    let scene = filament_scene();
    let stroke = stroke_file("filament_brush.json");
    let cell = scene.field().spec().cell_size();
    let mut kept = Vec::new();
    let mut cells = Vec::new();
    for k in 0..3 {
        // Sideways in z, perpendicular to the spine's plane.
        let offset = Vec3::new(0.0, 0.0, k as f64 * cell.z);
        let moved: Vec<Vec3> = stroke.polyline().iter().map(|p| p + offset).collect();
        let shifted = Stroke::from_points(&moved, stroke.radius()).unwrap();
        let sel = meta_brush(scene, &shifted).unwrap();
        let comps = label_components(scene.field(), sel.threshold, sel.mask.as_ref()).unwrap();
        let kept_cells: BTreeSet<usize> = comps
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, l)| sel.kept.contains(l))
            .map(|(c, _)| c)
            .collect();
        kept.push(sel.kept.clone());
        cells.push(kept_cells);
    }
    let same_ids = kept.windows(2).all(|w| w[0] == w[1]);
    let overlap =
        |a: &BTreeSet<usize>, b: &BTreeSet<usize>| a.intersection(b).count() as f64 / a.union(b).count() as f64;
    let jaccard = [overlap(&cells[0], &cells[1]), overlap(&cells[0], &cells[2])];
    Outcome::new(
        same_ids && !kept[0].is_empty(),
        format!(
            "kept ids {kept:?}, kept-cell jaccard vs on-spine {:.3}/{:.3}",
            jaccard[0], jaccard[1]
        ),
    )
}

// ---------------------------------------------------------------- 9

fn metrics_vectors() -> Outcome {
    // Counts are fed through index sets so the whole path is exercised.
    fn run(tp: usize, fp: usize, fn_: usize, tn: usize) -> ConfusionStats {
        let mut labels = Vec::new();
        let mut selected = Vec::new();
        for (count, label, chosen) in [
            (tp, true, true),
            (fp, false, true),
            (fn_, true, false),
            (tn, false, false),
        ] {
            for _ in 0..count {
                if chosen {
                    selected.push(labels.len());
                }
                labels.push(label);
            }
        }
        confusion_stats(&selected, &labels).unwrap()
    }
    let perfect = run(40, 0, 0, 60);
    let balanced = run(1, 1, 1, 1);
    let worked = run(5, 1, 2, 92);
    // Precision 5/6, recall 5/7: F1 = 2 * (25/42) / (65/42) = 10/13.
    let f1_expected = 10.0 / 13.0;
    // (5*92 - 1*2) / sqrt(6 * 7 * 93 * 94) = 458 / sqrt(367164).
    let mcc_expected = 458.0 / 367_164f64.sqrt();
    let pass = perfect.f1 == 1.0
        && perfect.mcc == 1.0
        && balanced.mcc == 0.0
        && (worked.f1 - f1_expected).abs() < 1e-12
        && (worked.mcc - mcc_expected).abs() < 1e-12
        && (worked.mcc - 0.756).abs() < 5e-4;
    Outcome::new(
        pass,
        format!(
            "perfect F1/MCC {}/{}, balanced MCC {}, worked F1 {:.4} MCC {:.4}",
            perfect.f1, perfect.mcc, balanced.mcc, worked.f1, worked.mcc
        ),
    )
}

// ---------------------------------------------------------------- 10

fn performance_budget() -> Outcome {
    let cloud = gen_dataset(&DatasetParams::new(DatasetKind::Shell, 38_000, 38_000, 10)).unwrap();
    assert_eq!(cloud.len(), 76_000);

    let start = Instant::now();
    let scene = Scene::build(cloud, DIMS, &SmoothingConfig::default()).unwrap();
    let density = start.elapsed().as_secs_f64();

    // Brush runs last and cold, so its time includes the per-particle
    // ascent that the scene caches; the warm rerun is reported as well.
    let stroke = stroke_file("shell_paint.json");
    let mut slowest: f64 = 0.0;
    let mut timings = Vec::new();
    for (label, technique) in [
        ("point", Technique::Point),
        ("paint", Technique::Paint),
        ("brush cold", Technique::Brush),
        ("brush warm", Technique::Brush),
    ] {
        let start = Instant::now();
        let sel = match technique {
            Technique::Point => meta_point(&scene, &[Vec3::new(0.0, 0.6, 0.6)]).unwrap(),
            Technique::Brush => meta_brush(&scene, &stroke).unwrap(),
            _ => meta_paint(&scene, &stroke).unwrap(),
        };
        let t = start.elapsed().as_secs_f64();
        assert!(!sel.particles.is_empty());
        slowest = slowest.max(t);
        timings.push(format!("{label} {t:.2}s"));
    }

    let comps = label_components(scene.field(), 0.5 * scene.field().peak() / 8.0, None).unwrap();
    let keep: Vec<u32> = comps.component_ids().collect();
    let start = Instant::now();
    let mesh = extract_mesh(scene.field(), comps.threshold(), &comps, &keep).unwrap();
    let mc = start.elapsed().as_secs_f64();

    Outcome::new(
        density <= 60.0 && slowest <= 2.0 && mc <= 0.5,
        format!(
            "density {density:.1}s, {}, marching cubes {mc:.3}s ({} triangles), {} thread(s)",
            timings.join(", "),
            mesh.triangles.len(),
            rayon::current_num_threads()
        ),
    )
}

// ---------------------------------------------------------------- 11

fn pipeline_once(dir: &Path) -> Vec<Vec<u8>> {
    let params = DatasetParams::new(DatasetKind::Strings, 3_000, 3_000, 21);
    let cloud_path = dir.join("cloud.csv");
    let field_path = dir.join("field.mtcf");
    let sel_path = dir.join("sel.json");
    let stats_path = dir.join("stats.json");

    io::write_cloud_file(&cloud_path, &gen_dataset(&params).unwrap()).unwrap();
    let mut cloud = io::read_cloud_file(&cloud_path).unwrap();
    cloud.compute_smoothing_lengths(&SmoothingConfig::default()).unwrap();
    let spec = GridSpec::covering(&cloud, [48, 48, 48]).unwrap();
    io::write_field_file(&field_path, &estimate_density(&cloud, &spec).unwrap()).unwrap();

    let scene = Scene::new(
        io::read_cloud_file(&cloud_path).unwrap(),
        io::read_field_file(&field_path).unwrap(),
    )
    .unwrap();
    let stroke = Stroke::from_points(
        &[Vec3::new(0.3, 0.0, -0.5), Vec3::new(0.3, 0.0, 0.5)],
        scene.default_radius(),
    )
    .unwrap();
    let sel = meta_paint(&scene, &stroke).unwrap();
    let mut record = SelectionFile::from_selection(&sel);
    record.write(&sel_path).unwrap();

    let stored = SelectionFile::read(&sel_path).unwrap();
    let stats = confusion_stats(&stored.particles, scene.cloud().labels().unwrap()).unwrap();
    std::fs::write(&stats_path, serde_json::to_string(&stats).unwrap()).unwrap();
    record.stats = Some(stats);
    record.write(&sel_path).unwrap();
    assert!(matches!(sel.anchor, Anchor::Paint { .. }));

    [cloud_path, field_path, sel_path, stats_path]
        .iter()
        .map(|p| std::fs::read(p).unwrap())
        .collect()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline_once(a.path());
    let second = pipeline_once(b.path());
    let identical = first == second;
    let sizes: Vec<usize> = first.iter().map(Vec::len).collect();
    Outcome::new(
        identical,
        format!("4 files byte-identical={identical}, sizes {sizes:?}"),
    )
}
