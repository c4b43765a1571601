use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::field::GridSpec;

fn blob(rng: &mut ChaCha8Rng, center: Vec3, sigma: f64, n: usize) -> Vec<Vec3> {
    let normal = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|_| center + Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng)))
        .collect()
}

/// Two well separated blobs; the first `n` particles belong to the blob at
/// x = -1.
fn two_blobs(n: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pts = blob(&mut rng, Vec3::new(-1.0, 0.0, 0.0), 0.15, n);
    pts.extend(blob(&mut rng, Vec3::new(1.0, 0.0, 0.0), 0.15, n));
    Scene::build(ParticleCloud::new(pts), [40, 24, 24], &SmoothingConfig::default()).unwrap()
}

fn fraction_below(ids: &[usize], n: usize) -> f64 {
    ids.iter().filter(|&&i| i < n).count() as f64 / ids.len().max(1) as f64
}

#[test]
fn technique_round_trips_through_strings() {
    for t in [
        Technique::Point,
        Technique::Brush,
        Technique::Paint,
        Technique::Baseline,
    ] {
        assert_eq!(t.as_str().parse::<Technique>().unwrap(), t);
        assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
    }
    assert!("lasso".parse::<Technique>().is_err());
}

#[test]
fn near_polyline_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = blob(&mut rng, Vec3::zeros(), 1.0, 2000);
    let line = vec![
        Vec3::new(-2.0, -1.0, 0.0),
        Vec3::new(0.5, 0.3, 0.2),
        Vec3::new(2.0, 1.5, -0.5),
    ];
    let ids: Vec<usize> = (0..pts.len()).collect();
    for radius in [0.05, 0.3, 1.0] {
        let fast = near_polyline(&ids, &pts, &line, radius);
        let slow: Vec<usize> = ids
            .iter()
            .copied()
            .filter(|&i| point_polyline_distance(&pts[i], &line) <= radius)
            .collect();
        assert_eq!(fast, slow, "radius {radius}");
    }
    let single = near_polyline(&ids, &pts, &line[..1], 0.5);
    assert!(single.iter().all(|&i| (pts[i] - line[0]).norm() <= 0.5));
}

#[test]
fn combine_is_sorted_set_algebra() {
    let a = [5, 1, 3, 3];
    let b = [3, 4];
    assert_eq!(combine(&a, &b, CombineMode::Union), vec![1, 3, 4, 5]);
    assert_eq!(combine(&a, &b, CombineMode::Subtract), vec![1, 5]);
    assert_eq!(combine(&[], &b, CombineMode::Subtract), Vec::<usize>::new());
    assert_eq!(CombineMode::default(), CombineMode::Union);
}

#[test]
fn baseline_selects_the_swept_sphere() {
    let scene = two_blobs(300);
    let stroke = Stroke::from_points(&[Vec3::new(-1.2, 0.0, 0.0), Vec3::new(-0.8, 0.0, 0.0)], 0.1).unwrap();
    let sel = baseline_brush(scene.cloud(), &stroke);
    assert!(!sel.is_empty());
    let line = stroke.polyline();
    for (i, p) in scene.cloud().positions().iter().enumerate() {
        assert_eq!(sel.binary_search(&i).is_ok(), point_polyline_distance(p, &line) <= 0.1);
    }
}

#[test]
fn point_selects_the_blob_under_the_pointer() {
    let n = 400;
    let scene = two_blobs(n);
    let pointer = Vec3::new(-1.1, 0.05, 0.0);
    let mut seen = 0;
    let sel = meta_point_streaming(&scene, &[Vec3::new(50.0, 0.0, 0.0), pointer], &mut |_| seen += 1).unwrap();
    assert_eq!(seen, 1);
    assert_eq!(sel.technique, Technique::Point);
    assert_eq!(sel.kept.len(), 1);
    assert!(sel.flags.is_empty());
    assert!((sel.threshold - scene.field().sample_density(&pointer).unwrap()).abs() < 1e-12);
    assert!(!sel.particles.is_empty());
    assert_eq!(fraction_below(&sel.particles, n), 1.0);
    assert!(!sel.mesh.is_empty());
    match sel.anchor {
        Anchor::Point { maximum, .. } => assert!((maximum - Vec3::new(-1.0, 0.0, 0.0)).norm() < 0.2),
        ref other => panic!("unexpected anchor {other:?}"),
    }
}

#[test]
fn point_outside_the_box_is_rejected() {
    let scene = two_blobs(100);
    let err = meta_point(&scene, &[Vec3::new(9.0, 9.0, 9.0)]).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn point_on_empty_space_reports_no_structure() {
    let spec = GridSpec::new(Vec3::repeat(-1.0), Vec3::repeat(1.0), [9, 9, 9]).unwrap();
    let field = DensityGrid::from_fn(spec, Vec3::repeat(0.2), |p| (0.5 - p.norm()).max(0.0)).unwrap();
    let cloud = ParticleCloud::new(vec![
        Vec3::new(0.1, 0.0, 0.0),
        Vec3::new(-0.1, 0.0, 0.0),
        Vec3::new(0.0, 0.2, 0.1),
    ]);
    let scene = Scene::new(cloud, field).unwrap();
    let sel = meta_point(&scene, &[Vec3::new(0.9, 0.9, 0.9)]).unwrap();
    assert!(sel.has_flag(Flag::NoStructure));
    assert!(sel.is_empty());
}

#[test]
fn brush_follows_the_stroke_to_one_blob() {
    let n = 400;
    let scene = two_blobs(n);
    let stroke = Stroke::from_points(
        &[Vec3::new(-1.3, 0.1, 0.0), Vec3::new(-0.9, -0.1, 0.0)],
        scene.default_radius(),
    )
    .unwrap();
    let sel = meta_brush(&scene, &stroke).unwrap();
    assert!(sel.flags.is_empty(), "{:?}", sel.flags);
    assert!(sel.mask.as_ref().is_some_and(|m| m.count() > 0));
    assert!(sel.rho0 > 0.0);
    assert!(sel.particles.len() > n / 4);
    assert!(fraction_below(&sel.particles, n) > 0.99);
    let Anchor::Brush { maxline, candidates } = &sel.anchor else {
        panic!()
    };
    assert!(!maxline.maxima.is_empty());
    assert!(!candidates.is_empty());

    // Recomputing the initial volume from the candidates reproduces the mask.
    let volume = initial_volume(&scene, candidates).unwrap();
    assert_eq!(Some(&volume.mask), sel.mask.as_ref());
    assert_eq!(volume.rho0, sel.rho0);
}

#[test]
fn brush_spanning_both_blobs_keeps_both() {
    let n = 300;
    let scene = two_blobs(n);
    let stroke = Stroke::from_points(
        &[Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
        scene.default_radius(),
    )
    .unwrap();
    let sel = meta_brush(&scene, &stroke).unwrap();
    let frac = fraction_below(&sel.particles, n);
    assert!(frac > 0.2 && frac < 0.8, "fraction {frac}");
}

#[test]
fn brush_outside_the_box_is_rejected() {
    let scene = two_blobs(100);
    let stroke = Stroke::from_points(&[Vec3::new(9.0, 9.0, 9.0), Vec3::new(9.5, 9.0, 9.0)], 0.1).unwrap();
    assert!(meta_brush(&scene, &stroke).is_err());
}

#[test]
fn paint_keeps_the_most_voted_blob() {
    let n = 400;
    let scene = two_blobs(n);
    // Most of the stroke sits over the left blob.
    let stroke = Stroke::from_points(
        &[
            Vec3::new(-1.3, 0.0, 0.0),
            Vec3::new(-0.7, 0.0, 0.0),
            Vec3::new(0.8, 0.0, 0.0),
        ],
        scene.default_radius(),
    )
    .unwrap();
    let sel = meta_paint(&scene, &stroke).unwrap();
    assert_eq!(sel.kept.len(), 1);
    assert!(!sel.particles.is_empty());
    assert_eq!(fraction_below(&sel.particles, n), 1.0);
    let Anchor::Paint { maximum, votes } = sel.anchor else {
        panic!()
    };
    assert!(maximum.x < 0.0);
    assert!(votes > 0);
}

#[test]
fn adjust_threshold_nests_and_clamps() {
    let scene = two_blobs(400);
    let sel = meta_point(&scene, &[Vec3::new(-1.2, 0.0, 0.0)]).unwrap();
    let mut previous: Option<Vec<usize>> = None;
    for s in [-4.0, -2.0, 0.0, 1.0, 2.0] {
        let adj = adjust_threshold(&scene, &sel, s).unwrap();
        assert_eq!(adj.rho0, sel.rho0);
        assert!((adj.threshold - sel.rho0 * 2f64.powf(s)).abs() <= 1e-12 * adj.threshold);
        if let Some(prev) = &previous {
            assert!(adj.particles.iter().all(|i| prev.binary_search(i).is_ok()));
        }
        previous = Some(adj.particles);
    }
    let same = adjust_threshold(&scene, &sel, 0.0).unwrap();
    assert_eq!(same.particles, sel.particles);

    let clamped = adjust_threshold(&scene, &sel, 9.0).unwrap();
    assert_eq!(clamped.s, SLIDER_MAX);
    assert!(clamped.has_flag(Flag::SliderClamped));
    assert!(adjust_threshold(&scene, &sel, f64::NAN).is_err());
}

#[test]
fn particle_destinations_are_cached() {
    let scene = two_blobs(50);
    let a = scene.particle_destinations().as_ptr();
    let b = scene.particle_destinations().as_ptr();
    assert_eq!(a, b);
    assert_eq!(scene.particle_destinations().len(), 100);
}
