//! Fixtures shared by the benchmarks.

use metacast_core::data::{gen_dataset, DatasetKind, DatasetParams};
use metacast_core::{Scene, SmoothingConfig, Stroke, Vec3};

/// Shell dataset on a cubic grid of `n` nodes per axis.
pub fn shell_scene(target: usize, noise: usize, n: usize) -> Scene {
    let cloud = gen_dataset(&DatasetParams::new(DatasetKind::Shell, target, noise, 7)).expect("dataset");
    Scene::build(cloud, [n; 3], &SmoothingConfig::default()).expect("scene")
}

/// Loop around the shell at 45 degrees of polar angle.
pub fn shell_loop(radius: f64) -> Stroke {
    let (r, polar) = (0.875, std::f64::consts::FRAC_PI_4);
    let points: Vec<Vec3> = (0..=48)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / 48.0;
            Vec3::new(
                r * polar.sin() * phi.cos(),
                r * polar.sin() * phi.sin(),
                r * polar.cos(),
            )
        })
        .collect();
    Stroke::from_points(&points, radius).expect("stroke")
}
