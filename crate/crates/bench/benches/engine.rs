use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use metacast_bench::{shell_loop, shell_scene};
use metacast_core::data::{gen_dataset, DatasetKind, DatasetParams};
use metacast_core::field::estimate_density;
use metacast_core::flow::{ascend_batch, FlowConfig};
use metacast_core::surface::{extract_mesh, label_components};
use metacast_core::techniques::{adjust_threshold, meta_brush, meta_paint, meta_point};
use metacast_core::{GridSpec, ParticleCloud, Scene, SmoothingConfig};

fn density(c: &mut Criterion) {
    let mut cloud = gen_dataset(&DatasetParams::new(DatasetKind::Shell, 5_000, 5_000, 7)).unwrap();
    cloud.compute_smoothing_lengths(&SmoothingConfig::default()).unwrap();
    let spec = GridSpec::covering(&cloud, [64; 3]).unwrap();
    let mut group = c.benchmark_group("density");
    group.sample_size(10);
    group.bench_function("kde 10k particles 64^3", |b| {
        b.iter(|| estimate_density(&cloud, &spec).unwrap())
    });
    group.bench_function("smoothing lengths 10k", |b| {
        b.iter_batched(
            || ParticleCloud::new(cloud.positions().to_vec()),
            |mut c| c.compute_smoothing_lengths(&SmoothingConfig::default()).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

fn ascent_and_surface(c: &mut Criterion) {
    let scene = shell_scene(10_000, 10_000, 64);
    let seeds: Vec<_> = scene.cloud().positions().iter().step_by(20).copied().collect();
    let field = scene.field();
    let threshold = 0.2 * field.peak();
    let components = label_components(field, threshold, None).unwrap();
    let keep: Vec<u32> = components.component_ids().collect();

    let mut group = c.benchmark_group("field");
    group.sample_size(20);
    group.bench_function("ascend 1000 seeds", |b| {
        b.iter(|| ascend_batch(field, &seeds, &FlowConfig::default()))
    });
    group.bench_function("label components 64^3", |b| {
        b.iter(|| label_components(field, threshold, None).unwrap())
    });
    group.bench_function("marching cubes 64^3", |b| {
        b.iter(|| extract_mesh(field, threshold, &components, &keep).unwrap())
    });
    group.finish();
}

fn techniques(c: &mut Criterion) {
    let scene = shell_scene(10_000, 10_000, 64);
    let stroke = shell_loop(0.05);
    let pointer = stroke.polyline()[..1].to_vec();
    scene.particle_destinations();
    let painted = meta_paint(&scene, &stroke).unwrap();

    let mut group = c.benchmark_group("techniques");
    group.sample_size(10);
    group.bench_function("point", |b| b.iter(|| meta_point(&scene, &pointer).unwrap()));
    group.bench_function("paint", |b| b.iter(|| meta_paint(&scene, &stroke).unwrap()));
    group.bench_function("brush warm", |b| b.iter(|| meta_brush(&scene, &stroke).unwrap()));
    group.bench_function("brush cold", |b| {
        b.iter_batched(
            || Scene::new(scene.cloud().clone(), scene.field().clone()).unwrap(),
            |cold| meta_brush(&cold, &stroke).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("adjust threshold", |b| {
        b.iter(|| adjust_threshold(&scene, &painted, 1.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, density, ascent_and_surface, techniques);
criterion_main!(benches);
