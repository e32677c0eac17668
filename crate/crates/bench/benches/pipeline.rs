use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use splatprune::filter::{band_limited_select, response_magnitudes, FilterKind};
use splatprune::graph::{build_graph, GraphConfig};
use splatprune::metrics::{ssim, ImagePair};
use splatprune::raster::{render, RenderConfig};
use splatprune::signal::GraphSignal;
use splatprune::synth::SceneSpec;

const SIZES: [(usize, usize); 2] = [(9_000, 1_000), (90_000, 10_000)];

fn graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph_build");
    group.sample_size(10);
    for (plane, cluster) in SIZES {
        let field = SceneSpec::with_counts(plane, cluster).generate().unwrap().field;
        group.throughput(Throughput::Elements(field.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(field.len()), &field, |b, f| {
            b.iter(|| build_graph(black_box(f), &GraphConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn filter_and_select(c: &mut Criterion) {
    let mut group = c.benchmark_group("filter");
    group.sample_size(20);
    for (plane, cluster) in SIZES {
        let field = SceneSpec::with_counts(plane, cluster).generate().unwrap().field;
        let g = build_graph(&field, &GraphConfig::default()).unwrap();
        let x = GraphSignal::from_points(&field.centers());
        let n = field.len();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("high_pass_response", n), &x, |b, x| {
            b.iter(|| response_magnitudes(&g, black_box(x), FilterKind::HighPass).unwrap())
        });
        let resp = response_magnitudes(&g, &x, FilterKind::HighPass).unwrap();
        group.bench_with_input(BenchmarkId::new("select_k0.1", n), &resp, |b, r| {
            b.iter(|| band_limited_select(black_box(r), 0.1, 0.5).unwrap())
        });
    }
    group.finish();
}

fn rasterize(c: &mut Criterion) {
    let scene = SceneSpec::default().generate().unwrap();
    let cfg = RenderConfig::default();
    let mut group = c.benchmark_group("render");
    group.sample_size(10);
    for side in [128, 256] {
        let cam = scene.spec.held_out_camera(side, side).unwrap();
        group.throughput(Throughput::Elements((side * side) as u64));
        group.bench_function(BenchmarkId::from_parameter(format!("{side}x{side}")), |b| {
            b.iter(|| render(black_box(&scene.field), &cam, &cfg))
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let scene = SceneSpec::default().generate().unwrap();
    let cam = scene.spec.held_out_camera(256, 256).unwrap();
    let cfg = RenderConfig::default();
    let full = render(&scene.field, &cam, &cfg).rgb;
    let resp = response_magnitudes(
        &build_graph(&scene.field, &GraphConfig::default()).unwrap(),
        &GraphSignal::from_points(&scene.field.centers()),
        FilterKind::HighPass,
    )
    .unwrap();
    let kept = band_limited_select(&resp, 0.5, 0.5).unwrap().kept;
    let pruned = render(&scene.field.select(&kept).unwrap(), &cam, &cfg).rgb;
    c.bench_function("ssim_256x256", |b| {
        b.iter_batched(
            || ImagePair::new(&full, &pruned).unwrap(),
            |pair| ssim(black_box(&pair)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, graph, filter_and_select, rasterize, metrics);
criterion_main!(benches);
