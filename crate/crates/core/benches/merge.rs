use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use segmerge::{compress, generate_synthetic, merge_segment, prepare_segments, MergeConfig, Parallelism, SyntheticSpec, VideoShape};

fn modes() -> Vec<(&'static str, Parallelism)> {
    let mut modes = vec![("sequential", Parallelism::Sequential)];
    if cfg!(feature = "parallel") {
        modes.push(("threads-4", Parallelism::Threads(4)));
        modes.push(("auto", Parallelism::Auto));
    }
    modes
}

/// Whole-video compression: segments are the unit of parallel work.
fn pipeline(c: &mut Criterion) {
    let shape = VideoShape { frames: 40, patches: 64, dim: 256, layers: 5 };
    let features = generate_synthetic(&SyntheticSpec::events(shape, 1, 8)).unwrap();
    let config = MergeConfig { num_segments: 10, tokens_per_segment: 30, ..Default::default() };
    let mut group = c.benchmark_group("compress");
    group.sample_size(10);
    group.throughput(Throughput::Elements(shape.total_tokens() as u64));
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| compress(&features, &config, mode).unwrap())
        });
    }
    group.finish();
}

/// One large segment: parallelism comes from scoring candidate pairs.
fn single_segment(c: &mut Criterion) {
    let shape = VideoShape { frames: 4, patches: 256, dim: 256, layers: 1 };
    let features = generate_synthetic(&SyntheticSpec::events(shape, 2, 2)).unwrap();
    let config = MergeConfig { num_segments: 1, num_global_layers: 1, ..Default::default() };
    let (_, views) = prepare_segments(&features, &config).unwrap();
    let mut group = c.benchmark_group("merge_segment");
    group.sample_size(10);
    group.throughput(Throughput::Elements(views[0].tokens.len() as u64));
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| mode.install(|| merge_segment(&views[0], &config).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, pipeline, single_segment);
criterion_main!(benches);
