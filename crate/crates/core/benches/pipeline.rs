use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use forceforge::encode::{encode_local, BlobParams};
use forceforge::pipeline::realize;
use forceforge::scene::{dataset_plan, AblationConfig, PlanEntry, Scenario};
use forceforge::{LocalForcePrompt, VideoDims};

fn plan() -> Vec<PlanEntry> {
    let dims = VideoDims::default().scaled(0.25).unwrap();
    dataset_plan(Scenario::Ball, 8, 3, &AblationConfig::default(), &dims).unwrap()
}

fn sequential_realize(entries: &[PlanEntry]) -> usize {
    entries.iter().map(|e| realize(e).unwrap().frames.len()).sum()
}

fn parallel_realize(entries: &[PlanEntry]) -> usize {
    forceforge::par::map_slice(entries, |e| realize(e).unwrap().frames.len()).into_iter().sum()
}

fn records(c: &mut Criterion) {
    let entries = plan();
    let mut group = c.benchmark_group("realize_8_ball_records");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| sequential_realize(&entries)));
    #[cfg(feature = "parallel")]
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        group.bench_function(BenchmarkId::new("rayon", threads), |b| b.iter(|| pool.install(|| parallel_realize(&entries))));
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function(BenchmarkId::new("fallback", 1), |b| b.iter(|| parallel_realize(&entries)));
    group.finish();
}

fn local_encoding(c: &mut Criterion) {
    let dims = VideoDims::default();
    let blob = BlobParams::default();
    let prompt = LocalForcePrompt::new(200.0, 240.0, 0.7, 30.0).unwrap();
    let mut group = c.benchmark_group("encode_local_full_res");
    group.sample_size(10);
    #[cfg(feature = "parallel")]
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        group.bench_function(BenchmarkId::new("rayon", threads), |b| {
            b.iter(|| pool.install(|| encode_local(&prompt, &dims, &blob).unwrap()))
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function(BenchmarkId::new("fallback", 1), |b| b.iter(|| encode_local(&prompt, &dims, &blob).unwrap()));
    group.finish();
}

criterion_group!(benches, records, local_encoding);
criterion_main!(benches);
