use std::hint::black_box;

use binsparx::analysis::sweep_deviation;
use binsparx::bnn::BinaryTensor;
use binsparx::par::Parallelism;
use binsparx::pipeline::{vmm_batch, Engine, EngineConfig};
use binsparx::rng;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [Parallelism; 2] = [Parallelism::Sequential, Parallelism::Parallel];

fn deviation_sweep(c: &mut Criterion) {
    let engine = Engine::new(EngineConfig::new(64, 64)).unwrap();
    let xs = [4, 8, 16, 32];
    let mut g = c.benchmark_group("sweep_deviation");
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &mode,
            |b, &mode| b.iter(|| black_box(sweep_deviation(&xs, 100, &engine, mode).unwrap())),
        );
    }
    g.finish();
}

fn batch_vmm(c: &mut Criterion) {
    let engine = Engine::new(EngineConfig::new(64, 64)).unwrap();
    let mut r = rng::root(1);
    let w = BinaryTensor::random(vec![256, 64], &mut r);
    let pm = engine.program(&w).unwrap();
    let rows: Vec<Vec<i8>> = (0..32)
        .map(|_| BinaryTensor::random(vec![256], &mut r).values().to_vec())
        .collect();
    let mut g = c.benchmark_group("vmm_batch");
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &mode,
            |b, &mode| b.iter(|| black_box(vmm_batch(&engine, &pm, &rows, mode).unwrap())),
        );
    }
    g.finish();
}

criterion_group!(benches, deviation_sweep, batch_vmm);
criterion_main!(benches);
