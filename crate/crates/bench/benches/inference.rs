use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use weekdbm::dbm::{gibbs_step, GibbsParticle, MEAN_FIELD_MAX_ITERS, MEAN_FIELD_TOLERANCE};
use weekdbm::generation::usage_heatmap;
use weekdbm::{oracle, rng};
use weekdbm_bench::{coupled_model, week_data};

fn mean_field(c: &mut Criterion) {
    let m = coupled_model(1);
    let v = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0];
    c.bench_function("mean_field_7_7_1", |b| {
        b.iter(|| m.mean_field_infer(black_box(&v), MEAN_FIELD_TOLERANCE, MEAN_FIELD_MAX_ITERS))
    });
}

fn gibbs(c: &mut Criterion) {
    let m = coupled_model(2);
    let mut r = rng::stream(0, 0);
    let mut p = GibbsParticle::zeros(&m);
    c.bench_function("gibbs_sweep_7_7_1", |b| {
        b.iter(|| {
            p = gibbs_step(&m, &p, &mut r).unwrap();
        })
    });
}

fn exact(c: &mut Criterion) {
    let m = coupled_model(3);
    let data = week_data(100);
    let mut group = c.benchmark_group("oracle_7_7_1");
    group.sample_size(10);
    group.bench_function("partition_function", |b| b.iter(|| oracle::partition_function(&m)));
    group.bench_function("exact_gradient_100_rows", |b| b.iter(|| oracle::exact_gradient(&m, &data)));
    group.finish();
}

fn heatmap(c: &mut Criterion) {
    let m = coupled_model(4);
    c.bench_function("usage_heatmap_10000", |b| {
        b.iter(|| usage_heatmap(&m, 10_000, &mut rng::stream(0, 0)))
    });
}

criterion_group!(benches, mean_field, gibbs, exact, heatmap);
criterion_main!(benches);
