//! Compares the rayon-parallel batch kernels against their sequential
//! reference twins. Built with default features both paths are real; with
//! `--no-default-features` the "parallel" entry degrades to the fallback and
//! the two coincide.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use fraclab::manifold::{make_model, Warping};
use fraclab::operator::{
    self, apply_fractional_batch, apply_fractional_batch_seq, BoundaryCondition, QuadratureScheme,
    SpectralOperator,
};

fn smooth_field(op: &SpectralOperator, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
    let mut rnd = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let noise: Vec<f64> = (0..op.model().nodes()).map(|_| rnd()).collect();
    op.heat_apply(20.0 / op.lambda_max(), &noise).unwrap()
}

fn bench_subordination(c: &mut Criterion) {
    let model = Arc::new(make_model(2, Warping::Flat, 20.0, 512).unwrap());
    let op = operator::assemble(model, BoundaryCondition::DirichletOuter).unwrap();
    let scheme = QuadratureScheme::default_for(&op);
    let f = smooth_field(&op, 3);

    let mut group = c.benchmark_group("subordination_apply");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| op.subordination_apply(black_box(1.2), &f, &scheme).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| op.subordination_apply_seq(black_box(1.2), &f, &scheme).unwrap())
    });
    group.finish();
}

fn bench_batch_apply(c: &mut Criterion) {
    let model = Arc::new(make_model(2, Warping::Flat, 20.0, 512).unwrap());
    let op = operator::assemble(model, BoundaryCondition::DirichletOuter).unwrap();
    let fields: Vec<Vec<f64>> = (0..32).map(|k| smooth_field(&op, 10 + k)).collect();

    let mut group = c.benchmark_group("apply_fractional_batch");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| apply_fractional_batch(&op, black_box(1.3), &fields).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| apply_fractional_batch_seq(&op, black_box(1.3), &fields).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_subordination, bench_batch_apply);
criterion_main!(benches);
