use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sdds_bench::{configurations, ERLANG_MODELS};
use sdds_core::{build_generator, reference_steady_state, steady_state, transient, Distribution, SddsParams};

fn generator_and_steady_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("steady_state");
    let params = SddsParams::case2();
    for kind in ERLANG_MODELS {
        for k in [10usize, 100, 400] {
            group.bench_with_input(BenchmarkId::new(kind.name(), k), &k, |b, &k| {
                b.iter(|| {
                    let gen = build_generator(&params, kind, k).unwrap();
                    black_box(steady_state(&gen).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn transient_trajectory(c: &mut Criterion) {
    let params = SddsParams::case2();
    let gen = build_generator(&params, sdds_core::ModelKind::ErlangSimplified, 10).unwrap();
    let pi0 = Distribution::point_mass(gen.dim(), 2);
    let times: Vec<f64> = (0..=600).map(f64::from).collect();
    c.bench_function("transient/case2-simplified-k10-600s", |b| {
        b.iter(|| black_box(transient(&gen, &pi0, &times).unwrap()))
    });
}

fn reference(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference");
    for (name, params) in configurations() {
        group.bench_function(name, |b| b.iter(|| black_box(reference_steady_state(&params).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, generator_and_steady_state, transient_trajectory, reference);
criterion_main!(benches);
