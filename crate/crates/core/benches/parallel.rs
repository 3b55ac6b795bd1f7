use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use pshlab::moment::{area_degree, reduced_map, MomentMapField, QuotientPoint};
use pshlab::par::Exec;
use pshlab::report::QUARTIC;
use pshlab::solve::{multistart, MultistartConfig};
use pshlab::PotentialField;
use std::hint::black_box;

fn modes() -> [(&'static str, Exec); 2] {
    [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::default()),
    ]
}

fn bench_multistart(c: &mut Criterion) {
    let f = PotentialField::validated(QUARTIC, 2).unwrap();
    let target = [Complex64::new(2.2, 0.0), Complex64::new(2.2, 0.0)];
    let cfg = MultistartConfig {
        starts: 256,
        seed: 1,
        ..Default::default()
    };
    let mut group = c.benchmark_group("multistart");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| multistart(black_box(&f), &target, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_area_degree(c: &mut Criterion) {
    let f = PotentialField::validated(QUARTIC, 2).unwrap();
    let m = MomentMapField::new(f, 1).unwrap();
    let map = |z: &QuotientPoint| reduced_map(&m, 1.0, z);
    let mut group = c.benchmark_group("area_degree");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| area_degree(&map, 3, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_multistart, bench_area_degree);
criterion_main!(benches);
