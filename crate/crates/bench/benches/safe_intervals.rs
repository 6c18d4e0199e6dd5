use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sirrt_bench::{configurations, instance};
use sirrt_core::{build_timed_index, compute_safe_intervals, forward_kinematics, naive_safe_intervals, CollisionWorld};

fn queries(c: &mut Criterion) {
    let mut group = c.benchmark_group("safe_intervals");
    group.sample_size(20);
    for k in [20, 120, 300] {
        let inst = instance(1, k);
        let world = CollisionWorld::new(&inst.scene);
        let qs = configurations(&inst, 32, 2);
        group.bench_with_input(BenchmarkId::new("indexed", k), &qs, |b, qs| {
            b.iter(|| qs.iter().map(|q| world.safe_intervals(q).len()).sum::<usize>())
        });
        group.bench_with_input(BenchmarkId::new("naive", k), &qs, |b, qs| {
            b.iter(|| qs.iter().map(|q| naive_safe_intervals(&inst.scene, q).len()).sum::<usize>())
        });
        group.bench_with_input(BenchmarkId::new("index_build", k), &inst, |b, inst| {
            b.iter(|| build_timed_index(&inst.scene).len())
        });
        let index = build_timed_index(&inst.scene);
        group.bench_with_input(BenchmarkId::new("compute", k), &qs, |b, qs| {
            b.iter(|| qs.iter().map(|q| compute_safe_intervals(&index, &inst.scene, q).len()).sum::<usize>())
        });
    }
    group.finish();
}

fn kinematics(c: &mut Criterion) {
    let inst = instance(1, 0);
    let qs = configurations(&inst, 256, 3);
    c.bench_function("forward_kinematics", |b| {
        b.iter(|| qs.iter().map(|q| forward_kinematics(&inst.scene.robot, q).unwrap().len()).sum::<usize>())
    });
}

criterion_group!(benches, queries, kinematics);
criterion_main!(benches);
