use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ddm_bench::Fixture;
use ddm_core::geometry::{fast_march, initialize_band, level_set};
use ddm_core::DiscreteField;
use std::hint::black_box;

const SIZES: [usize; 3] = [128, 256, 512];

fn stencil(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencil");
    for n in SIZES {
        let f = Fixture::new("ellipse-2d", n);
        let u = f.rhs.values().to_vec();
        let mut out = vec![0.0; u.len()];
        group.throughput(Throughput::Elements(u.len() as u64));
        group.bench_with_input(BenchmarkId::new("apply", n), &n, |b, _| {
            b.iter(|| f.op.apply_into(black_box(&u), &mut out))
        });
        group.bench_with_input(BenchmarkId::new("residual", n), &n, |b, _| {
            b.iter(|| f.op.residual_into(black_box(&u), f.rhs.values(), &mut out))
        });
        let mut v = vec![0.0; u.len()];
        group.bench_with_input(BenchmarkId::new("red_black_sweep", n), &n, |b, _| {
            b.iter(|| f.op.gauss_seidel_sweep(black_box(&mut v), f.rhs.values()))
        });
    }
    group.finish();
}

fn multigrid(c: &mut Criterion) {
    let mut group = c.benchmark_group("multigrid");
    group.sample_size(20);
    for n in SIZES {
        let f = Fixture::new("ellipse-2d", n);
        let mut mg = f.hierarchy();
        let mut u = vec![0.0; f.grid.len()];
        group.throughput(Throughput::Elements(f.grid.len() as u64));
        group.bench_with_input(BenchmarkId::new("v_cycle", n), &n, |b, _| {
            b.iter(|| mg.v_cycle(black_box(&mut u), f.rhs.values()))
        });
    }
    group.finish();
}

fn marching(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_march");
    group.sample_size(20);
    for n in SIZES {
        let f = Fixture::new("starfish-2d", n);
        let geom = &f.case.spec().geometry;
        let phi = DiscreteField::from_fn(f.grid, |p| level_set(p, geom));
        let band = initialize_band(&phi).expect("band");
        group.throughput(Throughput::Elements(f.grid.len() as u64));
        group.bench_with_input(BenchmarkId::new("starfish", n), &n, |b, _| {
            b.iter(|| fast_march(black_box(&band)).expect("march"))
        });
    }
    group.finish();
}

criterion_group!(benches, stencil, multigrid, marching);
criterion_main!(benches);
