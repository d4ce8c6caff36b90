use std::hint::black_box;

use alphamod::symbols::{Bessel, RandomTrig};
use alphamod::{quantize_apply, quantize_direct, PieceBuilder};
use alphamod_bench::{cover, grid, signal};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn quantization(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantize");
    for n in [128, 512] {
        let g = grid(n);
        let f = signal(n, 4);
        let sigma = RandomTrig::seeded(1, 6, g.dxi(), 20, 0.5, 5).unwrap();
        group.bench_with_input(BenchmarkId::new("direct", n), &f, |b, f| {
            b.iter(|| quantize_direct(&sigma, black_box(f)).unwrap())
        });
        let lift = Bessel::new(1, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::new("multiplier", n), &f, |b, f| {
            b.iter(|| quantize_apply(&lift, black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn pieces(c: &mut Criterion) {
    let n = 512;
    let g = grid(n);
    let cv = cover(0.5, n);
    let sigma = RandomTrig::seeded(1, 6, g.dxi(), 20, 0.5, 6).unwrap();
    let builder = PieceBuilder::new(&sigma, &cv, g).unwrap();
    let f = signal(n, 7);
    c.bench_function("piece_columns_m8", |b| b.iter(|| builder.columns(black_box(8), false)));
    let cols = builder.columns(8, false);
    let piece = builder.piece(&cols, 1);
    c.bench_function("piece_apply_m8", |b| b.iter(|| piece.apply(black_box(&f)).unwrap()));
}

criterion_group!(benches, quantization, pieces);
criterion_main!(benches);
