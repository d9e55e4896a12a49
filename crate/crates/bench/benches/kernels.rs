use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use divlab::counting::{count_2l_tuples, count_quadruples, CountAlgo};
use divlab::moments::moment_integral;
use divlab::summatory::{divisor_summatory, piltz3_summatory};
use divlab::voronoi::{truncated_voronoi, VoronoiSeries};
use divlab::{main_term_coeffs, sieve_dk, DeltaEvaluator, DivisorTable, SieveMethod};

fn sieve(c: &mut Criterion) {
    let mut g = c.benchmark_group("sieve");
    g.sample_size(10);
    for k in [2u32, 3] {
        g.bench_with_input(BenchmarkId::new("linear", k), &k, |b, &k| {
            b.iter(|| DivisorTable::build(k, 1_000_000, SieveMethod::Linear).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("convolution", k), &k, |b, &k| {
            b.iter(|| DivisorTable::build(k, 1_000_000, SieveMethod::Convolution).unwrap())
        });
    }
    g.finish();
}

fn hyperbola(c: &mut Criterion) {
    let mut g = c.benchmark_group("hyperbola");
    g.bench_function("d2_1e12", |b| {
        b.iter(|| divisor_summatory(black_box(1_000_000_000_000)))
    });
    g.bench_function("d3_1e9", |b| {
        b.iter(|| piltz3_summatory(black_box(1_000_000_000)))
    });
    g.finish();
}

fn moments(c: &mut Criterion) {
    let table = sieve_dk(2, 1_000_000).unwrap();
    let ev = DeltaEvaluator::new(&table, main_term_coeffs(2).unwrap()).unwrap();
    let mut g = c.benchmark_group("moment");
    g.sample_size(10);
    for order in [8usize, 12] {
        g.bench_with_input(BenchmarkId::new("fourth_1e6", order), &order, |b, &o| {
            b.iter(|| moment_integral(&ev, 4, 1.0, 1e6, o).unwrap())
        });
    }
    g.finish();
}

fn count(c: &mut Criterion) {
    let mut g = c.benchmark_group("count");
    g.sample_size(10);
    g.bench_function("quadruples_naive_N64", |b| {
        b.iter(|| count_quadruples(2, 64, 64f64.powi(-2), CountAlgo::Naive).unwrap())
    });
    g.bench_function("quadruples_sorted_N256", |b| {
        b.iter(|| count_quadruples(2, 256, 256f64.powi(-2), CountAlgo::SortedWindow).unwrap())
    });
    g.bench_function("sextuples_N64_spilled", |b| {
        b.iter(|| count_2l_tuples(3, 3, 64, 64f64.powi(-3), 1 << 20).unwrap())
    });
    g.finish();
}

fn voronoi(c: &mut Criterion) {
    let table = sieve_dk(2, 1 << 16).unwrap();
    let mut g = c.benchmark_group("voronoi");
    for n in [256u64, 4096] {
        let series = VoronoiSeries::new(&table, n).unwrap();
        g.bench_with_input(BenchmarkId::new("x1e5", n), &series, |b, s| {
            b.iter(|| truncated_voronoi(s, black_box(100_000.5)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("x1e12_dd_phase", n), &series, |b, s| {
            b.iter(|| truncated_voronoi(s, black_box(1e12 + 0.5)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sieve, hyperbola, moments, count, voronoi);
criterion_main!(benches);
