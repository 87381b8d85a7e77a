//! Hot kernels: theta products, R-matrix construction, weight functions and
//! the flagship solution vector.

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64 as C64;
use qkzlab_bench::{sample_points, Flagship};
use qkzlab_core::qspecial::theta;
use qkzlab_core::rmatrix::{closed_form, solve, ybe_residual};
use qkzlab_core::solution::{psi, qkz_residual};
use qkzlab_core::weight::{weight_w, Mode, WeightIndex};
use qkzlab_core::Convention;
use std::hint::black_box;

fn special(c: &mut Criterion) {
    let f = Flagship::new().unwrap();
    let z = sample_points(1)[0];
    c.bench_function("theta", |b| b.iter(|| theta(black_box(z), f.params.p, &f.trunc).unwrap()));
}

fn rmatrix(c: &mut Criterion) {
    let (q, z) = (C64::new(0.6, 0.0), sample_points(1)[0]);
    let mut g = c.benchmark_group("rmatrix");
    for (l1, l2) in [(1, 1), (1, 3), (2, 2)] {
        g.bench_function(format!("solve {l1}x{l2}"), |b| b.iter(|| solve(l1, l2, black_box(z), q).unwrap()));
    }
    g.bench_function("closed form 1x3", |b| b.iter(|| closed_form(1, 3, black_box(z), q).unwrap()));
    let zs = sample_points(3);
    g.bench_function("yang-baxter 2,2,2", |b| b.iter(|| ybe_residual([2, 2, 2], [zs[0], zs[1], zs[2]], q).unwrap()));
    g.finish();
}

fn weight(c: &mut Criterion) {
    let q = C64::new(0.6, 0.0);
    let spins = [2, 1, 2];
    let idx = WeightIndex::new(&[2, 1, 1], &spins, Mode::Weight).unwrap();
    let t = sample_points(idx.n_vars());
    let z = sample_points(spins.len());
    c.bench_function("weight N=4", |b| b.iter(|| weight_w(&idx, black_box(&t), &z, q).unwrap()));
}

fn solution(c: &mut Criterion) {
    let f = Flagship::new().unwrap();
    let mut g = c.benchmark_group("flagship");
    for points in [128, 512] {
        let s = f.settings(points).unwrap();
        g.bench_function(format!("psi Q={points}"), |b| b.iter(|| psi(&f.params, black_box(&f.z), &f.w, &s, &f.trunc).unwrap()));
    }
    let s = f.settings(512).unwrap();
    g.bench_function("qkz residual Q=512", |b| {
        b.iter(|| qkz_residual(1, &f.params, black_box(&f.z), &f.w, &s, Convention::Consistent, &f.trunc).unwrap())
    });
    g.finish();
}

criterion_group!(benches, special, rmatrix, weight, solution);
criterion_main!(benches);
