use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sidework::linalg::SubsystemDims;
use sidework::protocols::{build_erasure_protocol, ProtocolParams};
use sidework::smoothing::{
    classical_oracle, i_max_up_smoothed, i_min_down_smoothed, OracleKind, SmoothParams,
};
use sidework_bench::{random_hermitian, random_thermo_2x2};
use std::hint::black_box;

fn bench_eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_hermitian");
    for dim in [16usize, 64] {
        let m = random_hermitian(dim, 42);
        group.bench_function(format!("dim{dim}"), |b| {
            b.iter_batched(|| m.clone(), |m| black_box(m.eig().unwrap()), BatchSize::SmallInput)
        });
    }
    group.finish();
}

fn bench_smoothed(c: &mut Criterion) {
    let ts = random_thermo_2x2(7);
    let params = SmoothParams::default();
    c.bench_function("i_min_down_smoothed_2x2", |b| {
        b.iter(|| black_box(i_min_down_smoothed(&ts, 0.1, &params).unwrap()))
    });
    let mut group = c.benchmark_group("i_max_up_smoothed_2x2");
    group.sample_size(10);
    group.bench_function("bisect_1e-4", |b| {
        b.iter(|| black_box(i_max_up_smoothed(&ts, 0.1, &params).unwrap()))
    });
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    // ten-copy product of diag(0.9, 0.1) against the uniform reference
    let n = 10u32;
    let dim = 2usize.pow(n);
    let mut r = vec![0.0f64; dim];
    for (i, item) in r.iter_mut().enumerate() {
        let ones = (i as u32).count_ones();
        *item = 0.9f64.powi((n - ones) as i32) * 0.1f64.powi(ones as i32);
    }
    let g = vec![1.0 / dim as f64; dim];
    c.bench_function("classical_oracle_imax_up_n10", |b| {
        b.iter(|| {
            black_box(
                classical_oracle(OracleKind::IMaxUpSmoothed, &r, &g, (dim, 1), 0.2).unwrap(),
            )
        })
    });
}

fn bench_protocol(c: &mut Criterion) {
    let ts = random_thermo_2x2(11);
    let params = ProtocolParams::default();
    let mut group = c.benchmark_group("build_erasure_protocol_2x2");
    group.sample_size(10);
    group.bench_function("eps_0.1", |b| {
        b.iter(|| black_box(build_erasure_protocol(&ts, 0.1, &params).unwrap()))
    });
    group.finish();
}

fn bench_tensor_ptrace(c: &mut Criterion) {
    let a = random_hermitian(16, 3);
    let b_op = random_hermitian(16, 4);
    c.bench_function("tensor_16x16", |bch| {
        bch.iter(|| black_box(a.tensor(&b_op)))
    });
    let joint = a.tensor(&b_op);
    let dims = SubsystemDims::new(&[16, 16]).unwrap();
    c.bench_function("partial_trace_256_to_16", |bch| {
        bch.iter(|| black_box(joint.partial_trace(&dims, &[0]).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_eig,
    bench_smoothed,
    bench_oracle,
    bench_protocol,
    bench_tensor_ptrace
);
criterion_main!(benches);
