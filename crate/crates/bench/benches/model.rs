use std::hint::black_box;

use blackmodel_core::decomp::{
    batch_throughput, chunk_profile, fit_chunk_model, sweep_concurrencies,
};
use blackmodel_core::report::{reproduce, TABLE_IDS};
use blackmodel_core::workloads::{dgemm_fp64, llm_latency, summary};
use blackmodel_core::{builtin_spec, load_machine_file, machine::builtin_text};
use criterion::{criterion_group, criterion_main, Criterion};

fn machine_files(c: &mut Criterion) {
    let text = builtin_text("B200").unwrap();
    c.bench_function("load_b200", |b| {
        b.iter(|| load_machine_file(black_box(text)))
    });
}

fn workloads(c: &mut Criterion) {
    let b200 = builtin_spec("B200").unwrap();
    let h200 = builtin_spec("H200").unwrap();
    c.bench_function("dgemm_fp64", |b| {
        b.iter(|| dgemm_fp64(&b200, black_box(20000), Some(&h200)))
    });
    c.bench_function("llm_latency", |b| {
        b.iter(|| llm_latency(&b200, black_box(12), 2048, Some(&h200)))
    });
    c.bench_function("decomp_batch", |b| {
        b.iter(|| batch_throughput(&b200, 65536, black_box(96)))
    });
    c.bench_function("summary", |b| b.iter(|| summary(&b200, &h200)));
}

fn fitting(c: &mut Criterion) {
    let b200 = builtin_spec("B200").unwrap();
    let truth = chunk_profile(&b200, 131072).unwrap();
    let pts: Vec<(u32, f64)> = sweep_concurrencies()
        .map(|x| (x, truth.aggregate_gbps(x as f64)))
        .collect();
    c.bench_function("fit_chunk_model", |b| {
        b.iter(|| fit_chunk_model(black_box(&pts), 131072))
    });
}

fn golden(c: &mut Criterion) {
    let b200 = builtin_spec("B200").unwrap();
    let h200 = builtin_spec("H200").unwrap();
    c.bench_function("reproduce_all", |b| {
        b.iter(|| {
            TABLE_IDS
                .iter()
                .filter(|id| reproduce(id, &b200, &h200).is_ok_and(|r| r.pass))
                .count()
        })
    });
}

criterion_group!(benches, machine_files, workloads, fitting, golden);
criterion_main!(benches);
