//! Hot-path benchmarks: design construction, multi-bit extraction, honest
//! GHZ rounds, one-shot expansion, and a full session round trip.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use seedless_core::bitcore::BitString;
use seedless_core::expansion::{one_shot_expand, ExpansionConfig};
use seedless_core::ghz::{Device, GhzInput};
use seedless_core::qkd::{run_session, EveModel, SessionConfig};
use seedless_core::simrng::derive_rng;
use seedless_core::trevisan::{compute_params, extract, WeakDesign};

fn bench_weak_design(c: &mut Criterion) {
    let mut group = c.benchmark_group("weak_design_build");
    for &m in &[64usize, 256, 1024] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| WeakDesign::build(black_box(4), black_box(m)).unwrap());
        });
    }
    group.finish();
}

fn bench_extract(c: &mut Criterion) {
    let mut rng = derive_rng(1, "bench/extract");
    let mut group = c.benchmark_group("extract");
    for &(n, m, t) in &[
        (1024usize, 128usize, 2usize),
        (4096, 512, 4),
        (16384, 1024, 6),
    ] {
        let design = WeakDesign::build(t, m).unwrap();
        let params = compute_params(n as u64, (n / 2) as u64, m as u64).unwrap();
        let x = BitString::random(&mut rng, n);
        let seed = BitString::random(&mut rng, design.d());
        group.throughput(Throughput::Elements(m as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_m{m}_t{t}")),
            &(),
            |b, _| {
                b.iter(|| extract(black_box(&x), black_box(&seed), &params, &design).unwrap());
            },
        );
    }
    group.finish();
}

fn bench_ghz_round(c: &mut Criterion) {
    c.bench_function("ghz_honest_round", |b| {
        let mut device = Device::honest(derive_rng(2, "bench/ghz"));
        b.iter(|| device.query(black_box(GhzInput::GENERATING)).unwrap());
    });
}

fn bench_one_shot(c: &mut Criterion) {
    let mut rng = derive_rng(3, "bench/expansion");
    let seed = BitString::random(&mut rng, 65_536);
    let config = ExpansionConfig {
        rounds: 1_000,
        eta: 0.2,
        q: 1.0 / 64.0,
    };
    let mut group = c.benchmark_group("one_shot_expand");
    group.throughput(Throughput::Elements(config.rounds));
    group.bench_function("honest_1000_rounds", |b| {
        b.iter(|| {
            let mut device = Device::honest(derive_rng(4, "bench/expansion-device"));
            one_shot_expand(black_box(&seed), &mut device, &config).unwrap()
        });
    });
    group.finish();
}

fn bench_session(c: &mut Criterion) {
    let mut rng = derive_rng(5, "bench/session-z");
    let z = BitString::random(&mut rng, 16_384);
    let config = SessionConfig {
        rounds: 1_000,
        ..SessionConfig::default()
    };
    let mut group = c.benchmark_group("qkd_session");
    group.throughput(Throughput::Elements(config.rounds));
    group.bench_function("honest_1000_rounds", |b| {
        b.iter(|| {
            let mut sim = derive_rng(6, "bench/session");
            run_session(black_box(&z), &config, &EveModel::Passive, &mut sim).unwrap()
        });
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_weak_design,
    bench_extract,
    bench_ghz_round,
    bench_one_shot,
    bench_session
);
criterion_main!(benches);
