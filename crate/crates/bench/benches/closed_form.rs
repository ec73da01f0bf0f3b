use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rislab::experiments::build_setup;
use rislab::power::{grid_search_xi, optimal_xi, SplitCoefficients};
use rislab::rates::{secrecy_rate, SplitTerms};
use rislab::ChannelStatistics;
use rislab_bench::fixture;
use std::hint::black_box;

fn statistics(c: &mut Criterion) {
    let mut g = c.benchmark_group("statistics");
    g.sample_size(10);
    for n in [64, 256] {
        let (_, s) = fixture(64, n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| ChannelStatistics::new(&s.model, &s.hw, &s.pilots).unwrap())
        });
    }
    g.finish();
}

fn rates(c: &mut Criterion) {
    let (cfg, s) = fixture(64, 100);
    let t = s.stats.traces(0);
    let alloc = s.allocation(cfg.power.total_power(), 0.5).unwrap();
    let m_e = cfg.system.m_e;
    c.bench_function("secrecy_rate", |b| b.iter(|| secrecy_rate(black_box(&t), &alloc, &s.hw, m_e)));

    let split = SplitTerms::new(&t, &s.hw, alloc.total_power);
    let coeffs = SplitCoefficients::new(&split, m_e);
    c.bench_function("optimal_xi", |b| b.iter(|| optimal_xi(black_box(&coeffs))));
    c.bench_function("grid_search_xi_1e-3", |b| b.iter(|| grid_search_xi(black_box(&split), m_e, 1e-3)));
}

fn setup(c: &mut Criterion) {
    let (cfg, _) = fixture(64, 100);
    let mut g = c.benchmark_group("build_setup");
    g.sample_size(10);
    g.bench_function("m64_n100", |b| b.iter(|| build_setup(black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, statistics, rates, setup);
criterion_main!(benches);
