use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use kmbias::oracles::uniform_grid;
use kmbias::{fit_km, km_limit_scenario1, run_scenario, CensoringPolicy, DropoutSpec};
use kmbias_bench::{scenario4_config, scenario4_dataset};

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_scenario4");
    for n in [100_000u64, 1_000_000] {
        group.throughput(Throughput::Elements(n));
        let cfg = scenario4_config(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| run_scenario(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_km");
    group.sample_size(20);
    for n in [100_000u64, 1_000_000] {
        group.throughput(Throughput::Elements(n));
        let data = scenario4_dataset(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| fit_km(black_box(data), CensoringPolicy::AllCensoredEqual).unwrap())
        });
    }
    group.finish();
}

fn limit_oracle(c: &mut Criterion) {
    let grid = uniform_grid(4.0, 100);
    let spec = DropoutSpec::beta(2.0, 5.0).unwrap();
    c.bench_function("km_limit_scenario1/100pts", |b| {
        b.iter(|| km_limit_scenario1(black_box(&spec), 0.4, std::f64::consts::LN_2, &grid).unwrap())
    });
}

criterion_group!(benches, generation, fitting, limit_oracle);
criterion_main!(benches);
