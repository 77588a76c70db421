//! Parallel-vs-sequential throughput comparison for the two data-parallel
//! hot paths: suite simulation (across scenarios) and forest training
//! (across trees).
//!
//! Built with default features, `run_suite`/`train_forest` use the rayon
//! pool while the `*_seq` variants are plain loops, so one run compares
//! both. With `--no-default-features` the parallel entry points degrade to
//! sequential and the two sides coincide.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use meshfuse::config::ExperimentConfig;
use meshfuse::learners::forest::{train_forest, train_forest_seq, ForestSpec};
use meshfuse::models::extract_all;
use meshfuse::pipeline::generate_suite;
use meshfuse::sim::{run_suite, run_suite_seq, Strategy};

fn bench_suite(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::default();
    cfg.suite.scenario_count = 6;
    cfg.suite.node_count_min = 40;
    cfg.suite.node_count_max = 90;
    cfg.simulation.messages_per_scenario = 60;
    let scenarios = generate_suite(&cfg).unwrap();

    let mut group = c.benchmark_group("baseline_suite");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| {
            run_suite(black_box(&scenarios), &cfg.simulation, Strategy::Baseline, None).unwrap()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            run_suite_seq(black_box(&scenarios), &cfg.simulation, Strategy::Baseline, None)
                .unwrap()
        })
    });
    group.finish();
}

fn bench_forest(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::default();
    cfg.suite.scenario_count = 3;
    cfg.suite.node_count_min = 50;
    cfg.suite.node_count_max = 80;
    cfg.simulation.messages_per_scenario = 60;
    let scenarios = generate_suite(&cfg).unwrap();
    let logs = run_suite(&scenarios, &cfg.simulation, Strategy::Baseline, None).unwrap();
    let datasets = extract_all(&logs, &scenarios, &cfg.simulation).unwrap();
    let spec = ForestSpec { n_estimators: 60, ..ForestSpec::model_d() };

    let mut group = c.benchmark_group("forest_training");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| train_forest(black_box(&datasets.d), &spec, 7).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| train_forest_seq(black_box(&datasets.d), &spec, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_suite, bench_forest);
criterion_main!(benches);
