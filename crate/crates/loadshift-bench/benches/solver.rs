//! Solver benchmarks: end-to-end block descent at growing instance sizes,
//! the min-cost-flow decomposition, and exchange-graph price recovery.
//!
//! Run with `cargo bench -p loadshift-bench`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use loadshift::exchange::{recover_prices, Decomposition, ExchangeGraph};
use loadshift::majorization::mincostflow_decompose;
use loadshift::model::BlockSlice;
use loadshift::satisfaction::SatisfactionObjective;
use loadshift::solve::{solve_general, SolveOptions};
use loadshift_bench::bench_scenario;

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_general");
    group.sample_size(10);
    for (cells, customers) in [(4, 100), (8, 200), (10, 300)] {
        let scenario = bench_scenario(24, cells, customers);
        let objective = SatisfactionObjective::for_scenario(&scenario);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("L{cells}_K{customers}")),
            &scenario,
            |b, scenario| {
                b.iter(|| {
                    solve_general(
                        black_box(scenario),
                        &objective,
                        &SolveOptions::default(),
                    )
                    .expect("bench instance solves")
                });
            },
        );
    }
    group.finish();
}

fn bench_flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("mincostflow_decompose");
    group.sample_size(20);
    for (cells, customers) in [(4, 100), (10, 300)] {
        let scenario = bench_scenario(24, cells, customers);
        let slice = BlockSlice::build(&scenario, 0, 0).expect("slice builds");
        let baseline = Decomposition::baseline(&slice).expect("baseline builds");
        let target = baseline.counts().to_vec();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("L{cells}_K{customers}")),
            &slice,
            |b, slice| {
                b.iter(|| mincostflow_decompose(black_box(slice), &target).expect("decomposes"));
            },
        );
    }
    group.finish();
}

fn bench_prices(c: &mut Criterion) {
    let mut group = c.benchmark_group("price_recovery");
    group.sample_size(20);
    for (cells, customers) in [(4, 100), (10, 300)] {
        let scenario = bench_scenario(24, cells, customers);
        let slice = BlockSlice::build(&scenario, 0, 0).expect("slice builds");
        let baseline = Decomposition::baseline(&slice).expect("baseline builds");
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("L{cells}_K{customers}")),
            &slice,
            |b, slice| {
                b.iter(|| {
                    let graph = ExchangeGraph::build(black_box(slice), &baseline);
                    recover_prices(&graph, 0).expect("prices recover")
                });
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_solve, bench_flow, bench_prices);
criterion_main!(benches);
