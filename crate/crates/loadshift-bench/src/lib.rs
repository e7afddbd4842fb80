//! Benchmark helpers: deterministic scenario builders shared by the
//! criterion targets.

use loadshift::io::{generate, GenerateParams, PeakProfile};
use loadshift::Scenario;

/// Commuter-shaped scenario of the given size, fixed seed.
pub fn bench_scenario(time_slots: usize, cells: usize, customers: usize) -> Scenario {
    generate(&GenerateParams {
        seed: 97,
        time_slots,
        cells,
        customers,
        premium_share: 0.3,
        peak: PeakProfile::Commuter,
        apps: 1,
    })
    .expect("bench scenario generates")
}
