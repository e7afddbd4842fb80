//! Satisfaction grids, bucket classification, and tabular/vector-graphic
//! emission of solver results.
//!
//! Satisfaction over a (time, cell) grid is bucketed into five levels for
//! reporting: critical below 0.3, then 0.3-0.7, 0.7-0.9, 0.9-0.99, and
//! complete satisfaction at 0.99 and above. When counts exceed a cell's
//! capacity (the zero-price baseline may), satisfaction is evaluated with
//! the count clamped to capacity.

use crate::model::{Grid, Scenario};

/// Bucket boundaries, lowest first.
pub const BUCKET_EDGES: [f64; 4] = [0.3, 0.7, 0.9, 0.99];

/// Human-readable bucket names, index-aligned with [`bucket`].
pub const BUCKET_LABELS: [&str; 5] = [
    "critical",
    "low",
    "medium",
    "high",
    "complete",
];

/// Greyscale fills used by the SVG heat grids, darkest = worst.
const BUCKET_FILLS: [&str; 5] = ["#000000", "#555555", "#999999", "#cccccc", "#ffffff"];

/// Bucket index of a satisfaction value: 0 is critical (s < 0.3), 4 is
/// complete (s >= 0.99).
pub fn bucket(satisfaction: f64) -> usize {
    BUCKET_EDGES
        .iter()
        .position(|&edge| satisfaction < edge)
        .unwrap_or(BUCKET_EDGES.len())
}

/// Satisfaction of one (application, contract) class over every slot, at the
/// given aggregate counts.
#[derive(Debug, Clone)]
pub struct ClassGrid {
    pub app: usize,
    pub contract: usize,
    pub satisfaction: Vec<f64>,
}

pub fn satisfaction_grid(
    scenario: &Scenario,
    app: usize,
    contract: usize,
    totals: &[u32],
) -> ClassGrid {
    let grid = scenario.grid();
    let satisfaction = (0..grid.n())
        .map(|slot| {
            let cell = grid.cell_of(slot);
            scenario.curve(app, contract, cell).eval_clamped(totals[slot])
        })
        .collect();
    ClassGrid {
        app,
        contract,
        satisfaction,
    }
}

/// Number of (time, cell, class) entries in the critical bucket at the given
/// aggregate counts.
pub fn critical_bucket_count(scenario: &Scenario, totals: &[u32]) -> usize {
    let mut count = 0;
    for (app, contract) in scenario.block_ids() {
        let grid = satisfaction_grid(scenario, app, contract, totals);
        count += grid
            .satisfaction
            .iter()
            .filter(|&&s| bucket(s) == 0)
            .count();
    }
    count
}

fn format_value(v: f64) -> String {
    format!("{v:.6}")
}

/// Satisfaction values as a time-by-cell CSV matrix.
pub fn grid_values_csv(class: &ClassGrid, grid: Grid) -> String {
    let mut out = String::from("t");
    for l in 0..grid.cells {
        out.push_str(&format!(",cell{l}"));
    }
    out.push('\n');
    for t in 0..grid.time_slots {
        out.push_str(&t.to_string());
        for l in 0..grid.cells {
            let slot = t * grid.cells + l;
            out.push(',');
            out.push_str(&format_value(class.satisfaction[slot]));
        }
        out.push('\n');
    }
    out
}

/// Bucket codes (0 = critical .. 4 = complete) as a time-by-cell CSV matrix.
pub fn grid_buckets_csv(class: &ClassGrid, grid: Grid) -> String {
    let mut out = String::from("t");
    for l in 0..grid.cells {
        out.push_str(&format!(",cell{l}"));
    }
    out.push('\n');
    for t in 0..grid.time_slots {
        out.push_str(&t.to_string());
        for l in 0..grid.cells {
            let slot = t * grid.cells + l;
            out.push(',');
            out.push_str(&bucket(class.satisfaction[slot]).to_string());
        }
        out.push('\n');
    }
    out
}

/// Heat grid of the bucket levels, time on the horizontal axis, one row per
/// cell; the five grey levels mirror the bucket order.
pub fn grid_svg(class: &ClassGrid, grid: Grid) -> String {
    const SIZE: usize = 12;
    let width = grid.time_slots * SIZE;
    let height = grid.cells * SIZE;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    );
    for t in 0..grid.time_slots {
        for l in 0..grid.cells {
            let slot = t * grid.cells + l;
            let fill = BUCKET_FILLS[bucket(class.satisfaction[slot])];
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"{fill}\"/>\n",
                t * SIZE,
                l * SIZE
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One row per (time, cell): aggregate count, then per-class count and
/// satisfaction columns in canonical block order.
pub fn summary_csv(scenario: &Scenario, per_block: &[Vec<u32>]) -> String {
    let grid = scenario.grid();
    let block_ids = scenario.block_ids();
    let n = grid.n();
    let mut totals = vec![0u32; n];
    for counts in per_block {
        for (t, &c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let class_grids: Vec<ClassGrid> = block_ids
        .iter()
        .map(|&(app, contract)| satisfaction_grid(scenario, app, contract, &totals))
        .collect();

    let mut out = String::from("t,cell,total");
    for &(app, contract) in &block_ids {
        out.push_str(&format!(",count_a{app}_b{contract},sat_a{app}_b{contract}"));
    }
    out.push('\n');
    for t in 0..grid.time_slots {
        for l in 0..grid.cells {
            let slot = t * grid.cells + l;
            out.push_str(&format!("{t},{l},{}", totals[slot]));
            for (c, _) in block_ids.iter().enumerate() {
                out.push_str(&format!(
                    ",{},{}",
                    per_block[c][slot],
                    format_value(class_grids[c].satisfaction[slot])
                ));
            }
            out.push('\n');
        }
    }
    out
}

/// Stacked traffic table for one cell: per time slot, the baseline and
/// optimized count of every class plus their totals.
pub fn cell_traffic_csv(
    scenario: &Scenario,
    cell: usize,
    baseline: &[Vec<u32>],
    optimized: &[Vec<u32>],
) -> String {
    let grid = scenario.grid();
    let block_ids = scenario.block_ids();
    let mut out = String::from("t");
    for &(app, contract) in &block_ids {
        out.push_str(&format!(",baseline_a{app}_b{contract}"));
    }
    out.push_str(",baseline_total");
    for &(app, contract) in &block_ids {
        out.push_str(&format!(",optimized_a{app}_b{contract}"));
    }
    out.push_str(",optimized_total,capacity\n");
    for t in 0..grid.time_slots {
        let slot = t * grid.cells + cell;
        out.push_str(&t.to_string());
        let mut total = 0u32;
        for counts in baseline {
            out.push_str(&format!(",{}", counts[slot]));
            total += counts[slot];
        }
        out.push_str(&format!(",{total}"));
        let mut total = 0u32;
        for counts in optimized {
            out.push_str(&format!(",{}", counts[slot]));
            total += counts[slot];
        }
        out.push_str(&format!(",{total},{}\n", scenario.cells[cell].capacity));
    }
    out
}
