//! Report file emission: satisfaction value/bucket grids and SVG heat maps
//! per (application, contract) class for both the baseline and the optimized
//! assignment, per-cell stacked traffic tables, sorted price schedules, and
//! one summary table per phase.

use std::path::Path;

use loadshift::io::{write_atomic, ResultFile};
use loadshift::report::{
    cell_traffic_csv, grid_buckets_csv, grid_svg, grid_values_csv, satisfaction_grid, summary_csv,
};
use loadshift::Result;

fn aggregate(per_block: &[Vec<u32>]) -> Vec<u32> {
    let n = per_block.first().map_or(0, Vec::len);
    let mut totals = vec![0u32; n];
    for counts in per_block {
        for (t, &c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    totals
}

fn prices_csv(file: &ResultFile, block: usize) -> String {
    let grid = file.scenario.grid();
    let result = &file.result.blocks[block];
    let mut out = String::from("slot,t,cell,price_raw,price_nonnegative\n");
    for slot in 0..grid.n() {
        let (t, l) = grid.unflatten(slot).expect("slot in range");
        out.push_str(&format!(
            "{slot},{t},{l},{:.6},{:.6}\n",
            result.prices_raw[slot], result.prices_nonnegative[slot]
        ));
    }
    out
}

/// Writes every report artifact into `out_dir`; returns the file count.
pub fn write_report(file: &ResultFile, out_dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(out_dir)?;
    let scenario = &file.scenario;
    let grid = scenario.grid();
    let baseline: Vec<Vec<u32>> = file.result.per_block_baseline();
    let optimized: Vec<Vec<u32>> = file.result.per_block_traffic();
    let phases = [("baseline", &baseline), ("optimized", &optimized)];

    let mut written = 0usize;
    let emit = |name: String, contents: String| -> Result<()> {
        write_atomic(out_dir.join(name), &contents)?;
        Ok(())
    };

    for (phase, per_block) in phases {
        emit(format!("summary_{phase}.csv"), summary_csv(scenario, per_block))?;
        written += 1;
        let totals = aggregate(per_block);
        for &(app, contract) in &scenario.block_ids() {
            let class = satisfaction_grid(scenario, app, contract, &totals);
            emit(
                format!("satisfaction_a{app}_b{contract}_{phase}.csv"),
                grid_values_csv(&class, grid),
            )?;
            emit(
                format!("buckets_a{app}_b{contract}_{phase}.csv"),
                grid_buckets_csv(&class, grid),
            )?;
            emit(
                format!("satisfaction_a{app}_b{contract}_{phase}.svg"),
                grid_svg(&class, grid),
            )?;
            written += 3;
        }
    }
    for cell in 0..scenario.cells.len() {
        emit(
            format!("traffic_cell{cell}.csv"),
            cell_traffic_csv(scenario, cell, &baseline, &optimized),
        )?;
        written += 1;
    }
    for (index, block) in file.result.blocks.iter().enumerate() {
        emit(
            format!("prices_a{}_b{}.csv", block.app, block.contract),
            prices_csv(file, index),
        )?;
        written += 1;
    }
    Ok(written)
}
