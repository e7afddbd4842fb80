//! End-to-end solvers: the exact single-block pipeline, the accelerated
//! majorization dispatch, and block descent for several applications and
//! contract classes.
//!
//! Every pipeline follows the same three steps: drive the traffic vector to
//! an optimum of the penalized objective by single-unit exchanges, keep (or
//! recover) an optimal decomposition of that traffic, then read prices off
//! shortest paths in the exchange graph so that each stored profile is a
//! best response at those prices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{exchange, recover_prices, Decomposition, ExchangeGraph, PriceRecovery};
use crate::greedy::{best_move, greedy_maximize, JointCounts, MoveCandidate};
use crate::majorization::solve_major;
use crate::model::{BlockSlice, Customer, Scenario};
use crate::satisfaction::{SatisfactionObjective, SlotObjective};

/// Which pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    /// Majorization fast path when eligible, otherwise single or general.
    Auto,
    /// Exact single-block pipeline; requires one application and one
    /// contract class.
    Single,
    /// Majorization fast path; requires one application, one contract class
    /// and customers without forbidden slots.
    Major,
    /// Block descent over all (application, contract) blocks.
    General,
}

impl SolveMode {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "auto" => Ok(SolveMode::Auto),
            "single" => Ok(SolveMode::Single),
            "major" => Ok(SolveMode::Major),
            "general" => Ok(SolveMode::General),
            other => Err(Error::validation(format!(
                "unknown mode {other:?}; expected auto, single, major or general"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Slot pinned to price zero during recovery.
    pub source_slot: usize,
    /// Optional starting traffic vector (single-block pipelines only); it
    /// must be decomposable over the customers' feasible sets.
    pub initial_counts: Option<Vec<u32>>,
}

/// Solved state of one traffic block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub app: usize,
    pub contract: usize,
    /// Global customer indices of the block members.
    pub members: Vec<usize>,
    /// Optimal per-slot active counts.
    pub traffic: Vec<u32>,
    /// Counts under zero prices, the comparison point for reports.
    pub baseline_traffic: Vec<u32>,
    /// Active slots per member at the optimum, parallel to `members`.
    pub profiles: Vec<Vec<usize>>,
    /// Inf-convolution value at the optimal traffic.
    pub psi: f64,
    /// Raw recovered prices (source slot pinned to zero).
    pub prices_raw: Vec<f64>,
    /// The same prices shifted to be nonnegative.
    pub prices_nonnegative: Vec<f64>,
    /// Traffic vector after every applied exchange, start included.
    pub trace: Vec<Vec<u32>>,
    pub iterations: usize,
}

/// Full solver output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub mode: String,
    pub blocks: Vec<BlockResult>,
    /// Penalized objective at the optimum (equals the plain objective there,
    /// since the optimum respects the capacities).
    pub objective: f64,
    /// Penalized objective of the zero-price baseline.
    pub baseline_objective: f64,
    /// Aggregate penalized objective after every applied round, starting
    /// point included; strictly increasing by construction.
    pub objective_trace: Vec<f64>,
    pub rounds: usize,
}

impl SolveResult {
    /// Per-block optimal counts in canonical block order.
    pub fn per_block_traffic(&self) -> Vec<Vec<u32>> {
        self.blocks.iter().map(|b| b.traffic.clone()).collect()
    }

    pub fn per_block_baseline(&self) -> Vec<Vec<u32>> {
        self.blocks
            .iter()
            .map(|b| b.baseline_traffic.clone())
            .collect()
    }

    /// Aggregate counts over all blocks at the optimum.
    pub fn aggregate_traffic(&self) -> Vec<u32> {
        let n = self.blocks.first().map_or(0, |b| b.traffic.len());
        let mut totals = vec![0u32; n];
        for block in &self.blocks {
            for (t, &c) in totals.iter_mut().zip(&block.traffic) {
                *t += c;
            }
        }
        totals
    }
}

/// Whether the customer's allowed time sets are pairwise disjoint across
/// applications. When they are, the one-request-per-time constraint is
/// automatic and the response problem separates per application, which is
/// what the general pipeline requires.
pub fn check_disjointness(customer: &Customer, time_slots: usize) -> bool {
    find_window_overlap(customer, time_slots).is_none()
}

/// First pair of applications whose allowed time sets intersect, if any.
fn find_window_overlap(customer: &Customer, time_slots: usize) -> Option<(usize, usize)> {
    let allowed: Vec<Vec<bool>> = customer
        .apps
        .iter()
        .map(|demand| {
            let mut open = vec![true; time_slots];
            for &t in &demand.forbidden_times {
                if t < time_slots {
                    open[t] = false;
                }
            }
            open
        })
        .collect();
    for a in 0..allowed.len() {
        for b in a + 1..allowed.len() {
            let overlap = allowed[a]
                .iter()
                .zip(&allowed[b])
                .any(|(&x, &y)| x && y);
            if overlap {
                return Some((a, b));
            }
        }
    }
    None
}

fn capacity_violations(scenario: &Scenario, totals: &[u32]) -> Vec<(usize, usize, u32, u32)> {
    let grid = scenario.grid();
    let mut out = Vec::new();
    for (slot, &count) in totals.iter().enumerate() {
        let (t, l) = grid.unflatten(slot).expect("slot in range");
        let cap = scenario.cells[l].capacity;
        if count > cap {
            out.push((t, l, count, cap));
        }
    }
    out
}

fn capacity_error(violations: &[(usize, usize, u32, u32)]) -> Error {
    let sample: Vec<String> = violations
        .iter()
        .take(5)
        .map(|(t, l, count, cap)| format!("time {t} cell {l}: {count} > capacity {cap}"))
        .collect();
    Error::infeasible(format!(
        "optimum still violates {} cell capacities ({}); the demand cannot be balanced within \
         the configured capacities",
        violations.len(),
        sample.join(", ")
    ))
}

fn block_result(
    slice: &BlockSlice,
    decomposition: &Decomposition,
    baseline: Vec<u32>,
    prices: &PriceRecovery,
    trace: Vec<Vec<u32>>,
    iterations: usize,
) -> BlockResult {
    BlockResult {
        app: slice.app,
        contract: slice.contract,
        members: slice.members.clone(),
        traffic: decomposition.counts().to_vec(),
        baseline_traffic: baseline,
        profiles: decomposition
            .profiles()
            .iter()
            .map(|p| p.active_slots())
            .collect(),
        psi: decomposition.psi(),
        prices_raw: prices.raw.values.clone(),
        prices_nonnegative: prices.nonnegative.values.clone(),
        trace,
        iterations,
    }
}

/// Exact pipeline for one (application, contract) block: greedy exchange
/// ascent from the zero-price baseline (or a caller-supplied start), with
/// the optimal decomposition maintained by the exchanges themselves, then
/// price recovery.
pub fn solve_single(
    scenario: &Scenario,
    app: usize,
    contract: usize,
    objective: &dyn SlotObjective,
    options: &SolveOptions,
) -> Result<SolveResult> {
    if objective.blocks() != 1 {
        return Err(Error::validation(
            "single-block pipeline needs a single-block objective",
        ));
    }
    let slice = BlockSlice::build(scenario, app, contract)?;
    let baseline = Decomposition::baseline(&slice)?;
    let baseline_counts = baseline.counts().to_vec();
    let baseline_objective = objective.value(std::slice::from_ref(&baseline_counts));

    let mut decomposition = match &options.initial_counts {
        Some(start) => {
            crate::majorization::mincostflow_decompose(&slice, start)?.decomposition
        }
        None => baseline,
    };
    let mut graph = ExchangeGraph::build(&slice, &decomposition);
    let mut joint = JointCounts::from_blocks(vec![decomposition.counts().to_vec()]);
    let trace = greedy_maximize(
        &slice,
        &mut decomposition,
        &mut graph,
        objective,
        &mut joint,
        0,
    )?;

    let violations = capacity_violations(scenario, joint.totals());
    if !violations.is_empty() {
        return Err(capacity_error(&violations));
    }
    let prices = recover_prices(&graph, options.source_slot)?;
    let objective_value = joint.objective_value(objective);
    let iterations = trace.iterations;
    let objective_trace: Vec<f64> = trace
        .iterates
        .iter()
        .map(|counts| objective.value(std::slice::from_ref(counts)))
        .collect();
    Ok(SolveResult {
        mode: "single".to_string(),
        blocks: vec![block_result(
            &slice,
            &decomposition,
            baseline_counts,
            &prices,
            trace.iterates,
            iterations,
        )],
        objective: objective_value,
        baseline_objective,
        objective_trace,
        rounds: iterations,
    })
}

/// Majorization fast path wrapped into the common result shape.
pub fn solve_major_pipeline(
    scenario: &Scenario,
    objective: &dyn SlotObjective,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let slice = BlockSlice::build(scenario, 0, 0)?;
    let baseline = Decomposition::baseline(&slice)?;
    let baseline_counts = baseline.counts().to_vec();
    let baseline_objective = objective.value(std::slice::from_ref(&baseline_counts));
    let solved = solve_major(
        &slice,
        objective,
        options.source_slot,
        options.initial_counts.as_deref(),
    )?;
    let violations = capacity_violations(scenario, &solved.counts);
    if !violations.is_empty() {
        return Err(capacity_error(&violations));
    }
    let objective_value = objective.value(std::slice::from_ref(&solved.counts));
    let objective_trace: Vec<f64> = solved
        .trace
        .iter()
        .map(|counts| objective.value(std::slice::from_ref(counts)))
        .collect();
    Ok(SolveResult {
        mode: "major".to_string(),
        blocks: vec![block_result(
            &slice,
            &solved.decomposition,
            baseline_counts,
            &solved.prices,
            solved.trace,
            solved.iterations,
        )],
        objective: objective_value,
        baseline_objective,
        objective_trace,
        rounds: solved.iterations,
    })
}

struct BlockState {
    slice: BlockSlice,
    decomposition: Decomposition,
    graph: ExchangeGraph,
    baseline: Vec<u32>,
    trace: Vec<Vec<u32>>,
    iterations: usize,
}

/// Block descent for the general model: in each round every block proposes
/// its best feasible exchange against the current state, improving proposals
/// are applied together, and a round whose combined application would not
/// improve falls back to the single best proposal. At termination no block
/// can improve alone, which by per-block concavity makes every block
/// globally optimal given the others.
pub fn solve_general(
    scenario: &Scenario,
    objective: &dyn SlotObjective,
    options: &SolveOptions,
) -> Result<SolveResult> {
    let block_ids = scenario.block_ids();
    if objective.blocks() != block_ids.len() {
        return Err(Error::validation(format!(
            "objective couples {} blocks, scenario has {}",
            objective.blocks(),
            block_ids.len()
        )));
    }
    for (k, customer) in scenario.customers.iter().enumerate() {
        if let Some((a, b)) = find_window_overlap(customer, scenario.time_slots) {
            return Err(Error::validation(format!(
                "customer {k}: allowed time sets of applications {a} and {b} overlap; the \
                 general pipeline needs disjoint application windows"
            )));
        }
    }

    let mut blocks = Vec::with_capacity(block_ids.len());
    for &(app, contract) in &block_ids {
        let slice = BlockSlice::build(scenario, app, contract)?;
        let decomposition = Decomposition::baseline(&slice)?;
        let graph = ExchangeGraph::build(&slice, &decomposition);
        let baseline = decomposition.counts().to_vec();
        let trace = vec![baseline.clone()];
        blocks.push(BlockState {
            slice,
            decomposition,
            graph,
            baseline,
            trace,
            iterations: 0,
        });
    }
    let mut joint = JointCounts::from_blocks(
        blocks
            .iter()
            .map(|b| b.decomposition.counts().to_vec())
            .collect(),
    );
    let baseline_objective = joint.objective_value(objective);
    let mut objective_trace = vec![baseline_objective];

    let mut rounds = 0usize;
    loop {
        let mut candidates: Vec<(usize, MoveCandidate)> = Vec::new();
        for (c, block) in blocks.iter().enumerate() {
            if let Some(step) = best_move(objective, &joint, c, &block.graph) {
                candidates.push((c, step));
            }
        }
        if candidates.is_empty() {
            break;
        }
        rounds += 1;

        let chosen: Vec<(usize, MoveCandidate)> = if candidates.len() == 1 {
            candidates
        } else {
            // Proposals were scored against the same starting state; applying
            // them together can interact through the shared totals, so accept
            // the joint application only if it really improves.
            let mut affected: Vec<usize> = candidates
                .iter()
                .flat_map(|&(_, m)| [m.from, m.to])
                .collect();
            affected.sort_unstable();
            affected.dedup();
            let mut scratch = vec![0u32; joint.blocks()];
            let slot_sum = |joint: &JointCounts, scratch: &mut Vec<u32>| -> f64 {
                affected
                    .iter()
                    .map(|&slot| {
                        joint.fill_slot(slot, scratch);
                        objective.slot_value(slot, scratch)
                    })
                    .sum()
            };
            let before = slot_sum(&joint, &mut scratch);
            for &(c, m) in &candidates {
                joint.apply_move(c, m.from, m.to);
            }
            let after = slot_sum(&joint, &mut scratch);
            for &(c, m) in &candidates {
                joint.apply_move(c, m.to, m.from);
            }
            if after > before {
                candidates
            } else {
                let best = candidates
                    .iter()
                    .copied()
                    .max_by(|a, b| a.1.gain.total_cmp(&b.1.gain).then(b.0.cmp(&a.0)))
                    .expect("nonempty candidates");
                vec![best]
            }
        };

        for (c, step) in chosen {
            let block = &mut blocks[c];
            exchange(
                &block.slice,
                &mut block.decomposition,
                &mut block.graph,
                step.from,
                step.to,
            )?;
            joint.apply_move(c, step.from, step.to);
            block.trace.push(block.decomposition.counts().to_vec());
            block.iterations += 1;
        }
        objective_trace.push(joint.objective_value(objective));
    }

    let violations = capacity_violations(scenario, joint.totals());
    if !violations.is_empty() {
        return Err(capacity_error(&violations));
    }
    let objective_value = joint.objective_value(objective);
    let mut results = Vec::with_capacity(blocks.len());
    for block in blocks {
        let prices = recover_prices(&block.graph, options.source_slot)?;
        results.push(block_result(
            &block.slice,
            &block.decomposition,
            block.baseline,
            &prices,
            block.trace,
            block.iterations,
        ));
    }
    Ok(SolveResult {
        mode: "general".to_string(),
        blocks: results,
        objective: objective_value,
        baseline_objective,
        objective_trace,
        rounds,
    })
}

/// Validates the scenario and dispatches to the right pipeline with the
/// canonical satisfaction objective.
pub fn solve_scenario(
    scenario: &Scenario,
    mode: SolveMode,
    options: &SolveOptions,
) -> Result<SolveResult> {
    scenario.validate()?;
    let single_block = scenario.num_apps() == 1 && scenario.num_contracts() == 1;
    let effective = match mode {
        SolveMode::Auto => {
            if single_block && all_customers_open(scenario) {
                SolveMode::Major
            } else if single_block {
                SolveMode::Single
            } else {
                SolveMode::General
            }
        }
        m => m,
    };
    let objective = SatisfactionObjective::for_scenario(scenario);
    match effective {
        SolveMode::Single => {
            require_single_block(scenario, "single")?;
            solve_single(scenario, 0, 0, &objective, options)
        }
        SolveMode::Major => {
            require_single_block(scenario, "major")?;
            solve_major_pipeline(scenario, &objective, options)
        }
        SolveMode::General => solve_general(scenario, &objective, options),
        SolveMode::Auto => unreachable!("auto resolved above"),
    }
}

fn require_single_block(scenario: &Scenario, mode: &str) -> Result<()> {
    if scenario.num_apps() != 1 || scenario.num_contracts() != 1 {
        return Err(Error::validation(format!(
            "mode {mode} requires exactly one application and one contract class; scenario has \
             {} applications and {} contract classes",
            scenario.num_apps(),
            scenario.num_contracts()
        )));
    }
    Ok(())
}

/// No forbidden slots at all: this needs an empty forbidden-time set per
/// customer and a single cell (with several cells the trajectory always
/// forbids the slots of the cells not visited at each time).
fn all_customers_open(scenario: &Scenario) -> bool {
    scenario.cells.len() == 1
        && scenario
            .customers
            .iter()
            .all(|c| c.apps.iter().all(|d| d.forbidden_times.is_empty()))
}
