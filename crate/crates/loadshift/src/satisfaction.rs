//! Per-cell satisfaction curves and the provider objective.
//!
//! A curve maps the number of active users in a cell to a satisfaction level
//! in `[0, 1]`: flat at 1 up to a soft threshold, then decaying as
//! `1 - steepness * exp(-2 * capacity / (n - threshold))` until the hard
//! capacity. The provider objective weights each traffic block's count by its
//! contract weight and the satisfaction at the cell's aggregate load, minus a
//! penalty that makes any capacity-violating assignment lose to any feasible
//! one.

use crate::error::{Error, Result};
use crate::model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Elastic,
    Realtime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatisfactionCurve {
    kind: CurveKind,
    soft_threshold: u32,
    capacity: u32,
    steepness: f64,
}

impl SatisfactionCurve {
    /// A realtime curve always has threshold 0, regardless of the cell's
    /// elastic threshold.
    pub fn new(kind: CurveKind, soft_threshold: u32, capacity: u32, steepness: f64) -> Self {
        let soft_threshold = match kind {
            CurveKind::Elastic => soft_threshold,
            CurveKind::Realtime => 0,
        };
        SatisfactionCurve {
            kind,
            soft_threshold,
            capacity,
            steepness,
        }
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn soft_threshold(&self) -> u32 {
        self.soft_threshold
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn steepness(&self) -> f64 {
        self.steepness
    }

    /// Satisfaction at `active` users. Errors above capacity; callers that
    /// must tolerate overloads use [`SatisfactionCurve::eval_clamped`].
    pub fn eval(&self, active: u32) -> Result<f64> {
        if active > self.capacity {
            return Err(Error::infeasible(format!(
                "{active} active users exceed cell capacity {}",
                self.capacity
            )));
        }
        Ok(self.eval_clamped(active))
    }

    /// Satisfaction with the count clamped to capacity; total on all inputs.
    /// At or below the soft threshold the value is exactly 1 (this covers the
    /// realtime convention of satisfaction 1 in an empty cell).
    pub fn eval_clamped(&self, active: u32) -> f64 {
        let n = active.min(self.capacity);
        if n <= self.soft_threshold {
            return 1.0;
        }
        let gap = f64::from(n - self.soft_threshold);
        1.0 - self.steepness * (-2.0 * f64::from(self.capacity) / gap).exp()
    }

    /// Verifies the discrete shape the solver relies on over the whole
    /// integer grid `[0, capacity]`: values in `[0, 1]`, nonincreasing
    /// satisfaction, and concavity of `n * s(n)` in the exchange sense
    /// `f(n+1) + f(n-1) <= 2 f(n)`.
    pub fn check_shape(&self) -> Result<()> {
        if self.soft_threshold >= self.capacity {
            return Err(Error::validation(format!(
                "soft threshold {} must be below capacity {}",
                self.soft_threshold, self.capacity
            )));
        }
        if !(self.steepness > 0.0 && self.steepness.is_finite()) {
            return Err(Error::validation("steepness must be positive and finite"));
        }
        let nc = self.capacity;
        for n in 0..=nc {
            let s = self.eval_clamped(n);
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::validation(format!(
                    "satisfaction {s} at load {n} leaves [0, 1]; steepness {} too large for \
                     capacity {nc}",
                    self.steepness
                )));
            }
            if n < nc && self.eval_clamped(n + 1) > s {
                return Err(Error::validation(format!(
                    "satisfaction increases between loads {n} and {}",
                    n + 1
                )));
            }
        }
        let f = |n: u32| f64::from(n) * self.eval_clamped(n);
        for n in 1..nc {
            if f(n + 1) + f(n - 1) > 2.0 * f(n) {
                return Err(Error::validation(format!(
                    "throughput curve not discretely concave at load {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Weighted satisfaction carried by one cell at one time:
/// `sum_c weight_c * counts_c * s_c(total)`. The caller supplies the total so
/// a mismatch with the per-class counts is caught instead of silently
/// recomputed.
pub fn cell_objective(
    classes: &[(f64, SatisfactionCurve)],
    counts: &[u32],
    total: u32,
) -> Result<f64> {
    if classes.len() != counts.len() {
        return Err(Error::validation(format!(
            "{} classes but {} counts",
            classes.len(),
            counts.len()
        )));
    }
    let sum: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if sum != u64::from(total) {
        return Err(Error::validation(format!(
            "aggregate {total} does not match class counts summing to {sum}"
        )));
    }
    let mut value = 0.0;
    for ((weight, curve), &count) in classes.iter().zip(counts) {
        value += weight * f64::from(count) * curve.eval(total)?;
    }
    Ok(value)
}

/// A provider objective that is separable across flattened slots. The value
/// of a slot depends on the per-block active counts there; implementations
/// include the capacity penalty so the solver can treat them as total
/// functions.
pub trait SlotObjective {
    /// Number of traffic blocks the objective couples, in canonical block
    /// order (application-major, contract-minor).
    fn blocks(&self) -> usize;

    /// Penalized value contributed by one slot given per-block counts there.
    fn slot_value(&self, slot: usize, counts: &[u32]) -> f64;

    /// Full objective over per-block count vectors.
    fn value(&self, per_block: &[Vec<u32>]) -> f64 {
        assert_eq!(per_block.len(), self.blocks());
        let n = per_block.first().map_or(0, Vec::len);
        let mut scratch = vec![0u32; self.blocks()];
        let mut total = 0.0;
        for slot in 0..n {
            for (c, counts) in per_block.iter().enumerate() {
                scratch[c] = counts[slot];
            }
            total += self.slot_value(slot, &scratch);
        }
        total
    }
}

/// The production satisfaction objective with the big-M capacity penalty.
#[derive(Debug, Clone)]
pub struct SatisfactionObjective {
    cells: usize,
    /// Per block: contract weight.
    weights: Vec<f64>,
    /// Per block, per cell: the governing curve.
    curves: Vec<Vec<SatisfactionCurve>>,
    /// Per cell: hard capacity.
    caps: Vec<u32>,
    penalty: f64,
}

impl SatisfactionObjective {
    /// Builds the objective for every block of the scenario in canonical
    /// order. The penalty weight is `1 + max_b weight_b * total_requests`,
    /// which strictly exceeds the objective's reachable range, so any
    /// capacity-violating point scores below any feasible one.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        let block_ids = scenario.block_ids();
        let cells = scenario.cells.len();
        let mut weights = Vec::with_capacity(block_ids.len());
        let mut curves = Vec::with_capacity(block_ids.len());
        for &(app, contract) in &block_ids {
            weights.push(scenario.contracts[contract].weight);
            curves.push(
                (0..cells)
                    .map(|cell| scenario.curve(app, contract, cell))
                    .collect(),
            );
        }
        let max_weight = scenario
            .contracts
            .iter()
            .map(|c| c.weight)
            .fold(0.0f64, f64::max);
        let penalty = 1.0 + max_weight * scenario.total_requests() as f64;
        SatisfactionObjective {
            cells,
            weights,
            curves,
            caps: scenario.cells.iter().map(|c| c.capacity).collect(),
            penalty,
        }
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty
    }
}

impl SlotObjective for SatisfactionObjective {
    fn blocks(&self) -> usize {
        self.weights.len()
    }

    fn slot_value(&self, slot: usize, counts: &[u32]) -> f64 {
        let cell = slot % self.cells;
        let total: u32 = counts.iter().sum();
        let cap = self.caps[cell];
        let mut value = 0.0;
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                value +=
                    self.weights[c] * f64::from(count) * self.curves[c][cell].eval_clamped(total);
            }
        }
        if total > cap {
            value -= self.penalty * f64::from(total - cap);
        }
        value
    }
}

/// Separable objective defined by an arbitrary per-slot function of the
/// aggregate count, with an optional capacity penalty. The per-slot function
/// must be concave in the count for the greedy's local optimality guarantee
/// to carry global meaning.
pub struct AggregateObjective<F: Fn(usize, u32) -> f64> {
    blocks: usize,
    f: F,
    caps: Option<Vec<u32>>,
    penalty: f64,
}

impl<F: Fn(usize, u32) -> f64> AggregateObjective<F> {
    pub fn new(blocks: usize, f: F) -> Self {
        AggregateObjective {
            blocks,
            f,
            caps: None,
            penalty: 0.0,
        }
    }

    pub fn with_caps(blocks: usize, f: F, caps: Vec<u32>, penalty: f64) -> Self {
        AggregateObjective {
            blocks,
            f,
            caps: Some(caps),
            penalty,
        }
    }
}

impl<F: Fn(usize, u32) -> f64> SlotObjective for AggregateObjective<F> {
    fn blocks(&self) -> usize {
        self.blocks
    }

    fn slot_value(&self, slot: usize, counts: &[u32]) -> f64 {
        let total: u32 = counts.iter().sum();
        let mut value = (self.f)(slot, total);
        if let Some(caps) = &self.caps {
            if total > caps[slot] {
                value -= self.penalty * f64::from(total - caps[slot]);
            }
        }
        value
    }
}

/// Penalized satisfaction objective over explicit per-block counts.
pub fn penalized_objective(scenario: &Scenario, per_block: &[Vec<u32>]) -> f64 {
    SatisfactionObjective::for_scenario(scenario).value(per_block)
}
