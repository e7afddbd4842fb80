//! Greedy maximization of a separable concave objective over the feasible
//! traffic vectors, plus a flow-based membership oracle for the sum of the
//! per-customer feasible sets.
//!
//! The feasible set has the exchange property, so the objective restricted
//! to it is maximized by repeatedly applying the best single-unit exchange
//! until none improves: local optimality is global here. Neighbor
//! feasibility is answered by the exchange graph, and each applied move
//! keeps the maintained decomposition optimal.

use crate::error::{Error, Result};
use crate::exchange::{exchange, Decomposition, ExchangeGraph, ReachRow};
use crate::model::{BlockSlice, FeasibleSet};
use crate::response::ConsumptionProfile;
use crate::satisfaction::SlotObjective;

/// Per-block traffic counts together with their slotwise totals.
#[derive(Debug, Clone)]
pub struct JointCounts {
    per_block: Vec<Vec<u32>>,
    totals: Vec<u32>,
}

impl JointCounts {
    pub fn new(blocks: usize, n: usize) -> Self {
        JointCounts {
            per_block: vec![vec![0; n]; blocks],
            totals: vec![0; n],
        }
    }

    pub fn from_blocks(per_block: Vec<Vec<u32>>) -> Self {
        let n = per_block.first().map_or(0, Vec::len);
        let mut totals = vec![0u32; n];
        for counts in &per_block {
            for (t, &c) in totals.iter_mut().zip(counts) {
                *t += c;
            }
        }
        JointCounts { per_block, totals }
    }

    pub fn blocks(&self) -> usize {
        self.per_block.len()
    }

    pub fn n(&self) -> usize {
        self.totals.len()
    }

    pub fn block(&self, c: usize) -> &[u32] {
        &self.per_block[c]
    }

    pub fn per_block(&self) -> &[Vec<u32>] {
        &self.per_block
    }

    pub fn totals(&self) -> &[u32] {
        &self.totals
    }

    pub fn set_block(&mut self, c: usize, counts: &[u32]) {
        for (slot, &v) in counts.iter().enumerate() {
            self.totals[slot] = self.totals[slot] - self.per_block[c][slot] + v;
            self.per_block[c][slot] = v;
        }
    }

    pub fn apply_move(&mut self, c: usize, from: usize, to: usize) {
        self.per_block[c][from] -= 1;
        self.per_block[c][to] += 1;
        self.totals[from] -= 1;
        self.totals[to] += 1;
    }

    /// Per-block counts at one slot, written into `out`.
    pub fn fill_slot(&self, slot: usize, out: &mut [u32]) {
        for (c, counts) in self.per_block.iter().enumerate() {
            out[c] = counts[slot];
        }
    }

    /// Penalized objective value at the current counts.
    pub fn objective_value(&self, objective: &dyn SlotObjective) -> f64 {
        objective.value(&self.per_block)
    }
}

/// A strictly improving single-unit exchange inside one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveCandidate {
    pub from: usize,
    pub to: usize,
    pub gain: f64,
}

/// Per-slot objective deltas for decrementing/incrementing one block's count.
pub(crate) struct SlotDeltas {
    pub dec: Vec<f64>,
    pub inc: Vec<f64>,
}

pub(crate) fn slot_deltas(
    objective: &dyn SlotObjective,
    joint: &JointCounts,
    block: usize,
) -> SlotDeltas {
    let n = joint.n();
    let blocks = joint.blocks();
    let mut scratch = vec![0u32; blocks];
    let mut dec = vec![f64::NEG_INFINITY; n];
    let mut inc = vec![f64::NEG_INFINITY; n];
    for slot in 0..n {
        joint.fill_slot(slot, &mut scratch);
        let base = objective.slot_value(slot, &scratch);
        if joint.block(block)[slot] > 0 {
            scratch[block] -= 1;
            dec[slot] = objective.slot_value(slot, &scratch) - base;
            scratch[block] += 1;
        }
        scratch[block] += 1;
        inc[slot] = objective.slot_value(slot, &scratch) - base;
        scratch[block] -= 1;
    }
    SlotDeltas { dec, inc }
}

/// Finds the best strictly improving feasible exchange for one block, with
/// feasibility answered by an arbitrary oracle. Ties on the gain resolve to
/// the lexicographically smallest (from, to) pair.
///
/// Candidates are scanned in descending gain order with pruning, so the
/// feasibility oracle runs only on pairs that could still win.
pub(crate) fn best_move_with(
    deltas: &SlotDeltas,
    n: usize,
    mut feasible: impl FnMut(usize, usize) -> bool,
) -> Option<MoveCandidate> {
    let mut dec_order: Vec<usize> = (0..n).filter(|&i| deltas.dec[i].is_finite()).collect();
    dec_order.sort_by(|&a, &b| deltas.dec[b].total_cmp(&deltas.dec[a]).then(a.cmp(&b)));
    let mut inc_order: Vec<usize> = (0..n).collect();
    inc_order.sort_by(|&a, &b| deltas.inc[b].total_cmp(&deltas.inc[a]).then(a.cmp(&b)));
    let best_inc = inc_order
        .first()
        .map(|&j| deltas.inc[j])
        .unwrap_or(f64::NEG_INFINITY);

    let mut best: Option<MoveCandidate> = None;
    for &from in &dec_order {
        let cap = deltas.dec[from] + best_inc;
        if cap <= best.map_or(0.0, |b| b.gain) {
            break;
        }
        for &to in &inc_order {
            let gain = deltas.dec[from] + deltas.inc[to];
            if gain <= best.map_or(0.0, |b| b.gain) {
                break;
            }
            if to != from && feasible(from, to) {
                best = Some(MoveCandidate { from, to, gain });
                break;
            }
        }
    }
    let best = best?;
    // Lexicographic re-scan among the pairs attaining the best gain.
    for from in 0..n {
        let dec = deltas.dec[from];
        if !dec.is_finite() {
            continue;
        }
        for to in 0..n {
            if to == from || dec + deltas.inc[to] != best.gain {
                continue;
            }
            if from == best.from && to == best.to {
                return Some(best);
            }
            if feasible(from, to) {
                return Some(MoveCandidate {
                    from,
                    to,
                    gain: best.gain,
                });
            }
        }
    }
    Some(best)
}

/// Best strictly improving exchange for `block` with feasibility from the
/// exchange graph.
pub fn best_move(
    objective: &dyn SlotObjective,
    joint: &JointCounts,
    block: usize,
    graph: &ExchangeGraph,
) -> Option<MoveCandidate> {
    let deltas = slot_deltas(objective, joint, block);
    let n = joint.n();
    let mut rows: Vec<Option<ReachRow>> = (0..n).map(|_| None).collect();
    best_move_with(&deltas, n, |from, to| {
        rows[from]
            .get_or_insert_with(|| graph.reachable_row(from))
            .contains(to)
    })
}

/// Statistics of one greedy run.
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    /// Traffic vector after every applied exchange, starting point included.
    pub iterates: Vec<Vec<u32>>,
    pub iterations: usize,
}

/// Every member best-responds to zero prices; the resulting decomposition is
/// optimal at its own traffic vector and serves as the greedy start.
pub fn initial_decomposition(slice: &BlockSlice) -> Result<Decomposition> {
    Decomposition::baseline(slice)
}

/// Runs the greedy ascent for a single block to a local (hence global)
/// maximum of the penalized objective over the feasible sum. The
/// decomposition, graph and joint counts are updated in place.
pub fn greedy_maximize(
    slice: &BlockSlice,
    decomposition: &mut Decomposition,
    graph: &mut ExchangeGraph,
    objective: &dyn SlotObjective,
    joint: &mut JointCounts,
    block: usize,
) -> Result<GreedyTrace> {
    let mut trace = GreedyTrace {
        iterates: vec![decomposition.counts().to_vec()],
        iterations: 0,
    };
    loop {
        let Some(step) = best_move(objective, joint, block, graph) else {
            return Ok(trace);
        };
        exchange(slice, decomposition, graph, step.from, step.to)?;
        joint.apply_move(block, step.from, step.to);
        trace.iterates.push(decomposition.counts().to_vec());
        trace.iterations += 1;
    }
}

/// Compact max-flow network for the membership oracle.
struct FlowNetwork {
    heads: Vec<usize>,
    caps: Vec<i64>,
    next: Vec<usize>,
    first: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            heads: Vec::new(),
            caps: Vec::new(),
            next: Vec::new(),
            first: vec![NONE; nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.heads.len();
        self.heads.push(to);
        self.caps.push(cap);
        self.next.push(self.first[from]);
        self.first[from] = id;
        self.heads.push(from);
        self.caps.push(0);
        self.next.push(self.first[to]);
        self.first[to] = id + 1;
        id
    }

    fn bfs_levels(&self, source: usize, sink: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.first.len()];
        let mut queue = std::collections::VecDeque::from([source]);
        level[source] = 0;
        while let Some(u) = queue.pop_front() {
            let mut e = self.first[u];
            while e != NONE {
                let v = self.heads[e];
                if self.caps[e] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
                e = self.next[e];
            }
        }
        (level[sink] != u32::MAX).then_some(level)
    }

    fn dfs_push(
        &mut self,
        u: usize,
        sink: usize,
        pushed: i64,
        level: &[u32],
        cursor: &mut [usize],
    ) -> i64 {
        if u == sink {
            return pushed;
        }
        while cursor[u] != NONE {
            let e = cursor[u];
            let v = self.heads[e];
            if self.caps[e] > 0 && level[v] == level[u] + 1 {
                let flow = self.dfs_push(v, sink, pushed.min(self.caps[e]), level, cursor);
                if flow > 0 {
                    self.caps[e] -= flow;
                    self.caps[e ^ 1] += flow;
                    return flow;
                }
            }
            cursor[u] = self.next[e];
        }
        0
    }

    fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0;
        while let Some(level) = self.bfs_levels(source, sink) {
            let mut cursor = self.first.clone();
            loop {
                let pushed = self.dfs_push(source, sink, i64::MAX, &level, &mut cursor);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

/// Flow-based membership test for the sum of feasible sets: the target is a
/// member exactly when the bipartite transportation problem (customers
/// supply their demand, slots absorb the target counts, unit edges on
/// allowed slots) is saturable. Returns a witness decomposition on success.
///
/// This route is independent of the exchange-graph machinery and of the
/// majorization shortcut, which is what makes it usable as an oracle against
/// both.
pub fn minkowski_member(
    feasible: &[FeasibleSet],
    target: &[u32],
) -> Result<Option<Vec<ConsumptionProfile>>> {
    let n = target.len();
    for fs in feasible {
        if fs.n() != n {
            return Err(Error::validation(format!(
                "feasible set over {} slots, target over {n}",
                fs.n()
            )));
        }
    }
    let demand: i64 = feasible.iter().map(|f| i64::from(f.requests())).sum();
    let supply: i64 = target.iter().map(|&c| i64::from(c)).sum();
    if demand != supply {
        return Ok(None);
    }
    let k = feasible.len();
    let source = k + n;
    let sink = k + n + 1;
    let mut net = FlowNetwork::new(k + n + 2);
    let mut member_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (m, fs) in feasible.iter().enumerate() {
        net.add_edge(source, m, i64::from(fs.requests()));
        for &slot in fs.allowed() {
            let e = net.add_edge(m, k + slot, 1);
            member_edges[m].push((slot, e));
        }
    }
    for (slot, &count) in target.iter().enumerate() {
        net.add_edge(k + slot, sink, i64::from(count));
    }
    if net.max_flow(source, sink) != demand {
        return Ok(None);
    }
    let mut witness = Vec::with_capacity(k);
    for (m, fs) in feasible.iter().enumerate() {
        let slots = member_edges[m]
            .iter()
            .filter_map(|&(slot, e)| (net.caps[e] == 0).then_some(slot));
        witness.push(ConsumptionProfile::from_active_slots(n, slots, fs)?);
    }
    Ok(Some(witness))
}
