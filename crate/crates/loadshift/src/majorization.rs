//! Fast path for blocks whose customers have no forbidden slots: membership
//! in the feasible sum reduces to a majorization test against the conjugate
//! of the demand profile, neighbor feasibility to a prefix-sum window check,
//! and the final decomposition to one min-cost flow.

use crate::error::{Error, Result};
use crate::exchange::{recover_prices, Decomposition, ExchangeGraph, PriceRecovery};
use crate::greedy::{best_move_with, slot_deltas, JointCounts};
use crate::model::BlockSlice;
use crate::response::{best_response, ConsumptionProfile};
use crate::satisfaction::SlotObjective;

/// Upper bound of the feasible sum in the majorization order: coordinate `i`
/// counts the customers demanding more than `i` requests, which is the
/// conjugate partition of the demand multiset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MajorizationBound {
    nmax: Vec<u32>,
    prefix: Vec<u64>,
}

impl MajorizationBound {
    /// Sorted (nonincreasing) bound vector.
    pub fn nmax(&self) -> &[u32] {
        &self.nmax
    }

    pub fn total(&self) -> u64 {
        *self.prefix.last().unwrap_or(&0)
    }
}

pub fn conjugate_bound(demands: &[u32], n: usize) -> MajorizationBound {
    let mut nmax = vec![0u32; n];
    for &r in demands {
        debug_assert!(r as usize <= n);
        for slot in nmax.iter_mut().take(r as usize) {
            *slot += 1;
        }
    }
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = 0u64;
    prefix.push(0);
    for &v in &nmax {
        acc += u64::from(v);
        prefix.push(acc);
    }
    MajorizationBound { nmax, prefix }
}

/// Majorization test: equal totals and dominated sorted prefix sums.
pub fn is_majorized(counts: &[u32], bound: &MajorizationBound) -> bool {
    if counts.len() != bound.nmax.len() {
        return false;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut acc = 0u64;
    for (k, &v) in sorted.iter().enumerate() {
        acc += u64::from(v);
        if acc > bound.prefix[k + 1] {
            return false;
        }
    }
    acc == bound.total()
}

/// Sorted view of a member vector with the bookkeeping needed to answer all
/// `n^2` neighbor queries without re-sorting: prefix sums and, per rank, the
/// next rank at which the prefix sum is tight against the bound.
#[derive(Debug)]
pub struct MajorCache {
    sorted: Vec<u32>,
    /// `tight_from[k]` (1-based rank) = smallest rank `>= k` whose prefix is
    /// tight; `n + 1` when none is.
    tight_from: Vec<usize>,
}

impl MajorCache {
    pub fn build(counts: &[u32], bound: &MajorizationBound) -> Result<Self> {
        let n = counts.len();
        if n != bound.nmax.len() {
            return Err(Error::validation(format!(
                "counts over {n} slots, bound over {}",
                bound.nmax.len()
            )));
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut prefix = 0u64;
        let mut tight = vec![false; n + 1];
        for (k, &v) in sorted.iter().enumerate() {
            prefix += u64::from(v);
            if prefix > bound.prefix[k + 1] {
                return Err(Error::internal(
                    "neighbor query on a vector outside the feasible sum",
                ));
            }
            tight[k + 1] = prefix == bound.prefix[k + 1];
        }
        if prefix != bound.total() {
            return Err(Error::internal(
                "neighbor query on a vector with the wrong total",
            ));
        }
        let mut tight_from = vec![n + 1; n + 2];
        for k in (1..=n).rev() {
            tight_from[k] = if tight[k] { k } else { tight_from[k + 1] };
        }
        Ok(MajorCache {
            sorted,
            tight_from,
        })
    }

    /// 1-based rank of the first sorted entry equal to `value`.
    fn first_rank(&self, value: u32) -> usize {
        self.sorted.partition_point(|&x| x > value) + 1
    }

    /// 1-based rank of the last sorted entry equal to `value`.
    fn last_rank(&self, value: u32) -> usize {
        self.sorted.partition_point(|&x| x >= value)
    }

    /// Whether `counts - e_from + e_to` stays inside the feasible sum.
    ///
    /// Moving off a strictly taller slot always stays inside. Otherwise the
    /// move bumps the sorted prefix sums by one exactly on the rank window
    /// `[first_rank(counts[to]), last_rank(counts[from]) - 1]`, so it stays
    /// inside exactly when no prefix in that window is already tight.
    pub fn neighbor_feasible(&self, counts: &[u32], from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let tall = counts[from];
        if tall == 0 {
            return false;
        }
        let short = counts[to];
        if tall > short {
            return true;
        }
        let start = self.first_rank(short);
        let end = self.last_rank(tall);
        debug_assert!(start < end);
        self.tight_from[start] >= end
    }
}

/// One-shot wrapper building the cache per call; the solver loop holds a
/// cache across the whole neighbor scan instead.
pub fn neighbor_feasible_major(
    counts: &[u32],
    bound: &MajorizationBound,
    from: usize,
    to: usize,
) -> Result<bool> {
    Ok(MajorCache::build(counts, bound)?.neighbor_feasible(counts, from, to))
}

/// An optimal decomposition of a traffic vector plus the node potentials
/// certifying flow optimality.
#[derive(Debug, Clone)]
pub struct FlowDecomposition {
    pub decomposition: Decomposition,
    pub member_potentials: Vec<f64>,
    pub slot_potentials: Vec<f64>,
}

#[derive(Clone, Copy)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed so the max-heap pops the smallest distance
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.node.cmp(&self.node))
    }
}

struct MinCostFlow {
    heads: Vec<usize>,
    residual: Vec<f64>,
    cost: Vec<f64>,
    next: Vec<usize>,
    first: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl MinCostFlow {
    fn new(nodes: usize) -> Self {
        MinCostFlow {
            heads: Vec::new(),
            residual: Vec::new(),
            cost: Vec::new(),
            next: Vec::new(),
            first: vec![NONE; nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        let id = self.heads.len();
        self.heads.push(to);
        self.residual.push(cap);
        self.cost.push(cost);
        self.next.push(self.first[from]);
        self.first[from] = id;
        self.heads.push(from);
        self.residual.push(0.0);
        self.cost.push(-cost);
        self.next.push(self.first[to]);
        self.first[to] = id + 1;
        id
    }

    fn tail(&self, edge: usize) -> usize {
        self.heads[edge ^ 1]
    }

    /// One Bellman-Ford sweep to seed the potentials; the initial residual
    /// network is layered, so this converges quickly.
    fn seed_potentials(&self, source: usize, potentials: &mut [f64]) {
        potentials.fill(f64::INFINITY);
        potentials[source] = 0.0;
        let nodes = self.first.len();
        for _ in 0..nodes {
            let mut relaxed = false;
            for e in (0..self.heads.len()).step_by(2) {
                if self.residual[e] <= 0.0 {
                    continue;
                }
                let u = self.tail(e);
                let v = self.heads[e];
                if potentials[u].is_finite() && potentials[u] + self.cost[e] < potentials[v] {
                    potentials[v] = potentials[u] + self.cost[e];
                    relaxed = true;
                }
            }
            if !relaxed {
                break;
            }
        }
        for p in potentials.iter_mut() {
            if !p.is_finite() {
                *p = 0.0;
            }
        }
    }

    /// Successive shortest paths with node potentials. Returns the total
    /// flow pushed and leaves the potentials certifying optimality.
    fn run(&mut self, source: usize, sink: usize, potentials: &mut [f64]) -> f64 {
        let nodes = self.first.len();
        self.seed_potentials(source, potentials);
        let mut total = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; nodes];
            let mut parent_edge = vec![NONE; nodes];
            let mut heap = std::collections::BinaryHeap::new();
            dist[source] = 0.0;
            heap.push(HeapEntry {
                dist: 0.0,
                node: source,
            });
            while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                let mut e = self.first[u];
                while e != NONE {
                    if self.residual[e] > 0.0 {
                        let v = self.heads[e];
                        let reduced = self.cost[e] + potentials[u] - potentials[v];
                        let cand = d + reduced;
                        if cand < dist[v] {
                            dist[v] = cand;
                            parent_edge[v] = e;
                            heap.push(HeapEntry {
                                dist: cand,
                                node: v,
                            });
                        }
                    }
                    e = self.next[e];
                }
            }
            if parent_edge[sink] == NONE {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = sink;
            while v != source {
                let e = parent_edge[v];
                bottleneck = bottleneck.min(self.residual[e]);
                v = self.tail(e);
            }
            let mut v = sink;
            while v != source {
                let e = parent_edge[v];
                self.residual[e] -= bottleneck;
                self.residual[e ^ 1] += bottleneck;
                v = self.tail(e);
            }
            for u in 0..nodes {
                if dist[u].is_finite() {
                    potentials[u] += dist[u];
                }
            }
            total += bottleneck;
        }
    }
}

/// Optimal decomposition of a target traffic vector by successive shortest
/// paths on the bipartite transportation network: members supply their
/// demands, slots absorb the target counts, and each allowed (member, slot)
/// edge has unit capacity and cost equal to the negated score.
pub fn mincostflow_decompose(slice: &BlockSlice, target: &[u32]) -> Result<FlowDecomposition> {
    let n = slice.n;
    if target.len() != n {
        return Err(Error::validation(format!(
            "target has {} entries, expected {n}",
            target.len()
        )));
    }
    let demand: u64 = slice.total_requests();
    let supply: u64 = target.iter().map(|&c| u64::from(c)).sum();
    if demand != supply {
        return Err(Error::infeasible(format!(
            "target carries {supply} requests but customers demand {demand}"
        )));
    }
    let k = slice.members.len();
    let source = k + n;
    let sink = k + n + 1;
    let mut net = MinCostFlow::new(k + n + 2);
    let mut member_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (member, edges) in member_edges.iter_mut().enumerate() {
        let fs = &slice.feasible[member];
        if fs.requests() > 0 {
            net.add_edge(source, member, f64::from(fs.requests()), 0.0);
        }
        for &slot in fs.allowed() {
            let e = net.add_edge(member, k + slot, 1.0, -slice.scores[member][slot]);
            edges.push((slot, e));
        }
    }
    for (slot, &count) in target.iter().enumerate() {
        if count > 0 {
            net.add_edge(k + slot, sink, f64::from(count), 0.0);
        }
    }
    let mut potentials = vec![0.0; k + n + 2];
    let pushed = net.run(source, sink, &mut potentials);
    if pushed != demand as f64 {
        return Err(Error::infeasible(
            "target counts are not decomposable over the customers' feasible sets",
        ));
    }
    let mut profiles = Vec::with_capacity(k);
    for (member, fs) in slice.feasible.iter().enumerate() {
        let slots = member_edges[member]
            .iter()
            .filter_map(|&(slot, e)| (net.residual[e] == 0.0).then_some(slot));
        profiles.push(ConsumptionProfile::from_active_slots(n, slots, fs)?);
    }
    let decomposition = Decomposition::from_profiles(slice, profiles)?;
    Ok(FlowDecomposition {
        decomposition,
        member_potentials: potentials[..k].to_vec(),
        slot_potentials: potentials[k..k + n].to_vec(),
    })
}

/// Output of the accelerated single-block pipeline.
#[derive(Debug, Clone)]
pub struct MajorSolve {
    pub counts: Vec<u32>,
    pub decomposition: Decomposition,
    pub prices: PriceRecovery,
    pub trace: Vec<Vec<u32>>,
    pub iterations: usize,
}

/// Accelerated pipeline for a block whose customers have no forbidden
/// slots: greedy ascent with majorization-based neighbor tests, then one
/// min-cost-flow for the decomposition, then shortest-path price recovery.
pub fn solve_major(
    slice: &BlockSlice,
    objective: &dyn SlotObjective,
    source: usize,
    initial: Option<&[u32]>,
) -> Result<MajorSolve> {
    if objective.blocks() != 1 {
        return Err(Error::validation(
            "majorization pipeline solves a single traffic block",
        ));
    }
    let n = slice.n;
    for (idx, fs) in slice.feasible.iter().enumerate() {
        if fs.allowed_count() != n {
            return Err(Error::validation(format!(
                "customer {} application {} has forbidden slots; the majorization fast path \
                 requires unrestricted customers",
                slice.members[idx], slice.app
            )));
        }
    }
    let demands: Vec<u32> = slice.feasible.iter().map(|f| f.requests()).collect();
    let bound = conjugate_bound(&demands, n);

    let mut counts = match initial {
        Some(start) => {
            if !is_majorized(start, &bound) {
                return Err(Error::infeasible(
                    "start vector is not a feasible traffic vector for this block",
                ));
            }
            start.to_vec()
        }
        None => {
            let zero = vec![0.0; n];
            let mut counts = vec![0u32; n];
            for member in 0..slice.members.len() {
                let response =
                    best_response(&slice.feasible[member], &slice.scores[member], &zero)?;
                for slot in response.active_slots() {
                    counts[slot] += 1;
                }
            }
            counts
        }
    };

    let mut joint = JointCounts::from_blocks(vec![counts.clone()]);
    let mut trace = vec![counts.clone()];
    let mut iterations = 0usize;
    loop {
        let cache = MajorCache::build(&counts, &bound)?;
        let deltas = slot_deltas(objective, &joint, 0);
        let Some(step) = best_move_with(&deltas, n, |from, to| {
            cache.neighbor_feasible(&counts, from, to)
        }) else {
            break;
        };
        counts[step.from] -= 1;
        counts[step.to] += 1;
        joint.apply_move(0, step.from, step.to);
        trace.push(counts.clone());
        iterations += 1;
    }

    let flow = mincostflow_decompose(slice, &counts)?;
    let graph = ExchangeGraph::build(slice, &flow.decomposition);
    let prices = recover_prices(&graph, source)?;
    Ok(MajorSolve {
        counts,
        decomposition: flow.decomposition,
        prices,
        trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::minkowski_member;
    use crate::model::FeasibleSet;
    use crate::satisfaction::AggregateObjective;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conjugate_bound_fixtures() {
        // the worked example: demands (1,2,1,2,1) conjugate to (5,2,0)
        let b = conjugate_bound(&[1, 2, 1, 2, 1], 3);
        assert_eq!(b.nmax(), &[5, 2, 0]);
        // everyone demands everything
        let b = conjugate_bound(&[4, 4, 4], 4);
        assert_eq!(b.nmax(), &[3, 3, 3, 3]);
        // a single two-request customer over four slots
        let b = conjugate_bound(&[2], 4);
        assert_eq!(b.nmax(), &[1, 1, 0, 0]);
    }

    #[test]
    fn majorization_fixtures() {
        let b = conjugate_bound(&[1, 2, 1, 2, 1], 3);
        assert!(is_majorized(&[3, 2, 2], &b));
        assert!(!is_majorized(&[6, 1, 0], &b));
        assert!(is_majorized(&[5, 2, 0], &b));
        assert!(!is_majorized(&[3, 2, 1], &b));
    }

    #[test]
    fn neighbor_fixtures() {
        let b = conjugate_bound(&[1, 2, 1, 2, 1], 3);
        // moving off the tallest slot
        assert!(neighbor_feasible_major(&[3, 2, 2], &b, 0, 1).unwrap());
        // moving from a shorter onto the tallest: (3,2,2) -> (4,1,2)
        assert!(neighbor_feasible_major(&[3, 2, 2], &b, 1, 0).unwrap());
        // an empty slot can never give
        assert!(!neighbor_feasible_major(&[5, 2, 0], &b, 2, 0).unwrap());
        // (5,2,0) -> (6,1,0) overflows the first prefix
        assert!(!neighbor_feasible_major(&[5, 2, 0], &b, 1, 0).unwrap());
        // taller-to-shorter is always fine when the source is nonempty
        assert!(neighbor_feasible_major(&[5, 2, 0], &b, 0, 2).unwrap());
    }

    #[test]
    fn neighbor_test_agrees_with_direct_majorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(2..=6usize);
            let k = rng.random_range(1..=6usize);
            let demands: Vec<u32> = (0..k).map(|_| rng.random_range(1..=n as u32)).collect();
            let bound = conjugate_bound(&demands, n);
            let sets: Vec<FeasibleSet> = demands
                .iter()
                .map(|&r| FeasibleSet::from_parts(n, 0..n, r).unwrap())
                .collect();
            // draw a member by sampling profiles directly
            let mut counts = vec![0u32; n];
            for fs in &sets {
                let mut open: Vec<usize> = (0..n).collect();
                open.shuffle(&mut rng);
                for &slot in open.iter().take(fs.requests() as usize) {
                    counts[slot] += 1;
                }
            }
            assert!(is_majorized(&counts, &bound));
            let cache = MajorCache::build(&counts, &bound).unwrap();
            for from in 0..n {
                for to in 0..n {
                    if from == to || counts[from] == 0 {
                        continue;
                    }
                    let mut moved = counts.clone();
                    moved[from] -= 1;
                    moved[to] += 1;
                    assert_eq!(
                        cache.neighbor_feasible(&counts, from, to),
                        is_majorized(&moved, &bound),
                        "counts {counts:?} move {from}->{to} bound {:?}",
                        bound.nmax()
                    );
                }
            }
        }
    }

    proptest::proptest! {
        // the constant-work neighbor test agrees with re-checking the
        // explicit neighbor, for arbitrary members of the feasible sum
        #[test]
        fn neighbor_test_is_exact(
            demands in proptest::collection::vec(1u32..=3, 1..6),
            n in 2usize..6,
            seed in 0u64..1024,
        ) {
            let demands: Vec<u32> = demands.iter().map(|&r| r.min(n as u32)).collect();
            let bound = conjugate_bound(&demands, n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = vec![0u32; n];
            for &r in &demands {
                let mut open: Vec<usize> = (0..n).collect();
                open.shuffle(&mut rng);
                for &slot in open.iter().take(r as usize) {
                    counts[slot] += 1;
                }
            }
            let cache = MajorCache::build(&counts, &bound).unwrap();
            for from in 0..n {
                for to in 0..n {
                    if from == to || counts[from] == 0 {
                        continue;
                    }
                    let mut moved = counts.clone();
                    moved[from] -= 1;
                    moved[to] += 1;
                    proptest::prop_assert_eq!(
                        cache.neighbor_feasible(&counts, from, to),
                        is_majorized(&moved, &bound)
                    );
                }
            }
        }
    }

    #[test]
    fn gale_ryser_equivalence_with_flow_oracle() {
        // enumerate the whole simplex slice and compare both membership
        // routes
        fn slice_vectors(n: usize, total: u32) -> Vec<Vec<u32>> {
            fn rec(n: usize, total: u32, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
                if n == 1 {
                    acc.push(total);
                    out.push(acc.clone());
                    acc.pop();
                    return;
                }
                for v in 0..=total {
                    acc.push(v);
                    rec(n - 1, total - v, acc, out);
                    acc.pop();
                }
            }
            let mut out = Vec::new();
            rec(n, total, &mut Vec::new(), &mut out);
            out
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.random_range(2..=4usize);
            let k = rng.random_range(1..=5usize);
            let demands: Vec<u32> = (0..k).map(|_| rng.random_range(1..=n as u32)).collect();
            let total: u32 = demands.iter().sum();
            let bound = conjugate_bound(&demands, n);
            let sets: Vec<FeasibleSet> = demands
                .iter()
                .map(|&r| FeasibleSet::from_parts(n, 0..n, r).unwrap())
                .collect();
            for counts in slice_vectors(n, total) {
                let fast = is_majorized(&counts, &bound);
                let flow = minkowski_member(&sets, &counts).unwrap().is_some();
                assert_eq!(fast, flow, "counts {counts:?} demands {demands:?}");
            }
        }
    }

    fn example_slice() -> BlockSlice {
        BlockSlice::build(&crate::testutil::example_scenario(), 0, 0).unwrap()
    }

    #[test]
    fn flow_decomposition_unique_assignment() {
        use crate::model::*;
        let scenario = Scenario {
            time_slots: 2,
            app_kinds: vec![AppKind::Elastic],
            contracts: vec![ContractParams {
                weight: 1.0,
                steepness: 1.0,
            }],
            cells: vec![CellParams {
                soft_threshold: 8,
                capacity: 9,
            }],
            customers: vec![
                Customer {
                    contract: 0,
                    trajectory: vec![0, 0],
                    apps: vec![AppDemand {
                        requests: 1,
                        forbidden_times: vec![],
                        preferences: vec![1.0, 0.0],
                        sensitivity: 1.0,
                    }],
                },
                Customer {
                    contract: 0,
                    trajectory: vec![0, 0],
                    apps: vec![AppDemand {
                        requests: 1,
                        forbidden_times: vec![],
                        preferences: vec![0.0, 1.0],
                        sensitivity: 1.0,
                    }],
                },
            ],
        };
        let slice = BlockSlice::build(&scenario, 0, 0).unwrap();
        let flow = mincostflow_decompose(&slice, &[1, 1]).unwrap();
        assert_eq!(flow.decomposition.profiles()[0].active_slots(), vec![0]);
        assert_eq!(flow.decomposition.profiles()[1].active_slots(), vec![1]);
        assert_eq!(flow.decomposition.total_score(&slice), 2.0);
    }

    #[test]
    fn flow_decomposition_matches_worked_example() {
        let slice = example_slice();
        let flow = mincostflow_decompose(&slice, &[3, 2, 2]).unwrap();
        let expected: [&[usize]; 5] = [&[0], &[0, 2], &[1], &[0, 2], &[1]];
        for (profile, want) in flow.decomposition.profiles().iter().zip(expected) {
            assert_eq!(profile.active_slots(), want);
        }
        // the optimum value, confirmed by brute force below
        assert_eq!(flow.decomposition.total_score(&slice), 3.5);
        let brute = crate::testutil::brute_force_best_decomposition(&slice, &[3, 2, 2]);
        assert_eq!(brute, 3.5);
    }

    #[test]
    fn flow_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for case in 0..60 {
            use crate::model::*;
            let t = rng.random_range(2..=4usize);
            let k = rng.random_range(1..=4usize);
            let customers: Vec<Customer> = (0..k)
                .map(|_| {
                    let requests = rng.random_range(0..=2.min(t) as u32);
                    Customer {
                        contract: 0,
                        trajectory: vec![0; t],
                        apps: vec![AppDemand {
                            requests,
                            forbidden_times: (0..t).filter(|_| rng.random_bool(0.15)).collect(),
                            preferences: (0..t)
                                .map(|_| f64::from(rng.random_range(-8..=8i32)) / 4.0)
                                .collect(),
                            sensitivity: 1.0,
                        }],
                    }
                })
                .collect();
            let mut scenario = Scenario {
                time_slots: t,
                app_kinds: vec![AppKind::Elastic],
                contracts: vec![ContractParams {
                    weight: 1.0,
                    steepness: 1.0,
                }],
                cells: vec![CellParams {
                    soft_threshold: 20,
                    capacity: 21,
                }],
                customers,
            };
            scenario.canonicalize();
            if scenario.validate().is_err() {
                continue;
            }
            let slice = BlockSlice::build(&scenario, 0, 0).unwrap();
            // build a reachable target by sampling one profile per member
            let mut target = vec![0u32; slice.n];
            for fs in &slice.feasible {
                let mut open = fs.allowed().to_vec();
                open.shuffle(&mut rng);
                for &slot in open.iter().take(fs.requests() as usize) {
                    target[slot] += 1;
                }
            }
            let flow = mincostflow_decompose(&slice, &target).unwrap();
            let brute = crate::testutil::brute_force_best_decomposition(&slice, &target);
            assert_eq!(flow.decomposition.total_score(&slice), brute, "case {case}");
            let counts = flow.decomposition.counts();
            assert_eq!(counts, &target[..], "case {case} counts");
        }
    }

    #[test]
    fn flow_potentials_certify_optimality() {
        let slice = example_slice();
        let flow = mincostflow_decompose(&slice, &[3, 2, 2]).unwrap();
        for member in 0..slice.members.len() {
            let profile = &flow.decomposition.profiles()[member];
            for &slot in slice.feasible[member].allowed() {
                let reduced = -slice.scores[member][slot] + flow.member_potentials[member]
                    - flow.slot_potentials[slot];
                if profile.is_active(slot) {
                    assert!(reduced <= 0.0, "used arc with positive reduced cost");
                } else {
                    assert!(reduced >= 0.0, "free arc with negative reduced cost");
                }
            }
        }
    }

    #[test]
    fn infeasible_targets_are_rejected() {
        let slice = example_slice();
        assert!(mincostflow_decompose(&slice, &[6, 1, 0]).is_err());
        assert!(mincostflow_decompose(&slice, &[3, 2, 1]).is_err());
    }

    #[test]
    fn solve_major_dispatch_requires_open_customers() {
        let mut scenario = crate::testutil::example_scenario();
        scenario.customers[2].apps[0].forbidden_times = vec![1];
        scenario.canonicalize();
        let slice = BlockSlice::build(&scenario, 0, 0).unwrap();
        let objective = AggregateObjective::new(1, |_, x| -f64::from(x) * f64::from(x));
        let err = solve_major(&slice, &objective, 0, None).unwrap_err();
        assert!(err.to_string().contains("customer 2"), "{err}");
    }

    #[test]
    fn solve_major_end_to_end_on_the_worked_example() {
        let slice = example_slice();
        let objective = AggregateObjective::new(1, |_, x| -f64::from(x) * f64::from(x));
        let solved = solve_major(&slice, &objective, 0, Some(&[5, 2, 0])).unwrap();
        assert_eq!(
            solved.trace,
            vec![vec![5, 2, 0], vec![4, 2, 1], vec![3, 2, 2]]
        );
        assert_eq!(solved.counts, vec![3, 2, 2]);
        let y = &solved.prices.raw.values;
        assert!(y[0] - y[1] <= 1.5 && y[0] - y[1] >= 0.0);
        assert!(y[0] - y[2] >= 0.0);
        assert!(y[1] - y[2] >= -1.0 && y[1] - y[2] <= -0.5);
    }

    #[test]
    fn solve_major_single_customer() {
        use crate::model::*;
        let scenario = Scenario {
            time_slots: 3,
            app_kinds: vec![AppKind::Elastic],
            contracts: vec![ContractParams {
                weight: 1.0,
                steepness: 1.0,
            }],
            cells: vec![CellParams {
                soft_threshold: 8,
                capacity: 9,
            }],
            customers: vec![Customer {
                contract: 0,
                trajectory: vec![0; 3],
                apps: vec![AppDemand {
                    requests: 2,
                    forbidden_times: vec![],
                    preferences: vec![2.0, 1.0, 0.0],
                    sensitivity: 1.0,
                }],
            }],
        };
        let slice = BlockSlice::build(&scenario, 0, 0).unwrap();
        // spreading objective: the best single profile is any two distinct
        // slots; value is -2 everywhere, so the baseline stays put
        let objective = AggregateObjective::new(1, |_, x| -f64::from(x) * f64::from(x));
        let solved = solve_major(&slice, &objective, 0, None).unwrap();
        assert_eq!(solved.counts.iter().sum::<u32>(), 2);
        assert_eq!(solved.iterations, 0);
        assert_eq!(solved.counts, vec![1, 1, 0]);
    }
}
