//! Exchange graph over an optimal decomposition: neighbor feasibility,
//! shortest-path exchanges, and price recovery.
//!
//! For a decomposition realizing the inf-convolution optimum at its traffic
//! vector, the graph has one vertex per slot and an arc `i -> j` whenever
//! some customer holds a request at `i` and could move it to `j`; the arc
//! weight is the cheapest such customer's score loss. A finite path `i -> j`
//! certifies that the neighbor `N - e_i + e_j` is reachable, applying the
//! per-arc moves along a shortest path lands on an optimal decomposition of
//! the neighbor, and shortest-path distances from a source slot are exactly a
//! price vector inducing every stored profile.

use crate::error::{Error, Result};
use crate::model::BlockSlice;
use crate::response::{best_response, ConsumptionProfile, PriceSchedule};

const NO_CUSTOMER: u32 = u32::MAX;

/// Per-customer profiles together with their traffic vector and the
/// inf-convolution value `-(sum of profile scores)`. Construction and
/// exchanges keep the profiles optimal for the current traffic vector, so
/// the value is a class invariant rather than something callers recompute.
#[derive(Debug, Clone)]
pub struct Decomposition {
    profiles: Vec<ConsumptionProfile>,
    counts: Vec<u32>,
    psi: f64,
}

impl Decomposition {
    /// Assembles a decomposition from explicit profiles. The caller asserts
    /// optimality (all constructors in this crate only pass profiles coming
    /// from best responses, the min-cost-flow, or exchange updates).
    pub fn from_profiles(slice: &BlockSlice, profiles: Vec<ConsumptionProfile>) -> Result<Self> {
        if profiles.len() != slice.members.len() {
            return Err(Error::validation(format!(
                "{} profiles for {} block members",
                profiles.len(),
                slice.members.len()
            )));
        }
        let mut counts = vec![0u32; slice.n];
        let mut psi = 0.0;
        for (member, profile) in profiles.iter().enumerate() {
            for slot in profile.active_slots() {
                if !slice.feasible[member].is_allowed(slot) {
                    return Err(Error::validation(format!(
                        "member {member} profile active on forbidden slot {slot}"
                    )));
                }
                counts[slot] += 1;
            }
            psi -= profile.score(&slice.scores[member]);
        }
        Ok(Decomposition {
            profiles,
            counts,
            psi,
        })
    }

    /// The baseline decomposition: every member best-responds to zero
    /// prices. Such a family realizes the inf-convolution minimum at its own
    /// traffic vector, which makes it a valid greedy starting point.
    pub fn baseline(slice: &BlockSlice) -> Result<Self> {
        let zero = vec![0.0; slice.n];
        let mut profiles = Vec::with_capacity(slice.members.len());
        for member in 0..slice.members.len() {
            profiles.push(best_response(
                &slice.feasible[member],
                &slice.scores[member],
                &zero,
            )?);
        }
        Self::from_profiles(slice, profiles)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn profiles(&self) -> &[ConsumptionProfile] {
        &self.profiles
    }

    /// Inf-convolution value at the current traffic vector.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn total_score(&self, slice: &BlockSlice) -> f64 {
        self.profiles
            .iter()
            .zip(&slice.scores)
            .map(|(p, s)| p.score(s))
            .sum()
    }
}

/// Result of applying one exchange: the path walked and the members whose
/// profiles changed.
#[derive(Debug, Clone)]
pub struct ExchangeOutcome {
    pub path: Vec<usize>,
    pub touched: Vec<usize>,
    pub path_length: f64,
}

/// Dense arc matrix with the cheapest mover per arc.
#[derive(Debug, Clone)]
pub struct ExchangeGraph {
    n: usize,
    weight: Vec<f64>,
    arg: Vec<u32>,
}

impl ExchangeGraph {
    pub fn build(slice: &BlockSlice, decomposition: &Decomposition) -> Self {
        let n = slice.n;
        let mut graph = ExchangeGraph {
            n,
            weight: vec![f64::INFINITY; n * n],
            arg: vec![NO_CUSTOMER; n * n],
        };
        for member in 0..slice.members.len() {
            graph.relax_member(slice, decomposition, member);
        }
        graph
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weight[from * self.n + to]
    }

    /// Block-member index of the cheapest mover on the arc, if the arc is
    /// finite.
    pub fn arg_member(&self, from: usize, to: usize) -> Option<usize> {
        let arg = self.arg[from * self.n + to];
        (arg != NO_CUSTOMER).then_some(arg as usize)
    }

    pub fn finite_arcs(&self) -> Vec<(usize, usize, f64)> {
        let mut arcs = Vec::new();
        for from in 0..self.n {
            for to in 0..self.n {
                let w = self.weight(from, to);
                if w.is_finite() {
                    arcs.push((from, to, w));
                }
            }
        }
        arcs
    }

    pub fn has_finite_arcs(&self) -> bool {
        self.weight.iter().any(|w| w.is_finite())
    }

    fn offer(&mut self, from: usize, to: usize, weight: f64, member: usize) {
        let idx = from * self.n + to;
        // Ties go to the smallest member index so incremental patches match
        // a from-scratch rebuild bit for bit.
        if weight < self.weight[idx]
            || (weight == self.weight[idx] && (member as u32) < self.arg[idx])
        {
            self.weight[idx] = weight;
            self.arg[idx] = member as u32;
        }
    }

    fn relax_member(&mut self, slice: &BlockSlice, decomposition: &Decomposition, member: usize) {
        let profile = &decomposition.profiles[member];
        let scores = &slice.scores[member];
        let allowed = slice.feasible[member].allowed();
        for &from in allowed {
            if !profile.is_active(from) {
                continue;
            }
            for &to in allowed {
                if profile.is_active(to) {
                    continue;
                }
                self.offer(from, to, scores[from] - scores[to], member);
            }
        }
    }

    /// Re-derives every arc whose cheapest mover changed profile, then lets
    /// the changed members bid again. Only the members on an exchange path
    /// change, so this is the per-iteration maintenance step.
    pub fn patch(&mut self, slice: &BlockSlice, decomposition: &Decomposition, touched: &[usize]) {
        if touched.is_empty() {
            return;
        }
        let mut is_touched = vec![false; slice.members.len()];
        for &m in touched {
            is_touched[m] = true;
        }
        for from in 0..self.n {
            for to in 0..self.n {
                let idx = from * self.n + to;
                let arg = self.arg[idx];
                if arg != NO_CUSTOMER && is_touched[arg as usize] {
                    self.recompute_arc(slice, decomposition, from, to);
                }
            }
        }
        for &member in touched {
            self.relax_member(slice, decomposition, member);
        }
    }

    fn recompute_arc(
        &mut self,
        slice: &BlockSlice,
        decomposition: &Decomposition,
        from: usize,
        to: usize,
    ) {
        let idx = from * self.n + to;
        self.weight[idx] = f64::INFINITY;
        self.arg[idx] = NO_CUSTOMER;
        for member in 0..slice.members.len() {
            let feasible = &slice.feasible[member];
            if !feasible.is_allowed(from) || !feasible.is_allowed(to) {
                continue;
            }
            let profile = &decomposition.profiles[member];
            if profile.is_active(from) && !profile.is_active(to) {
                let w = slice.scores[member][from] - slice.scores[member][to];
                self.offer(from, to, w, member);
            }
        }
    }

    /// Whether `to` can be reached from `from` along finite arcs, i.e.
    /// whether the neighboring traffic vector `N - e_from + e_to` stays in
    /// the feasible sum. A slot trivially reaches itself.
    pub fn neighbor_feasible(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            let row = &self.weight[u * self.n..(u + 1) * self.n];
            for (v, w) in row.iter().enumerate() {
                if !seen[v] && w.is_finite() {
                    if v == to {
                        return true;
                    }
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    /// Reachable-slot bitset row for one source, for callers that probe many
    /// targets against the same origin.
    pub fn reachable_row(&self, from: usize) -> ReachRow {
        let words = self.n.div_ceil(64);
        let mut row = vec![0u64; words];
        let mut stack = vec![from];
        row[from / 64] |= 1 << (from % 64);
        while let Some(u) = stack.pop() {
            let weights = &self.weight[u * self.n..(u + 1) * self.n];
            for (v, w) in weights.iter().enumerate() {
                if w.is_finite() && row[v / 64] & (1 << (v % 64)) == 0 {
                    row[v / 64] |= 1 << (v % 64);
                    stack.push(v);
                }
            }
        }
        ReachRow { bits: row }
    }

    /// Bellman-Ford over the finite arcs. Returns per-slot distances and
    /// predecessor slots; errors if a negative cycle is reachable from the
    /// source, which certifies the decomposition fed into `build` was not
    /// optimal.
    fn bellman_ford(
        &self,
        arcs: &[(usize, usize, f64)],
        source: usize,
    ) -> Result<(Vec<f64>, Vec<usize>)> {
        let mut dist = vec![f64::INFINITY; self.n];
        let mut parent = vec![usize::MAX; self.n];
        dist[source] = 0.0;
        for _ in 1..self.n.max(2) {
            let mut relaxed = false;
            for &(u, v, w) in arcs {
                if dist[u].is_finite() && dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    parent[v] = u;
                    relaxed = true;
                }
            }
            if !relaxed {
                return Ok((dist, parent));
            }
        }
        for &(u, v, w) in arcs {
            if dist[u].is_finite() && dist[u] + w < dist[v] {
                return Err(Error::internal(
                    "negative cycle in exchange graph; decomposition was not optimal",
                ));
            }
        }
        Ok((dist, parent))
    }

    /// Shortest finite-weight path between two slots, or `None` when
    /// unreachable.
    pub fn shortest_path(&self, from: usize, to: usize) -> Result<Option<(f64, Vec<usize>)>> {
        let (dist, parent) = self.bellman_ford(&self.finite_arcs(), from)?;
        if !dist[to].is_finite() {
            return Ok(None);
        }
        let mut path = vec![to];
        let mut cursor = to;
        while cursor != from {
            cursor = parent[cursor];
            path.push(cursor);
        }
        path.reverse();
        Ok(Some((dist[to], path)))
    }
}

/// Bitset of slots reachable from one source.
pub struct ReachRow {
    bits: Vec<u64>,
}

impl ReachRow {
    pub fn contains(&self, slot: usize) -> bool {
        self.bits[slot / 64] & (1 << (slot % 64)) != 0
    }
}

/// Moves one unit of traffic from `from` to `to` by walking a shortest path
/// and shifting the cheapest mover across each arc. The decomposition stays
/// optimal for the new traffic vector and its value grows by exactly the
/// path length. The graph is patched in place.
pub fn exchange(
    slice: &BlockSlice,
    decomposition: &mut Decomposition,
    graph: &mut ExchangeGraph,
    from: usize,
    to: usize,
) -> Result<ExchangeOutcome> {
    if from == to {
        return Ok(ExchangeOutcome {
            path: vec![from],
            touched: Vec::new(),
            path_length: 0.0,
        });
    }
    let Some((length, path)) = graph.shortest_path(from, to)? else {
        return Err(Error::infeasible(format!(
            "no exchange path between slots {from} and {to}"
        )));
    };
    let mut touched = Vec::new();
    for pair in path.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        let member = graph.arg_member(u, v).ok_or_else(|| {
            Error::internal(format!("arc {u}->{v} on a shortest path has no mover"))
        })?;
        decomposition.profiles[member].shift(u, v)?;
        if !touched.contains(&member) {
            touched.push(member);
        }
    }
    decomposition.counts[from] -= 1;
    decomposition.counts[to] += 1;
    decomposition.psi += length;
    graph.patch(slice, decomposition, &touched);
    Ok(ExchangeOutcome {
        path,
        touched,
        path_length: length,
    })
}

/// A recovered price schedule: raw shortest-path values (the source slot is
/// pinned to zero) and the nonnegative shift of the same schedule.
#[derive(Debug, Clone)]
pub struct PriceRecovery {
    pub raw: PriceSchedule,
    pub nonnegative: PriceSchedule,
    pub big_m: f64,
}

/// Recovers a price vector inducing every profile of the decomposition the
/// graph was built from: missing arcs out of the source get a weight large
/// enough that no negative cycle can appear, and the price of each slot is
/// its shortest-path distance from the source.
pub fn recover_prices(graph: &ExchangeGraph, source: usize) -> Result<PriceRecovery> {
    let n = graph.n();
    if source >= n {
        return Err(Error::validation(format!(
            "source slot {source} out of range for {n} slots"
        )));
    }
    if !graph.has_finite_arcs() {
        // No customer can move anything, so every price vector works; zero
        // is the canonical choice.
        let zero = PriceSchedule::zero(n);
        return Ok(PriceRecovery {
            raw: zero.clone(),
            nonnegative: zero,
            big_m: 1.0,
        });
    }
    let mut arcs = graph.finite_arcs();
    // 1 + n * max |w| strictly dominates any alternative path, so the
    // augmented arcs cannot close a negative cycle.
    let abs_max = arcs.iter().map(|&(_, _, w)| w.abs()).fold(0.0f64, f64::max);
    let big_m = 1.0 + n as f64 * abs_max;
    for t in 0..n {
        if t != source && !graph.weight(source, t).is_finite() {
            arcs.push((source, t, big_m));
        }
    }
    let (dist, _) = graph.bellman_ford(&arcs, source)?;
    debug_assert!(dist.iter().all(|d| d.is_finite()));
    let raw = PriceSchedule { values: dist };
    let nonnegative = raw.shifted_nonnegative();
    Ok(PriceRecovery {
        raw,
        nonnegative,
        big_m,
    })
}

/// Checks the full support-inequality system: at prices `y`, every member's
/// stored profile must weakly beat every single-slot swap it could make.
/// This is exactly the optimality certificate for the stored responses.
pub fn supports_decomposition(
    slice: &BlockSlice,
    decomposition: &Decomposition,
    prices: &[f64],
) -> bool {
    for member in 0..slice.members.len() {
        let profile = &decomposition.profiles[member];
        let scores = &slice.scores[member];
        for &active in slice.feasible[member].allowed() {
            if !profile.is_active(active) {
                continue;
            }
            for &idle in slice.feasible[member].allowed() {
                if profile.is_active(idle) {
                    continue;
                }
                if scores[active] + prices[active] < scores[idle] + prices[idle] {
                    return false;
                }
            }
        }
    }
    true
}
