//! Instance data model: the network grid, customers, and per-customer
//! feasible consumption sets.
//!
//! A scenario covers one day split into `time_slots` slots and a network of
//! `cells.len()` cells. Every (time, cell) pair is flattened to a single slot
//! index `slot = t * L + l`, and all solver-facing vectors (traffic counts,
//! prices, consumption profiles) live in that flattened index space. All
//! indices are 0-based.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::satisfaction::{CurveKind, SatisfactionCurve};

/// Score value marking a slot a customer will never consume in.
///
/// The sentinel is absorbing under addition and compares below every finite
/// score, so it can flow through score arithmetic without extra branching.
pub const FORBIDDEN_SCORE: f64 = f64::NEG_INFINITY;

/// Dimensions of the flattened (time, cell) slot space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub time_slots: usize,
    pub cells: usize,
}

impl Grid {
    pub fn n(&self) -> usize {
        self.time_slots * self.cells
    }

    /// Maps a (time, cell) pair to its flattened slot index `t * L + l`.
    ///
    /// The layout is fixed so that files and reports are bit-stable across
    /// runs.
    pub fn flatten(&self, t: usize, l: usize) -> Result<usize> {
        if t >= self.time_slots || l >= self.cells {
            return Err(Error::validation(format!(
                "slot ({t}, {l}) out of range for {} time slots and {} cells",
                self.time_slots, self.cells
            )));
        }
        Ok(t * self.cells + l)
    }

    /// Inverse of [`Grid::flatten`].
    pub fn unflatten(&self, slot: usize) -> Result<(usize, usize)> {
        if slot >= self.n() {
            return Err(Error::validation(format!(
                "slot index {slot} out of range for {} slots",
                self.n()
            )));
        }
        Ok((slot / self.cells, slot % self.cells))
    }

    /// Cell of a flattened slot, without the division for the time part.
    pub fn cell_of(&self, slot: usize) -> usize {
        slot % self.cells
    }
}

/// Application class: elastic content (web, mail, download) tolerates load up
/// to a soft threshold; realtime content (streaming) degrades immediately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppKind {
    Elastic,
    Realtime,
}

/// Per-contract parameters: `weight` scales the class inside the provider
/// objective, `steepness` scales how quickly satisfaction decays with load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractParams {
    pub weight: f64,
    pub steepness: f64,
}

/// Per-cell load thresholds: satisfaction of elastic traffic is maximal up to
/// `soft_threshold` and the cell must never carry more than `capacity` users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    pub soft_threshold: u32,
    pub capacity: u32,
}

/// One customer's demand for one application class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppDemand {
    /// Number of requests the customer places per day.
    pub requests: u32,
    /// Time slots in which the customer never consumes this application.
    #[serde(default)]
    pub forbidden_times: Vec<usize>,
    /// Per-time inclination scores; entries on forbidden times may carry the
    /// `-inf` sentinel. Finite entries on forbidden times are ignored.
    #[serde(with = "pref_serde")]
    pub preferences: Vec<f64>,
    /// Price sensitivity; scores are normalized by this factor before the
    /// response problem is solved.
    pub sensitivity: f64,
}

/// A customer: contract class, daily trajectory through the cells, and one
/// demand record per application class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Customer {
    pub contract: usize,
    pub trajectory: Vec<usize>,
    pub apps: Vec<AppDemand>,
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub time_slots: usize,
    pub app_kinds: Vec<AppKind>,
    pub contracts: Vec<ContractParams>,
    pub cells: Vec<CellParams>,
    pub customers: Vec<Customer>,
}

impl Scenario {
    pub fn grid(&self) -> Grid {
        Grid {
            time_slots: self.time_slots,
            cells: self.cells.len(),
        }
    }

    pub fn n(&self) -> usize {
        self.grid().n()
    }

    pub fn num_apps(&self) -> usize {
        self.app_kinds.len()
    }

    pub fn num_contracts(&self) -> usize {
        self.contracts.len()
    }

    /// Total requests across all customers and applications.
    pub fn total_requests(&self) -> u64 {
        self.customers
            .iter()
            .flat_map(|c| c.apps.iter())
            .map(|d| u64::from(d.requests))
            .sum()
    }

    /// Traffic blocks in canonical order: application-major, contract-minor.
    pub fn block_ids(&self) -> Vec<(usize, usize)> {
        let mut ids = Vec::with_capacity(self.num_apps() * self.num_contracts());
        for app in 0..self.num_apps() {
            for contract in 0..self.num_contracts() {
                ids.push((app, contract));
            }
        }
        ids
    }

    /// Satisfaction curve governing application `app` under contract
    /// `contract` in cell `cell`.
    pub fn curve(&self, app: usize, contract: usize, cell: usize) -> SatisfactionCurve {
        let kind = match self.app_kinds[app] {
            AppKind::Elastic => CurveKind::Elastic,
            AppKind::Realtime => CurveKind::Realtime,
        };
        let params = &self.cells[cell];
        let n1 = match kind {
            CurveKind::Elastic => params.soft_threshold,
            CurveKind::Realtime => 0,
        };
        SatisfactionCurve::new(kind, n1, params.capacity, self.contracts[contract].steepness)
    }

    /// Folds `-inf` preference entries into the forbidden-time set, sorts and
    /// dedups it. Loading normalizes every scenario through this before
    /// validation, so the two forbidding mechanisms agree afterwards.
    pub fn canonicalize(&mut self) {
        for customer in &mut self.customers {
            for demand in &mut customer.apps {
                let mut forbidden: BTreeSet<usize> =
                    demand.forbidden_times.iter().copied().collect();
                for (t, &score) in demand.preferences.iter().enumerate() {
                    if score == FORBIDDEN_SCORE {
                        forbidden.insert(t);
                    }
                }
                for &t in &forbidden {
                    if t < demand.preferences.len() {
                        demand.preferences[t] = FORBIDDEN_SCORE;
                    }
                }
                demand.forbidden_times = forbidden.into_iter().collect();
            }
        }
    }

    /// Checks every structural invariant of the instance. Expects a
    /// canonicalized scenario (see [`Scenario::canonicalize`]).
    pub fn validate(&self) -> Result<()> {
        if self.time_slots == 0 {
            return Err(Error::validation("time_slots must be at least 1"));
        }
        if self.cells.is_empty() {
            return Err(Error::validation("at least one cell is required"));
        }
        if self.app_kinds.is_empty() {
            return Err(Error::validation("at least one application class is required"));
        }
        if self.contracts.is_empty() {
            return Err(Error::validation("at least one contract class is required"));
        }
        for (l, cell) in self.cells.iter().enumerate() {
            if cell.soft_threshold >= cell.capacity {
                return Err(Error::validation(format!(
                    "cell {l}: soft_threshold {} must be below capacity {}",
                    cell.soft_threshold, cell.capacity
                )));
            }
        }
        for (b, contract) in self.contracts.iter().enumerate() {
            if !(contract.weight > 0.0 && contract.weight.is_finite()) {
                return Err(Error::validation(format!(
                    "contract {b}: weight must be positive and finite"
                )));
            }
            if !(contract.steepness > 0.0 && contract.steepness.is_finite()) {
                return Err(Error::validation(format!(
                    "contract {b}: steepness must be positive and finite"
                )));
            }
        }
        // Reject any curve whose discrete shape breaks the concavity the
        // greedy relies on; checked once per distinct parameter combination.
        let mut checked: BTreeSet<(u8, u32, u32, u64)> = BTreeSet::new();
        for app in 0..self.num_apps() {
            for contract in 0..self.num_contracts() {
                for cell in 0..self.cells.len() {
                    let curve = self.curve(app, contract, cell);
                    let key = (
                        matches!(curve.kind(), CurveKind::Realtime) as u8,
                        curve.soft_threshold(),
                        curve.capacity(),
                        curve.steepness().to_bits(),
                    );
                    if checked.insert(key) {
                        curve.check_shape().map_err(|e| {
                            Error::validation(format!(
                                "curve for application {app}, contract {contract}, cell {cell}: {e}"
                            ))
                        })?;
                    }
                }
            }
        }
        for (k, customer) in self.customers.iter().enumerate() {
            if customer.contract >= self.num_contracts() {
                return Err(Error::validation(format!(
                    "customer {k}: contract index {} out of range",
                    customer.contract
                )));
            }
            if customer.trajectory.len() != self.time_slots {
                return Err(Error::validation(format!(
                    "customer {k}: trajectory has {} entries, expected {}",
                    customer.trajectory.len(),
                    self.time_slots
                )));
            }
            if let Some(&bad) = customer.trajectory.iter().find(|&&l| l >= self.cells.len()) {
                return Err(Error::validation(format!(
                    "customer {k}: trajectory cell {bad} out of range"
                )));
            }
            if customer.apps.len() != self.num_apps() {
                return Err(Error::validation(format!(
                    "customer {k}: {} application records, expected {}",
                    customer.apps.len(),
                    self.num_apps()
                )));
            }
            for (a, demand) in customer.apps.iter().enumerate() {
                if demand.preferences.len() != self.time_slots {
                    return Err(Error::validation(format!(
                        "customer {k} application {a}: {} preference entries, expected {}",
                        demand.preferences.len(),
                        self.time_slots
                    )));
                }
                if !(demand.sensitivity > 0.0 && demand.sensitivity.is_finite()) {
                    return Err(Error::validation(format!(
                        "customer {k} application {a}: sensitivity must be positive and finite"
                    )));
                }
                if let Some(&t) = demand.forbidden_times.iter().find(|&&t| t >= self.time_slots)
                {
                    return Err(Error::validation(format!(
                        "customer {k} application {a}: forbidden time {t} out of range"
                    )));
                }
                let forbidden: BTreeSet<usize> = demand.forbidden_times.iter().copied().collect();
                for (t, &score) in demand.preferences.iter().enumerate() {
                    if forbidden.contains(&t) {
                        continue;
                    }
                    if !score.is_finite() {
                        return Err(Error::validation(format!(
                            "customer {k} application {a}: preference at time {t} must be finite \
                             outside forbidden times"
                        )));
                    }
                }
                let open = self.time_slots - forbidden.len();
                if demand.requests as usize > open {
                    return Err(Error::validation(format!(
                        "infeasible customer {k} application {a}: {} requests exceed {} allowed \
                         slots",
                        demand.requests, open
                    )));
                }
            }
        }
        Ok(())
    }

    /// Feasible-set descriptor for one customer and one application.
    pub fn feasible_set(&self, customer: usize, app: usize) -> Result<FeasibleSet> {
        let c = self
            .customers
            .get(customer)
            .ok_or_else(|| Error::validation(format!("customer index {customer} out of range")))?;
        let demand = c
            .apps
            .get(app)
            .ok_or_else(|| Error::validation(format!("application index {app} out of range")))?;
        let grid = self.grid();
        let n = grid.n();
        let forbidden_times: BTreeSet<usize> = demand.forbidden_times.iter().copied().collect();
        let mut forbidden = vec![true; n];
        let mut allowed = Vec::with_capacity(self.time_slots);
        for t in 0..self.time_slots {
            if forbidden_times.contains(&t) {
                continue;
            }
            let slot = grid.flatten(t, c.trajectory[t])?;
            forbidden[slot] = false;
            allowed.push(slot);
        }
        allowed.sort_unstable();
        if (demand.requests as usize) > allowed.len() {
            return Err(Error::validation(format!(
                "infeasible customer {customer} application {app}: {} requests exceed {} allowed \
                 slots",
                demand.requests,
                allowed.len()
            )));
        }
        Ok(FeasibleSet {
            forbidden,
            allowed,
            requests: demand.requests,
        })
    }

    /// Sensitivity-normalized slot scores for one customer and application:
    /// `preferences[t] / sensitivity` on the slot the customer occupies at
    /// time `t`, the forbidden sentinel everywhere else.
    pub fn slot_scores(&self, customer: usize, app: usize) -> Result<Vec<f64>> {
        let c = self
            .customers
            .get(customer)
            .ok_or_else(|| Error::validation(format!("customer index {customer} out of range")))?;
        let demand = c
            .apps
            .get(app)
            .ok_or_else(|| Error::validation(format!("application index {app} out of range")))?;
        let grid = self.grid();
        let forbidden_times: BTreeSet<usize> = demand.forbidden_times.iter().copied().collect();
        let mut scores = vec![FORBIDDEN_SCORE; grid.n()];
        for t in 0..self.time_slots {
            if forbidden_times.contains(&t) {
                continue;
            }
            let slot = grid.flatten(t, c.trajectory[t])?;
            scores[slot] = demand.preferences[t] / demand.sensitivity;
        }
        Ok(scores)
    }
}

/// Description of the set of consumption profiles available to one customer
/// for one application: binary slot vectors summing to `requests` that vanish
/// outside `allowed`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSet {
    forbidden: Vec<bool>,
    allowed: Vec<usize>,
    requests: u32,
}

impl FeasibleSet {
    pub fn n(&self) -> usize {
        self.forbidden.len()
    }

    pub fn requests(&self) -> u32 {
        self.requests
    }

    /// Allowed slot indices, ascending.
    pub fn allowed(&self) -> &[usize] {
        &self.allowed
    }

    pub fn allowed_count(&self) -> usize {
        self.allowed.len()
    }

    pub fn forbidden_count(&self) -> usize {
        self.n() - self.allowed.len()
    }

    pub fn is_allowed(&self, slot: usize) -> bool {
        !self.forbidden[slot]
    }

    /// Builds a descriptor directly from its parts; used by tests and by the
    /// flow-based membership oracle.
    pub fn from_parts(n: usize, allowed: impl IntoIterator<Item = usize>, requests: u32) -> Result<Self> {
        let mut forbidden = vec![true; n];
        let mut allowed_sorted: Vec<usize> = allowed.into_iter().collect();
        allowed_sorted.sort_unstable();
        allowed_sorted.dedup();
        for &slot in &allowed_sorted {
            if slot >= n {
                return Err(Error::validation(format!("allowed slot {slot} out of range")));
            }
            forbidden[slot] = false;
        }
        if requests as usize > allowed_sorted.len() {
            return Err(Error::validation(format!(
                "{requests} requests exceed {} allowed slots",
                allowed_sorted.len()
            )));
        }
        Ok(FeasibleSet {
            forbidden,
            allowed: allowed_sorted,
            requests,
        })
    }
}

/// One traffic block: the customers of one contract class restricted to one
/// application, with their feasible sets and normalized scores.
#[derive(Debug, Clone)]
pub struct BlockSlice {
    pub app: usize,
    pub contract: usize,
    pub n: usize,
    /// Global customer indices belonging to this block.
    pub members: Vec<usize>,
    /// Feasible set per member, parallel to `members`.
    pub feasible: Vec<FeasibleSet>,
    /// Normalized slot scores per member, parallel to `members`.
    pub scores: Vec<Vec<f64>>,
}

impl BlockSlice {
    pub fn build(scenario: &Scenario, app: usize, contract: usize) -> Result<Self> {
        if app >= scenario.num_apps() {
            return Err(Error::validation(format!("application index {app} out of range")));
        }
        if contract >= scenario.num_contracts() {
            return Err(Error::validation(format!("contract index {contract} out of range")));
        }
        let mut members = Vec::new();
        let mut feasible = Vec::new();
        let mut scores = Vec::new();
        for (k, customer) in scenario.customers.iter().enumerate() {
            if customer.contract != contract {
                continue;
            }
            members.push(k);
            feasible.push(scenario.feasible_set(k, app)?);
            scores.push(scenario.slot_scores(k, app)?);
        }
        Ok(BlockSlice {
            app,
            contract,
            n: scenario.n(),
            members,
            feasible,
            scores,
        })
    }

    pub fn total_requests(&self) -> u64 {
        self.feasible.iter().map(|f| u64::from(f.requests())).sum()
    }
}

/// Serde helper: preference vectors serialize `-inf` as the string `"-inf"`
/// since JSON has no literal for it.
mod pref_serde {
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], ser: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = values
            .iter()
            .map(|&v| {
                if v == f64::NEG_INFINITY {
                    Entry::Text("-inf".to_string())
                } else {
                    Entry::Num(v)
                }
            })
            .collect();
        entries.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<f64>, D::Error> {
        let entries = Vec::<Entry>::deserialize(de)?;
        entries
            .into_iter()
            .map(|e| match e {
                Entry::Num(v) => Ok(v),
                Entry::Text(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
                Entry::Text(s) => Err(D::Error::custom(format!(
                    "preference entry must be a number or \"-inf\", got {s:?}"
                ))),
            })
            .collect()
    }
}
