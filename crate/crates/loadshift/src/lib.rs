//! Balance-optimal traffic assignment and price-incentive schedules for
//! time-sliced, cell-partitioned mobile networks.
//!
//! The solver works in two stages. First it finds the traffic vector
//! maximizing the provider's satisfaction objective over everything the
//! customers could collectively consume, walking single-unit exchanges whose
//! feasibility is certified by an exchange graph (or, when no customer has
//! forbidden slots, by a majorization test against the conjugate demand
//! profile). Then it inverts that traffic: a min-cost flow recovers an
//! optimal per-customer decomposition and shortest-path distances in the
//! exchange graph yield a per-slot discount schedule under which every
//! customer's stored consumption is a best response.

pub mod error;
pub mod exchange;
pub mod greedy;
pub mod io;
pub mod majorization;
pub mod model;
pub mod report;
pub mod response;
pub mod satisfaction;
pub mod solve;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use exchange::{
    exchange as apply_exchange, recover_prices, Decomposition, ExchangeGraph, PriceRecovery,
};
pub use greedy::{greedy_maximize, initial_decomposition, minkowski_member, JointCounts};
pub use io::{generate, load_scenario, save_result, save_scenario, GenerateParams, PeakProfile};
pub use majorization::{
    conjugate_bound, is_majorized, mincostflow_decompose, neighbor_feasible_major, solve_major,
    MajorizationBound,
};
pub use model::{
    AppDemand, AppKind, BlockSlice, CellParams, ContractParams, Customer, FeasibleSet, Grid,
    Scenario,
};
pub use response::{argmax_set, best_response, tropical_value, ConsumptionProfile, PriceSchedule};
pub use satisfaction::{
    cell_objective, penalized_objective, CurveKind, SatisfactionCurve, SatisfactionObjective,
    SlotObjective,
};
pub use solve::{
    check_disjointness, solve_general, solve_scenario, solve_single, BlockResult, SolveMode,
    SolveOptions, SolveResult,
};
