//! Shared fixtures and brute-force oracles for the unit and integration
//! tests. Everything here enumerates exhaustively and stays independent of
//! the solver paths it checks.

use crate::model::{
    AppDemand, AppKind, BlockSlice, CellParams, ContractParams, Customer, FeasibleSet, Scenario,
};

/// The worked three-slot, five-customer instance used throughout the tests:
/// one cell, demands (1,2,1,2,1) and the preference vectors of the running
/// example.
pub fn example_scenario() -> Scenario {
    let prefs: [(Vec<f64>, u32); 5] = [
        (vec![0.0, 0.0, 0.0], 1),
        (vec![0.0, -1.0, 0.0], 2),
        (vec![-1.0, 1.0, 0.0], 1),
        (vec![0.5, 0.5, 0.0], 2),
        (vec![0.5, 2.0, 0.0], 1),
    ];
    Scenario {
        time_slots: 3,
        app_kinds: vec![AppKind::Elastic],
        contracts: vec![ContractParams {
            weight: 1.0,
            steepness: 1.0,
        }],
        cells: vec![CellParams {
            soft_threshold: 1,
            capacity: 10,
        }],
        customers: prefs
            .into_iter()
            .map(|(preferences, requests)| Customer {
                contract: 0,
                trajectory: vec![0, 0, 0],
                apps: vec![AppDemand {
                    requests,
                    forbidden_times: vec![],
                    preferences,
                    sensitivity: 1.0,
                }],
            })
            .collect(),
    }
}

/// All members of the feasible sum, by direct enumeration of one profile per
/// customer.
pub fn enumerate_sum(feasible: &[FeasibleSet]) -> Vec<Vec<u32>> {
    fn profiles_of(fs: &FeasibleSet) -> Vec<Vec<usize>> {
        fn rec(
            allowed: &[usize],
            r: usize,
            from: usize,
            acc: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if acc.len() == r {
                out.push(acc.clone());
                return;
            }
            for idx in from..allowed.len() {
                if allowed.len() - idx < r - acc.len() {
                    break;
                }
                acc.push(allowed[idx]);
                rec(allowed, r, idx + 1, acc, out);
                acc.pop();
            }
        }
        let mut out = Vec::new();
        rec(
            fs.allowed(),
            fs.requests() as usize,
            0,
            &mut Vec::new(),
            &mut out,
        );
        out
    }
    let n = feasible.first().map_or(0, |f| f.n());
    let mut sums: Vec<Vec<u32>> = vec![vec![0; n]];
    for fs in feasible {
        let mut next: Vec<Vec<u32>> = Vec::new();
        for base in &sums {
            for profile in profiles_of(fs) {
                let mut counts = base.clone();
                for slot in profile {
                    counts[slot] += 1;
                }
                next.push(counts);
            }
        }
        next.sort_unstable();
        next.dedup();
        sums = next;
    }
    sums
}

/// Brute-force maximum of the total score over every decomposition of
/// `target` into one feasible profile per member.
pub fn brute_force_best_decomposition(slice: &BlockSlice, target: &[u32]) -> f64 {
    fn rec(slice: &BlockSlice, member: usize, remaining: &mut Vec<u32>, acc: f64, best: &mut f64) {
        if member == slice.members.len() {
            if remaining.iter().all(|&r| r == 0) {
                *best = best.max(acc);
            }
            return;
        }
        let fs = &slice.feasible[member];
        let r = fs.requests() as usize;
        let allowed: Vec<usize> = fs.allowed().to_vec();
        choose(slice, member, &allowed, 0, r, &mut Vec::new(), remaining, acc, best);
    }
    #[allow(clippy::too_many_arguments)]
    fn choose(
        slice: &BlockSlice,
        member: usize,
        allowed: &[usize],
        from: usize,
        r: usize,
        chosen: &mut Vec<usize>,
        remaining: &mut Vec<u32>,
        acc: f64,
        best: &mut f64,
    ) {
        if chosen.len() == r {
            rec(slice, member + 1, remaining, acc, best);
            return;
        }
        for idx in from..allowed.len() {
            let slot = allowed[idx];
            if remaining[slot] == 0 {
                continue;
            }
            remaining[slot] -= 1;
            chosen.push(slot);
            choose(
                slice,
                member,
                allowed,
                idx + 1,
                r,
                chosen,
                remaining,
                acc + slice.scores[member][slot],
                best,
            );
            chosen.pop();
            remaining[slot] += 1;
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(slice, 0, &mut target.to_vec(), 0.0, &mut best);
    best
}
