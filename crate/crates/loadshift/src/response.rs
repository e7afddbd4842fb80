//! Exact best-response oracle for a single customer and application.
//!
//! Given a price schedule, a customer places their fixed number of requests
//! on the allowed slots with the highest score-plus-price values. The optimal
//! value, seen as a function of the price vector, is a max-plus polynomial
//! that is homogeneous of degree equal to the request count, which is what
//! makes recovered prices shift-invariant.

use crate::error::{Error, Result};
use crate::model::FeasibleSet;

/// One customer's binary consumption vector over flattened slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsumptionProfile {
    bits: Vec<bool>,
    requests: u32,
}

impl ConsumptionProfile {
    /// Validates the profile against its feasible set: the active count must
    /// match the demand and no forbidden slot may be active.
    pub fn from_bits(bits: Vec<bool>, feasible: &FeasibleSet) -> Result<Self> {
        if bits.len() != feasible.n() {
            return Err(Error::validation(format!(
                "profile has {} slots, expected {}",
                bits.len(),
                feasible.n()
            )));
        }
        let mut active = 0u32;
        for (slot, &bit) in bits.iter().enumerate() {
            if !bit {
                continue;
            }
            if !feasible.is_allowed(slot) {
                return Err(Error::validation(format!(
                    "profile is active on forbidden slot {slot}"
                )));
            }
            active += 1;
        }
        if active != feasible.requests() {
            return Err(Error::validation(format!(
                "profile has {active} active slots, expected {}",
                feasible.requests()
            )));
        }
        Ok(ConsumptionProfile {
            bits,
            requests: active,
        })
    }

    pub fn from_active_slots(
        n: usize,
        slots: impl IntoIterator<Item = usize>,
        feasible: &FeasibleSet,
    ) -> Result<Self> {
        let mut bits = vec![false; n];
        for slot in slots {
            if slot >= n {
                return Err(Error::validation(format!("slot {slot} out of range")));
            }
            bits[slot] = true;
        }
        Self::from_bits(bits, feasible)
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn requests(&self) -> u32 {
        self.requests
    }

    pub fn is_active(&self, slot: usize) -> bool {
        self.bits[slot]
    }

    /// Active slots in ascending order.
    pub fn active_slots(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// `<scores, profile>`.
    pub fn score(&self, scores: &[f64]) -> f64 {
        self.bits
            .iter()
            .zip(scores)
            .filter_map(|(&b, &s)| b.then_some(s))
            .sum()
    }

    /// Moves one request from an active slot to an inactive one. Exchange
    /// updates go through this; both preconditions are hard errors because a
    /// violation means the exchange graph disagreed with the decomposition.
    pub(crate) fn shift(&mut self, from: usize, to: usize) -> Result<()> {
        if !self.bits[from] {
            return Err(Error::internal(format!(
                "shift source slot {from} is not active"
            )));
        }
        if self.bits[to] {
            return Err(Error::internal(format!(
                "shift target slot {to} is already active"
            )));
        }
        self.bits[from] = false;
        self.bits[to] = true;
        Ok(())
    }
}

/// A per-slot price (discount) vector for one traffic block.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSchedule {
    pub values: Vec<f64>,
}

impl PriceSchedule {
    pub fn zero(n: usize) -> Self {
        PriceSchedule {
            values: vec![0.0; n],
        }
    }

    /// The schedule shifted so its minimum is zero. Responses are invariant
    /// under constant shifts, so this publishes the same traffic with
    /// nonnegative discounts.
    pub fn shifted_nonnegative(&self) -> PriceSchedule {
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        if !min.is_finite() || min == 0.0 {
            return self.clone();
        }
        PriceSchedule {
            values: self.values.iter().map(|v| v - min).collect(),
        }
    }
}

fn check_inputs(feasible: &FeasibleSet, scores: &[f64], prices: &[f64]) -> Result<()> {
    if scores.len() != feasible.n() || prices.len() != feasible.n() {
        return Err(Error::validation(format!(
            "scores ({}) and prices ({}) must both have {} entries",
            scores.len(),
            prices.len(),
            feasible.n()
        )));
    }
    Ok(())
}

/// The customer's exact optimal profile: the `requests` allowed slots with
/// the largest `score + price`, ties broken towards smaller slot indices so
/// the whole pipeline is deterministic.
pub fn best_response(
    feasible: &FeasibleSet,
    scores: &[f64],
    prices: &[f64],
) -> Result<ConsumptionProfile> {
    check_inputs(feasible, scores, prices)?;
    let mut ranked: Vec<usize> = feasible.allowed().to_vec();
    ranked.sort_by(|&a, &b| {
        (scores[b] + prices[b])
            .total_cmp(&(scores[a] + prices[a]))
            .then(a.cmp(&b))
    });
    let chosen = ranked.into_iter().take(feasible.requests() as usize);
    ConsumptionProfile::from_active_slots(feasible.n(), chosen, feasible)
}

/// Optimal value of the response problem (the max-plus polynomial evaluated
/// at the price vector).
pub fn tropical_value(feasible: &FeasibleSet, scores: &[f64], prices: &[f64]) -> Result<f64> {
    let profile = best_response(feasible, scores, prices)?;
    let mut value = 0.0;
    for slot in profile.active_slots() {
        value += scores[slot] + prices[slot];
    }
    Ok(value)
}

/// Compact description of every optimal profile at a given price vector:
/// slots strictly above the rank-R value threshold are mandatory, slots
/// exactly at the threshold are interchangeable, everything else is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxSet {
    required: Vec<usize>,
    tied: Vec<usize>,
    free_picks: usize,
    value: f64,
}

impl ArgmaxSet {
    /// Slots every optimal profile must contain.
    pub fn required(&self) -> &[usize] {
        &self.required
    }

    /// Slots at the threshold; any `free_picks` of them complete an optimum.
    pub fn tied(&self) -> &[usize] {
        &self.tied
    }

    pub fn free_picks(&self) -> usize {
        self.free_picks
    }

    pub fn optimal_value(&self) -> f64 {
        self.value
    }

    /// Whether the profile attains the optimal response value.
    pub fn contains(&self, profile: &ConsumptionProfile) -> bool {
        let mut required_hit = 0usize;
        let mut tied_hit = 0usize;
        for slot in profile.active_slots() {
            if self.required.binary_search(&slot).is_ok() {
                required_hit += 1;
            } else if self.tied.binary_search(&slot).is_ok() {
                tied_hit += 1;
            } else {
                return false;
            }
        }
        required_hit == self.required.len() && tied_hit == self.free_picks
    }
}

/// Classifies the allowed slots by their `score + price` value relative to
/// the rank-R threshold. Comparisons are exact on the computed doubles.
pub fn argmax_set(feasible: &FeasibleSet, scores: &[f64], prices: &[f64]) -> Result<ArgmaxSet> {
    check_inputs(feasible, scores, prices)?;
    let r = feasible.requests() as usize;
    if r == 0 {
        return Ok(ArgmaxSet {
            required: Vec::new(),
            tied: Vec::new(),
            free_picks: 0,
            value: 0.0,
        });
    }
    let mut ranked: Vec<usize> = feasible.allowed().to_vec();
    ranked.sort_by(|&a, &b| {
        (scores[b] + prices[b])
            .total_cmp(&(scores[a] + prices[a]))
            .then(a.cmp(&b))
    });
    let threshold = scores[ranked[r - 1]] + prices[ranked[r - 1]];
    let mut required = Vec::new();
    let mut tied = Vec::new();
    let mut value = 0.0;
    for (rank, &slot) in ranked.iter().enumerate() {
        let v = scores[slot] + prices[slot];
        if rank < r {
            value += v;
        }
        if v > threshold {
            required.push(slot);
        } else if v == threshold {
            tied.push(slot);
        }
    }
    required.sort_unstable();
    tied.sort_unstable();
    let free_picks = r - required.len();
    Ok(ArgmaxSet {
        required,
        tied,
        free_picks,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeasibleSet;
    use proptest::prelude::*;

    fn open_set(n: usize, requests: u32) -> FeasibleSet {
        FeasibleSet::from_parts(n, 0..n, requests).unwrap()
    }

    // The five customers of the worked three-slot example.
    fn example_customers() -> Vec<(Vec<f64>, u32)> {
        vec![
            (vec![0.0, 0.0, 0.0], 1),
            (vec![0.0, -1.0, 0.0], 2),
            (vec![-1.0, 1.0, 0.0], 1),
            (vec![0.5, 0.5, 0.0], 2),
            (vec![0.5, 2.0, 0.0], 1),
        ]
    }

    #[test]
    fn example_responses_at_interior_prices() {
        let y = [1.25, 0.5, 0.0];
        let customers = example_customers();
        let expected: [&[usize]; 5] = [&[0], &[0, 2], &[1], &[0, 1], &[1]];
        for ((scores, r), want) in customers.into_iter().zip(expected) {
            let fs = open_set(3, r);
            let got = best_response(&fs, &scores, &y).unwrap();
            assert_eq!(got.active_slots(), want, "scores {scores:?}");
        }
    }

    #[test]
    fn zero_price_tie_break_prefers_small_slots() {
        let fs = open_set(4, 2);
        let scores = [1.0, 1.0, 1.0, 2.0];
        let got = best_response(&fs, &scores, &[0.0; 4]).unwrap();
        assert_eq!(got.active_slots(), vec![0, 3]);
    }

    #[test]
    fn tropical_values_at_zero_price() {
        let y = [0.0, 0.0, 0.0];
        let customers = example_customers();
        assert_eq!(tropical_value(&open_set(3, 1), &customers[0].0, &y).unwrap(), 0.0);
        // max(y1+y2-1, y1+y3, y2+y3-1) at y = 0
        assert_eq!(tropical_value(&open_set(3, 2), &customers[1].0, &y).unwrap(), 0.0);
        assert_eq!(tropical_value(&open_set(3, 1), &customers[2].0, &y).unwrap(), 1.0);
    }

    #[test]
    fn tropical_homogeneity() {
        let customers = example_customers();
        for (scores, r) in customers {
            let fs = open_set(3, r);
            let y = [0.75, -0.25, 1.5];
            let base = tropical_value(&fs, &scores, &y).unwrap();
            for beta in [-5.0, 1.0, 7.0] {
                let shifted: Vec<f64> = y.iter().map(|v| v + beta).collect();
                let got = tropical_value(&fs, &scores, &shifted).unwrap();
                assert_eq!(got, base + beta * f64::from(r));
            }
        }
    }

    #[test]
    fn brute_force_agreement_small() {
        // Every profile enumerated directly; the oracle must match the
        // best response value on all of them.
        fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
            if r == 0 {
                return vec![vec![]];
            }
            if n < r {
                return vec![];
            }
            let mut out = combinations(n - 1, r);
            for mut c in combinations(n - 1, r - 1) {
                c.push(n - 1);
                out.push(c);
            }
            out
        }
        let scores = [0.5, -1.25, 2.0, 0.25, 0.25];
        let prices = [0.0, 3.25, -1.0, 0.5, 2.0];
        for r in 0..=4u32 {
            let fs = open_set(5, r);
            let best = tropical_value(&fs, &scores, &prices).unwrap();
            let mut brute = f64::NEG_INFINITY;
            for combo in combinations(5, r as usize) {
                let v: f64 = combo.iter().map(|&i| scores[i] + prices[i]).sum();
                brute = brute.max(v);
            }
            if r == 0 {
                brute = 0.0;
            }
            assert_eq!(best, brute, "r={r}");
            let set = argmax_set(&fs, &scores, &prices).unwrap();
            let profile = best_response(&fs, &scores, &prices).unwrap();
            assert!(set.contains(&profile));
        }
    }

    #[test]
    fn argmax_membership_under_ties() {
        let fs = open_set(3, 1);
        let y = [0.75, 0.0, 0.75];
        // flat scores: slots 0 and 2 tie at the top
        let flat = [0.0, 0.0, 0.0];
        let set = argmax_set(&fs, &flat, &y).unwrap();
        let mk = |slot: usize| ConsumptionProfile::from_active_slots(3, [slot], &fs).unwrap();
        assert!(set.contains(&mk(0)));
        assert!(set.contains(&mk(2)));
        assert!(!set.contains(&mk(1)));
        // a peaked customer has a unique optimum
        let peaked = [-1.0, 1.0, 0.0];
        let set = argmax_set(&fs, &peaked, &y).unwrap();
        assert!(set.contains(&mk(1)));
        assert!(!set.contains(&mk(0)));
        assert!(!set.contains(&mk(2)));
    }

    #[test]
    fn argmax_fully_symmetric() {
        let fs = open_set(3, 1);
        let set = argmax_set(&fs, &[0.0; 3], &[0.0; 3]).unwrap();
        for slot in 0..3 {
            let p = ConsumptionProfile::from_active_slots(3, [slot], &fs).unwrap();
            assert!(set.contains(&p));
        }
    }

    #[test]
    fn argmax_shift_invariance() {
        let fs = open_set(4, 2);
        let scores = [0.25, 0.25, -0.5, 1.0];
        let y = [0.5, 0.5, 1.25, -0.25];
        let base = argmax_set(&fs, &scores, &y).unwrap();
        for beta in [-5.0, 1.0, 7.0] {
            let shifted: Vec<f64> = y.iter().map(|v| v + beta).collect();
            let moved = argmax_set(&fs, &scores, &shifted).unwrap();
            assert_eq!(moved.required(), base.required());
            assert_eq!(moved.tied(), base.tied());
            assert_eq!(moved.free_picks(), base.free_picks());
        }
    }

    proptest! {
        // dyadic inputs keep all sums exact, so homogeneity and argmax
        // shift invariance hold bit for bit
        #[test]
        fn optimal_value_is_homogeneous(
            raw_scores in proptest::collection::vec(-16i32..=16, 2..7),
            raw_prices in proptest::collection::vec(-16i32..=16, 2..7),
            requests in 0u32..4,
            beta in -12i32..=12,
        ) {
            let n = raw_scores.len().min(raw_prices.len());
            let scores: Vec<f64> = raw_scores[..n].iter().map(|&v| f64::from(v) / 4.0).collect();
            let prices: Vec<f64> = raw_prices[..n].iter().map(|&v| f64::from(v) / 4.0).collect();
            let fs = open_set(n, requests.min(n as u32));
            let beta = f64::from(beta) / 4.0;
            let base = tropical_value(&fs, &scores, &prices).unwrap();
            let shifted_prices: Vec<f64> = prices.iter().map(|v| v + beta).collect();
            let shifted = tropical_value(&fs, &scores, &shifted_prices).unwrap();
            prop_assert_eq!(shifted, base + beta * f64::from(fs.requests()));
            let set = argmax_set(&fs, &scores, &prices).unwrap();
            let moved = argmax_set(&fs, &scores, &shifted_prices).unwrap();
            prop_assert_eq!(set.required(), moved.required());
            prop_assert_eq!(set.tied(), moved.tied());
        }

        #[test]
        fn best_response_is_always_in_its_own_argmax(
            raw_scores in proptest::collection::vec(-16i32..=16, 2..7),
            requests in 0u32..4,
        ) {
            let scores: Vec<f64> = raw_scores.iter().map(|&v| f64::from(v) / 4.0).collect();
            let n = scores.len();
            let fs = open_set(n, requests.min(n as u32));
            let prices = vec![0.0; n];
            let profile = best_response(&fs, &scores, &prices).unwrap();
            let set = argmax_set(&fs, &scores, &prices).unwrap();
            prop_assert!(set.contains(&profile));
            prop_assert_eq!(profile.score(&scores), set.optimal_value());
        }
    }

    #[test]
    fn respects_forbidden_slots() {
        let fs = FeasibleSet::from_parts(4, [0, 2], 1).unwrap();
        let scores = [0.0, 10.0, 1.0, 10.0];
        let got = best_response(&fs, &scores, &[0.0; 4]).unwrap();
        assert_eq!(got.active_slots(), vec![2]);
        assert!(ConsumptionProfile::from_active_slots(4, [1], &fs).is_err());
    }

    #[test]
    fn zero_demand_profile() {
        let fs = open_set(3, 0);
        let got = best_response(&fs, &[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!(got.active_slots(), Vec::<usize>::new());
        let set = argmax_set(&fs, &[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert!(set.contains(&got));
    }
}
