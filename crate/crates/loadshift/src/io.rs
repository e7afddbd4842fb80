//! Scenario and result persistence plus the seeded synthetic generator.
//!
//! Both file formats are schema-versioned JSON documents (see
//! `docs/formats.md` in the repository root for the field-by-field
//! description). Loading validates strictly: unknown fields are rejected and
//! every model invariant is checked with the offending customer named.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AppDemand, AppKind, CellParams, ContractParams, Customer, Scenario};
use crate::solve::SolveResult;

pub const SCENARIO_SCHEMA: &str = "loadshift/scenario/v1";
pub const RESULT_SCHEMA: &str = "loadshift/result/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub scenario: Scenario,
}

/// A solver result bundled with the scenario it solved, so reports are
/// self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema: String,
    pub scenario: Scenario,
    pub result: SolveResult,
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::validation(format!(
            "unsupported schema {found:?}, expected {expected:?}"
        )));
    }
    Ok(())
}

/// Parses and validates a scenario document.
pub fn scenario_from_str(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)
        .map_err(|e| Error::validation(format!("scenario parse error: {e}")))?;
    check_schema(&file.schema, SCENARIO_SCHEMA)?;
    let mut scenario = file.scenario;
    scenario.canonicalize();
    scenario.validate()?;
    Ok(scenario)
}

/// Canonical serialized form of a scenario.
pub fn scenario_to_string(scenario: &Scenario) -> String {
    let file = ScenarioFile {
        schema: SCENARIO_SCHEMA.to_string(),
        scenario: scenario.clone(),
    };
    serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(&path)?;
    scenario_from_str(&text)
}

/// Writes through a temporary sibling and renames, so a failed run never
/// leaves a partial file behind.
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_scenario(path: impl AsRef<Path>, scenario: &Scenario) -> Result<()> {
    write_atomic(path, &scenario_to_string(scenario))
}

pub fn result_to_string(file: &ResultFile) -> String {
    serde_json::to_string_pretty(file).expect("result serialization cannot fail")
}

pub fn result_from_str(text: &str) -> Result<ResultFile> {
    let mut file: ResultFile = serde_json::from_str(text)
        .map_err(|e| Error::validation(format!("result parse error: {e}")))?;
    check_schema(&file.schema, RESULT_SCHEMA)?;
    file.scenario.canonicalize();
    file.scenario.validate()?;
    Ok(file)
}

pub fn save_result(path: impl AsRef<Path>, scenario: &Scenario, result: &SolveResult) -> Result<()> {
    let file = ResultFile {
        schema: RESULT_SCHEMA.to_string(),
        scenario: scenario.clone(),
        result: result.clone(),
    };
    write_atomic(path, &result_to_string(&file))
}

pub fn load_result(path: impl AsRef<Path>) -> Result<ResultFile> {
    let text = std::fs::read_to_string(&path)?;
    result_from_str(&text)
}

/// How the generator spreads baseline request instants over the day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakProfile {
    /// Morning and evening rush peaks on commute trajectories.
    Commuter,
    /// Uniform over the day.
    Flat,
}

impl PeakProfile {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "commuter" => Ok(PeakProfile::Commuter),
            "flat" => Ok(PeakProfile::Flat),
            other => Err(Error::validation(format!(
                "unknown peak profile {other:?}; expected commuter or flat"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub seed: u64,
    pub time_slots: usize,
    pub cells: usize,
    pub customers: usize,
    /// Share of premium-contract customers in [0, 1].
    pub premium_share: f64,
    pub peak: PeakProfile,
    /// 1 = price-sensitive downloads only; 2 = adds a fixed realtime
    /// streaming class on disjoint time windows.
    pub apps: usize,
}

impl Default for GenerateParams {
    fn default() -> Self {
        GenerateParams {
            seed: 0,
            time_slots: 24,
            cells: 4,
            customers: 50,
            premium_share: 0.3,
            peak: PeakProfile::Commuter,
            apps: 1,
        }
    }
}

/// Draws `count` distinct values by the given weights (without replacement).
fn weighted_sample(rng: &mut ChaCha8Rng, weights: &[f64], count: usize) -> Vec<usize> {
    let mut available: Vec<usize> = (0..weights.len()).collect();
    let mut chosen = Vec::with_capacity(count);
    for _ in 0..count.min(weights.len()) {
        let total: f64 = available.iter().map(|&i| weights[i]).sum();
        let mut draw = rng.random::<f64>() * total;
        let mut pick = available.len() - 1;
        for (pos, &i) in available.iter().enumerate() {
            draw -= weights[i];
            if draw <= 0.0 {
                pick = pos;
                break;
            }
        }
        chosen.push(available.remove(pick));
    }
    chosen.sort_unstable();
    chosen
}

/// Deterministic synthetic scenario in the experiment shape: commuting
/// customers, two contract classes (standard weight 1 / sensitivity 1/2,
/// premium weight 2 / sensitivity 1), download preferences of 1 at the
/// baseline instants and 0 one hour either side, and per-cell capacities
/// tight enough that the baseline overloads the peaks.
pub fn generate(params: &GenerateParams) -> Result<Scenario> {
    if params.time_slots < 3 {
        return Err(Error::validation("generator needs at least 3 time slots"));
    }
    if params.cells == 0 || params.customers == 0 {
        return Err(Error::validation(
            "generator needs at least one cell and one customer",
        ));
    }
    if !(0.0..=1.0).contains(&params.premium_share) {
        return Err(Error::validation("premium share must lie in [0, 1]"));
    }
    if !(1..=2).contains(&params.apps) {
        return Err(Error::validation("generator supports 1 or 2 applications"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let t_slots = params.time_slots;
    let cells = params.cells;

    let e_sq = std::f64::consts::E * std::f64::consts::E;
    let contracts = vec![
        // standard
        ContractParams {
            weight: 1.0,
            steepness: 2.0 / 3.0 * e_sq,
        },
        // premium
        ContractParams {
            weight: 2.0,
            steepness: e_sq,
        },
    ];
    let mut app_kinds = vec![AppKind::Elastic];
    if params.apps == 2 {
        app_kinds.push(AppKind::Realtime);
    }

    let commute = t_slots >= 8;
    let mut customers = Vec::with_capacity(params.customers);
    for _ in 0..params.customers {
        let premium = rng.random_bool(params.premium_share);
        let home = rng.random_range(0..cells);
        let work = rng.random_range(0..cells);
        let (morning, evening, trajectory) = if commute {
            let morning =
                (t_slots / 3) as i64 + rng.random_range(-1..=1i64);
            let evening = (2 * t_slots / 3) as i64 + rng.random_range(-1..=1i64);
            let morning = morning.clamp(1, (t_slots - 2) as i64) as usize;
            let evening = evening.clamp((morning + 1) as i64, (t_slots - 1) as i64) as usize;
            let trajectory = (0..t_slots)
                .map(|t| if t >= morning && t < evening { work } else { home })
                .collect();
            (morning, evening, trajectory)
        } else {
            (0, t_slots, vec![home; t_slots])
        };

        let weights: Vec<f64> = (0..t_slots)
            .map(|t| match params.peak {
                PeakProfile::Flat => 1.0,
                PeakProfile::Commuter => {
                    let mut w = 1.0;
                    if commute && (t == morning || t == morning + 1) {
                        w += 6.0;
                    }
                    if commute && t + 2 >= evening && t < evening + 1 {
                        w += 8.0;
                    }
                    w
                }
            })
            .collect();
        let demand_roll = rng.random::<f64>();
        let requests = if demand_roll < 0.5 {
            1
        } else if demand_roll < 0.85 {
            2
        } else {
            3
        };
        let baseline = weighted_sample(&mut rng, &weights, requests.min(t_slots));

        let mut preferences = vec![f64::NEG_INFINITY; t_slots];
        for &t in &baseline {
            preferences[t] = 1.0;
            if t > 0 && preferences[t - 1] == f64::NEG_INFINITY {
                preferences[t - 1] = 0.0;
            }
            if t + 1 < t_slots && preferences[t + 1] == f64::NEG_INFINITY {
                preferences[t + 1] = 0.0;
            }
        }
        let forbidden_times: Vec<usize> = (0..t_slots)
            .filter(|&t| preferences[t] == f64::NEG_INFINITY)
            .collect();
        let mut apps = vec![AppDemand {
            requests: baseline.len() as u32,
            forbidden_times,
            preferences: preferences.clone(),
            sensitivity: if premium { 1.0 } else { 0.5 },
        }];

        if params.apps == 2 {
            // realtime streaming on instants disjoint from the download
            // window; these requests are fixed in time by construction
            let open: Vec<usize> = (0..t_slots)
                .filter(|&t| preferences[t] == f64::NEG_INFINITY)
                .collect();
            let wanted = rng.random_range(0..=2usize).min(open.len());
            let flat = vec![1.0; open.len()];
            let picks = weighted_sample(&mut rng, &flat, wanted);
            let slots: Vec<usize> = picks.into_iter().map(|i| open[i]).collect();
            let mut stream_prefs = vec![f64::NEG_INFINITY; t_slots];
            for &t in &slots {
                stream_prefs[t] = 1.0;
            }
            apps.push(AppDemand {
                requests: slots.len() as u32,
                forbidden_times: (0..t_slots)
                    .filter(|&t| stream_prefs[t] == f64::NEG_INFINITY)
                    .collect(),
                preferences: stream_prefs,
                sensitivity: if premium { 1.0 } else { 0.5 },
            });
        }

        customers.push(Customer {
            contract: usize::from(premium),
            trajectory,
            apps,
        });
    }

    // Baseline per-cell loads determine the capacities: peaks sit slightly
    // above capacity so the baseline is congested but one-hour shifts can
    // repair it.
    let mut baseline_counts = vec![0u32; t_slots * cells];
    for customer in &customers {
        for demand in &customer.apps {
            for (t, &score) in demand.preferences.iter().enumerate() {
                if score == 1.0 {
                    baseline_counts[t * cells + customer.trajectory[t]] += 1;
                }
            }
        }
    }
    let cell_params: Vec<CellParams> = (0..cells)
        .map(|l| {
            let peak = (0..t_slots)
                .map(|t| baseline_counts[t * cells + l])
                .max()
                .unwrap_or(0);
            let capacity = ((u64::from(peak) * 85).div_ceil(100) as u32).max(4);
            CellParams {
                soft_threshold: (capacity / 10).max(1),
                capacity,
            }
        })
        .collect();

    let mut scenario = Scenario {
        time_slots: t_slots,
        app_kinds,
        contracts,
        cells: cell_params,
        customers,
    };
    scenario.canonicalize();
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::check_disjointness;

    #[test]
    fn example_fixture_parses() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/fixtures/example1.json"
        ))
        .unwrap();
        let scenario = scenario_from_str(&text).unwrap();
        assert_eq!(scenario.time_slots, 3);
        assert_eq!(scenario.cells.len(), 1);
        assert_eq!(scenario.customers.len(), 5);
        let requests: Vec<u32> = scenario
            .customers
            .iter()
            .map(|c| c.apps[0].requests)
            .collect();
        assert_eq!(requests, vec![1, 2, 1, 2, 1]);
        assert_eq!(scenario.customers[1].apps[0].preferences, vec![0.0, -1.0, 0.0]);
        assert_eq!(scenario.customers[4].apps[0].preferences, vec![0.5, 2.0, 0.0]);
    }

    #[test]
    fn empty_customer_list_is_valid() {
        let text = r#"{
            "schema": "loadshift/scenario/v1",
            "scenario": {
                "time_slots": 2,
                "app_kinds": ["elastic"],
                "contracts": [{"weight": 1.0, "steepness": 1.0}],
                "cells": [{"soft_threshold": 1, "capacity": 5}],
                "customers": []
            }
        }"#;
        let scenario = scenario_from_str(text).unwrap();
        assert!(scenario.customers.is_empty());
    }

    #[test]
    fn excess_demand_is_rejected_with_the_customer_named() {
        let text = r#"{
            "schema": "loadshift/scenario/v1",
            "scenario": {
                "time_slots": 2,
                "app_kinds": ["elastic"],
                "contracts": [{"weight": 1.0, "steepness": 1.0}],
                "cells": [{"soft_threshold": 1, "capacity": 5}],
                "customers": [
                    {"contract": 0, "trajectory": [0, 0],
                     "apps": [{"requests": 3, "forbidden_times": [],
                               "preferences": [0.0, 0.0], "sensitivity": 1.0}]}
                ]
            }
        }"#;
        let err = scenario_from_str(text).unwrap_err();
        assert!(err.to_string().contains("customer 0"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "schema": "loadshift/scenario/v1",
            "scenario": {
                "time_slots": 2,
                "app_kinds": ["elastic"],
                "contracts": [{"weight": 1.0, "steepness": 1.0}],
                "cells": [{"soft_threshold": 1, "capacity": 5}],
                "customers": [],
                "surprise": 1
            }
        }"#;
        assert!(scenario_from_str(text).is_err());
    }

    #[test]
    fn sentinel_preferences_round_trip() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/tests/fixtures/example1.json"
        ))
        .unwrap();
        let mut scenario = scenario_from_str(&text).unwrap();
        scenario.customers[0].apps[0].preferences[1] = f64::NEG_INFINITY;
        scenario.canonicalize();
        let serialized = scenario_to_string(&scenario);
        assert!(serialized.contains("\"-inf\""));
        let reparsed = scenario_from_str(&serialized).unwrap();
        assert_eq!(reparsed, scenario);
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GenerateParams {
            seed: 7,
            time_slots: 24,
            cells: 4,
            customers: 50,
            ..GenerateParams::default()
        };
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        assert_eq!(scenario_to_string(&a), scenario_to_string(&b));
        // and a different seed moves something
        let c = generate(&GenerateParams {
            seed: 8,
            ..params
        })
        .unwrap();
        assert_ne!(scenario_to_string(&a), scenario_to_string(&c));
    }

    #[test]
    fn generated_scenarios_round_trip() {
        let scenario = generate(&GenerateParams::default()).unwrap();
        let text = scenario_to_string(&scenario);
        let reparsed = scenario_from_str(&text).unwrap();
        assert_eq!(reparsed, scenario);
    }

    #[test]
    fn premium_share_zero_gives_standard_customers_only() {
        let scenario = generate(&GenerateParams {
            premium_share: 0.0,
            ..GenerateParams::default()
        })
        .unwrap();
        assert!(scenario.customers.iter().all(|c| c.contract == 0));
    }

    #[test]
    fn two_app_customers_have_disjoint_windows() {
        let scenario = generate(&GenerateParams {
            apps: 2,
            seed: 3,
            ..GenerateParams::default()
        })
        .unwrap();
        assert_eq!(scenario.num_apps(), 2);
        for customer in &scenario.customers {
            assert!(check_disjointness(customer, scenario.time_slots));
        }
    }

    #[test]
    fn full_scale_generation_shapes_the_peaks() {
        // city-scale shape: a full urban day, loads concentrated at the
        // commute peaks
        let scenario = generate(&GenerateParams {
            seed: 0,
            time_slots: 24,
            cells: 43,
            customers: 2500,
            ..GenerateParams::default()
        })
        .unwrap();
        assert_eq!(scenario.customers.len(), 2500);
        assert_eq!(scenario.cells.len(), 43);
        let mut per_time = [0u64; 24];
        for customer in &scenario.customers {
            for (t, &p) in customer.apps[0].preferences.iter().enumerate() {
                if p == 1.0 {
                    per_time[t] += 1;
                }
            }
        }
        let peak = *per_time.iter().max().unwrap();
        let mean = per_time.iter().sum::<u64>() / 24;
        assert!(peak >= 2 * mean, "peak {peak} not concentrated over mean {mean}");
    }

    #[test]
    fn download_preferences_follow_the_shift_rule() {
        let scenario = generate(&GenerateParams::default()).unwrap();
        for customer in &scenario.customers {
            let demand = &customer.apps[0];
            let ones = demand
                .preferences
                .iter()
                .filter(|&&p| p == 1.0)
                .count() as u32;
            assert_eq!(ones, demand.requests);
            for (t, &p) in demand.preferences.iter().enumerate() {
                if p == 0.0 {
                    let adjacent_baseline = (t > 0 && demand.preferences[t - 1] == 1.0)
                        || (t + 1 < scenario.time_slots && demand.preferences[t + 1] == 1.0);
                    assert!(adjacent_baseline, "a zero-preference slot must flank a baseline");
                }
            }
        }
    }
}
