//! Monte Carlo estimates against the closed forms at full cycle counts.

use aoi_core::analytic::GEArrivalScenario as GenericArrival;
use aoi_core::simulate::{simulate_area_trapezoid_partition, simulate_cycles};
use aoi_core::{GEArrivalScenario, GEServiceScenario, Scenario, SimConfig, TransitionMatrix};

const CYCLES: u64 = 1_000_000;
const REPLICATIONS: u32 = 8;

fn config(scenario: Scenario, p: f64, q: f64, seed: u64) -> SimConfig {
    SimConfig::new(
        scenario,
        TransitionMatrix::new(p, q).unwrap(),
        CYCLES,
        seed,
        REPLICATIONS,
    )
    .unwrap()
}

fn assert_within_3_sigma(delta_hat: f64, std_error: f64, expected: f64) {
    let z = (delta_hat - expected).abs() / std_error;
    assert!(
        z <= 3.0,
        "estimate {delta_hat} vs {expected}: z = {z:.2} (se {std_error:.2e})"
    );
}

#[test]
fn ge_service_near_degenerate_chain_reaches_single_state_age() {
    let scenario = Scenario::Service(GEServiceScenario::new(1.0, 0.1, 1.0).unwrap());
    let result = simulate_cycles(&config(scenario, 1.0 - 1e-9, 1e-9, 7));
    assert_within_3_sigma(result.delta_hat, result.std_error, 2.5);
}

#[test]
fn ge_service_canonical_point_matches_formula() {
    let scenario = Scenario::Service(GEServiceScenario::new(1.0, 0.1, 1.0).unwrap());
    let result = simulate_cycles(&config(scenario, 0.5, 0.5, 42));
    assert_within_3_sigma(result.delta_hat, result.std_error, 185.5 / 13.0);
    assert!(result.std_error / result.delta_hat < 0.01);
}

#[test]
fn ge_arrival_canonical_point_matches_formula() {
    let scenario = Scenario::Arrival(GEArrivalScenario::new(1.0, 0.1, 1.0).unwrap());
    let result = simulate_cycles(&config(scenario, 0.5, 0.5, 43));
    assert_within_3_sigma(result.delta_hat, result.std_error, 127.0 / 13.0);
}

#[test]
fn trapezoid_partition_canonical_point_matches_formula() {
    let scenario = Scenario::Service(GEServiceScenario::new(1.0, 0.1, 1.0).unwrap());
    let result = simulate_area_trapezoid_partition(&config(scenario, 0.5, 0.5, 44)).unwrap();
    assert_within_3_sigma(result.delta_hat, result.std_error, 185.5 / 13.0);
}

#[test]
fn trapezoid_partition_degenerate_arrival_is_the_blocking_mm1_baseline() {
    // lambda_b = lambda_g = 1 through the test bypass: the chain is
    // irrelevant and the age must be the single-state 2.5
    let scenario = Scenario::Arrival(GenericArrival::new_allowing_equal(1.0, 1.0, 1.0).unwrap());
    for (p, q) in [(0.5, 0.5), (0.9, 0.2)] {
        let result = simulate_area_trapezoid_partition(&config(scenario, p, q, 45)).unwrap();
        assert_within_3_sigma(result.delta_hat, result.std_error, 2.5);
    }
}
