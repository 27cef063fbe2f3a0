//! Property battery for the forecast scores, driven by randomly generated
//! aligned instances and independent brute-force oracles.

mod support;

use std::time::{Duration, Instant};

#[test]
fn cumulative_error_matches_a_bruteforce_rescan_exactly() {
    support::check_cme_matches_bruteforce(1000);
}

#[test]
fn cumulative_error_is_bounded_and_its_running_sequence_is_monotone() {
    support::check_bounds_and_monotonicity(1000);
}

#[test]
fn scores_are_invariant_under_affine_maps_of_the_state_space() {
    support::check_affine_invariance(300);
}

#[test]
fn validity_horizon_matches_a_bruteforce_scan_exactly() {
    support::check_valid_time_matches_bruteforce(500);
}

#[test]
fn symmetric_percentage_error_is_bounded_symmetric_and_sharp() {
    support::check_smape_properties(500);
}

#[test]
fn uniformly_closer_predictions_score_strictly_better() {
    support::check_dominance(200);
}

#[test]
fn the_whole_battery_finishes_inside_five_seconds() {
    let start = Instant::now();
    support::metric_property_battery();
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "battery took {elapsed:?}, budget is 5 s"
    );
}
