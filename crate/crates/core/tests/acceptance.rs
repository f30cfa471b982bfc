//! The acceptance criteria, one test each. Every test prints the report line
//! so `cargo test -- --nocapture` shows the full pass/fail table.

use vtloop::harness::acceptance::run_criterion;
use vtloop::plant::PlateParams;

fn check(id: u32) {
    let r = run_criterion(id, &PlateParams::default());
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn c01_resonance() {
    check(1);
}

#[test]
fn c02_tracking_under_swipe() {
    check(2);
}

#[test]
fn c03_harmonic_leakage() {
    check(3);
}

#[test]
fn c04_bandwidth_drop_with_matched_load() {
    check(4);
}

#[test]
fn c05_impedance_round_trip() {
    check(5);
}

#[test]
fn c06_suspension_drift_regression() {
    check(6);
}

#[test]
fn c07_transfer_identities() {
    check(7);
}

#[test]
fn c08_model_plateau() {
    check(8);
}

#[test]
fn c09_synthesis_identity() {
    check(9);
}

#[test]
fn c10_phase_branch_cut() {
    check(10);
}

#[test]
fn c11_determinism() {
    check(11);
}

#[test]
fn corrupted_plate_is_named() {
    let plate = PlateParams {
        mass: 0.045,
        ..Default::default()
    };
    let r = run_criterion(1, &plate);
    println!("{}", r.line());
    assert!(!r.passed);
    assert!(r.line().starts_with("C1 FAIL resonance"));
}

mod leakage {
    use proptest::prelude::*;
    use vtloop::control::{synthesize, SynthesisConfig};
    use vtloop::harness::acceptance::{control_ripple, SensingError, MAX_INJECTED_HARMONIC, MAX_INJECTED_OFFSET};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn injected_sensing_error_stays_below_half_a_percent(
            harmonic in 2u32..=6,
            amp in 0.0..=MAX_INJECTED_HARMONIC,
            phase in 0.0..std::f64::consts::TAU,
            offset in -MAX_INJECTED_OFFSET..=MAX_INJECTED_OFFSET,
        ) {
            let d = synthesize(&SynthesisConfig::default()).unwrap();
            let r = control_ripple(d.discrete, SensingError {
                harmonic,
                harmonic_amplitude: amp,
                harmonic_phase: phase,
                offset,
            }).unwrap();
            prop_assert!(r < 0.005, "ripple {r}");
        }
    }
}
