//! Calibration script for the power model defaults.
//!
//! Recomputes `c_dyn` from the two anchors (one core at floor activity
//! reaches the 3.7 GHz ceiling; sixteen fully active cores settle at
//! 2.4 GHz), verifies both against the committed defaults, and prints the
//! empirical activity table that the simulation defaults were chosen
//! against: per-scheme and per-mask activity factors with the ladder
//! frequency each one maps to.
//!
//! Run with `cargo run -p flipbench-core --example calibrate --release`.
//! If the fitted `c_dyn` drifts from the committed default, update
//! `PowerModel::default()` with the printed value.

use flipbench_core::datagen::InitSpec;
use flipbench_core::flipmodel::{
    activity_factor, predict_duration, steady_state_frequency, PowerModel,
    DEFAULT_EFFICIENCY, DEFAULT_SIM_ACTIVE_CORES,
};

fn main() {
    let committed = PowerModel::default();
    let fitted = PowerModel::fit_defaults();
    println!("committed c_dyn = {:e}", committed.c_dyn);
    println!("fitted    c_dyn = {:e}", fitted.c_dyn);
    println!(
        "relative drift  = {:.2e}",
        (committed.c_dyn - fitted.c_dyn).abs() / fitted.c_dyn
    );

    let turbo = steady_state_frequency(&committed, committed.alpha_floor, 1);
    let capped = steady_state_frequency(&committed, 1.0, 16);
    println!(
        "anchor 1: alpha=floor, 1 core  -> {} kHz (want 3700000)",
        turbo.frequency_khz
    );
    println!(
        "anchor 2: alpha=1,    16 cores -> {} kHz (want 2400000)",
        capped.frequency_khz
    );

    let cores = DEFAULT_SIM_ACTIVE_CORES;
    println!("\nscheme table at order 64, {cores} active cores:");
    let mut specs = vec![
        InitSpec::constant(0.987).unwrap(),
        InitSpec::Sequential,
        InitSpec::Random { seed: 42 },
    ];
    for k in [0u32, 8, 13, 16, 26, 40, 52, 53] {
        specs.push(InitSpec::masked(42, k).unwrap());
    }
    println!(
        "{:<16} {:>8} {:>12} {:>14}",
        "scheme", "alpha", "freq_khz", "duration_s"
    );
    for spec in specs {
        let (a, b, c) = spec.matrices(64).unwrap();
        let alpha = activity_factor(&committed, &a, &b, &c);
        let ss = steady_state_frequency(&committed, alpha, cores);
        let d = predict_duration(&committed, alpha, 64, cores, DEFAULT_EFFICIENCY);
        println!(
            "{:<16} {:>8.4} {:>12} {:>14.6e}",
            spec.to_string(),
            alpha,
            ss.frequency_khz,
            d
        );
    }
}
