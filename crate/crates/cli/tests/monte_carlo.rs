//! Desk-scale accuracy at the default settings. Runs after the acceptance
//! and CLI suites so its outcome never hides theirs.

use dimsc::experiments::DEFAULT_N0;
use dimsc::{run_experiment, ExperimentConfig, ExperimentId};

const DEFAULT_ACCURACY: f64 = 0.15;

#[test]
fn defaults_reach_the_reference_accuracy() {
    let mut config = ExperimentConfig::reference(ExperimentId::PureFraction, 0);
    config.knob_values = vec![DEFAULT_N0 as f64];
    let s = &run_experiment(&config).unwrap().summaries[0];
    assert_eq!(s.reps_ok, 10);
    assert!(
        s.mean_row_mhamm <= DEFAULT_ACCURACY && s.mean_col_mhamm <= DEFAULT_ACCURACY,
        "mean row {:.3}, mean col {:.3}",
        s.mean_row_mhamm,
        s.mean_col_mhamm
    );
}
