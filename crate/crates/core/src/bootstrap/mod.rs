//! Multiplier bootstrap calibration of the `(s0, p)` statistic family.

mod calibration;
mod ensemble;

pub use calibration::{
    adaptive_over, adaptive_p_value, adaptive_statistic, critical_value, decide, doubly_adaptive,
    leave_one_out_pvalues, p_value, recycled_pvalues, recycled_pvalues_for, AdaptiveResult,
};
pub use ensemble::{
    bootstrap_rhat, bootstrap_rtilde, bootstrap_w, multipliers, replicate_trivec, rtilde_replicate_moments,
    run_ensemble, BootstrapEnsemble, Grid, GridEntry,
};
