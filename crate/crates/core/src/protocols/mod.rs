//! Experiment protocols on a single device. Every protocol is a pure
//! function of the device (parameters, state and RNG stream) and its spec.

mod dc;
mod pulse;
mod write_verify;

pub use dc::{
    count_levels, run_dc_cycling, run_incremental_dc, CycleRecord, DcCycle, DcSpec, IncrementalResult,
    IncrementalSpec, LadderStep,
};
pub use pulse::{
    retention, run_ltp_ltd, run_pulse_train, LtpLtdResult, LtpLtdSpec, PulseTrainResult, PulseTrainSpec, Restore,
    RetentionSeries, RetentionSpec,
};
pub use write_verify::{write_verify, Programmable, WriteVerifyOutcome, WriteVerifySpec};
