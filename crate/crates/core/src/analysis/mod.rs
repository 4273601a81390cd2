//! Figure quantities from simulated records: switching voltages, cycle and
//! device statistics, band separation, multilevel capacity and linearity.

mod extract;
mod stats;

pub use extract::{
    extract_switching_voltages, extract_with, ExtractionConfig, SwitchingVoltages, MIN_BRANCH_POINTS,
};
pub use stats::{
    band_gap, band_overlap, band_report, cycle_stats, d2d_stats, histogram, is_quasi_linear, linearity_metric,
    max_disjoint, moments, multilevel_capacity, Band, Histogram, Moments, OverlapReport, PairGap, SwitchStats,
    HISTOGRAM_BINS, QUASI_LINEAR_THRESHOLD,
};
