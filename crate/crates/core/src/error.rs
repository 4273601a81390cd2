use thiserror::Error;

use crate::device::SweepTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("device sampling rejected {attempts} consecutive draws")]
    SamplingFailed { attempts: usize },
    #[error("device is already electroformed")]
    AlreadyFormed,
    #[error("device is not electroformed")]
    Unformed,
    /// The forming ramp stopped before reaching the forming threshold.
    #[error("forming ramp ended at {ramp_stop} V below the forming threshold")]
    NotFormed { ramp_stop: f64, trace: Box<SweepTrace> },
    #[error("stimulus {value} has the wrong polarity for this operation")]
    InvalidPolarity { value: f64 },
    #[error("read voltage {v_read} V is at or above the disturb limit {limit} V")]
    ReadDisturbRisk { v_read: f64, limit: f64 },
    #[error("no driven terminal: the network has no reference potential")]
    SingularNetwork,
    #[error("linear solve did not converge (relative residual {residual:e})")]
    SolverFailed { residual: f64 },
    #[error("index ({row}, {col}) outside a {rows}x{cols} array")]
    OutOfBounds { row: usize, col: usize, rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("need at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
}
