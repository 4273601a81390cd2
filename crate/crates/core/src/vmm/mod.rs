//! Differential weight storage on a pair of crossbars and single-layer
//! in-memory inference.
//!
//! A weight `w` is held as `g_pos - g_neg = scale * w`, with the inactive
//! side of each pair parked at the bottom of the window.

mod task;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{write_verify, WriteVerifyOutcome, WriteVerifySpec};
use crate::xbar::Crossbar;

pub use task::{
    accuracy, argmax, augment, generate_task, run_transfer, train_softmax, Dataset, InSituTrainer, Samples,
    TaskSpec, TrainSpec, TransferReport, TransferSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMapping {
    /// Siemens per weight unit.
    pub scale: f64,
    /// Conductance of the inactive side of a pair.
    pub g_ref: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappedWeights {
    pub mapping: WeightMapping,
    pub g_pos: DMatrix<f64>,
    pub g_neg: DMatrix<f64>,
}

/// Maps `w` (inputs x outputs) into the window so that the largest `|w|`
/// spans it. An all-zero matrix uses `scale = 1` and parks every device at
/// `g_lo`.
pub fn map_weights(w: &DMatrix<f64>, window: (f64, f64)) -> Result<MappedWeights> {
    let (g_lo, g_hi) = window;
    if !(g_lo > 0.0 && g_lo < g_hi && g_hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid window [{g_lo:e}, {g_hi:e}]")));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let wmax = w.amax();
    let scale = if wmax == 0.0 { 1.0 } else { (g_hi - g_lo) / wmax };
    // the largest weight lands on g_hi exactly rather than through rounding
    let side = |x: f64| if x.abs() == wmax { g_hi } else { g_lo + scale * x };
    let g_pos = w.map(|x| if x > 0.0 { side(x) } else { g_lo });
    let g_neg = w.map(|x| if x < 0.0 { side(-x) } else { g_lo });
    Ok(MappedWeights { mapping: WeightMapping { scale, g_ref: g_lo }, g_pos, g_neg })
}

/// Weights represented by a pair of conductance matrices.
pub fn decode(mapping: &WeightMapping, g_pos: &DMatrix<f64>, g_neg: &DMatrix<f64>) -> DMatrix<f64> {
    (g_pos - g_neg) / mapping.scale
}

#[derive(Clone, Debug)]
pub struct CrossbarPair {
    pub pos: Crossbar,
    pub neg: Crossbar,
    pub mapping: WeightMapping,
}

impl CrossbarPair {
    pub fn new(pos: Crossbar, neg: Crossbar, mapping: WeightMapping) -> Result<Self> {
        if (pos.rows(), pos.cols()) != (neg.rows(), neg.cols()) {
            return Err(Error::DimensionMismatch { expected: pos.rows() * pos.cols(), got: neg.rows() * neg.cols() });
        }
        Ok(Self { pos, neg, mapping })
    }

    pub fn rows(&self) -> usize {
        self.pos.rows()
    }

    pub fn cols(&self) -> usize {
        self.pos.cols()
    }

    /// Weights currently stored, from the noiseless device conductances.
    pub fn stored_weights(&self) -> DMatrix<f64> {
        let (n, m) = (self.rows(), self.cols());
        let gp = DMatrix::from_row_slice(n, m, &self.pos.conductances());
        let gn = DMatrix::from_row_slice(n, m, &self.neg.conductances());
        decode(&self.mapping, &gp, &gn)
    }
}

/// Column scores `(I_pos - I_neg) / scale` for row voltages `input`.
pub fn infer(pair: &CrossbarPair, input: &[f64]) -> Result<Vec<f64>> {
    let ip = pair.pos.vmm(input)?;
    let ineg = pair.neg.vmm(input)?;
    Ok(ip.iter().zip(&ineg).map(|(p, n)| (p - n) / pair.mapping.scale).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Pos,
    Neg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub side: Side,
    pub row: usize,
    pub col: usize,
    pub target: f64,
    pub outcome: WriteVerifyOutcome,
    /// Summed `|dx|` on every other cell of the same array while this one
    /// was programmed.
    pub disturb_dx: f64,
    pub max_disturb_drop: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgramReport {
    pub cells: Vec<CellReport>,
}

impl ProgramReport {
    pub fn converged_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 1.0;
        }
        self.cells.iter().filter(|c| c.outcome.success).count() as f64 / self.cells.len() as f64
    }

    pub fn total_pulses(&self) -> usize {
        self.cells.iter().map(|c| c.outcome.pulses).sum()
    }

    pub fn total_disturb_dx(&self) -> f64 {
        self.cells.iter().map(|c| c.disturb_dx).sum()
    }

    pub fn failures(&self) -> impl Iterator<Item = &CellReport> {
        self.cells.iter().filter(|c| !c.outcome.success)
    }
}

/// Write-verifies one array cell by cell in row-major order. Cells that do
/// not converge are recorded and the run continues.
pub fn program_array(xbar: &mut Crossbar, side: Side, targets: &DMatrix<f64>, spec: &WriteVerifySpec) -> Result<ProgramReport> {
    let (n, m) = (xbar.rows(), xbar.cols());
    if targets.shape() != (n, m) {
        return Err(Error::DimensionMismatch { expected: n * m, got: targets.len() });
    }
    let mut cells = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let target = targets[(i, j)];
            let mut cell = xbar.cell(i, j)?;
            let outcome = write_verify(&mut cell, target, spec)?;
            cells.push(CellReport {
                side,
                row: i,
                col: j,
                target,
                outcome,
                disturb_dx: cell.disturb.total_dx,
                max_disturb_drop: cell.disturb.max_drop,
            });
        }
    }
    Ok(ProgramReport { cells })
}

/// Programs both arrays of `pair` to the mapped targets.
pub fn program_pair(pair: &mut CrossbarPair, mapped: &MappedWeights, spec: &WriteVerifySpec) -> Result<ProgramReport> {
    let mut report = program_array(&mut pair.pos, Side::Pos, &mapped.g_pos, spec)?;
    report.cells.extend(program_array(&mut pair.neg, Side::Neg, &mapped.g_neg, spec)?.cells);
    pair.mapping = mapped.mapping.clone();
    Ok(report)
}

#[cfg(test)]
mod tests;
