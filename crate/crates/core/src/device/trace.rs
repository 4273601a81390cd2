use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Stimulus is the applied voltage.
    Voltage,
    /// Stimulus is the forced current; `voltage` is the resulting drop.
    Current,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Volts or amperes depending on the trace mode.
    pub stimulus: f64,
    pub current: f64,
    pub voltage: f64,
}

/// An ordered quasi-DC sweep: outgoing ramp up to `apex`, then the return
/// ramp. The stimulus is strictly monotone within each ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub mode: SweepMode,
    pub points: Vec<SweepPoint>,
    /// Index of the last point of the outgoing ramp.
    pub apex: usize,
}

impl SweepTrace {
    pub(crate) fn new(mode: SweepMode) -> Self {
        Self { mode, points: Vec::new(), apex: 0 }
    }

    pub(crate) fn push(&mut self, stimulus: f64, current: f64, voltage: f64) {
        self.points.push(SweepPoint { stimulus, current, voltage });
    }

    pub(crate) fn mark_apex(&mut self) {
        self.apex = self.points.len().saturating_sub(1);
    }

    pub fn outgoing(&self) -> &[SweepPoint] {
        if self.points.is_empty() {
            &[]
        } else {
            &self.points[..=self.apex]
        }
    }

    pub fn returning(&self) -> &[SweepPoint] {
        if self.points.is_empty() {
            &[]
        } else {
            &self.points[self.apex..]
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Magnitudes `0, step, 2*step, ...` up to `stop`, with `stop` itself
/// appended when it is off-grid. A step larger than the range yields `[0]`.
pub(crate) fn ramp_magnitudes(stop: f64, step: f64) -> Vec<f64> {
    let stop = stop.abs();
    if step > stop {
        return vec![0.0];
    }
    let n = (stop / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    let last = *out.last().unwrap();
    if stop - last > 1e-9 * stop.max(step) {
        out.push(stop);
    } else {
        *out.last_mut().unwrap() = stop;
    }
    out
}
