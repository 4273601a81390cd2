use serde::{Deserialize, Serialize};

use crate::analysis::extract_switching_voltages;
use crate::device::{Device, SweepTrace};
use crate::error::{Error, Result};

/// Quasi-DC sweep settings shared by the cycling and incremental protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcSpec {
    pub reset_stop: f64,
    pub reset_step: f64,
    pub set_stop: f64,
    pub set_step: f64,
    pub v_read: f64,
}

impl Default for DcSpec {
    fn default() -> Self {
        Self { reset_stop: -1.4, reset_step: 0.01, set_stop: 1.3e-3, set_step: 10e-6, v_read: 0.2 }
    }
}

impl DcSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.reset_stop < 0.0 && self.set_stop > 0.0) {
            return Err(Error::InvalidArgument("need reset_stop < 0 < set_stop".into()));
        }
        if !(self.reset_step > 0.0 && self.set_step > 0.0) {
            return Err(Error::InvalidArgument("sweep steps must be > 0".into()));
        }
        if self.v_read == 0.0 {
            return Err(Error::InvalidArgument("v_read must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle_index: u64,
    /// Absent when extraction found no transition on the SET sweep.
    pub v_set: Option<f64>,
    pub v_reset: Option<f64>,
    pub r_on: f64,
    pub r_off: f64,
}

impl CycleRecord {
    pub fn flagged(&self) -> bool {
        self.v_set.is_none() || self.v_reset.is_none()
    }

    pub fn ratio(&self) -> f64 {
        self.r_off / self.r_on
    }
}

#[derive(Clone, Debug)]
pub struct DcCycle {
    pub record: CycleRecord,
    pub reset: SweepTrace,
    pub set: SweepTrace,
    /// Thresholds the model drew for this cycle.
    pub true_vset: f64,
    pub true_vreset: f64,
}

/// Full RESET sweep then full SET sweep per cycle, with a read after each.
/// A preparatory SET sweep puts the device in LRS so the first RESET switches.
pub fn run_dc_cycling(device: &mut Device, n_cycles: usize, spec: &DcSpec) -> Result<Vec<DcCycle>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(n_cycles);
    if n_cycles > 0 {
        device.sweep_set_current(spec.set_stop, spec.set_step)?;
    }
    for k in 0..n_cycles {
        let reset = device.sweep_reset(spec.reset_stop, spec.reset_step)?;
        let r_off = spec.v_read / device.read(spec.v_read)?;
        let set = device.sweep_set_current(spec.set_stop, spec.set_step)?;
        let r_on = spec.v_read / device.read(spec.v_read)?;
        let record = CycleRecord {
            cycle_index: k as u64,
            v_set: extract_switching_voltages(&set).v_set,
            v_reset: extract_switching_voltages(&reset).v_reset,
            r_on,
            r_off,
        };
        out.push(DcCycle {
            record,
            reset,
            set,
            true_vset: device.state.last_vset.unwrap_or(f64::NAN),
            true_vreset: device.state.last_vreset.unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    /// Sweep stop: amperes for SET, volts for RESET; 0 for the starting state.
    pub amplitude: f64,
    pub g_read: f64,
    pub g_true: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementalSpec {
    pub set_increment: f64,
    pub set_stop: f64,
    pub set_step: f64,
    pub reset_increment: f64,
    pub reset_stop: f64,
    pub reset_step: f64,
    pub v_read: f64,
}

impl Default for IncrementalSpec {
    fn default() -> Self {
        Self {
            set_increment: 100e-6,
            set_stop: 1.3e-3,
            set_step: 10e-6,
            reset_increment: 0.1,
            reset_stop: -1.4,
            reset_step: 0.01,
            v_read: 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IncrementalResult {
    pub set_traces: Vec<SweepTrace>,
    pub reset_traces: Vec<SweepTrace>,
    /// Starting state then one entry per SET sweep.
    pub set_ladder: Vec<LadderStep>,
    /// Starting state (end of the SET series) then one entry per RESET sweep.
    pub reset_ladder: Vec<LadderStep>,
}

impl IncrementalResult {
    pub fn set_levels(&self) -> usize {
        count_levels(&self.set_ladder, true)
    }

    pub fn reset_levels(&self) -> usize {
        count_levels(&self.reset_ladder, false)
    }
}

/// Distinct levels of a ladder: the start plus every strict move in the
/// expected direction. Returns 0 if the ladder ever moves backwards.
pub fn count_levels(ladder: &[LadderStep], increasing: bool) -> usize {
    let mut levels = usize::from(!ladder.is_empty());
    for w in ladder.windows(2) {
        let d = w[1].g_true - w[0].g_true;
        let d = if increasing { d } else { -d };
        if d < 0.0 {
            return 0;
        }
        if d > 0.0 {
            levels += 1;
        }
    }
    levels
}

fn stops(stop: f64, increment: f64) -> Vec<f64> {
    let n = (stop.abs() / increment + 1e-9).round() as usize;
    (1..=n).map(|k| (k as f64 * increment).min(stop.abs()) * stop.signum()).collect()
}

/// Restores HRS, then partial SET sweeps of growing amplitude, then partial
/// RESET sweeps of growing amplitude.
pub fn run_incremental_dc(device: &mut Device, spec: &IncrementalSpec) -> Result<IncrementalResult> {
    if !(spec.set_increment > 0.0 && spec.reset_increment > 0.0 && spec.set_stop > 0.0 && spec.reset_stop < 0.0) {
        return Err(Error::InvalidArgument("incremental sweep amplitudes must be nonzero".into()));
    }
    device.sweep_reset(spec.reset_stop, spec.reset_step)?;
    let step = |d: &mut Device, amplitude: f64| -> Result<LadderStep> {
        Ok(LadderStep { amplitude, g_read: d.read_conductance(spec.v_read)?, g_true: d.conductance() })
    };
    let mut set_traces = Vec::new();
    let mut set_ladder = vec![step(device, 0.0)?];
    for i in stops(spec.set_stop, spec.set_increment) {
        set_traces.push(device.sweep_set_current(i, spec.set_step)?);
        set_ladder.push(step(device, i)?);
    }
    let mut reset_traces = Vec::new();
    let mut reset_ladder = vec![step(device, 0.0)?];
    for v in stops(spec.reset_stop, spec.reset_increment) {
        reset_traces.push(device.sweep_reset(v, spec.reset_step)?);
        reset_ladder.push(step(device, v)?);
    }
    Ok(IncrementalResult { set_traces, reset_traces, set_ladder, reset_ladder })
}
