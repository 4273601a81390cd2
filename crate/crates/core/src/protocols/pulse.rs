use serde::{Deserialize, Serialize};

use crate::analysis::moments;
use crate::device::{Device, REFERENCE_PULSE_WIDTH};
use crate::error::{Error, Result};

use super::dc::DcSpec;
use super::write_verify::{write_verify, WriteVerifySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restore {
    /// Full SET sweep before each cycle (start from LRS).
    SetSweep,
    /// Full RESET sweep before each cycle (start from HRS).
    ResetSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrainSpec {
    pub amplitude: f64,
    pub width: f64,
    pub n_pulses: usize,
    pub n_cycles: usize,
    pub read_width: f64,
    pub restore: Restore,
    pub v_read: f64,
}

impl PulseTrainSpec {
    /// Defaults for one amplitude; depression trains start from LRS,
    /// potentiation trains from HRS.
    pub fn new(amplitude: f64) -> Self {
        Self {
            amplitude,
            width: REFERENCE_PULSE_WIDTH,
            n_pulses: 400,
            n_cycles: 5,
            read_width: 1e-3,
            restore: if amplitude < 0.0 { Restore::SetSweep } else { Restore::ResetSweep },
            v_read: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pulses < 1 || self.n_cycles < 1 {
            return Err(Error::InvalidArgument("n_pulses and n_cycles must be >= 1".into()));
        }
        if !(self.width > 0.0 && self.read_width >= 0.0) {
            return Err(Error::InvalidArgument("pulse width must be > 0".into()));
        }
        Ok(())
    }
}

pub(crate) fn restore(device: &mut Device, how: Restore, dc: &DcSpec) -> Result<()> {
    match how {
        Restore::SetSweep => device.sweep_set_current(dc.set_stop, dc.set_step)?,
        Restore::ResetSweep => device.sweep_reset(dc.reset_stop, dc.reset_step)?,
    };
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTrainResult {
    pub amplitude: f64,
    /// `n_cycles` rows of `n_pulses + 1` read conductances, siemens.
    pub g: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl PulseTrainResult {
    /// Read conductance after the last pulse of each cycle.
    pub fn terminal(&self) -> Vec<f64> {
        self.g.iter().map(|row| *row.last().unwrap()).collect()
    }
}

/// Repeated write-then-read pulse trains, each cycle preceded by a full
/// quasi-DC restore sweep.
pub fn run_pulse_train(device: &mut Device, spec: &PulseTrainSpec) -> Result<PulseTrainResult> {
    spec.validate()?;
    let dc = DcSpec::default();
    let mut g = Vec::with_capacity(spec.n_cycles);
    for _ in 0..spec.n_cycles {
        restore(device, spec.restore, &dc)?;
        let mut row = Vec::with_capacity(spec.n_pulses + 1);
        row.push(device.read_conductance(spec.v_read)?);
        for _ in 0..spec.n_pulses {
            device.apply_pulse(spec.amplitude, spec.width)?;
            device.advance_time(spec.width + spec.read_width);
            row.push(device.read_conductance(spec.v_read)?);
        }
        g.push(row);
    }
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for k in 0..=spec.n_pulses {
        let col: Vec<f64> = g.iter().map(|r| r[k]).collect();
        let m = moments(&col)?;
        mean.push(m.mean);
        std.push(m.std);
    }
    Ok(PulseTrainResult { amplitude: spec.amplitude, g, mean, std })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LtpLtdSpec {
    pub v_pot: f64,
    pub v_dep: f64,
    pub n_each: usize,
    pub width: f64,
    pub v_read: f64,
    /// Starting conductance as a fraction of the programming window.
    pub start_fraction: f64,
    /// Tolerance of the starting write-verify, as a fraction of the window.
    pub start_tol_fraction: f64,
}

impl Default for LtpLtdSpec {
    fn default() -> Self {
        Self {
            v_pot: 1.45,
            v_dep: -2.0,
            n_each: 100,
            width: REFERENCE_PULSE_WIDTH,
            v_read: 0.2,
            start_fraction: 0.05,
            start_tol_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtpLtdResult {
    /// Read conductance: start, then one per pulse. `2 * n_each + 1` points.
    pub curve: Vec<f64>,
    /// Noiseless conductance at the same points.
    pub curve_true: Vec<f64>,
    pub n_each: usize,
}

impl LtpLtdResult {
    pub fn ltp(&self) -> &[f64] {
        &self.curve[..=self.n_each]
    }

    pub fn ltd(&self) -> &[f64] {
        &self.curve[self.n_each..]
    }
}

/// Potentiation then depression at fixed amplitudes, starting from a state
/// written just above the bottom of the programming window.
pub fn run_ltp_ltd(device: &mut Device, spec: &LtpLtdSpec) -> Result<LtpLtdResult> {
    if !(spec.v_pot > 0.0 && spec.v_dep < 0.0 && spec.width > 0.0) {
        return Err(Error::InvalidArgument("need v_pot > 0 > v_dep and width > 0".into()));
    }
    let (lo, hi) = (device.params.g_lo, device.params.g_hi);
    restore(device, Restore::ResetSweep, &DcSpec::default())?;
    let wv = WriteVerifySpec {
        tol: spec.start_tol_fraction * (hi - lo),
        v_read: spec.v_read,
        ..WriteVerifySpec::default()
    };
    write_verify(device, lo + spec.start_fraction * (hi - lo), &wv)?;
    let mut curve = vec![device.read_conductance(spec.v_read)?];
    let mut curve_true = vec![device.conductance()];
    for v in std::iter::repeat_n(spec.v_pot, spec.n_each).chain(std::iter::repeat_n(spec.v_dep, spec.n_each)) {
        device.apply_pulse(v, spec.width)?;
        curve.push(device.read_conductance(spec.v_read)?);
        curve_true.push(device.conductance());
    }
    Ok(LtpLtdResult { curve, curve_true, n_each: spec.n_each })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetentionSpec {
    pub duration: f64,
    pub interval: f64,
    pub v_read: f64,
    /// Write-verify tolerance for the intermediate states, siemens.
    pub tol: f64,
    pub max_pulses: usize,
}

impl Default for RetentionSpec {
    fn default() -> Self {
        Self { duration: 3e4, interval: 300.0, v_read: 0.2, tol: 12.5e-6, max_pulses: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetentionSeries {
    pub label: String,
    pub g_target: Option<f64>,
    pub times: Vec<f64>,
    pub g: Vec<f64>,
}

impl RetentionSeries {
    /// Least-squares slope over the series times its duration, siemens.
    pub fn drift(&self) -> f64 {
        let n = self.g.len() as f64;
        if self.g.len() < 2 {
            return 0.0;
        }
        let tm = self.times.iter().sum::<f64>() / n;
        let gm = self.g.iter().sum::<f64>() / n;
        let (mut stg, mut stt) = (0.0, 0.0);
        for (t, g) in self.times.iter().zip(&self.g) {
            stg += (t - tm) * (g - gm);
            stt += (t - tm) * (t - tm);
        }
        stg / stt * (self.times[self.times.len() - 1] - self.times[0])
    }
}

/// Programs HRS, three intermediate states and LRS, then reads each
/// periodically over the simulated duration.
pub fn retention(device: &mut Device, spec: &RetentionSpec) -> Result<Vec<RetentionSeries>> {
    if !(spec.duration >= 0.0 && spec.interval > 0.0) {
        return Err(Error::InvalidArgument("need duration >= 0 and interval > 0".into()));
    }
    let n = (spec.duration / spec.interval + 1e-9).floor() as usize + 1;
    let (lo, hi) = (device.params.g_lo, device.params.g_hi);
    let dc = DcSpec::default();
    let wv = WriteVerifySpec { tol: spec.tol, max_pulses: spec.max_pulses, v_read: spec.v_read, ..Default::default() };
    let states: [(&str, Option<f64>); 5] = [
        ("HRS", None),
        ("IRS1", Some(lo + 0.25 * (hi - lo))),
        ("IRS2", Some(lo + 0.5 * (hi - lo))),
        ("IRS3", Some(lo + 0.75 * (hi - lo))),
        ("LRS", None),
    ];
    let mut out = Vec::new();
    for (label, target) in states {
        restore(device, Restore::ResetSweep, &dc)?;
        match (label, target) {
            (_, Some(t)) => {
                write_verify(device, t, &wv)?;
            }
            ("LRS", None) => restore(device, Restore::SetSweep, &dc)?,
            _ => {}
        }
        let mut times = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                device.advance_time(spec.interval);
            }
            times.push(k as f64 * spec.interval);
            g.push(device.read_conductance(spec.v_read)?);
        }
        out.push(RetentionSeries { label: label.to_string(), g_target: target, times, g });
    }
    Ok(out)
}
