use serde::{Deserialize, Serialize};

use crate::device::{Device, REFERENCE_PULSE_WIDTH};
use crate::error::{Error, Result};

/// Anything that can be read and pulsed: a lone device or an array cell.
pub trait Programmable {
    /// Conductance estimate from one read, siemens.
    fn read_g(&mut self, v_read: f64) -> Result<f64>;
    fn pulse(&mut self, v: f64, width: f64) -> Result<()>;
    /// Potentiation and depression onset magnitudes, volts.
    fn thresholds(&self) -> (f64, f64);
    /// Analogue programming window `(g_lo, g_hi)`, siemens.
    fn window(&self) -> (f64, f64);
}

impl Programmable for Device {
    fn read_g(&mut self, v_read: f64) -> Result<f64> {
        self.read_conductance(v_read)
    }

    fn pulse(&mut self, v: f64, width: f64) -> Result<()> {
        self.apply_pulse(v, width).map(|_| ())
    }

    fn thresholds(&self) -> (f64, f64) {
        (self.params.pulse.vth_pot, self.params.pulse.vth_dep)
    }

    fn window(&self) -> (f64, f64) {
        (self.params.g_lo, self.params.g_hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WriteVerifySpec {
    pub tol: f64,
    pub max_pulses: usize,
    pub width: f64,
    pub v_read: f64,
    /// Amplitude above threshold far from the target, volts.
    pub coarse_overdrive: f64,
    /// Amplitude above threshold close to the target, volts.
    pub fine_overdrive: f64,
    /// Switch to fine pulses within this many tolerances of the target.
    pub fine_zone: f64,
}

impl Default for WriteVerifySpec {
    fn default() -> Self {
        Self {
            tol: 12.5e-6,
            max_pulses: 1000,
            width: REFERENCE_PULSE_WIDTH,
            v_read: 0.2,
            coarse_overdrive: 0.3,
            fine_overdrive: 0.1,
            fine_zone: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriteVerifyOutcome {
    pub success: bool,
    pub pulses: usize,
    /// Last read conductance.
    pub g_final: f64,
}

/// Read, compare, pulse toward the target; repeat until within `tol` or
/// out of pulses. Non-convergence is reported, not raised.
pub fn write_verify<P: Programmable + ?Sized>(
    dev: &mut P,
    g_target: f64,
    spec: &WriteVerifySpec,
) -> Result<WriteVerifyOutcome> {
    let (lo, hi) = dev.window();
    if !(lo..=hi).contains(&g_target) {
        return Err(Error::InvalidArgument(format!(
            "target {g_target:e} S outside the programming window [{lo:e}, {hi:e}]"
        )));
    }
    if !(spec.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", spec.tol)));
    }
    let (vth_pot, vth_dep) = dev.thresholds();
    let mut g = dev.read_g(spec.v_read)?;
    let mut pulses = 0;
    while (g - g_target).abs() > spec.tol && pulses < spec.max_pulses {
        let err = g_target - g;
        let od = if err.abs() <= spec.fine_zone * spec.tol { spec.fine_overdrive } else { spec.coarse_overdrive };
        let v = if err > 0.0 { vth_pot + od } else { -(vth_dep + od) };
        dev.pulse(v, spec.width)?;
        pulses += 1;
        g = dev.read_g(spec.v_read)?;
    }
    Ok(WriteVerifyOutcome { success: (g - g_target).abs() <= spec.tol, pulses, g_final: g })
}
