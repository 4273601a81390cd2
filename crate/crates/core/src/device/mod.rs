//! Behavioral compact model of a single bipolar memristor.

mod params;
mod trace;

pub use params::{
    reference_device, sample_device, DeviceParams, PopulationParams, PulseDynamicsParams, MAX_REDRAWS,
};
pub use trace::{SweepMode, SweepPoint, SweepTrace};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seed::{rng_from, SimRng};
use trace::ramp_magnitudes;

/// Resistance seen by any read before electroforming.
pub const PRISTINE_RESISTANCE: f64 = 1e6;

/// Pulse width at which the update coefficients are calibrated.
pub const REFERENCE_PULSE_WIDTH: f64 = 200e-9;

/// Voltage increment of the electroforming ramp.
pub const FORMING_STEP: f64 = 0.01;

pub const DEFAULT_FORMING_STOP: f64 = 5.0;
pub const DEFAULT_COMPLIANCE: f64 = 300e-6;

#[derive(Clone, Debug)]
pub struct DeviceState {
    pub x: f64,
    pub formed: bool,
    pub cycle_index: u64,
    /// SET threshold drawn for the most recent current sweep.
    pub last_vset: Option<f64>,
    /// RESET threshold drawn for the most recent voltage sweep.
    pub last_vreset: Option<f64>,
    rng: SimRng,
}

impl DeviceState {
    fn new(seed: u64) -> Self {
        Self { x: 0.0, formed: false, cycle_index: 0, last_vset: None, last_vreset: None, rng: rng_from(seed) }
    }
}

#[derive(Clone, Debug)]
pub struct Device {
    pub params: DeviceParams,
    pub state: DeviceState,
}

impl Device {
    /// A pristine (unformed) device with its own RNG stream.
    pub fn new(params: DeviceParams, seed: u64) -> Self {
        Self { params, state: DeviceState::new(seed) }
    }

    /// Convenience: a device electroformed with the default 5 V / 300 uA ramp.
    pub fn new_formed(params: DeviceParams, seed: u64) -> Result<Self> {
        let mut d = Self::new(params, seed);
        d.electroform(DEFAULT_FORMING_STOP, DEFAULT_COMPLIANCE)?;
        Ok(d)
    }

    pub fn reseed(&mut self, seed: u64) {
        self.state.rng = rng_from(seed);
    }

    pub fn is_formed(&self) -> bool {
        self.state.formed
    }

    /// Noiseless conductance in siemens.
    pub fn conductance(&self) -> f64 {
        if self.state.formed {
            self.g_of(self.state.x)
        } else {
            1.0 / PRISTINE_RESISTANCE
        }
    }

    fn g_of(&self, x: f64) -> f64 {
        let (lo, hi) = (self.params.g_min(), self.params.g_max());
        lo + x * (hi - lo)
    }

    fn x_of(&self, g: f64) -> f64 {
        let (lo, hi) = (self.params.g_min(), self.params.g_max());
        ((g - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// State variable that yields conductance `g`, clamped to `[0, 1]`.
    pub fn state_for_conductance(&self, g: f64) -> f64 {
        self.x_of(g)
    }

    fn gauss(&mut self) -> f64 {
        self.state.rng.sample(StandardNormal)
    }

    fn require_formed(&self) -> Result<()> {
        if self.state.formed {
            Ok(())
        } else {
            Err(Error::Unformed)
        }
    }

    /// Ramps the voltage from 0 to `ramp_stop` in [`FORMING_STEP`]
    /// increments under current compliance.
    pub fn electroform(&mut self, ramp_stop: f64, i_compliance: f64) -> Result<SweepTrace> {
        if self.state.formed {
            return Err(Error::AlreadyFormed);
        }
        if !(ramp_stop > 0.0 && ramp_stop.is_finite()) {
            return Err(Error::InvalidArgument(format!("forming ramp_stop must be > 0, got {ramp_stop}")));
        }
        if !(i_compliance > 0.0 && i_compliance.is_finite()) {
            return Err(Error::InvalidArgument(format!("compliance must be > 0, got {i_compliance}")));
        }
        let mut trace = SweepTrace::new(SweepMode::Voltage);
        for v in ramp_magnitudes(ramp_stop, FORMING_STEP) {
            if !self.state.formed && v >= self.params.forming_v {
                let o = self.params.forming_overshoot_rel;
                let u: f64 = if o > 0.0 { self.state.rng.random_range(-o..=o) } else { 0.0 };
                let p = &mut self.params;
                p.r_hrs = (p.r_hrs * (1.0 + u)).clamp(p.hrs_min, p.hrs_max);
                self.state.formed = true;
                self.state.x = 0.0;
            }
            if self.state.formed {
                let g = self.conductance();
                let i = (v * g).min(i_compliance);
                trace.push(v, i, i / g);
            } else {
                trace.push(v, v / PRISTINE_RESISTANCE, v);
            }
        }
        trace.mark_apex();
        if self.state.formed {
            Ok(trace)
        } else {
            Err(Error::NotFormed { ramp_stop, trace: Box::new(trace) })
        }
    }

    /// Negative quasi-DC voltage sweep `0 -> v_stop -> 0`.
    pub fn sweep_reset(&mut self, v_stop: f64, step: f64) -> Result<SweepTrace> {
        self.require_formed()?;
        if v_stop > 0.0 {
            return Err(Error::InvalidPolarity { value: v_stop });
        }
        check_step(step, v_stop)?;
        let z = self.gauss();
        let vth = (self.params.vreset + self.params.vreset_std_c2c * z).abs();
        self.state.last_vreset = Some(-vth);
        self.state.cycle_index += 1;

        let v_full = self.params.reset_full_voltage;
        let target = |u: f64| {
            if v_full > vth {
                ((v_full - u) / (v_full - vth)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        let mags = ramp_magnitudes(v_stop, step);
        let mut trace = SweepTrace::new(SweepMode::Voltage);
        for &u in &mags {
            if u >= vth {
                self.state.x = self.state.x.min(target(u));
            }
            trace.push(-u, -u * self.conductance(), -u);
        }
        trace.mark_apex();
        for &u in mags.iter().rev().skip(1) {
            trace.push(-u, -u * self.conductance(), -u);
        }
        Ok(trace)
    }

    /// Positive quasi-DC current sweep `0 -> i_stop -> 0`.
    pub fn sweep_set_current(&mut self, i_stop: f64, step: f64) -> Result<SweepTrace> {
        self.require_formed()?;
        if i_stop < 0.0 {
            return Err(Error::InvalidPolarity { value: i_stop });
        }
        check_step(step, i_stop)?;
        let z = self.gauss();
        let vth = (self.params.vset + self.params.vset_std_c2c * z).max(1e-3);
        self.state.last_vset = Some(vth);
        self.state.cycle_index += 1;

        let i_full = self.params.set_full_current;
        let i_th = vth * self.params.g_min();
        let cap = if i_full > i_th { ((i_stop - i_th) / (i_full - i_th)).clamp(0.0, 1.0) } else { 1.0 };
        let r_clamp = self.params.set_clamp_resistance;

        let mags = ramp_magnitudes(i_stop, step);
        let mut trace = SweepTrace::new(SweepMode::Current);
        let mut i_on: Option<f64> = None;
        for &i in &mags {
            let g = self.conductance();
            if i_on.is_none() && i > 0.0 && i / g >= vth {
                i_on = Some(vth * g);
            }
            if let Some(on) = i_on {
                let v_dev = vth + r_clamp * (i - on);
                let x_clamp = self.x_of(i / v_dev);
                self.state.x = self.state.x.max(x_clamp.min(cap));
            }
            trace.push(i, i, i / self.conductance());
        }
        trace.mark_apex();
        for &i in mags.iter().rev().skip(1) {
            trace.push(i, i, i / self.conductance());
        }
        Ok(trace)
    }

    /// Applies one rectangular pulse and returns the new state variable.
    pub fn apply_pulse(&mut self, v: f64, width: f64) -> Result<f64> {
        self.require_formed()?;
        if !(width >= 0.0 && width.is_finite()) {
            return Err(Error::InvalidArgument(format!("pulse width must be >= 0, got {width}")));
        }
        if width == 0.0 || v == 0.0 {
            return Ok(self.state.x);
        }
        let p = &self.params.pulse;
        let x = self.state.x;
        let (sign, a, v0, vth, window) = if v > 0.0 {
            (1.0, p.a_pot, p.v0_pot, p.vth_pot, (1.0 - x).powf(p.p_pot))
        } else {
            (-1.0, p.a_dep, p.v0_dep, p.vth_dep, x.powf(p.p_dep))
        };
        let mag = v.abs();
        if mag <= vth {
            return Ok(x);
        }
        let drive = a * ((mag / v0).exp() - (vth / v0).exp());
        let eta = self.params.c2c_update_noise_rel * self.gauss();
        let dx = sign * drive * window * (width / REFERENCE_PULSE_WIDTH) * (1.0 + eta).max(0.0);
        self.state.x = (x + dx).clamp(0.0, 1.0);
        Ok(self.state.x)
    }

    /// Largest read amplitude that is guaranteed not to disturb the state.
    pub fn read_limit(&self) -> f64 {
        self.params.pulse.read_limit()
    }

    /// Noisy read current in amperes; never changes the state.
    pub fn read(&mut self, v_read: f64) -> Result<f64> {
        let limit = self.read_limit();
        if !(v_read.abs() < limit) {
            return Err(Error::ReadDisturbRisk { v_read, limit });
        }
        Ok(self.conductance() * v_read * self.read_noise_factor())
    }

    /// One multiplicative read-noise draw `1 + xi * read_noise_rel` from this
    /// device's stream. Always consumes one normal draw.
    pub fn read_noise_factor(&mut self) -> f64 {
        let xi = self.gauss();
        1.0 + xi * self.params.read_noise_rel
    }

    /// Noisy conductance estimate from a read at `v_read`.
    pub fn read_conductance(&mut self, v_read: f64) -> Result<f64> {
        if v_read == 0.0 {
            return Err(Error::InvalidArgument("conductance read needs a nonzero voltage".into()));
        }
        Ok(self.read(v_read)? / v_read)
    }

    /// Logical time advance. The model has no drift; this is the hook for one.
    pub fn advance_time(&mut self, _dt: f64) {}
}

fn check_step(step: f64, stop: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("sweep step must be > 0, got {step}")));
    }
    if !stop.is_finite() {
        return Err(Error::InvalidArgument(format!("sweep stop must be finite, got {stop}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
