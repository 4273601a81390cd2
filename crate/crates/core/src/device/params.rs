use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_from, SimRng};

/// Sampling attempts before `sample_device` gives up on a population whose
/// spreads keep producing invalid devices.
pub const MAX_REDRAWS: usize = 100;

/// Threshold-activated pulse update coefficients.
///
/// For a pulse of amplitude `v` above threshold the state moves by
/// `a * (exp(|v|/v0) - exp(vth/v0)) * window(x) * width/200ns`, with window
/// `(1-x)^p_pot` for potentiation (v > 0) and `x^p_dep` for depression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseDynamicsParams {
    /// Potentiation onset, volts.
    pub vth_pot: f64,
    /// Depression onset magnitude, volts.
    pub vth_dep: f64,
    pub a_pot: f64,
    pub a_dep: f64,
    /// Exponential voltage sensitivity, volts.
    pub v0_pot: f64,
    pub v0_dep: f64,
    pub p_pot: f64,
    pub p_dep: f64,
}

impl Default for PulseDynamicsParams {
    fn default() -> Self {
        Self {
            vth_pot: 1.1,
            vth_dep: 1.2,
            a_pot: 5.75e-7,
            a_dep: 1.27e-3,
            v0_pot: 0.15,
            v0_dep: 0.8,
            p_pot: 0.3,
            p_dep: 1.0,
        }
    }
}

impl PulseDynamicsParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vth_pot", self.vth_pot),
            ("vth_dep", self.vth_dep),
            ("a_pot", self.a_pot),
            ("a_dep", self.a_dep),
            ("v0_pot", self.v0_pot),
            ("v0_dep", self.v0_dep),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("pulse.{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("p_pot", self.p_pot), ("p_dep", self.p_dep)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("pulse.{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Largest read amplitude that cannot disturb the state.
    pub fn read_limit(&self) -> f64 {
        self.vth_pot.min(self.vth_dep) / 2.0
    }
}

/// Population distributions from which each device is drawn once.
///
/// Voltages in volts, resistances in ohms, conductances in siemens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationParams {
    pub vset_mean_d2d: f64,
    pub vset_std_d2d: f64,
    pub vreset_mean_d2d: f64,
    pub vreset_std_d2d: f64,
    pub vset_std_c2c: f64,
    pub vreset_std_c2c: f64,
    pub hrs_min: f64,
    pub hrs_max: f64,
    pub lrs_nominal: f64,
    pub g_lo: f64,
    pub g_hi: f64,
    pub forming_voltage_mean: f64,
    pub forming_voltage_std: f64,
    /// Half-width of the uniform relative HRS perturbation applied at forming.
    pub forming_overshoot_rel: f64,
    /// Slope of the device voltage while a current-driven SET is in progress.
    pub set_clamp_resistance: f64,
    /// Current-sweep amplitude that fully SETs a device.
    pub set_full_current: f64,
    /// Voltage-sweep magnitude that fully RESETs a device.
    pub reset_full_voltage: f64,
    pub read_noise_rel: f64,
    pub c2c_update_noise_rel: f64,
    pub pulse: PulseDynamicsParams,
}

impl Default for PopulationParams {
    fn default() -> Self {
        Self {
            vset_mean_d2d: 0.86,
            vset_std_d2d: 0.16,
            vreset_mean_d2d: -0.92,
            vreset_std_d2d: 0.22,
            vset_std_c2c: 0.048,
            vreset_std_c2c: 0.052,
            hrs_min: 8e3,
            hrs_max: 18e3,
            lrs_nominal: 1.5e3,
            g_lo: 250e-6,
            g_hi: 650e-6,
            forming_voltage_mean: 2.6,
            forming_voltage_std: 0.3,
            forming_overshoot_rel: 0.1,
            set_clamp_resistance: 100.0,
            set_full_current: 1.3e-3,
            reset_full_voltage: 1.4,
            read_noise_rel: 0.01,
            c2c_update_noise_rel: 0.05,
            pulse: PulseDynamicsParams::default(),
        }
    }
}

impl PopulationParams {
    /// Same means, every spread collapsed: all devices identical, HRS at the
    /// middle of the default range.
    pub fn zero_variance(&self) -> Self {
        let mid = 0.5 * (self.hrs_min + self.hrs_max);
        Self {
            vset_std_d2d: 0.0,
            vreset_std_d2d: 0.0,
            vset_std_c2c: 0.0,
            vreset_std_c2c: 0.0,
            hrs_min: mid,
            hrs_max: mid,
            forming_voltage_std: 0.0,
            forming_overshoot_rel: 0.0,
            read_noise_rel: 0.0,
            c2c_update_noise_rel: 0.0,
            ..self.clone()
        }
    }

    /// Read and update noise switched off; device-to-device and
    /// cycle-to-cycle threshold variability is kept.
    pub fn without_noise(&self) -> Self {
        Self { read_noise_rel: 0.0, c2c_update_noise_rel: 0.0, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.hrs_min > 0.0 && self.hrs_min <= self.hrs_max) {
            return bad(format!("need 0 < hrs_min <= hrs_max, got {} / {}", self.hrs_min, self.hrs_max));
        }
        if !(self.lrs_nominal > 0.0 && self.lrs_nominal < self.hrs_min) {
            return bad(format!("need 0 < lrs_nominal < hrs_min, got {}", self.lrs_nominal));
        }
        if !(1.0 / self.hrs_min < self.g_hi) {
            return bad("1/hrs_min must be below g_hi".into());
        }
        if !(self.g_lo > 0.0 && self.g_lo < self.g_hi) {
            return bad(format!("need 0 < g_lo < g_hi, got {} / {}", self.g_lo, self.g_hi));
        }
        if !(self.vset_mean_d2d > 0.0 && self.vreset_mean_d2d < 0.0) {
            return bad("need vset_mean_d2d > 0 > vreset_mean_d2d".into());
        }
        let stds = [
            ("vset_std_d2d", self.vset_std_d2d),
            ("vreset_std_d2d", self.vreset_std_d2d),
            ("vset_std_c2c", self.vset_std_c2c),
            ("vreset_std_c2c", self.vreset_std_c2c),
            ("forming_voltage_std", self.forming_voltage_std),
            ("forming_overshoot_rel", self.forming_overshoot_rel),
            ("read_noise_rel", self.read_noise_rel),
            ("c2c_update_noise_rel", self.c2c_update_noise_rel),
        ];
        for (name, v) in stds {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.forming_overshoot_rel >= 1.0 {
            return bad("forming_overshoot_rel must be < 1".into());
        }
        if !(self.forming_voltage_mean > 0.0) {
            return bad("forming_voltage_mean must be > 0".into());
        }
        for (name, v) in [
            ("set_clamp_resistance", self.set_clamp_resistance),
            ("set_full_current", self.set_full_current),
            ("reset_full_voltage", self.reset_full_voltage),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if self.set_full_current <= 0.0 || self.reset_full_voltage <= 0.0 {
            return bad("set_full_current and reset_full_voltage must be > 0".into());
        }
        self.pulse.validate()
    }
}

/// One realized device. Every field is a per-device copy so a device can be
/// serialized and replayed without its population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub vset: f64,
    pub vreset: f64,
    pub vset_std_c2c: f64,
    pub vreset_std_c2c: f64,
    pub r_hrs: f64,
    pub r_lrs: f64,
    pub hrs_min: f64,
    pub hrs_max: f64,
    pub g_lo: f64,
    pub g_hi: f64,
    pub forming_v: f64,
    pub forming_overshoot_rel: f64,
    pub set_clamp_resistance: f64,
    pub set_full_current: f64,
    pub reset_full_voltage: f64,
    pub read_noise_rel: f64,
    pub c2c_update_noise_rel: f64,
    pub pulse: PulseDynamicsParams,
}

impl DeviceParams {
    pub fn g_min(&self) -> f64 {
        1.0 / self.r_hrs
    }

    pub fn g_max(&self) -> f64 {
        1.0 / self.r_lrs
    }

    fn check_ordering(&self) -> bool {
        self.vset > 0.0
            && self.vreset < 0.0
            && self.forming_v > 0.0
            && self.r_lrs < self.r_hrs
            && 1.0 / self.r_hrs < self.g_hi
            && self.g_lo < self.g_hi
    }

    pub fn validate(&self) -> Result<()> {
        if self.check_ordering() {
            self.pulse.validate()
        } else {
            Err(Error::InvalidParams(format!("device ordering invariants violated: {self:?}")))
        }
    }
}

/// The characterized crosspoint used for single-device experiments: the
/// population's spreads and dynamics with thresholds and HRS pinned to the
/// cycle-to-cycle means measured on that device.
pub fn reference_device(pop: &PopulationParams) -> Result<DeviceParams> {
    pop.validate()?;
    let p = DeviceParams {
        vset: 0.95,
        vreset: -0.84,
        vset_std_c2c: pop.vset_std_c2c,
        vreset_std_c2c: pop.vreset_std_c2c,
        r_hrs: 17.5e3_f64.clamp(pop.hrs_min, pop.hrs_max),
        r_lrs: pop.lrs_nominal,
        hrs_min: pop.hrs_min,
        hrs_max: pop.hrs_max,
        g_lo: pop.g_lo,
        g_hi: pop.g_hi,
        forming_v: pop.forming_voltage_mean,
        forming_overshoot_rel: pop.forming_overshoot_rel,
        set_clamp_resistance: pop.set_clamp_resistance,
        set_full_current: pop.set_full_current,
        reset_full_voltage: pop.reset_full_voltage,
        read_noise_rel: pop.read_noise_rel,
        c2c_update_noise_rel: pop.c2c_update_noise_rel,
        pulse: pop.pulse.clone(),
    };
    p.validate()?;
    Ok(p)
}

fn normal(rng: &mut SimRng, mean: f64, std: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + std * z
}

/// Draws one device from the population. Deterministic in `seed`; draws that
/// violate the ordering invariants are redrawn up to [`MAX_REDRAWS`] times.
pub fn sample_device(pop: &PopulationParams, seed: u64) -> Result<DeviceParams> {
    sample_with_budget(pop, seed, MAX_REDRAWS)
}

fn sample_with_budget(pop: &PopulationParams, seed: u64, attempts: usize) -> Result<DeviceParams> {
    pop.validate()?;
    let mut rng = rng_from(seed);
    for _ in 0..attempts {
        let vset = normal(&mut rng, pop.vset_mean_d2d, pop.vset_std_d2d);
        let vreset = normal(&mut rng, pop.vreset_mean_d2d, pop.vreset_std_d2d);
        let u: f64 = rng.random();
        let r_hrs = pop.hrs_min + (pop.hrs_max - pop.hrs_min) * u;
        let forming_v = normal(&mut rng, pop.forming_voltage_mean, pop.forming_voltage_std);
        let params = DeviceParams {
            vset,
            vreset,
            vset_std_c2c: pop.vset_std_c2c,
            vreset_std_c2c: pop.vreset_std_c2c,
            r_hrs,
            r_lrs: pop.lrs_nominal,
            hrs_min: pop.hrs_min,
            hrs_max: pop.hrs_max,
            g_lo: pop.g_lo,
            g_hi: pop.g_hi,
            forming_v,
            forming_overshoot_rel: pop.forming_overshoot_rel,
            set_clamp_resistance: pop.set_clamp_resistance,
            set_full_current: pop.set_full_current,
            reset_full_voltage: pop.reset_full_voltage,
            read_noise_rel: pop.read_noise_rel,
            c2c_update_noise_rel: pop.c2c_update_noise_rel,
            pulse: pop.pulse.clone(),
        };
        if params.check_ordering() {
            return Ok(params);
        }
    }
    Err(Error::SamplingFailed { attempts })
}
