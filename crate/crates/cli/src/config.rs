//! Experiment configuration.
//!
//! The file format is TOML restricted to dotted keys, one setting per line:
//!
//! ```text
//! seed = 42
//! population.vset_std_c2c = 0.048
//! pulse_train.depression = [-1.3, -1.4]
//! ```
//!
//! Section headers (`[population]`) are accepted on input as well. Every key
//! has a default; unknown keys are rejected with the offending line.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};
use xbarsim::device::{PopulationParams, DEFAULT_COMPLIANCE, DEFAULT_FORMING_STOP};
use xbarsim::protocols::{DcSpec, IncrementalSpec, LtpLtdSpec, RetentionSpec, WriteVerifySpec};
use xbarsim::vmm::{TaskSpec, TrainSpec};
use xbarsim::xbar::{BiasScheme, Geometry, SolverKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed. Must fit in a signed 64-bit integer.
    pub seed: u64,
    pub out: String,
    /// Read and update noise; threshold variability is always on.
    pub noise: bool,
    pub population: PopulationParams,
    pub geometry: Geometry,
    pub array: ArrayConfig,
    pub forming: FormingConfig,
    pub dc_cycle: DcCycleConfig,
    pub stats: StatsConfig,
    pub incremental: IncrementalSpec,
    pub pulse_train: PulseTrainConfig,
    pub ltp_ltd: LtpLtdSpec,
    pub write_verify: WriteVerifySpec,
    pub multilevel: MultilevelConfig,
    pub retention: RetentionSpec,
    pub vmm: VmmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: "out".into(),
            noise: true,
            population: PopulationParams::default(),
            geometry: Geometry::default(),
            array: ArrayConfig::default(),
            forming: FormingConfig::default(),
            dc_cycle: DcCycleConfig::default(),
            stats: StatsConfig::default(),
            incremental: IncrementalSpec::default(),
            pulse_train: PulseTrainConfig::default(),
            ltp_ltd: LtpLtdSpec::default(),
            write_verify: WriteVerifySpec::default(),
            multilevel: MultilevelConfig::default(),
            retention: RetentionSpec::default(),
            vmm: VmmConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub scheme: BiasScheme,
    pub solver: SolverKind,
    /// Write amplitude of the half-select check, volts.
    pub v_write: f64,
    pub n_instances: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { rows: 8, cols: 8, scheme: BiasScheme::HalfV, solver: SolverKind::Auto, v_write: 1.8, n_instances: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormingConfig {
    pub n_devices: usize,
    pub ramp_stop: f64,
    pub compliance: f64,
}

impl Default for FormingConfig {
    fn default() -> Self {
        Self { n_devices: 10, ramp_stop: DEFAULT_FORMING_STOP, compliance: DEFAULT_COMPLIANCE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcCycleConfig {
    pub n_cycles: usize,
    pub sweep: DcSpec,
}

impl Default for DcCycleConfig {
    fn default() -> Self {
        Self { n_cycles: 30, sweep: DcSpec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub n_devices: usize,
    pub n_cycles: usize,
    /// Population draws for the HRS spread.
    pub n_draws: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self { n_devices: 10, n_cycles: 10, n_draws: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseTrainConfig {
    pub depression: Vec<f64>,
    pub potentiation: Vec<f64>,
    pub width: f64,
    pub n_pulses: usize,
    pub n_cycles: usize,
    pub read_width: f64,
    pub v_read: f64,
}

impl Default for PulseTrainConfig {
    fn default() -> Self {
        Self {
            depression: vec![-1.3, -1.4, -1.5, -1.6, -1.7, -1.8, -1.9],
            potentiation: vec![1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
            width: 200e-9,
            n_pulses: 400,
            n_cycles: 5,
            read_width: 1e-3,
            v_read: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultilevelConfig {
    pub levels: usize,
    pub n_seeds: usize,
    /// Write-verify tolerance as a fraction of the gap between targets.
    pub tol_gap_fraction: f64,
}

impl Default for MultilevelConfig {
    fn default() -> Self {
        Self { levels: 8, n_seeds: 20, tol_gap_fraction: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VmmConfig {
    pub n_seeds: usize,
    /// Row voltage per unit feature value.
    pub v_in: f64,
    pub task: TaskSpec,
    pub train: TrainSpec,
}

impl Default for VmmConfig {
    fn default() -> Self {
        Self { n_seeds: 20, v_in: 0.2, task: TaskSpec::default(), train: TrainSpec::default() }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
    }

    /// Loads `path` (or the defaults) and applies `key=value` overrides.
    pub fn load_with(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                // validate against the schema first for line-anchored errors
                toml::from_str::<Self>(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?;
                toml::from_str::<Table>(&text)?
            }
            None => Table::new(),
        };
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| anyhow!("override `{o}` is not key=value"))?;
            let value = raw.trim().parse::<Value>().unwrap_or_else(|_| Value::String(raw.trim().to_string()));
            set_dotted(&mut table, key.trim(), value)?;
        }
        table.try_into().map_err(|e| anyhow!("invalid override: {e}"))
    }

    /// One `dotted.key = value` line per setting, sorted by key.
    pub fn to_flat_string(&self) -> Result<String> {
        let table = Table::try_from(self).context("serializing config")?;
        let mut lines = Vec::new();
        flatten("", &table, &mut lines);
        lines.sort();
        let mut s = lines.join("\n");
        s.push('\n');
        Ok(s)
    }

    /// The flat form without `out`, so a run directory does not depend on
    /// where it was written.
    pub fn provenance(&self) -> Result<String> {
        let flat = self.to_flat_string()?;
        Ok(flat.lines().filter(|l| !l.starts_with("out = ")).map(|l| format!("{l}\n")).collect())
    }

    pub fn population(&self) -> PopulationParams {
        if self.noise {
            self.population.clone()
        } else {
            self.population.without_noise()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            bail!("seed must be at most {}", i64::MAX);
        }
        self.population.validate()?;
        self.geometry.validate()?;
        if self.array.rows == 0 || self.array.cols == 0 {
            bail!("array.rows and array.cols must be >= 1");
        }
        if self.multilevel.levels < 2 {
            bail!("multilevel.levels must be >= 2");
        }
        Ok(())
    }
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push(format!("{key} = {v}")),
        }
    }
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts = key.split('.').peekable();
    let mut cur = table;
    while let Some(p) = parts.next() {
        if p.is_empty() {
            bail!("malformed key `{key}`");
        }
        if parts.peek().is_none() {
            cur.insert(p.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = next.as_table_mut().ok_or_else(|| anyhow!("`{p}` in `{key}` is not a section"))?;
    }
    Ok(())
}
