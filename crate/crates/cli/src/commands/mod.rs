//! One function per experiment. Each returns the tables it produced and the
//! acceptance checks it can decide; writing files is left to the caller so
//! `reproduce` can select panels.

mod array;
mod dc;
mod pulse;

use std::path::{Path, PathBuf};

use anyhow::Result;
use rayon::prelude::*;
use xbarsim::device::{reference_device, Device};
use xbarsim::seed::{derive, stream};

use crate::config::ExperimentConfig;
use crate::output::{write_atomic, write_table, Table};

pub use array::{disturb, vmm};
pub use dc::{dc_cycle, form, incremental, stats};
pub use pulse::{ltp_ltd, pulse_train, retention, write_verify};

/// Experiment tags folded into per-experiment seed streams.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Exp {
    Form = 1,
    DcCycle,
    Stats,
    Incremental,
    PulseTrain,
    LtpLtd,
    Multilevel,
    Retention,
    Vmm,
    Disturb,
}

/// Seed for item `k` of experiment `exp` on stream `s`.
pub(crate) fn seed_for(master: u64, s: u64, exp: Exp, k: u64) -> u64 {
    derive(master, s, ((exp as u64) << 32) | k)
}

/// Formed reference device with its own protocol stream.
pub(crate) fn reference(cfg: &ExperimentConfig, exp: Exp, k: u64) -> Result<Device> {
    let p = reference_device(&cfg.population())?;
    Ok(Device::new_formed(p, seed_for(cfg.seed, stream::PROTOCOL, exp, k))?)
}

/// Order-preserving parallel map; results never depend on scheduling.
pub(crate) fn par_map<T: Send, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: u32, name: &'static str, pass: bool, detail: String) -> Self {
        Self { id, name, pass, detail }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    /// `(file name, table)` in output order.
    pub tables: Vec<(String, Table)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub(crate) fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn get(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.tables.iter().map(|(n, t)| write_table(dir, n, t)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Form,
    DcCycle,
    Stats,
    Incremental,
    PulseTrain,
    LtpLtd,
    WriteVerify,
    Retention,
    Vmm,
    Disturb,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Form,
        Command::DcCycle,
        Command::Stats,
        Command::Incremental,
        Command::PulseTrain,
        Command::LtpLtd,
        Command::WriteVerify,
        Command::Retention,
        Command::Vmm,
        Command::Disturb,
    ];

    pub fn run(self, cfg: &ExperimentConfig) -> Result<Report> {
        match self {
            Command::Form => form(cfg),
            Command::DcCycle => dc_cycle(cfg),
            Command::Stats => stats(cfg),
            Command::Incremental => incremental(cfg),
            Command::PulseTrain => pulse_train(cfg),
            Command::LtpLtd => ltp_ltd(cfg),
            Command::WriteVerify => write_verify(cfg),
            Command::Retention => retention(cfg),
            Command::Vmm => vmm(cfg),
            Command::Disturb => disturb(cfg),
        }
    }
}

/// Figure panels: file name and the command that produces it.
pub const PANELS: [(&str, Command); 9] = [
    ("fig3a", Command::DcCycle),
    ("fig3b", Command::DcCycle),
    ("fig3c", Command::Stats),
    ("fig3d", Command::Stats),
    ("fig4a", Command::Incremental),
    ("fig4b", Command::PulseTrain),
    ("fig4c", Command::PulseTrain),
    ("fig4d", Command::LtpLtd),
    ("figS2", Command::Retention),
];

/// Commands run by `reproduce` beyond those that draw panels; they only
/// contribute acceptance checks.
const CHECK_ONLY: [Command; 3] = [Command::WriteVerify, Command::Vmm, Command::Disturb];

pub struct Reproduction {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs the panel protocols (all, or only `only`), writes one CSV per panel
/// and a key-value acceptance summary.
pub fn reproduce(cfg: &ExperimentConfig, out: &Path, only: Option<&str>) -> Result<Reproduction> {
    let panels: Vec<(&str, Command)> = match only {
        Some(p) => {
            let hit = PANELS.iter().find(|(n, _)| n.eq_ignore_ascii_case(p));
            let Some(&hit) = hit else {
                let names: Vec<&str> = PANELS.iter().map(|(n, _)| *n).collect();
                anyhow::bail!("unknown panel `{p}`; expected one of {}", names.join(", "));
            };
            vec![hit]
        }
        None => PANELS.to_vec(),
    };
    let mut commands: Vec<Command> = Vec::new();
    for (_, c) in &panels {
        if !commands.contains(c) {
            commands.push(*c);
        }
    }
    if only.is_none() {
        commands.extend(CHECK_ONLY);
    }
    let reports = par_map(commands.len(), |k| commands[k].run(cfg))?;
    let mut files = Vec::new();
    for (name, cmd) in &panels {
        let k = commands.iter().position(|c| c == cmd).expect("panel command scheduled");
        let file = format!("{name}.csv");
        let t = reports[k].get(&file).expect("command emits its panels");
        files.push(write_table(out, &file, t)?);
    }
    let mut checks: Vec<Check> = reports.into_iter().flat_map(|r| r.checks).collect();
    checks.sort_by_key(|c| c.id);
    let summary = acceptance_summary(&checks);
    let path = out.join("acceptance.txt");
    write_atomic(&path, summary.as_bytes())?;
    files.push(path);
    Ok(Reproduction { files, checks })
}

pub fn acceptance_summary(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let key = format!("criterion.{}.{}", c.id, c.name);
        s.push_str(&format!("{key}.pass = {}\n{key}.detail = {}\n", c.pass, c.detail));
    }
    s.push_str(&format!("all_pass = {}\n", checks.iter().all(|c| c.pass)));
    s
}
