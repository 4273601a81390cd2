use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use xbarsim_cli::commands::{reproduce, Check, Command};
use xbarsim_cli::output::write_atomic;
use xbarsim_cli::ExperimentConfig;

#[derive(Parser)]
#[command(name = "xbarsim", version, about = "Memristor crossbar simulator and experiment runner")]
struct Cli {
    /// Experiment configuration (dotted-key TOML). Defaults apply otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Read and update noise.
    #[arg(long, global = true, value_enum)]
    noise: Option<Switch>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override one setting, e.g. `--set dc_cycle.n_cycles=10`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run seeds `seed .. seed+N`, each into `<out>/seed_<n>`.
    #[arg(long, global = true)]
    sweep: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Electroform a set of sampled devices.
    Form,
    /// Quasi-DC switching cycles on the reference device.
    DcCycle,
    /// Device-to-device switching statistics.
    Stats,
    /// Incremental quasi-DC SET and RESET ladders.
    Incremental,
    /// Pulse trains at every configured amplitude.
    PulseTrain,
    /// Potentiation then depression at fixed amplitudes.
    LtpLtd,
    /// Multilevel write-verify over several devices.
    WriteVerify,
    /// Periodic reads of five programmed states.
    Retention,
    /// Ex-situ transfer of a trained classifier to a crossbar pair.
    Vmm,
    /// Half-select disturb on random array instances.
    Disturb,
    /// Every figure panel plus an acceptance summary.
    Reproduce {
        /// Emit a single panel, e.g. `fig3a`.
        #[arg(long)]
        only: Option<String>,
    },
    /// Print the effective configuration.
    Config,
}

fn command(c: &Cmd) -> Option<Command> {
    Some(match c {
        Cmd::Form => Command::Form,
        Cmd::DcCycle => Command::DcCycle,
        Cmd::Stats => Command::Stats,
        Cmd::Incremental => Command::Incremental,
        Cmd::PulseTrain => Command::PulseTrain,
        Cmd::LtpLtd => Command::LtpLtd,
        Cmd::WriteVerify => Command::WriteVerify,
        Cmd::Retention => Command::Retention,
        Cmd::Vmm => Command::Vmm,
        Cmd::Disturb => Command::Disturb,
        Cmd::Reproduce { .. } | Cmd::Config => return None,
    })
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {}: {}", c.id, c.name, c.detail);
    }
}

/// Runs one seed into `dir`; returns whether every acceptance check passed.
fn run_one(cli: &Cli, cfg: &ExperimentConfig, dir: &Path) -> Result<bool> {
    write_atomic(&dir.join("config.toml"), cfg.provenance()?.as_bytes())?;
    match &cli.cmd {
        Cmd::Reproduce { only } => {
            let r = reproduce(cfg, dir, only.as_deref())?;
            print_checks(&r.checks);
            Ok(r.all_pass())
        }
        c => {
            let report = command(c).expect("simulation command").run(cfg)?;
            for f in report.write_all(dir)? {
                println!("wrote {}", f.display());
            }
            print_checks(&report.checks);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ExperimentConfig::load_with(cli.config.as_deref(), &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.display().to_string();
    }
    if let Some(n) = cli.noise {
        cfg.noise = matches!(n, Switch::On);
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if let Cmd::Config = cli.cmd {
        match cfg.to_flat_string() {
            Ok(s) => {
                print!("{s}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::FAILURE;
            }
        }
    }
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    let base = PathBuf::from(&cfg.out);
    let runs: Vec<(ExperimentConfig, PathBuf)> = match cli.sweep {
        None => vec![(cfg.clone(), base.clone())],
        Some(n) => (0..n)
            .map(|k| {
                let mut c = cfg.clone();
                c.seed = cfg.seed.wrapping_add(k);
                let dir = base.join(format!("seed_{}", c.seed));
                c.out = dir.display().to_string();
                (c, dir)
            })
            .collect(),
    };
    let mut all_pass = true;
    for (c, dir) in &runs {
        match run_one(&cli, c, dir).with_context(|| format!("seed {}", c.seed)) {
            Ok(pass) => all_pass &= pass,
            Err(e) => {
                eprintln!("error: {e:#}");
                let _ = write_atomic(&dir.join("INCOMPLETE"), format!("{e:#}\n").as_bytes());
                return ExitCode::FAILURE;
            }
        }
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("acceptance failures listed above");
        ExitCode::FAILURE
    }
}
