use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xbarsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xbarsim")).args(args).output().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (h, rows) = read_csv(path);
    let k = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("{name} not in {h:?}"));
    rows.into_iter().map(|r| r[k].clone()).collect()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 3\ndc_cycle.n_cycles = 5\npopulation.nonsense = 1\n").unwrap();
    let out = xbarsim(&["--config", cfg.to_str().unwrap(), "dc-cycle"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    let syntax = dir.path().join("syntax.toml");
    fs::write(&syntax, "seed = \n").unwrap();
    assert_eq!(xbarsim(&["--config", syntax.to_str().unwrap(), "form"]).status.code(), Some(2));
}

#[test]
fn dc_cycle_summary_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = xbarsim(&["--seed", "42", "--out", d.to_str().unwrap(), "dc-cycle"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let v: f64 = column(&a.join("dc_cycle_summary.csv"), "v_set_mean_V")[0].parse().unwrap();
    assert!((0.90..=1.00).contains(&v), "{v}");
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn parallel_runs_match_serial() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["--set", "stats.n_draws=200", "--set", "stats.n_devices=4", "--set", "pulse_train.n_pulses=50"];
    for (d, jobs) in [(&a, "1"), (&b, "3")] {
        for cmd in ["stats", "pulse-train", "form"] {
            let mut args = vec!["--jobs", jobs, "--out", d.to_str().unwrap()];
            args.extend(common);
            args.push(cmd);
            assert!(xbarsim(&args).status.success());
        }
    }
    assert_eq!(tree(&a), tree(&b));
}

#[test]
fn pulse_train_bands_are_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    assert!(xbarsim(&["--out", dir.path().to_str().unwrap(), "pulse-train"]).status.success());
    assert_eq!(column(&dir.path().join("pulse_train_summary.csv"), "all_disjoint"), vec!["true"]);
    let amps = column(&dir.path().join("pulse_train_bands.csv"), "amplitude_V");
    assert_eq!(amps.len(), 7);
}

#[test]
fn numeric_columns_carry_units() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cheap = ["--set", "stats.n_draws=100", "--set", "vmm.n_seeds=1", "--set", "multilevel.n_seeds=2", "--set", "array.n_instances=3"];
    for cmd in ["form", "dc-cycle", "stats", "incremental", "pulse-train", "ltp-ltd", "write-verify", "retention", "vmm", "disturb"] {
        let mut args = vec!["--out", d];
        args.extend(cheap);
        args.push(cmd);
        let out = xbarsim(&args);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut files = 0;
    for e in fs::read_dir(dir.path()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_none_or(|x| x != "csv") {
            continue;
        }
        files += 1;
        let (header, rows) = read_csv(&p);
        for (k, name) in header.iter().enumerate() {
            let numeric = rows.iter().any(|r| !r[k].is_empty())
                && rows.iter().all(|r| r[k].is_empty() || r[k].parse::<f64>().is_ok());
            if numeric {
                assert!(
                    xbarsim_cli::output::UNIT_SUFFIXES.iter().any(|u| name.ends_with(u)),
                    "{}: column {name} has no unit",
                    p.display()
                );
            }
        }
        let bytes = fs::read(&p).unwrap();
        assert!(!bytes.contains(&b'\r'));
    }
    assert!(files >= 30, "{files}");
}

#[test]
fn reproduce_single_panel_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("one");
    let out = xbarsim(&["--out", d.to_str().unwrap(), "reproduce", "--only", "fig3a"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let mut names: Vec<String> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into()).collect();
    names.sort();
    assert_eq!(names, ["acceptance.txt", "config.toml", "fig3a.csv"]);
    let summary = fs::read_to_string(d.join("acceptance.txt")).unwrap();
    assert!(summary.contains("all_pass = true"));

    let s = dir.path().join("sweep");
    let out = xbarsim(&["--out", s.to_str().unwrap(), "--seed", "10", "--sweep", "5", "reproduce", "--only", "fig3b"]);
    assert!(out.status.success());
    let dirs: Vec<_> = (10..15).map(|k| s.join(format!("seed_{k}"))).collect();
    assert!(dirs.iter().all(|p| p.join("fig3b.csv").exists()));
    assert_ne!(fs::read(dirs[0].join("fig3b.csv")).unwrap(), fs::read(dirs[1].join("fig3b.csv")).unwrap());

    let bad = xbarsim(&["--out", s.to_str().unwrap(), "reproduce", "--only", "fig9z"]);
    assert!(!bad.status.success());
}

#[test]
fn noise_off_is_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(xbarsim(&["--out", d, "--noise", "off", "ltp-ltd"]).status.success());
    let p = dir.path().join("fig4d.csv");
    // a noiseless read is I/V of the true conductance, equal up to roundoff
    let sensed = column(&p, "conductance_uS");
    let truth = column(&p, "true_conductance_uS");
    assert_eq!(sensed.len(), truth.len());
    for (a, b) in sensed.iter().zip(&truth) {
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
    }
    let cfg = fs::read_to_string(dir.path().join("config.toml")).unwrap();
    assert!(cfg.contains("noise = false"));
    assert!(!cfg.contains("out = "));
}
