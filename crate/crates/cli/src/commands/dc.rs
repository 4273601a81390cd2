use anyhow::Result;
use xbarsim::analysis::{cycle_stats, d2d_stats, histogram, Histogram, Moments, HISTOGRAM_BINS};
use xbarsim::device::{sample_device, Device, SweepTrace};
use xbarsim::protocols::{run_dc_cycling, run_incremental_dc, CycleRecord, LadderStep};
use xbarsim::seed::stream;
use xbarsim::Error;

use super::{par_map, reference, seed_for, Check, Exp, Report};
use crate::config::ExperimentConfig;
use crate::output::{flag, num, opt, us, Table};

fn push_trace(t: &mut Table, lead: &[String], trace: &SweepTrace) {
    for (k, p) in trace.points.iter().enumerate() {
        let mut row = lead.to_vec();
        row.extend([k.to_string(), num(p.voltage), num(p.current)]);
        t.push(row);
    }
}

fn hist_rows(t: &mut Table, label: &str, h: &Histogram) {
    for (k, c) in h.counts.iter().enumerate() {
        t.push(vec![label.into(), num(h.edges[k]), num(h.edges[k + 1]), c.to_string()]);
    }
}

fn moments_cols(m: &Moments) -> [String; 2] {
    [num(m.mean), num(m.std)]
}

pub fn form(cfg: &ExperimentConfig) -> Result<Report> {
    let pop = cfg.population();
    let f = &cfg.forming;
    let runs = par_map(f.n_devices, |k| {
        let p = sample_device(&pop, seed_for(cfg.seed, stream::DEVICE, Exp::Form, k as u64))?;
        let forming_v = p.forming_v;
        let mut d = Device::new(p, seed_for(cfg.seed, stream::PROTOCOL, Exp::Form, k as u64));
        let trace = match d.electroform(f.ramp_stop, f.compliance) {
            Ok(t) => t,
            Err(Error::NotFormed { trace, .. }) => *trace,
            Err(e) => return Err(e.into()),
        };
        Ok((forming_v, d, trace))
    })?;
    let mut raw = Table::new(&["device_n", "point_n", "voltage_V", "current_A"]);
    let mut summary = Table::new(&["device_n", "forming_voltage_V", "formed", "r_hrs_ohm"]);
    for (k, (vf, d, trace)) in runs.iter().enumerate() {
        push_trace(&mut raw, &[k.to_string()], trace);
        let r = if d.is_formed() { num(d.params.r_hrs) } else { String::new() };
        summary.push(vec![k.to_string(), num(*vf), flag(d.is_formed()), r]);
    }
    let mut rep = Report::default();
    rep.table("form_raw.csv", raw.clone());
    rep.table("form_summary.csv", summary);
    rep.table("form_plot.csv", raw);
    Ok(rep)
}

fn records_table(recs: &[CycleRecord]) -> Table {
    let mut t = Table::new(&["cycle_n", "v_set_V", "v_reset_V", "r_on_ohm", "r_off_ohm", "ratio_1"]);
    for r in recs {
        t.push(vec![
            r.cycle_index.to_string(),
            opt(r.v_set),
            opt(r.v_reset),
            num(r.r_on),
            num(r.r_off),
            num(r.ratio()),
        ]);
    }
    t
}

pub fn dc_cycle(cfg: &ExperimentConfig) -> Result<Report> {
    let mut d = reference(cfg, Exp::DcCycle, 0)?;
    let cycles = run_dc_cycling(&mut d, cfg.dc_cycle.n_cycles, &cfg.dc_cycle.sweep)?;
    let recs: Vec<CycleRecord> = cycles.iter().map(|c| c.record.clone()).collect();

    let mut raw = Table::new(&["cycle_n", "branch", "point_n", "voltage_V", "current_A"]);
    let mut iv = Table::new(&["cycle_n", "branch", "voltage_V", "current_abs_A"]);
    for (k, c) in cycles.iter().enumerate() {
        for (branch, trace) in [("reset", &c.reset), ("set", &c.set)] {
            push_trace(&mut raw, &[k.to_string(), branch.into()], trace);
            for p in &trace.points {
                iv.push(vec![k.to_string(), branch.into(), num(p.voltage), num(p.current.abs())]);
            }
        }
    }
    let mut truth = Table::new(&["cycle_n", "true_v_set_V", "true_v_reset_V"]);
    for (k, c) in cycles.iter().enumerate() {
        truth.push(vec![k.to_string(), num(c.true_vset), num(c.true_vreset)]);
    }
    let mut fig3b = Table::new(&["cycle_n", "r_on_ohm", "r_off_ohm", "ratio_1"]);
    for r in &recs {
        fig3b.push(vec![r.cycle_index.to_string(), num(r.r_on), num(r.r_off), num(r.ratio())]);
    }

    let mut rep = Report::default();
    let min_ratio = recs.iter().map(|r| r.ratio()).fold(f64::INFINITY, f64::min);
    let flagged = recs.iter().filter(|r| r.flagged()).count();
    match cycle_stats(&recs) {
        Ok(s) => {
            let mut summary = Table::new(&[
                "v_set_mean_V",
                "v_set_std_V",
                "v_reset_mean_V",
                "v_reset_std_V",
                "r_on_mean_ohm",
                "r_on_std_ohm",
                "r_off_mean_ohm",
                "r_off_std_ohm",
                "ratio_min_1",
                "cycles_n",
                "flagged_n",
            ]);
            let mut row = Vec::new();
            for m in [&s.v_set, &s.v_reset, &s.r_on, &s.r_off] {
                row.extend(moments_cols(m));
            }
            row.extend([num(min_ratio), recs.len().to_string(), flagged.to_string()]);
            summary.push(row);
            let mut inset = Table::new(&["quantity", "bin_lo_V", "bin_hi_V", "count_n"]);
            hist_rows(&mut inset, "v_set", &s.v_set_hist);
            hist_rows(&mut inset, "v_reset", &s.v_reset_hist);

            let ok = (0.90..=1.00).contains(&s.v_set.mean)
                && (-0.94..=-0.74).contains(&s.v_reset.mean)
                && (0.02..=0.10).contains(&s.v_set.std)
                && (0.02..=0.10).contains(&s.v_reset.std);
            rep.checks.push(Check::new(
                1,
                "dc-c2c",
                ok,
                format!(
                    "v_set {:.4}+-{:.4} V, v_reset {:.4}+-{:.4} V over {} cycles",
                    s.v_set.mean, s.v_set.std, s.v_reset.mean, s.v_reset.std, s.n
                ),
            ));
            rep.table("dc_cycle_summary.csv", summary);
            rep.table("dc_cycle_inset.csv", inset);
        }
        Err(e) => rep.checks.push(Check::new(1, "dc-c2c", false, format!("no statistics: {e}"))),
    }
    if !recs.is_empty() {
        rep.checks.push(Check::new(3, "ratio", min_ratio > 10.0, format!("min HRS/LRS {min_ratio:.3}")));
    }
    rep.table("dc_cycle_raw.csv", raw);
    rep.table("dc_cycle_records.csv", records_table(&recs));
    rep.table("dc_cycle_truth.csv", truth);
    rep.table("fig3a.csv", iv);
    rep.table("fig3b.csv", fig3b);
    Ok(rep)
}

pub fn stats(cfg: &ExperimentConfig) -> Result<Report> {
    let pop = cfg.population();
    let s = &cfg.stats;
    let devices = par_map(s.n_devices, |k| {
        let p = sample_device(&pop, seed_for(cfg.seed, stream::DEVICE, Exp::Stats, k as u64))?;
        let mut d = Device::new_formed(p, seed_for(cfg.seed, stream::PROTOCOL, Exp::Stats, k as u64))?;
        let cycles = run_dc_cycling(&mut d, s.n_cycles, &cfg.dc_cycle.sweep)?;
        Ok(cycles.into_iter().map(|c| c.record).collect::<Vec<_>>())
    })?;
    // HRS spread after forming, over many independent draws
    let offset = s.n_devices as u64;
    let hrs = par_map(s.n_draws, |k| {
        let k = offset + k as u64;
        let p = sample_device(&pop, seed_for(cfg.seed, stream::DEVICE, Exp::Stats, k))?;
        Ok(Device::new_formed(p, seed_for(cfg.seed, stream::PROTOCOL, Exp::Stats, k))?.params.r_hrs)
    })?;

    let mut raw = Table::new(&["device_n", "cycle_n", "v_set_V", "v_reset_V", "r_on_ohm", "r_off_ohm"]);
    let mut fig3c = Table::new(&["device_n", "v_set_mean_V", "v_set_std_V", "v_reset_mean_V", "v_reset_std_V"]);
    let mut fig3d = Table::new(&["device_n", "r_on_mean_ohm", "r_on_std_ohm", "r_off_mean_ohm", "r_off_std_ohm"]);
    for (k, recs) in devices.iter().enumerate() {
        for r in recs {
            raw.push(vec![k.to_string(), r.cycle_index.to_string(), opt(r.v_set), opt(r.v_reset), num(r.r_on), num(r.r_off)]);
        }
        let Ok(st) = cycle_stats(recs) else { continue };
        let mut c = vec![k.to_string()];
        c.extend(moments_cols(&st.v_set));
        c.extend(moments_cols(&st.v_reset));
        fig3c.push(c);
        let mut d = vec![k.to_string()];
        d.extend(moments_cols(&st.r_on));
        d.extend(moments_cols(&st.r_off));
        fig3d.push(d);
    }
    let hrs_lo = hrs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hrs_hi = hrs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut hist = Table::new(&["bin_lo_kohm", "bin_hi_kohm", "count_n"]);
    let kohm: Vec<f64> = hrs.iter().map(|r| r / 1e3).collect();
    let h = histogram(&kohm, HISTOGRAM_BINS);
    for (k, c) in h.counts.iter().enumerate() {
        hist.push(vec![num(h.edges[k]), num(h.edges[k + 1]), c.to_string()]);
    }

    let mut rep = Report::default();
    match d2d_stats(&devices) {
        Ok(st) => {
            let mut summary = Table::new(&[
                "v_set_mean_V",
                "v_set_std_V",
                "v_reset_mean_V",
                "v_reset_std_V",
                "r_on_mean_ohm",
                "r_on_std_ohm",
                "r_off_mean_ohm",
                "r_off_std_ohm",
                "hrs_min_kohm",
                "hrs_max_kohm",
                "devices_n",
                "draws_n",
            ]);
            let mut row = Vec::new();
            for m in [&st.v_set, &st.v_reset, &st.r_on, &st.r_off] {
                row.extend(moments_cols(m));
            }
            row.extend([num(hrs_lo / 1e3), num(hrs_hi / 1e3), st.n.to_string(), hrs.len().to_string()]);
            summary.push(row);
            rep.table("stats_summary.csv", summary);
            let ok = (0.78..=0.94).contains(&st.v_set.mean)
                && (-1.03..=-0.81).contains(&st.v_reset.mean)
                && hrs_lo <= 9e3
                && hrs_hi >= 17e3;
            rep.checks.push(Check::new(
                2,
                "dc-d2d",
                ok,
                format!(
                    "device-mean v_set {:.4} V, v_reset {:.4} V over {} devices; HRS {:.2}..{:.2} kohm over {} draws",
                    st.v_set.mean,
                    st.v_reset.mean,
                    st.n,
                    hrs_lo / 1e3,
                    hrs_hi / 1e3,
                    hrs.len()
                ),
            ));
        }
        Err(e) => rep.checks.push(Check::new(2, "dc-d2d", false, format!("no statistics: {e}"))),
    }
    rep.table("stats_raw.csv", raw);
    rep.table("stats_hrs_hist.csv", hist);
    rep.table("fig3c.csv", fig3c);
    rep.table("fig3d.csv", fig3d);
    Ok(rep)
}

fn ladder_rows(t: &mut Table, branch: &str, ladder: &[LadderStep], unit_current: bool) {
    for (k, s) in ladder.iter().enumerate() {
        let (a, v) = if unit_current { (num(s.amplitude), String::new()) } else { (String::new(), num(s.amplitude)) };
        t.push(vec![branch.into(), k.to_string(), a, v, us(s.g_read), us(s.g_true)]);
    }
}

pub fn incremental(cfg: &ExperimentConfig) -> Result<Report> {
    let mut d = reference(cfg, Exp::Incremental, 0)?;
    let r = run_incremental_dc(&mut d, &cfg.incremental)?;
    let mut raw = Table::new(&["branch", "sweep_n", "point_n", "voltage_V", "current_A"]);
    let mut fig = Table::new(&["branch", "sweep_n", "voltage_V", "current_abs_A"]);
    for (branch, traces) in [("set", &r.set_traces), ("reset", &r.reset_traces)] {
        for (k, tr) in traces.iter().enumerate() {
            push_trace(&mut raw, &[branch.into(), k.to_string()], tr);
            for p in &tr.points {
                fig.push(vec![branch.into(), k.to_string(), num(p.voltage), num(p.current.abs())]);
            }
        }
    }
    let mut ladder =
        Table::new(&["branch", "step_n", "amplitude_A", "amplitude_V", "conductance_uS", "true_conductance_uS"]);
    ladder_rows(&mut ladder, "set", &r.set_ladder, true);
    ladder_rows(&mut ladder, "reset", &r.reset_ladder, false);
    let (ns, nr) = (r.set_levels(), r.reset_levels());
    let mut summary = Table::new(&["set_levels_n", "reset_levels_n"]);
    summary.push(vec![ns.to_string(), nr.to_string()]);

    let mut rep = Report::default();
    rep.checks.push(Check::new(4, "incremental", ns >= 9 && nr >= 7, format!("{ns} SET levels, {nr} RESET levels")));
    rep.table("incremental_raw.csv", raw);
    rep.table("incremental_ladder.csv", ladder);
    rep.table("incremental_summary.csv", summary);
    rep.table("fig4a.csv", fig);
    Ok(rep)
}
