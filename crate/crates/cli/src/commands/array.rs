use anyhow::Result;
use rand::Rng;
use xbarsim::seed::{rng_from, stream};
use xbarsim::vmm::{run_transfer, TransferSpec};
use xbarsim::xbar::{wire_segment_resistance, BiasScheme, Crossbar};

use super::{par_map, seed_for, Check, Exp, Report};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

pub fn vmm(cfg: &ExperimentConfig) -> Result<Report> {
    let pop = cfg.population();
    let r_seg = wire_segment_resistance(&cfg.geometry);
    let spec = TransferSpec {
        v_in: cfg.vmm.v_in,
        r_seg,
        scheme: cfg.array.scheme,
        write_verify: cfg.write_verify.clone(),
    };
    let runs = par_map(cfg.vmm.n_seeds, |s| {
        let seed = seed_for(cfg.seed, stream::PROTOCOL, Exp::Vmm, s as u64);
        Ok(run_transfer(&pop, &cfg.vmm.task, &cfg.vmm.train, &spec, seed)?)
    })?;

    let mut raw = Table::new(&[
        "seed_n",
        "float_accuracy_1",
        "array_accuracy_1",
        "relative_accuracy_1",
        "converged_fraction_1",
        "pulses_n",
        "disturb_dx_1",
    ]);
    for (s, r) in runs.iter().enumerate() {
        raw.push(vec![
            s.to_string(),
            num(r.float_accuracy),
            num(r.array_accuracy),
            num(r.relative_accuracy()),
            num(r.program.converged_fraction()),
            r.program.total_pulses().to_string(),
            num(r.program.total_disturb_dx()),
        ]);
    }
    let mut weights = Table::new(&["seed_n", "row_n", "col_n", "weight_1", "stored_weight_1"]);
    for (s, r) in runs.iter().enumerate() {
        for i in 0..r.weights.nrows() {
            for j in 0..r.weights.ncols() {
                weights.push(vec![s.to_string(), i.to_string(), j.to_string(), num(r.weights[(i, j)]), num(r.stored[(i, j)])]);
            }
        }
    }
    let n = runs.len().max(1) as f64;
    let float = runs.iter().map(|r| r.float_accuracy).sum::<f64>() / n;
    let array = runs.iter().map(|r| r.array_accuracy).sum::<f64>() / n;
    let conv = runs.iter().map(|r| r.program.converged_fraction()).sum::<f64>() / n;
    let mut summary = Table::new(&[
        "float_accuracy_mean_1",
        "array_accuracy_mean_1",
        "relative_accuracy_1",
        "converged_fraction_mean_1",
        "segment_resistance_ohm",
        "seeds_n",
    ]);
    summary.push(vec![num(float), num(array), num(array / float), num(conv), num(r_seg), runs.len().to_string()]);

    let mut rep = Report::default();
    if !runs.is_empty() {
        rep.checks.push(Check::new(
            11,
            "vmm-demo",
            array >= 0.95 * float,
            format!("mean accuracy array {array:.4} vs float {float:.4} over {} seeds", runs.len()),
        ));
    }
    rep.checks.push(Check::new(
        9,
        "segment-resistance",
        (r_seg - 8.0).abs() <= 0.1,
        format!("{r_seg:.4} ohm per segment"),
    ));
    rep.table("vmm_raw.csv", raw);
    rep.table("vmm_weights.csv", weights);
    rep.table("vmm_summary.csv", summary);
    Ok(rep)
}

/// Programs one random cell in each of many fresh arrays and records what
/// the unselected cells saw.
pub fn disturb(cfg: &ExperimentConfig) -> Result<Report> {
    let pop = cfg.population();
    let a = &cfg.array;
    let r_seg = wire_segment_resistance(&cfg.geometry);
    let runs = par_map(a.n_instances, |k| {
        let master = seed_for(cfg.seed, stream::ARRAY, Exp::Disturb, k as u64);
        let mut x = Crossbar::from_population(&pop, a.rows, a.cols, r_seg, master)?.with_scheme(a.scheme);
        x.solver = a.solver;
        let mut rng = rng_from(seed_for(cfg.seed, stream::SHUFFLE, Exp::Disturb, k as u64));
        let (i, j) = (rng.random_range(0..a.rows), rng.random_range(0..a.cols));
        Ok(x.program_cell(i, j, a.v_write, cfg.write_verify.width)?)
    })?;
    let mut raw = Table::new(&[
        "instance_n",
        "row_n",
        "col_n",
        "selected_drop_V",
        "max_unselected_drop_V",
        "max_half_selected_dx_1",
        "max_unselected_dx_1",
    ]);
    let mut violations = 0;
    for (k, r) in runs.iter().enumerate() {
        let (i, j) = r.selected;
        let half = r.max_half_selected_dx();
        violations += (half != 0.0) as usize;
        raw.push(vec![
            k.to_string(),
            i.to_string(),
            j.to_string(),
            num(r.selected_drop()),
            num(r.max_disturb_drop()),
            num(half),
            num(r.max_disturb_dx()),
        ]);
    }
    let mut summary = Table::new(&["scheme", "write_amplitude_V", "instances_n", "half_selected_violations_n"]);
    let scheme = match a.scheme {
        BiasScheme::FullV => "full-v",
        BiasScheme::HalfV => "half-v",
        BiasScheme::ThirdV => "third-v",
    };
    summary.push(vec![scheme.into(), num(a.v_write), runs.len().to_string(), violations.to_string()]);

    let mut rep = Report::default();
    if a.scheme == BiasScheme::HalfV {
        rep.checks.push(Check::new(
            10,
            "half-select",
            violations == 0 && !runs.is_empty(),
            format!("{violations} of {} {}x{} arrays disturbed a half-selected cell at {} V", runs.len(), a.rows, a.cols, a.v_write),
        ));
    }
    rep.table("disturb_raw.csv", raw);
    rep.table("disturb_summary.csv", summary);
    Ok(rep)
}
