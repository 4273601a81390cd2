use super::*;
use proptest::prelude::*;

fn pop() -> PopulationParams {
    PopulationParams::default()
}

fn quiet_ref() -> Device {
    let p = reference_device(&pop().without_noise()).unwrap();
    Device::new_formed(p, 3).unwrap()
}

fn full_set(d: &mut Device) {
    d.sweep_set_current(1.3e-3, 10e-6).unwrap();
}

fn full_reset(d: &mut Device) {
    d.sweep_reset(-1.4, 0.01).unwrap();
}

fn rms_residual_over_span(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = y.iter().enumerate().map(|(i, v)| (i as f64 - xm) * (v - ym)).sum();
    let sxx: f64 = (0..y.len()).map(|i| (i as f64 - xm).powi(2)).sum();
    let b = sxy / sxx;
    let ss: f64 = y.iter().enumerate().map(|(i, v)| (v - ym - b * (i as f64 - xm)).powi(2)).sum();
    let span = y.iter().cloned().fold(f64::MIN, f64::max) - y.iter().cloned().fold(f64::MAX, f64::min);
    (ss / n).sqrt() / span
}

#[test]
fn conductance_map_boundaries() {
    let mut d = quiet_ref();
    d.state.x = 0.0;
    assert_eq!(d.conductance(), 1.0 / d.params.r_hrs);
    d.state.x = 1.0;
    assert_eq!(d.conductance(), 1.0 / d.params.r_lrs);
    d.params.r_hrs = 1.0 / 67e-6;
    d.params.r_lrs = 1.0 / 667e-6;
    d.state.x = 0.5;
    assert!((d.conductance() - 367e-6).abs() < 1e-12);
}

#[test]
fn unformed_device_reads_pristine() {
    let p = reference_device(&pop()).unwrap();
    let mut d = Device::new(p, 1);
    d.state.x = 0.7;
    assert_eq!(d.conductance(), 1.0 / PRISTINE_RESISTANCE);
    assert!(matches!(d.sweep_reset(-1.0, 0.1), Err(Error::Unformed)));
    assert!(matches!(d.apply_pulse(1.5, 200e-9), Err(Error::Unformed)));
}

#[test]
fn forming_lands_in_hrs_range() {
    for seed in 0..50 {
        let p = sample_device(&pop(), seed).unwrap();
        let mut d = Device::new(p, seed);
        let trace = d.electroform(5.0, 300e-6).unwrap();
        assert!(d.is_formed());
        let r = 0.2 / d.read(0.2).unwrap();
        assert!((8e3 * 0.97..=18e3 * 1.03).contains(&r), "R after forming {r}");
        let last = trace.points.last().unwrap();
        assert_eq!(last.current, (5.0 * d.conductance()).min(300e-6));
        assert!(trace.points.iter().all(|q| q.current <= 300e-6));
        assert!(matches!(d.electroform(5.0, 300e-6), Err(Error::AlreadyFormed)));
    }
}

#[test]
fn forming_zero_variance_is_mid_range() {
    let zp = pop().zero_variance();
    let d = Device::new_formed(sample_device(&zp, 9).unwrap(), 9).unwrap();
    assert_eq!(1.0 / d.conductance(), 13e3);
}

#[test]
fn short_forming_ramp_reports_partial_trace() {
    let p = reference_device(&pop()).unwrap();
    let mut d = Device::new(p, 1);
    match d.electroform(1.0, 300e-6) {
        Err(Error::NotFormed { ramp_stop, trace }) => {
            assert_eq!(ramp_stop, 1.0);
            assert_eq!(trace.len(), 101);
            assert!(!d.is_formed());
        }
        other => panic!("expected NotFormed, got {other:?}"),
    }
    assert!(d.electroform(5.0, 0.0).is_err());
}

#[test]
fn full_reset_restores_hrs_with_ratio_above_ten() {
    let mut d = quiet_ref();
    full_set(&mut d);
    assert!((1.0 / d.conductance() - d.params.r_lrs).abs() < 1e-9);
    let cycles = d.state.cycle_index;
    full_reset(&mut d);
    assert_eq!(d.state.cycle_index, cycles + 1);
    assert_eq!(d.state.x, 0.0);
    assert!(d.params.r_hrs / d.params.r_lrs > 10.0);
}

#[test]
fn sub_threshold_sweeps_leave_state() {
    let mut d = quiet_ref();
    full_set(&mut d);
    let x = d.state.x;
    d.sweep_reset(-0.3, 0.01).unwrap();
    assert_eq!(d.state.x, x);
    full_reset(&mut d);
    d.sweep_set_current(20e-6, 1e-6).unwrap();
    assert_eq!(d.state.x, 0.0);
}

#[test]
fn sweep_polarity_and_degenerate_cases() {
    let mut d = quiet_ref();
    assert!(matches!(d.sweep_reset(0.5, 0.1), Err(Error::InvalidPolarity { .. })));
    assert!(matches!(d.sweep_set_current(-1e-3, 1e-4), Err(Error::InvalidPolarity { .. })));
    assert!(d.sweep_reset(-1.0, 0.0).is_err());
    let t = d.sweep_reset(-0.05, 0.1).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t.points[0].stimulus, 0.0);
}

#[test]
fn sweeps_are_monotone_per_ramp_and_hysteretic() {
    let mut d = quiet_ref();
    let set = d.sweep_set_current(1.3e-3, 10e-6).unwrap();
    let reset = d.sweep_reset(-1.4, 0.01).unwrap();
    for t in [&set, &reset] {
        let out = t.outgoing();
        let back = t.returning();
        assert!(out.windows(2).all(|w| w[1].stimulus.abs() > w[0].stimulus.abs()));
        assert!(back.windows(2).all(|w| w[1].stimulus.abs() < w[0].stimulus.abs()));
        assert_eq!(out.len(), back.len());
    }
    // the return branch of SET is at lower voltage for the same current
    let k = 20;
    let up = set.outgoing()[k];
    let down = set.points[set.len() - 1 - k];
    assert_eq!(up.stimulus, down.stimulus);
    assert!(down.voltage < up.voltage);
    let up = reset.outgoing()[130];
    let down = reset.points[reset.len() - 131];
    assert!(down.current.abs() < up.current.abs());
}

#[test]
fn set_voltage_clamps_near_threshold() {
    let mut d = quiet_ref();
    full_reset(&mut d);
    let t = d.sweep_set_current(1.3e-3, 10e-6).unwrap();
    let vth = d.state.last_vset.unwrap();
    let out = t.outgoing();
    let onset = out.iter().position(|p| p.voltage >= vth - 1e-3).unwrap();
    assert!(out[..onset].iter().all(|p| p.voltage < vth));
    for p in &out[onset..onset + 20] {
        assert!(p.voltage < vth + 0.05, "{} vs {vth}", p.voltage);
    }
    // once fully set the branch is ohmic at LRS
    let apex = out.last().unwrap();
    assert!((apex.voltage - apex.current * d.params.r_lrs).abs() < 1e-12);
}

#[test]
fn incremental_reset_gives_seven_levels() {
    let mut d = quiet_ref();
    full_set(&mut d);
    let mut levels = vec![d.conductance()];
    for k in 0..=6 {
        let v = -0.8 - 0.1 * k as f64;
        d.sweep_reset(v, 0.01).unwrap();
        let g = d.conductance();
        assert!(g <= *levels.last().unwrap());
        if g < *levels.last().unwrap() {
            levels.push(g);
        }
    }
    assert!(levels.len() >= 7, "{} levels", levels.len());
}

#[test]
fn incremental_set_gives_nine_levels() {
    let mut d = quiet_ref();
    full_reset(&mut d);
    let mut levels = vec![d.conductance()];
    for k in 0..=9 {
        let i = 0.4e-3 + 0.1e-3 * k as f64;
        d.sweep_set_current(i, 10e-6).unwrap();
        let g = d.conductance();
        assert!(g >= *levels.last().unwrap());
        if g > *levels.last().unwrap() {
            levels.push(g);
        }
    }
    assert!(levels.len() >= 9, "{} levels", levels.len());
    assert!((d.conductance() - d.params.g_max()).abs() < 1e-12);
}

#[test]
fn pulse_threshold_and_window() {
    let mut d = quiet_ref();
    full_reset(&mut d);
    d.state.x = 0.4;
    assert_eq!(d.apply_pulse(1.0, 200e-9).unwrap(), 0.4);
    assert_eq!(d.apply_pulse(-1.1, 200e-9).unwrap(), 0.4);
    assert_eq!(d.apply_pulse(1.8, 0.0).unwrap(), 0.4);
    d.state.x = 1.0;
    assert_eq!(d.apply_pulse(1.8, 200e-9).unwrap(), 1.0);
    d.state.x = 0.0;
    assert_eq!(d.apply_pulse(-2.0, 200e-9).unwrap(), 0.0);
}

#[test]
fn pulse_width_scales_update() {
    let mut a = quiet_ref();
    a.state.x = 0.5;
    let mut b = a.clone();
    let da = a.apply_pulse(-1.6, 200e-9).unwrap() - 0.5;
    let db = b.apply_pulse(-1.6, 100e-9).unwrap() - 0.5;
    assert!((da - 2.0 * db).abs() < 1e-15);
}

fn train(d: &mut Device, v: f64, n: usize) -> Vec<f64> {
    let mut g = vec![d.conductance()];
    for _ in 0..n {
        d.apply_pulse(v, 200e-9).unwrap();
        g.push(d.conductance());
    }
    g
}

#[test]
fn weak_depression_is_small_and_linear() {
    let mut d = quiet_ref();
    full_set(&mut d);
    let g = train(&mut d, -1.3, 400);
    assert!(g.windows(2).all(|w| w[1] <= w[0]));
    assert!(g[0] - g[400] > 0.0);
    assert!(rms_residual_over_span(&g) < 0.05);
}

#[test]
fn strong_depression_is_abrupt_then_saturates() {
    let mut d = quiet_ref();
    full_set(&mut d);
    let g = train(&mut d, -1.8, 400);
    let first: f64 = (0..10).map(|i| (g[i + 1] - g[i]).abs()).sum();
    let last: f64 = (390..400).map(|i| (g[i + 1] - g[i]).abs()).sum();
    assert!(first > 10.0 * last, "first {first} last {last}");
}

#[test]
fn reads_are_ohmic_and_non_disturbing() {
    let mut d = quiet_ref();
    assert_eq!(d.read(0.0).unwrap(), 0.0);
    d.params.r_hrs = 1.0 / 500e-6;
    d.state.x = 0.0;
    assert!((d.read(0.2).unwrap() - 100e-6).abs() < 1e-15);
    assert!(matches!(d.read(0.55), Err(Error::ReadDisturbRisk { .. })));
    assert!(matches!(d.read(-0.6), Err(Error::ReadDisturbRisk { .. })));
}

#[test]
fn read_noise_matches_configuration() {
    let p = reference_device(&pop()).unwrap();
    let mut d = Device::new_formed(p, 11).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|_| d.read(0.2).unwrap()).collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s = (xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rel = s / m;
    let want = d.params.read_noise_rel;
    assert!((rel - want).abs() < 0.2 * want, "rel {rel}");
    assert_eq!(d.state.x, 0.0);
}

#[derive(Clone, Debug)]
enum Op {
    Pulse(f64, f64),
    Reset(f64),
    Set(f64),
    Read,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (-2.5f64..2.5, 0.0f64..1e-6).prop_map(|(v, w)| Op::Pulse(v, w)),
        (-1.6f64..0.0).prop_map(Op::Reset),
        (0.0f64..1.6e-3).prop_map(Op::Set),
        Just(Op::Read),
    ]
}

fn run(d: &mut Device, ops: &[Op]) -> Vec<f64> {
    let mut xs = Vec::new();
    for o in ops {
        match *o {
            Op::Pulse(v, w) => {
                d.apply_pulse(v, w).unwrap();
            }
            Op::Reset(v) => {
                d.sweep_reset(v, 0.05).unwrap();
            }
            Op::Set(i) => {
                d.sweep_set_current(i, 50e-6).unwrap();
            }
            Op::Read => {
                d.read(0.2).unwrap();
            }
        }
        xs.push(d.state.x);
    }
    xs
}

proptest! {
    #[test]
    fn state_stays_in_unit_interval(seed in 0u64..1000, ops in prop::collection::vec(op(), 1..40)) {
        let p = sample_device(&pop(), seed).unwrap();
        let mut d = Device::new_formed(p, seed).unwrap();
        for x in run(&mut d, &ops) {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn noiseless_runs_are_bit_identical(seed in 0u64..1000, ops in prop::collection::vec(op(), 1..30)) {
        let p = sample_device(&pop().without_noise(), seed).unwrap();
        let mut a = Device::new_formed(p.clone(), seed).unwrap();
        let mut b = Device::new_formed(p, seed).unwrap();
        prop_assert_eq!(run(&mut a, &ops), run(&mut b, &ops));
    }

    #[test]
    fn sub_threshold_pulses_never_move(x in 0.0f64..=1.0, v in -1.2f64..=1.1, w in 0.0f64..1e-5) {
        let mut d = Device::new_formed(reference_device(&pop()).unwrap(), 1).unwrap();
        d.state.x = x;
        prop_assert_eq!(d.apply_pulse(v, w).unwrap(), x);
    }

    #[test]
    fn pulse_direction_follows_polarity(x in 0.0f64..=1.0, v in 1.1001f64..3.0) {
        let mut d = quiet_ref();
        d.state.x = x;
        prop_assert!(d.apply_pulse(v, 200e-9).unwrap() >= x);
        d.state.x = x;
        prop_assert!(d.apply_pulse(-v - 0.1, 200e-9).unwrap() <= x);
    }

    #[test]
    fn depression_amplitude_ordering(v1 in 1.21f64..2.2, dv in 0.01f64..0.5) {
        let v2 = v1 + dv;
        let mut a = quiet_ref();
        full_set(&mut a);
        let mut b = a.clone();
        let ga = train(&mut a, -v1, 400);
        let gb = train(&mut b, -v2, 400);
        prop_assert!((ga[0] - ga[400]).abs() < (gb[0] - gb[400]).abs());
    }

    #[test]
    fn potentiation_amplitude_ordering(v1 in 1.11f64..1.6, dv in 0.01f64..0.3) {
        let v2 = v1 + dv;
        let mut a = quiet_ref();
        full_reset(&mut a);
        let mut b = a.clone();
        let ga = train(&mut a, v1, 400);
        let gb = train(&mut b, v2, 400);
        let (da, db) = ((ga[400] - ga[0]).abs(), (gb[400] - gb[0]).abs());
        if b.state.x < 1.0 {
            prop_assert!(da < db);
        } else {
            prop_assert!(da <= db);
        }
    }
}
