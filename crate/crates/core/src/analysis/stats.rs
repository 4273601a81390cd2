use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::CycleRecord;

/// Residual threshold below which a curve counts as quasi-linear.
pub const QUASI_LINEAR_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Unbiased sample standard deviation; 0 for a single sample.
    pub std: f64,
    pub n: usize,
}

/// Sample mean and unbiased standard deviation. Values are summed in sorted
/// order so the result does not depend on input order.
pub fn moments(values: &[f64]) -> Result<Moments> {
    if values.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if v[0] == v[n - 1] {
        return Ok(Moments { mean: v[0], std: 0.0, n });
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    let std = if n > 1 { (dev.iter().sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    Ok(Moments { mean, std, n })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    if values.is_empty() {
        return Histogram { edges: vec![0.0; bins + 1], counts: vec![0; bins] };
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchStats {
    pub v_set: Moments,
    pub v_reset: Moments,
    pub r_on: Moments,
    pub r_off: Moments,
    /// Records contributing (cycles, or devices for D2D statistics).
    pub n: usize,
    pub v_set_hist: Histogram,
    pub v_reset_hist: Histogram,
}

pub const HISTOGRAM_BINS: usize = 10;

fn stats_of(vs: &[f64], vr: &[f64], ron: &[f64], roff: &[f64], n: usize) -> Result<SwitchStats> {
    Ok(SwitchStats {
        v_set: moments(vs)?,
        v_reset: moments(vr)?,
        r_on: moments(ron)?,
        r_off: moments(roff)?,
        n,
        v_set_hist: histogram(vs, HISTOGRAM_BINS),
        v_reset_hist: histogram(vr, HISTOGRAM_BINS),
    })
}

/// Cycle-to-cycle statistics. Cycles whose extraction failed contribute to
/// the resistance moments only.
pub fn cycle_stats(records: &[CycleRecord]) -> Result<SwitchStats> {
    if records.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let vs: Vec<f64> = records.iter().filter_map(|r| r.v_set).collect();
    let vr: Vec<f64> = records.iter().filter_map(|r| r.v_reset).collect();
    let ron: Vec<f64> = records.iter().map(|r| r.r_on).collect();
    let roff: Vec<f64> = records.iter().map(|r| r.r_off).collect();
    stats_of(&vs, &vr, &ron, &roff, records.len())
}

/// Device-to-device statistics: moments across the per-device means.
pub fn d2d_stats(devices: &[Vec<CycleRecord>]) -> Result<SwitchStats> {
    let per: Vec<SwitchStats> = devices.iter().map(|r| cycle_stats(r)).collect::<Result<_>>()?;
    if per.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let pick = |f: fn(&SwitchStats) -> f64| per.iter().map(f).collect::<Vec<f64>>();
    stats_of(
        &pick(|s| s.v_set.mean),
        &pick(|s| s.v_reset.mean),
        &pick(|s| s.r_on.mean),
        &pick(|s| s.r_off.mean),
        per.len(),
    )
}

/// Band `[mean - std, mean + std]` of a set of samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(mean: f64, std: f64) -> Self {
        Self { mean, std, lo: mean - std, hi: mean + std }
    }

    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        Self { mean: 0.5 * (lo + hi), std: 0.5 * (hi - lo), lo, hi }
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let m = moments(samples)?;
        Ok(Self::new(m.mean, m.std))
    }
}

/// Signed separation of two bands; negative when they overlap.
pub fn band_gap(a: &Band, b: &Band) -> f64 {
    (b.lo - a.hi).max(a.lo - b.hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub i: usize,
    pub j: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub bands: Vec<Band>,
    /// All pairs `i < j`.
    pub gaps: Vec<PairGap>,
    pub min_gap: f64,
    pub disjoint: bool,
}

pub fn band_report(bands: &[Band]) -> OverlapReport {
    let mut gaps = Vec::new();
    for i in 0..bands.len() {
        for j in i + 1..bands.len() {
            gaps.push(PairGap { i, j, gap: band_gap(&bands[i], &bands[j]) });
        }
    }
    let min_gap = gaps.iter().map(|g| g.gap).fold(f64::INFINITY, f64::min);
    OverlapReport { bands: bands.to_vec(), disjoint: gaps.iter().all(|g| g.gap >= 0.0), gaps, min_gap }
}

/// Separation report for per-amplitude terminal samples.
pub fn band_overlap(samples: &[Vec<f64>]) -> Result<OverlapReport> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData { need: 2, got: samples.len() });
    }
    if let Some(s) = samples.iter().find(|s| s.len() < 2) {
        return Err(Error::InsufficientData { need: 2, got: s.len() });
    }
    let bands: Vec<Band> = samples.iter().map(|s| Band::from_samples(s)).collect::<Result<_>>()?;
    Ok(band_report(&bands))
}

/// Size of the largest subset of pairwise-disjoint bands.
pub fn max_disjoint(bands: &[Band]) -> usize {
    let mut sorted = bands.to_vec();
    sorted.sort_by(|a, b| a.hi.total_cmp(&b.hi));
    let mut count = 0;
    let mut edge = f64::NEG_INFINITY;
    for b in sorted {
        if b.lo >= edge {
            count += 1;
            edge = b.hi;
        }
    }
    count
}

/// Bits storable in the disjoint levels: `floor(log2(count))`.
pub fn multilevel_capacity(bands: &[Band]) -> u32 {
    match max_disjoint(bands) {
        0 => 0,
        n => n.ilog2(),
    }
}

/// RMS residual of the least-squares line through `(k, curve[k])`, divided
/// by the curve's span. A flat curve scores 0.
pub fn linearity_metric(curve: &[f64]) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::InsufficientData { need: 3, got: curve.len() });
    }
    let n = curve.len() as f64;
    let lo = curve.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span == 0.0 {
        return Ok(0.0);
    }
    let tm = (n - 1.0) / 2.0;
    let ym = curve.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (k, y) in curve.iter().enumerate() {
        let t = k as f64 - tm;
        sty += t * (y - ym);
        stt += t * t;
    }
    let slope = sty / stt;
    let ss: f64 = curve
        .iter()
        .enumerate()
        .map(|(k, y)| (y - ym - slope * (k as f64 - tm)).powi(2))
        .sum();
    Ok((ss / n).sqrt() / span)
}

pub fn is_quasi_linear(curve: &[f64]) -> Result<bool> {
    Ok(linearity_metric(curve)? < QUASI_LINEAR_THRESHOLD)
}
