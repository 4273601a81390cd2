use serde::{Deserialize, Serialize};

use crate::device::SweepTrace;

/// Numerics of the switching-voltage extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionConfig {
    /// Uniform voltage grid the branch is resampled onto, volts.
    pub grid: f64,
    /// Centered moving-average width, points (odd).
    pub window: usize,
    /// Minimum slope change across one window, relative to the largest
    /// slope of the branch, for a peak to count as a transition.
    pub significance: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { grid: 0.01, window: 5, significance: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SwitchingVoltages {
    pub v_set: Option<f64>,
    /// Negative when present.
    pub v_reset: Option<f64>,
}

/// Minimum number of samples on a branch before extraction is attempted.
pub const MIN_BRANCH_POINTS: usize = 5;

pub fn extract_switching_voltages(trace: &SweepTrace) -> SwitchingVoltages {
    extract_with(trace, &ExtractionConfig::default())
}

/// Locates the SET and RESET transitions as the extrema of the smoothed
/// second derivative of `|I|(|V|)` on the outgoing ramp of each polarity:
/// the maximum on the positive branch, the minimum on the negative one.
pub fn extract_with(trace: &SweepTrace, cfg: &ExtractionConfig) -> SwitchingVoltages {
    let out = trace.outgoing();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for p in out {
        if p.voltage >= 0.0 {
            pos.push((p.voltage, p.current.abs()));
        }
        if p.voltage <= 0.0 {
            neg.push((-p.voltage, p.current.abs()));
        }
    }
    let branch = |pts: Vec<(f64, f64)>, rising: bool| {
        let pts = envelope(pts);
        if pts.len() < MIN_BRANCH_POINTS || pts.iter().all(|p| p.0 == 0.0) {
            return None;
        }
        peak(&pts, rising, cfg)
    };
    SwitchingVoltages { v_set: branch(pos, true), v_reset: branch(neg, false).map(|v| -v) }
}

/// Keeps the points that push `|V|` to a new maximum. A voltage ramp is
/// unchanged; a current-controlled branch becomes a single-valued I-V curve.
fn envelope(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().is_none_or(|q| p.0 > q.0) {
            out.push(p);
        }
    }
    out
}

fn resample(pts: &[(f64, f64)], grid: f64) -> Vec<f64> {
    let (v0, v1) = (pts[0].0, pts[pts.len() - 1].0);
    let n = ((v1 - v0) / grid).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for j in 0..n {
        let v = v0 + j as f64 * grid;
        while k + 2 < pts.len() && pts[k + 1].0 < v {
            k += 1;
        }
        let (a, b) = (pts[k], pts[k + 1]);
        let t = ((v - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
        out.push(a.1 + t * (b.1 - a.1));
    }
    out
}

fn gradient(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| match i {
            0 => (y[1] - y[0]) / h,
            _ if i == n - 1 => (y[n - 1] - y[n - 2]) / h,
            _ => (y[i + 1] - y[i - 1]) / (2.0 * h),
        })
        .collect()
}

fn moving_average(y: &[f64], w: usize) -> Vec<f64> {
    let half = w / 2;
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(y.len() - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn peak(pts: &[(f64, f64)], rising: bool, cfg: &ExtractionConfig) -> Option<f64> {
    let h = cfg.grid;
    let w = cfg.window.max(1);
    let i = resample(pts, h);
    if i.len() < 2 * w + 3 {
        return None;
    }
    let slope = moving_average(&gradient(&i, h), w);
    let d2 = moving_average(&gradient(&slope, h), w);
    let interior = w..i.len() - w;
    let best = interior.fold(None::<usize>, |acc, k| match acc {
        Some(b) if (rising && d2[k] <= d2[b]) || (!rising && d2[k] >= d2[b]) => Some(b),
        _ => Some(k),
    })?;
    let scale = slope.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    if scale == 0.0 {
        return None;
    }
    let signed = if rising { d2[best] } else { -d2[best] };
    if signed <= 0.0 || signed * w as f64 * h / scale < cfg.significance {
        return None;
    }
    Some(pts[0].0 + best as f64 * h)
}
