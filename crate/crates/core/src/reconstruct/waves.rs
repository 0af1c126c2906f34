use serde::{Deserialize, Serialize};

use super::ReconstructError;
use crate::model::{Frame, PointCloud, WaveSeries};

/// Longest run of empty frames that is bridged by interpolation.
const MAX_GAP: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeExtraction {
    pub series: WaveSeries,
    /// Frames with no points near the probe; their values are interpolated.
    pub gaps: Vec<usize>,
}

/// Median world Z of the points within `radius` (horizontally) of
/// `probe_xy`, one sample per cloud. Runs of up to two empty frames are
/// filled linearly (or from the nearest sample at either end).
pub fn extract_probe_series(
    clouds: &[PointCloud],
    probe_xy: [f64; 2],
    radius: f64,
    frame_rate: f64,
    t0: f64,
) -> Result<ProbeExtraction, ReconstructError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(ReconstructError::InvalidParams("probe radius must be > 0".into()));
    }
    if !(frame_rate.is_finite() && frame_rate > 0.0) {
        return Err(ReconstructError::InvalidParams("frame rate must be > 0".into()));
    }
    let r2 = radius * radius;
    let mut samples: Vec<Option<f64>> = Vec::with_capacity(clouds.len());
    for cloud in clouds {
        if cloud.frame() != Frame::World {
            return Err(ReconstructError::FrameMismatch {
                expected: Frame::World,
                found: cloud.frame(),
            });
        }
        let mut z: Vec<f64> = cloud
            .points()
            .iter()
            .filter(|p| (p.x - probe_xy[0]).powi(2) + (p.y - probe_xy[1]).powi(2) <= r2)
            .map(|p| p.z)
            .collect();
        samples.push(median(&mut z));
    }

    let mut gaps = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if samples[i].is_some() {
            i += 1;
            continue;
        }
        let start = i;
        while i < samples.len() && samples[i].is_none() {
            i += 1;
        }
        let run = i - start;
        if run > MAX_GAP || run == samples.len() {
            return Err(ReconstructError::ProbeStarved { frame: start, run });
        }
        let before = start.checked_sub(1).and_then(|k| samples[k]);
        let after = samples.get(i).copied().flatten();
        for k in start..i {
            samples[k] = Some(match (before, after) {
                (Some(a), Some(b)) => a + (b - a) * (k + 1 - start) as f64 / (run + 1) as f64,
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("run shorter than the series has a neighbour"),
            });
            gaps.push(k);
        }
    }
    let eta = samples.into_iter().map(|s| s.expect("gaps filled")).collect();
    Ok(ProbeExtraction {
        series: WaveSeries::new(t0, 1.0 / frame_rate, eta, "stereo", probe_xy)?,
        gaps,
    })
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveStats {
    /// Mean crest-to-trough height, m.
    pub h_bar: f64,
    /// Mean up-crossing period, s.
    pub t_bar: f64,
    pub n_waves: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
}

/// Up-crossing analysis after removing the mean level. Crossing times are
/// interpolated linearly between samples; each wave's height is the sample
/// range between consecutive up-crossings.
pub fn zero_crossing_stats(series: &WaveSeries) -> Result<WaveStats, ReconstructError> {
    let eta = series.eta();
    let n = eta.len();
    if n == 0 {
        return Err(ReconstructError::TooFewCrossings { found: 0 });
    }
    let mean = eta.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = eta.iter().map(|e| e - mean).collect();
    // (sample index after the crossing, interpolated time)
    let crossings: Vec<(usize, f64)> = (0..n.saturating_sub(1))
        .filter(|&i| x[i] < 0.0 && x[i + 1] >= 0.0)
        .map(|i| {
            let frac = -x[i] / (x[i + 1] - x[i]);
            (i + 1, series.time(i) + frac * series.dt())
        })
        .collect();
    if crossings.len() < 2 {
        return Err(ReconstructError::TooFewCrossings { found: crossings.len() });
    }
    let waves = crossings.len() - 1;
    let (mut h_sum, mut t_sum) = (0.0, 0.0);
    for pair in crossings.windows(2) {
        let ((a, ta), (b, tb)) = (pair[0], pair[1]);
        let seg = &x[a..b];
        let max = seg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = seg.iter().copied().fold(f64::INFINITY, f64::min);
        h_sum += max - min;
        t_sum += tb - ta;
    }
    Ok(WaveStats {
        h_bar: h_sum / waves as f64,
        t_bar: t_sum / waves as f64,
        n_waves: waves,
        r_squared: None,
    })
}

/// `R^2 = 1 - sum (y_p - y_s)^2 / sum (y_p - mean y_p)^2`; may be negative.
pub fn r_squared(stereo: &[f64], probe: &[f64]) -> Result<f64, ReconstructError> {
    if stereo.len() != probe.len() {
        return Err(ReconstructError::LengthMismatch {
            left: stereo.len(),
            right: probe.len(),
        });
    }
    if probe.len() < 2 {
        return Err(ReconstructError::ZeroVariance);
    }
    let mean = probe.iter().sum::<f64>() / probe.len() as f64;
    let ss_tot: f64 = probe.iter().map(|p| (p - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(ReconstructError::ZeroVariance);
    }
    let ss_res: f64 = probe.iter().zip(stereo).map(|(p, s)| (p - s).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `|1 - slope| * 100`.
    pub mean_bias_percent: f64,
}

/// Ordinary least squares `y_s = slope * y_p + intercept`.
pub fn linear_fit_bias(stereo: &[f64], probe: &[f64]) -> Result<LinearFit, ReconstructError> {
    if stereo.len() != probe.len() {
        return Err(ReconstructError::LengthMismatch {
            left: stereo.len(),
            right: probe.len(),
        });
    }
    let n = probe.len();
    if n < 2 {
        return Err(ReconstructError::DegenerateSpread);
    }
    let mx = probe.iter().sum::<f64>() / n as f64;
    let my = stereo.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in probe.iter().zip(stereo) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(ReconstructError::DegenerateSpread);
    }
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        mean_bias_percent: (1.0 - slope).abs() * 100.0,
    })
}

/// Integer lag in `[-max_lag, max_lag]` maximising the normalised
/// cross-correlation; `stereo[i + lag]` pairs with `probe[i]`. Ties go to
/// the smallest |lag|, then the negative one. Returns the lag and the
/// overlapping, aligned slices.
pub fn align_by_cross_correlation<'a>(
    stereo: &'a [f64],
    probe: &'a [f64],
    max_lag: usize,
) -> (isize, &'a [f64], &'a [f64]) {
    let overlap = |lag: isize| -> (&'a [f64], &'a [f64]) {
        if lag >= 0 {
            let l = lag as usize;
            let n = stereo.len().saturating_sub(l).min(probe.len());
            (&stereo[l.min(stereo.len())..l.min(stereo.len()) + n], &probe[..n])
        } else {
            let l = (-lag) as usize;
            let n = probe.len().saturating_sub(l).min(stereo.len());
            (&stereo[..n], &probe[l.min(probe.len())..l.min(probe.len()) + n])
        }
    };
    let score = |a: &[f64], b: &[f64]| -> f64 {
        if a.len() < 2 {
            return f64::NEG_INFINITY;
        }
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        if saa == 0.0 || sbb == 0.0 {
            f64::NEG_INFINITY
        } else {
            sab / (saa * sbb).sqrt()
        }
    };
    let mut best = (0isize, f64::NEG_INFINITY);
    for k in 0..=max_lag as isize {
        for lag in if k == 0 { vec![0] } else { vec![-k, k] } {
            let (a, b) = overlap(lag);
            let s = score(a, b);
            if s > best.1 {
                best = (lag, s);
            }
        }
    }
    let (a, b) = overlap(best.0);
    (best.0, a, b)
}
