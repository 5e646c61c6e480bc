//! Keyframe detection over inter-frame difference intensity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stream::FrameSequence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("need at least 2 frames to compute differences, got {0}")]
    TooFewFrames(usize),
    #[error("window length {window_len} invalid for series of length {series_len} (must be odd, >= 3, <= length, and the series unsmoothed)")]
    BadWindowLength { window_len: usize, series_len: usize },
}

/// Mean absolute difference between consecutive frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub values: Vec<f64>,
    pub smoothed: bool,
}

impl DiffSeries {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            smoothed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Mean of `|a[i] - b[i]|` over all pixels.
pub fn mean_abs_diff(a: &[u8], b: &[u8]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let total: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x.abs_diff(y) as u64)
        .sum();
    total as f64 / a.len() as f64
}

/// `1 - meanAbsDiff / 255`; 1.0 for identical frames.
pub fn frame_similarity(a: &[u8], b: &[u8]) -> f64 {
    1.0 - mean_abs_diff(a, b) / 255.0
}

pub fn frame_difference_series(seq: &FrameSequence) -> Result<DiffSeries, DetectError> {
    let n = seq.frame_count();
    if n < 2 {
        return Err(DetectError::TooFewFrames(n));
    }
    let frames: Vec<&[u8]> = seq.frames().collect();
    let values = frames
        .windows(2)
        .map(|pair| mean_abs_diff(pair[0], pair[1]))
        .collect();
    Ok(DiffSeries::raw(values))
}

/// Hann taps without the zero-valued endpoints, normalized to unit sum:
/// `w[k] ∝ 0.5 * (1 - cos(2π(k + 1) / (L + 1)))` for `k = 0..L`.
pub fn hann_kernel(window_len: usize) -> Vec<f64> {
    let denom = (window_len + 1) as f64;
    let raw: Vec<f64> = (0..window_len)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * (k + 1) as f64 / denom).cos()))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Convolves with a normalized Hann window, mirroring the series at both
/// edges (the edge sample itself is not repeated).
pub fn smooth_hanning(series: &DiffSeries, window_len: usize) -> Result<DiffSeries, DetectError> {
    let n = series.len();
    if series.smoothed || window_len < 3 || window_len.is_multiple_of(2) || window_len > n {
        return Err(DetectError::BadWindowLength {
            window_len,
            series_len: n,
        });
    }
    let kernel = hann_kernel(window_len);
    let half = window_len / 2;
    let x = &series.values;
    let at = |j: isize| -> f64 {
        let last = n as isize - 1;
        let idx = if j < 0 {
            -j
        } else if j > last {
            2 * last - j
        } else {
            j
        };
        x[idx as usize]
    };
    let values = (0..n)
        .map(|i| {
            let centre = x[i];
            // Accumulate deviations from the centre so constant input is
            // reproduced bit for bit.
            let dev: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * (at(i as isize + k as isize - half as isize) - centre))
                .sum();
            (centre + dev).max(0.0)
        })
        .collect();
    Ok(DiffSeries {
        values,
        smoothed: true,
    })
}

/// Indices `i` with `v[i] > v[i-1]`, `v[i] >= v[i+1]` and `v[i] > noise_floor`.
/// Boundary samples are compared with their single neighbour. On a plateau
/// the leftmost sample wins.
pub fn detect_local_maxima(series: &DiffSeries, noise_floor: f64) -> Vec<usize> {
    let v = &series.values;
    let n = v.len();
    (0..n)
        .filter(|&i| {
            v[i] > noise_floor
                && (i == 0 || v[i] > v[i - 1])
                && (i + 1 == n || v[i] >= v[i + 1])
        })
        .collect()
}

/// Default floor: median of the series plus 2% of its maximum. The median
/// tracks the sensor/compression noise level between slide changes.
pub fn default_noise_floor(series: &DiffSeries) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let mut sorted = series.values.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    median + 0.02 * series.max()
}

/// Maps difference-series peaks to frame indices. Peak `i` measures the
/// change from frame `i` to `i + 1`, so the new slide state is frame `i + 1`.
/// Frame 0 is always a candidate: the opening slide has no preceding change.
pub fn candidate_frames(maxima: &[usize]) -> Vec<usize> {
    std::iter::once(0)
        .chain(maxima.iter().map(|&i| i + 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame_index: usize,
    pub video_time: f64,
    /// Number of candidate frames collapsed into this keyframe.
    pub group_size: usize,
    pub width: u32,
    pub height: u32,
    #[serde(skip)]
    pub bitmap: Vec<u8>,
    pub ocr_text: Vec<String>,
}

/// Groups consecutive candidates whose frames are similar (chained, each
/// compared with the previous member) and keeps the last frame of each group.
/// Adjacent retained frames that still meet the threshold are merged, so the
/// output never holds two consecutive keyframes with similarity >= threshold.
pub fn dedup_keyframes(seq: &FrameSequence, candidates: &[usize], threshold: f64) -> Vec<Keyframe> {
    let mut groups: Vec<(usize, usize)> = Vec::new(); // (representative, size)
    let mut current: Option<(usize, usize)> = None;
    for &c in candidates {
        current = match current {
            Some((last, size)) if frame_similarity(seq.frame(last), seq.frame(c)) >= threshold => {
                Some((c, size + 1))
            }
            Some(done) => {
                push_group(seq, &mut groups, done, threshold);
                Some((c, 1))
            }
            None => Some((c, 1)),
        };
    }
    if let Some(done) = current {
        push_group(seq, &mut groups, done, threshold);
    }
    groups
        .into_iter()
        .map(|(frame_index, group_size)| Keyframe {
            frame_index,
            video_time: seq.time_of(frame_index),
            group_size,
            width: seq.width(),
            height: seq.height(),
            bitmap: seq.frame(frame_index).to_vec(),
            ocr_text: Vec::new(),
        })
        .collect()
}

fn push_group(
    seq: &FrameSequence,
    groups: &mut Vec<(usize, usize)>,
    (rep, mut size): (usize, usize),
    threshold: f64,
) {
    while let Some(&(prev, prev_size)) = groups.last() {
        if frame_similarity(seq.frame(prev), seq.frame(rep)) < threshold {
            break;
        }
        size += prev_size;
        groups.pop();
    }
    groups.push((rep, size));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeParams {
    pub window_len: usize,
    pub dedup_threshold: f64,
    /// `None` selects [`default_noise_floor`].
    pub noise_floor: Option<f64>,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        Self {
            window_len: 9,
            dedup_threshold: 0.9,
            noise_floor: None,
        }
    }
}

/// Difference series, smoothing, peak picking and deduplication in one go.
/// Short clips whose difference series is shorter than the window are
/// smoothed with the largest odd window that fits, or left unsmoothed when
/// fewer than three differences exist.
pub fn extract_keyframes(
    seq: &FrameSequence,
    params: &KeyframeParams,
) -> Result<Vec<Keyframe>, DetectError> {
    if seq.frame_count() < 2 {
        return Ok(dedup_keyframes(seq, &[0], params.dedup_threshold));
    }
    let raw = frame_difference_series(seq)?;
    let mut window = params.window_len.min(raw.len());
    if window % 2 == 0 {
        window -= 1;
    }
    let smoothed = if window >= 3 {
        smooth_hanning(&raw, window)?
    } else {
        DiffSeries {
            values: raw.values,
            smoothed: true,
        }
    };
    let floor = params
        .noise_floor
        .unwrap_or_else(|| default_noise_floor(&smoothed));
    let maxima = detect_local_maxima(&smoothed, floor);
    Ok(dedup_keyframes(
        seq,
        &candidate_frames(&maxima),
        params.dedup_threshold,
    ))
}
