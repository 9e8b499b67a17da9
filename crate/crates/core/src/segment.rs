//! Binary segmentation with the CUSUM-sum statistic.
//!
//! The stopping rule is a plain threshold on the segment statistic
//! `max_t U_N(t) / (L^2 N)`, where `L` is the segment length. It is a
//! stand-in: calibrate `threshold` by simulating the statistic under no
//! change (see the null Monte Carlo in the tests).

use alloc::format;
use alloc::vec::Vec;

use crate::cusum::{first_argmax, profile_range};
use crate::error::{Error, Result};
use crate::panel::PanelData;
use crate::sum;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmentationConfig {
    /// Minimum number of observations in every segment, at least 2.
    pub min_segment: usize,
    /// Maximum recursion depth; 0 disables splitting.
    pub max_depth: usize,
    /// Segments whose normalised statistic does not exceed this are not split.
    pub threshold: f64,
}

/// Normalised statistic and split point (relative, one-based) of the segment
/// `start..end`, restricted to splits leaving `min_segment` on each side.
pub fn segment_statistic(
    panel: &PanelData,
    start: usize,
    end: usize,
    min_segment: usize,
) -> Option<(f64, usize)> {
    let len = end - start;
    if len < 2 * min_segment || len < 3 {
        return None;
    }
    let u = profile_range(panel, start, end);
    let lo = min_segment.max(1);
    let hi = len - min_segment;
    let (k, best) = first_argmax(u[lo - 1..hi].iter().copied());
    let scale = (len * len * panel.n_panels()) as f64;
    Some((best / scale, lo - 1 + k))
}

/// Sorted break locations; a break `b` means the segments `..b` and `b..`
/// (zero-based, exclusive end), i.e. the last index of the earlier regime in
/// one-based time.
pub fn binary_segmentation(panel: &PanelData, config: &SegmentationConfig) -> Result<Vec<usize>> {
    let t = panel.len();
    if config.min_segment < 2 {
        return Err(Error::InvalidSegment(format!(
            "min_segment must be at least 2, got {}",
            config.min_segment
        )));
    }
    if 2 * config.min_segment >= t {
        return Err(Error::InvalidSegment(format!(
            "min_segment {} leaves no admissible split in T={t}",
            config.min_segment
        )));
    }
    if !(config.threshold >= 0.0 && config.threshold.is_finite()) {
        return Err(Error::param(
            "threshold",
            format!("must be finite and non-negative, got {}", config.threshold),
        ));
    }
    let mut breaks = Vec::new();
    split(panel, 0, t, 1, config, &mut breaks);
    breaks.sort_unstable();
    Ok(breaks)
}

fn split(
    panel: &PanelData,
    start: usize,
    end: usize,
    depth: usize,
    config: &SegmentationConfig,
    breaks: &mut Vec<usize>,
) {
    if depth > config.max_depth {
        return;
    }
    let Some((stat, k)) = segment_statistic(panel, start, end, config.min_segment) else {
        return;
    };
    if stat <= config.threshold {
        return;
    }
    let b = start + k;
    breaks.push(b);
    split(panel, start, b, depth + 1, config, breaks);
    split(panel, b, end, depth + 1, config, breaks);
}

/// Per-segment summary used by reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmentSummary {
    /// First time index of the segment, one-based.
    pub first: usize,
    /// Last time index of the segment, one-based.
    pub last: usize,
    /// Mean of every panel over the segment.
    pub panel_means: Vec<f64>,
    /// Average of `panel_means`.
    pub mean: f64,
}

pub fn summarize_segments(panel: &PanelData, breaks: &[usize]) -> Vec<SegmentSummary> {
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(0);
    edges.extend_from_slice(breaks);
    edges.push(panel.len());
    edges
        .windows(2)
        .map(|w| {
            let panel_means: Vec<f64> = panel.rows().map(|r| sum::mean(&r[w[0]..w[1]])).collect();
            SegmentSummary {
                first: w[0] + 1,
                last: w[1],
                mean: sum::mean(&panel_means),
                panel_means,
            }
        })
        .collect()
}
