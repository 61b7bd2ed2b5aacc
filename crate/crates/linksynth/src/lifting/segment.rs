//! Discrete segmental representation: per-sample motion labels collapsed
//! into run-length segments with summary statistics.

use super::proxies::{KinematicProxies, LiftingError, QualSignature};
use crate::linkage::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotionLabel {
    Pause,
    Straight,
    GentleTurn,
    SharpTurn,
    UTurn,
}

impl fmt::Display for MotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MotionLabel::Pause => "Pause",
            MotionLabel::Straight => "Straight",
            MotionLabel::GentleTurn => "GentleTurn",
            MotionLabel::SharpTurn => "SharpTurn",
            MotionLabel::UTurn => "UTurn",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// Speed below which a sample is a pause.
    pub pause_speed: f64,
    pub straight_deg: f64,
    pub gentle_deg: f64,
    pub sharp_deg: f64,
    /// Number of heading quantization bins over the full circle.
    pub heading_bins: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            pause_speed: 1.5e-4,
            straight_deg: 2.0,
            gentle_deg: 30.0,
            sharp_deg: 45.0,
            heading_bins: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: MotionLabel,
    /// First sample index, inclusive.
    pub start: usize,
    /// One past the last sample index.
    pub end: usize,
    /// Most frequent quantized heading bin within the segment.
    pub dominant_heading_bin: usize,
    /// Mode of the hysteretic curvature sign within the segment.
    pub dominant_curvature_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub label_frequency: BTreeMap<MotionLabel, f64>,
    pub mean_run_length: f64,
    /// (from, to, count), sorted by the label pair.
    pub transition_counts: Vec<(MotionLabel, MotionLabel, usize)>,
    /// Shannon entropy (bits) of the per-sample label distribution.
    pub entropy: f64,
}

/// Per-sample label under the threshold table.
pub fn label_samples(px: &KinematicProxies, cfg: &SegmentConfig) -> Vec<MotionLabel> {
    px.speeds
        .iter()
        .zip(&px.heading_changes)
        .map(|(&s, &c)| {
            if s < cfg.pause_speed {
                MotionLabel::Pause
            } else {
                let deg = c.to_degrees();
                if deg <= cfg.straight_deg {
                    MotionLabel::Straight
                } else if deg <= cfg.gentle_deg {
                    MotionLabel::GentleTurn
                } else if deg <= cfg.sharp_deg {
                    MotionLabel::SharpTurn
                } else {
                    MotionLabel::UTurn
                }
            }
        })
        .collect()
}

pub fn segment_dr(
    traj: &Trajectory,
    cfg: &SegmentConfig,
) -> Result<(Vec<Segment>, SegmentStats), LiftingError> {
    let px = super::proxies::proxies(traj, traj.dt)?;
    let labels = label_samples(&px, cfg);
    let sig = QualSignature::from_proxies(&px);

    let bin_of = |theta: f64| -> usize {
        let tau = std::f64::consts::TAU;
        let frac = (theta.rem_euclid(tau)) / tau;
        ((frac * cfg.heading_bins as f64) as usize).min(cfg.heading_bins - 1)
    };

    let mut segments: Vec<Segment> = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            let mut heading_counts = vec![0usize; cfg.heading_bins];
            let mut sign_counts = [0usize; 3];
            for j in start..i {
                heading_counts[bin_of(px.headings[j])] += 1;
                sign_counts[(sig.curvature_sign[j] + 1) as usize] += 1;
            }
            let dominant_heading_bin = heading_counts
                .iter()
                .enumerate()
                .max_by_key(|(_, c)| **c)
                .map(|(b, _)| b)
                .unwrap();
            let dominant_curvature_sign = (0..3)
                .max_by_key(|k| sign_counts[*k])
                .map(|k| k as i8 - 1)
                .unwrap();
            segments.push(Segment {
                label: labels[start],
                start,
                end: i,
                dominant_heading_bin,
                dominant_curvature_sign,
            });
            start = i;
        }
    }

    let n = labels.len() as f64;
    let mut counts: BTreeMap<MotionLabel, usize> = BTreeMap::new();
    for l in &labels {
        *counts.entry(*l).or_default() += 1;
    }
    let label_frequency: BTreeMap<MotionLabel, f64> =
        counts.iter().map(|(l, c)| (*l, *c as f64 / n)).collect();
    let entropy = label_frequency
        .values()
        .filter(|f| **f > 0.0)
        .map(|f| -f * f.log2())
        .sum();
    let mut transition_map: BTreeMap<(MotionLabel, MotionLabel), usize> = BTreeMap::new();
    for w in segments.windows(2) {
        *transition_map.entry((w[0].label, w[1].label)).or_default() += 1;
    }
    let transition_counts: Vec<(MotionLabel, MotionLabel, usize)> = transition_map
        .into_iter()
        .map(|((a, b), c)| (a, b, c))
        .collect();
    let mean_run_length = n / segments.len() as f64;

    Ok((
        segments,
        SegmentStats {
            label_frequency,
            mean_run_length,
            transition_counts,
            entropy,
        },
    ))
}
