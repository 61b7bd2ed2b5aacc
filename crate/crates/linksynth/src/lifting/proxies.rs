//! Local kinematic proxies and the hysteretic sign extractor.

use crate::geom::{wrap_angle, Point};
use crate::linkage::Trajectory;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CURVATURE_MARGIN, MONOTONICITY_MARGIN};

#[derive(Debug, Error)]
pub enum LiftingError {
    #[error("trajectory must have at least 3 samples, got {0}")]
    TooShort(usize),
    #[error("hysteresis margin must be > 0")]
    BadMargin,
    #[error("cannot evaluate a formula on an empty trace")]
    EmptyTrajectory,
    #[error("temporal interval [{lo}, {hi}] is not well-formed")]
    BadInterval { lo: f64, hi: f64 },
    #[error("joint `{0}` not present in simulation result")]
    UnknownJoint(String),
}

/// Per-sample kinematic quantities. All arrays share the trajectory
/// length: velocities use forward/backward schemes at the boundaries and
/// centred differences inside; accelerations and curvatures are interior
/// quantities with endpoints copied from the nearest interior value;
/// speeds and headings come from the forward step vectors, with the last
/// entry copied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicProxies {
    pub velocities: Vec<Point>,
    pub speeds: Vec<f64>,
    pub accelerations: Vec<Point>,
    pub headings: Vec<f64>,
    /// Absolute wrapped heading change to the next sample.
    pub heading_changes: Vec<f64>,
    pub curvatures: Vec<f64>,
}

pub fn proxies(traj: &Trajectory, dt: f64) -> Result<KinematicProxies, LiftingError> {
    let p = &traj.samples;
    let n = p.len();
    if n < 3 {
        return Err(LiftingError::TooShort(n));
    }

    let mut velocities = Vec::with_capacity(n);
    velocities.push((p[1] - p[0]) / dt);
    for i in 1..n - 1 {
        velocities.push((p[i + 1] - p[i - 1]) / (2.0 * dt));
    }
    velocities.push((p[n - 1] - p[n - 2]) / dt);

    let mut accelerations = Vec::with_capacity(n);
    accelerations.push((p[2] - p[1] * 2.0 + p[0]) / (dt * dt));
    for i in 1..n - 1 {
        accelerations.push((p[i + 1] - p[i] * 2.0 + p[i - 1]) / (dt * dt));
    }
    accelerations.push(accelerations[n - 2]);

    let mut curvatures = Vec::with_capacity(n);
    for i in 0..n {
        let idx = i.clamp(1, n - 2);
        let v = velocities[idx];
        let a = accelerations[idx];
        let denom = (v.x * v.x + v.y * v.y).powf(1.5);
        // singular-speed guard: stationary points get zero curvature
        curvatures.push(if denom < 1e-12 {
            0.0
        } else {
            (v.x * a.y - v.y * a.x) / denom
        });
    }

    let mut speeds = Vec::with_capacity(n);
    let mut headings = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let step = p[i + 1] - p[i];
        speeds.push(step.norm() / dt);
        headings.push(step.y.atan2(step.x));
    }
    speeds.push(speeds[n - 2]);
    headings.push(headings[n - 2]);

    let mut heading_changes = Vec::with_capacity(n);
    for i in 0..n - 1 {
        heading_changes.push(wrap_angle(headings[i + 1] - headings[i]).abs());
    }
    heading_changes.push(0.0);

    Ok(KinematicProxies {
        velocities,
        speeds,
        accelerations,
        headings,
        heading_changes,
        curvatures,
    })
}

/// Sign extraction with a dead band: the output flips only when the
/// signal leaves `±margin`; inside the band the previous value is held.
/// The initial value is the sign at the first sample outside the band,
/// or 0 if the signal never leaves it.
pub fn hysteretic_sign(signal: &[f64], margin: f64) -> Result<Vec<i8>, LiftingError> {
    if !(margin > 0.0) {
        return Err(LiftingError::BadMargin);
    }
    let init = signal
        .iter()
        .find(|s| s.abs() > margin)
        .map(|s| if *s > 0.0 { 1 } else { -1 })
        .unwrap_or(0);
    let mut state = init;
    let mut out = Vec::with_capacity(signal.len());
    for &s in signal {
        if s > margin {
            state = 1;
        } else if s < -margin {
            state = -1;
        }
        out.push(state);
    }
    Ok(out)
}

/// The pointwise token tuple `(s_κ, m_x, m_y)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualSignature {
    pub curvature_sign: Vec<i8>,
    pub mono_x: Vec<i8>,
    pub mono_y: Vec<i8>,
}

impl QualSignature {
    pub fn from_proxies(px: &KinematicProxies) -> QualSignature {
        let vx: Vec<f64> = px.velocities.iter().map(|v| v.x).collect();
        let vy: Vec<f64> = px.velocities.iter().map(|v| v.y).collect();
        QualSignature {
            curvature_sign: hysteretic_sign(&px.curvatures, CURVATURE_MARGIN).unwrap(),
            mono_x: hysteretic_sign(&vx, MONOTONICITY_MARGIN).unwrap(),
            mono_y: hysteretic_sign(&vy, MONOTONICITY_MARGIN).unwrap(),
        }
    }
}
