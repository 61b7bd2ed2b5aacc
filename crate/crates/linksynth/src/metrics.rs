//! Trajectory scoring: ICP alignment, Chamfer distance, improvement
//! percentage.

use crate::geom::{wrap_angle, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    /// Rotation in radians, normalized to (−π, π].
    pub rotation: f64,
    pub translation: Point,
}

impl RigidTransform2D {
    pub fn identity() -> RigidTransform2D {
        RigidTransform2D {
            rotation: 0.0,
            translation: Point::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        p.rotate(self.rotation) + self.translation
    }

    /// `other` applied first, then `self`.
    pub fn compose(&self, other: &RigidTransform2D) -> RigidTransform2D {
        RigidTransform2D {
            rotation: wrap_angle(self.rotation + other.rotation),
            translation: other.translation.rotate(self.rotation) + self.translation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub chamfer: f64,
    pub transform: RigidTransform2D,
    pub iterations_used: usize,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("point set must be non-empty")]
    EmptySet,
    #[error("degenerate source: all points coincident")]
    DegenerateSource,
    #[error("cd_initial must be > 0")]
    ZeroInitial,
}

fn min_dist(p: Point, set: &[Point]) -> f64 {
    set.iter()
        .map(|q| p.dist(*q))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric mean nearest-neighbour distance: mean over `a` of min-dist
/// to `b`, plus mean over `b` of min-dist to `a`, halved.
pub fn chamfer(a: &[Point], b: &[Point]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let ab: f64 = a.iter().map(|p| min_dist(*p, b)).sum::<f64>() / a.len() as f64;
    let ba: f64 = b.iter().map(|p| min_dist(*p, a)).sum::<f64>() / b.len() as f64;
    Ok(0.5 * (ab + ba))
}

/// Closed-form least-squares rigid fit from `src[i]` to `dst[i]`.
fn rigid_fit(src: &[Point], dst: &[Point]) -> RigidTransform2D {
    let n = src.len() as f64;
    let cs = src.iter().fold(Point::default(), |a, p| a + *p) / n;
    let cd = dst.iter().fold(Point::default(), |a, p| a + *p) / n;
    let (mut sdot, mut scross) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let s = *s - cs;
        let d = *d - cd;
        sdot += s.dot(d);
        scross += s.cross(d);
    }
    let rotation = scross.atan2(sdot);
    RigidTransform2D {
        rotation,
        translation: cd - cs.rotate(rotation),
    }
}

/// Point-to-point ICP with uniform weights and no trimming.
///
/// Iterates nearest-neighbour correspondence plus a closed-form rigid
/// step until the mean correspondence distance improves by less than
/// `tol` or `max_iter` is reached.
pub fn icp_align(
    source: &[Point],
    target: &[Point],
    max_iter: usize,
    tol: f64,
) -> Result<(RigidTransform2D, Vec<Point>), MetricsError> {
    let (t, pts, _) = run_icp(source, target, max_iter, tol)?;
    Ok((t, pts))
}

fn run_icp(
    source: &[Point],
    target: &[Point],
    max_iter: usize,
    tol: f64,
) -> Result<(RigidTransform2D, Vec<Point>, usize), MetricsError> {
    if source.is_empty() || target.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let spread = source
        .iter()
        .map(|p| p.dist(source[0]))
        .fold(0.0_f64, f64::max);
    if spread < 1e-12 {
        return Err(MetricsError::DegenerateSource);
    }

    // plain point-to-point ICP has a narrow rotational basin; restart
    // it from eight coarse centroid-aligned rotations (identity first)
    // and keep the start with the lowest final correspondence distance
    let cs = source.iter().fold(Point::default(), |a, p| a + *p) / source.len() as f64;
    let ct = target.iter().fold(Point::default(), |a, p| a + *p) / target.len() as f64;

    let mut best: Option<(f64, RigidTransform2D, Vec<Point>, usize)> = None;
    for k in 0..8 {
        let rotation = wrap_angle(k as f64 * std::f64::consts::FRAC_PI_4);
        let init = RigidTransform2D {
            rotation,
            translation: ct - cs.rotate(rotation),
        };
        let (total, current, iterations, mean) =
            icp_from(init, source, target, max_iter, tol);
        if best.as_ref().map_or(true, |(m, ..)| mean < *m) {
            best = Some((mean, total, current, iterations));
        }
    }
    let (_, total, current, iterations) = best.expect("at least one start");
    Ok((total, current, iterations))
}

/// One ICP descent from a fixed initial transform; returns the final
/// transform, aligned points, iteration count, and mean correspondence
/// distance.
fn icp_from(
    init: RigidTransform2D,
    source: &[Point],
    target: &[Point],
    max_iter: usize,
    tol: f64,
) -> (RigidTransform2D, Vec<Point>, usize, f64) {
    let mut total = init;
    let mut current: Vec<Point> = source.iter().map(|p| total.apply(*p)).collect();
    let mut prev_mean = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..max_iter {
        let corr: Vec<Point> = current
            .iter()
            .map(|p| {
                *target
                    .iter()
                    .min_by(|a, b| p.dist(**a).total_cmp(&p.dist(**b)))
                    .unwrap()
            })
            .collect();
        let mean: f64 =
            current.iter().zip(&corr).map(|(p, q)| p.dist(*q)).sum::<f64>() / current.len() as f64;
        if prev_mean - mean < tol {
            prev_mean = prev_mean.min(mean);
            break;
        }
        prev_mean = mean;
        let step = rigid_fit(&current, &corr);
        total = step.compose(&total);
        for p in &mut current {
            *p = step.apply(*p);
        }
        iterations += 1;
    }
    if prev_mean.is_infinite() {
        // max_iter == 0: report the distance of the initial placement
        prev_mean = current
            .iter()
            .map(|p| min_dist(*p, target))
            .sum::<f64>()
            / current.len().max(1) as f64;
    }
    (total, current, iterations, prev_mean)
}

/// `100·(cd_initial − cd_final)/cd_initial`; may be negative.
pub fn improvement_pct(cd_initial: f64, cd_final: f64) -> Result<f64, MetricsError> {
    if !(cd_initial > 0.0) {
        return Err(MetricsError::ZeroInitial);
    }
    Ok(100.0 * (cd_initial - cd_final) / cd_initial)
}

/// The scoring pipeline: align `source` onto `target`, then Chamfer.
pub fn score(
    source: &[Point],
    target: &[Point],
    max_iter: usize,
    tol: f64,
) -> Result<Score, MetricsError> {
    let (transform, aligned, iterations_used) = run_icp(source, target, max_iter, tol)?;
    let cd = chamfer(&aligned, target)?;
    Ok(Score {
        chamfer: cd,
        transform,
        iterations_used,
    })
}
