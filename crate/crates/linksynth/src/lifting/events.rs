//! Atomic event detection: inflections, coordinate extrema,
//! self-intersections, region relations, and guard crossings.

use super::proxies::{KinematicProxies, QualSignature};
use crate::geom::{segment_intersection, Point};
use crate::linkage::Trajectory;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    Inf,
    ExX,
    ExY,
    Sint,
    RegionIn,
    RegionOut,
    RegionCross,
    GuardCross,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Inf => "INF",
            EventKind::ExX => "EX_x",
            EventKind::ExY => "EX_y",
            EventKind::Sint => "SINT",
            EventKind::RegionIn => "RegionIn",
            EventKind::RegionOut => "RegionOut",
            EventKind::RegionCross => "RegionCross",
            EventKind::GuardCross => "GuardCross",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    /// Normalized time in [0, 1].
    pub t: f64,
    /// Region or guard id where applicable.
    pub payload: Option<String>,
}

/// Axis-aligned region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub min: Point,
    pub max: Point,
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Bounding box of the samples, padded by `pad_frac` of its diagonal.
    pub fn from_trajectory(id: &str, samples: &[Point], pad_frac: f64) -> Region {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in samples {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        let pad = (max - min).norm() * pad_frac;
        Region {
            id: id.into(),
            min: min - Point::new(pad, pad),
            max: max + Point::new(pad, pad),
        }
    }
}

/// Oriented line used for crossing events; sidedness is the sign of
/// `direction × (p − origin)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Guard {
    pub id: String,
    pub origin: Point,
    pub direction: Point,
}

impl Guard {
    pub fn side(&self, p: Point) -> f64 {
        self.direction.cross(p - self.origin)
    }

    /// Principal (major) axis through the centroid of the samples.
    pub fn principal_axis(id: &str, samples: &[Point]) -> Guard {
        let n = samples.len() as f64;
        let c = samples.iter().fold(Point::default(), |a, p| a + *p) / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for p in samples {
            let d = *p - c;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        // leading eigenvector of the 2x2 covariance matrix
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        Guard {
            id: id.into(),
            origin: c,
            direction: Point::new(theta.cos(), theta.sin()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    pub seed: u64,
    /// Fraction of detected self-intersections retained.
    pub sint_retention: f64,
    /// Minimum normal velocity for a valid guard crossing.
    pub guard_min_normal_velocity: f64,
    /// Minimum samples between accepted crossings of one guard.
    pub guard_min_separation: usize,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            seed: 0,
            sint_retention: 0.1,
            guard_min_normal_velocity: 1e-4,
            guard_min_separation: 5,
        }
    }
}

/// Distinct self-intersection points of the polyline, with the time of
/// the earlier participating segment. Adjacent segments (including the
/// wrap-around pair of a closed polyline) are excluded.
pub fn self_intersections(samples: &[Point]) -> Vec<(Point, f64)> {
    if samples.len() < 4 {
        return Vec::new();
    }
    let m = samples.len() - 1;
    let n = m as f64;
    let closed = samples[0].dist(samples[m]) < 1e-9;
    let mut found: Vec<(Point, f64)> = Vec::new();
    for i in 0..m {
        for j in (i + 2)..m {
            if closed && i == 0 && j == m - 1 {
                continue;
            }
            if let Some(p) =
                segment_intersection(samples[i], samples[i + 1], samples[j], samples[j + 1])
            {
                if !found.iter().any(|(q, _)| q.dist(p) < 1e-9) {
                    found.push((p, i as f64 / n));
                }
            }
        }
    }
    found
}

pub fn detect_events(
    traj: &Trajectory,
    px: &KinematicProxies,
    regions: &[Region],
    guards: &[Guard],
    cfg: &EventConfig,
) -> Vec<Event> {
    let samples = &traj.samples;
    let n = (samples.len() - 1).max(1) as f64;
    let t_of = |i: usize| i as f64 / n;
    let mut events: Vec<Event> = Vec::new();

    let sig = QualSignature::from_proxies(px);
    let closed = samples[0].dist(samples[samples.len() - 1]) < 1e-9;

    // hysteretic sign flips; closed curves also compare the wrap-around
    // pair (last nonzero sign vs first nonzero sign), stamped at t = 0
    let mut push_flips = |signs: &[i8], kind: EventKind| {
        for i in 1..signs.len() {
            let (a, b) = (signs[i - 1], signs[i]);
            if a != 0 && b != 0 && a != b {
                events.push(Event {
                    kind,
                    t: t_of(i),
                    payload: None,
                });
            }
        }
        if closed {
            let first = signs.iter().find(|&&s| s != 0);
            let last = signs.iter().rev().find(|&&s| s != 0);
            if let (Some(&f), Some(&l)) = (first, last) {
                if f != l {
                    events.push(Event {
                        kind,
                        t: 0.0,
                        payload: None,
                    });
                }
            }
        }
    };

    // INF: curvature sign flips; EX_x / EX_y: monotonicity sign changes
    push_flips(&sig.curvature_sign, EventKind::Inf);
    push_flips(&sig.mono_x, EventKind::ExX);
    push_flips(&sig.mono_y, EventKind::ExY);

    // SINT: deterministic down-sampling to the retention fraction,
    // every ⌈1/rate⌉-th intersection starting from a seeded offset
    let mut crossings = self_intersections(samples);
    crossings.sort_by(|a, b| a.1.total_cmp(&b.1));
    if !crossings.is_empty() {
        let stride = (1.0 / cfg.sint_retention).ceil() as usize;
        let offset = (cfg.seed as usize % stride) % crossings.len();
        let mut idx = offset;
        while idx < crossings.len() {
            events.push(Event {
                kind: EventKind::Sint,
                t: crossings[idx].1,
                payload: None,
            });
            idx += stride;
        }
    }

    // region relations
    for region in regions {
        let mut prev_inside = region.contains(samples[0]);
        if prev_inside {
            events.push(Event {
                kind: EventKind::RegionIn,
                t: 0.0,
                payload: Some(region.id.clone()),
            });
        }
        for i in 1..samples.len() {
            let inside = region.contains(samples[i]);
            if inside != prev_inside {
                events.push(Event {
                    kind: if inside {
                        EventKind::RegionIn
                    } else {
                        EventKind::RegionOut
                    },
                    t: t_of(i),
                    payload: Some(region.id.clone()),
                });
            } else if !inside && crosses_region(samples[i - 1], samples[i], region) {
                // pass-through without landing inside
                events.push(Event {
                    kind: EventKind::RegionCross,
                    t: t_of(i),
                    payload: Some(region.id.clone()),
                });
            }
            prev_inside = inside;
        }
    }

    // guard crossings, validated by normal velocity and separation
    for guard in guards {
        let nhat = guard.direction.perp() / guard.direction.norm();
        let mut last_accepted: Option<usize> = None;
        for i in 1..samples.len() {
            let s0 = guard.side(samples[i - 1]);
            let s1 = guard.side(samples[i]);
            if s0 == 0.0 || s0.signum() == s1.signum() {
                continue;
            }
            let normal_vel = px.velocities[i].dot(nhat).abs();
            if normal_vel < cfg.guard_min_normal_velocity {
                continue;
            }
            if let Some(last) = last_accepted {
                if i - last < cfg.guard_min_separation {
                    continue;
                }
            }
            last_accepted = Some(i);
            events.push(Event {
                kind: EventKind::GuardCross,
                t: t_of(i),
                payload: Some(guard.id.clone()),
            });
        }
    }

    events.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.kind.cmp(&b.kind))
            .then(a.payload.cmp(&b.payload))
    });
    events
}

fn crosses_region(a: Point, b: Point, region: &Region) -> bool {
    let corners = [
        region.min,
        Point::new(region.max.x, region.min.y),
        region.max,
        Point::new(region.min.x, region.max.y),
    ];
    (0..4).any(|k| segment_intersection(a, b, corners[k], corners[(k + 1) % 4]).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::proxies::proxies;
    use crate::targets::{generate, ShapeKind, TargetShape};

    fn circle_traj(n: usize) -> Trajectory {
        generate(&TargetShape {
            kind: ShapeKind::Circle {
                center: Point::new(0.0, 0.0),
                radius: 3.0,
            },
            n_points: n,
        })
        .unwrap()
    }

    #[test]
    fn circle_has_no_inflections_and_two_extrema_each() {
        let traj = circle_traj(200);
        let px = proxies(&traj, 1.0).unwrap();
        let events = detect_events(&traj, &px, &[], &[], &EventConfig::default());
        let count = |k: EventKind| events.iter().filter(|e| e.kind == k).count();
        assert_eq!(count(EventKind::Inf), 0);
        assert_eq!(count(EventKind::ExX), 2);
        assert_eq!(count(EventKind::ExY), 2);
    }

    #[test]
    fn lemniscate_has_sint_and_inflections() {
        let traj = generate(&TargetShape {
            kind: ShapeKind::Lemniscate {
                center: Point::new(0.0, 0.0),
                a: 4.0,
            },
            n_points: 128,
        })
        .unwrap();
        let px = proxies(&traj, 1.0).unwrap();
        for seed in [0, 1, 7, 13] {
            let cfg = EventConfig {
                seed,
                ..EventConfig::default()
            };
            let events = detect_events(&traj, &px, &[], &[], &cfg);
            assert!(events.iter().filter(|e| e.kind == EventKind::Sint).count() >= 1);
            assert!(events.iter().filter(|e| e.kind == EventKind::Inf).count() >= 2);
        }
    }

    #[test]
    fn fully_inside_region_gives_single_region_in_at_zero() {
        let traj = circle_traj(100);
        let px = proxies(&traj, 1.0).unwrap();
        let region = Region::from_trajectory("R_in", &traj.samples, 0.05);
        let events = detect_events(&traj, &px, &[region], &[], &EventConfig::default());
        let region_events: Vec<&Event> = events
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    EventKind::RegionIn | EventKind::RegionOut | EventKind::RegionCross
                )
            })
            .collect();
        assert_eq!(region_events.len(), 1);
        assert_eq!(region_events[0].kind, EventKind::RegionIn);
        assert_eq!(region_events[0].t, 0.0);
    }

    #[test]
    fn guard_crossings_respect_velocity_and_separation() {
        let traj = circle_traj(100);
        let px = proxies(&traj, 1.0).unwrap();
        let guard = Guard {
            id: "L_0".into(),
            origin: Point::new(0.0, 0.0),
            direction: Point::new(1.0, 0.0),
        };
        let events = detect_events(&traj, &px, &[], &[guard], &EventConfig::default());
        let crossings: Vec<&Event> = events
            .iter()
            .filter(|e| e.kind == EventKind::GuardCross)
            .collect();
        assert_eq!(crossings.len(), 2); // circle crosses the x-axis twice
        for e in &crossings {
            assert_eq!(e.payload.as_deref(), Some("L_0"));
        }
    }

    #[test]
    fn events_are_sorted_and_in_unit_interval() {
        let traj = generate(&TargetShape {
            kind: ShapeKind::Lemniscate {
                center: Point::new(5.0, 5.0),
                a: 4.0,
            },
            n_points: 96,
        })
        .unwrap();
        let px = proxies(&traj, 1.0).unwrap();
        let region = Region::from_trajectory("R_in", &traj.samples, 0.05);
        let guard = Guard::principal_axis("L_0", &traj.samples);
        let events = detect_events(&traj, &px, &[region], &[guard], &EventConfig::default());
        for w in events.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
        for e in &events {
            assert!((0.0..=1.0).contains(&e.t));
        }
    }
}
