//! Planar linkage representation, validation, Grübler mobility, and
//! one-crank-cycle simulation.
//!
//! A linkage is an ordered list of joints. Fixed joints pin the ground,
//! exactly one crank provides the driving input, and each revolute joint
//! is placed by intersecting circles around two previously solved parents.
//! Declaration order is the solve order, so validation requires every
//! parent to precede its child.

use crate::geom::Point;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Which of the two circle-intersection solutions a revolute joint takes.
///
/// `Positive` is the solution with positive cross product
/// `(parent1 − parent0) × (solution − parent0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JointKind {
    Fixed {
        x: f64,
        y: f64,
    },
    Crank {
        anchor: String,
        radius: f64,
        initial_angle: f64,
    },
    Revolute {
        parent0: String,
        parent1: String,
        dist0: f64,
        dist1: f64,
        branch: Branch,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub id: String,
    #[serde(flatten)]
    pub kind: JointKind,
}

impl Joint {
    pub fn fixed(id: &str, x: f64, y: f64) -> Joint {
        Joint {
            id: id.into(),
            kind: JointKind::Fixed { x, y },
        }
    }

    pub fn crank(id: &str, anchor: &str, radius: f64, initial_angle: f64) -> Joint {
        Joint {
            id: id.into(),
            kind: JointKind::Crank {
                anchor: anchor.into(),
                radius,
                initial_angle,
            },
        }
    }

    pub fn revolute(
        id: &str,
        parent0: &str,
        parent1: &str,
        dist0: f64,
        dist1: f64,
        branch: Branch,
    ) -> Joint {
        Joint {
            id: id.into(),
            kind: JointKind::Revolute {
                parent0: parent0.into(),
                parent1: parent1.into(),
                dist0,
                dist1,
                branch,
            },
        }
    }
}

/// The agents' wire format: `{"name", "target", "joints": [...]}` with
/// kind-specific fields flattened into each joint object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linkage {
    pub name: String,
    pub target: String,
    pub joints: Vec<Joint>,
    /// Free-text design intent; not part of the geometric state.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub intent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Offending joint id, or the linkage name for whole-linkage rules.
    pub joint: String,
    /// Stable machine-readable rule name.
    pub rule: String,
    pub message: String,
}

impl Diagnostic {
    fn new(joint: &str, rule: &str, message: String) -> Diagnostic {
        Diagnostic {
            joint: joint.into(),
            rule: rule.into(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Point>,
    pub dt: f64,
}

impl Trajectory {
    pub fn new(samples: Vec<Point>, dt: f64) -> Trajectory {
        Trajectory { samples, dt }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Structured simulator message; `step` is set for per-step failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMessage {
    pub joint: String,
    pub step: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub per_joint: BTreeMap<String, Trajectory>,
    pub buildable: bool,
    pub diagnostics: Vec<SimMessage>,
    pub dof: i64,
    /// Link count under the bar-extraction rule (see [`Linkage::link_joint_counts`]).
    pub n_links: usize,
    /// Pin-joint count under the same rule.
    pub n_joints: usize,
}

impl SimulationResult {
    pub fn target_trajectory<'a>(&'a self, linkage: &Linkage) -> Option<&'a Trajectory> {
        self.per_joint.get(&linkage.target)
    }
}

#[derive(Debug, Error)]
pub enum LinkageError {
    #[error("linkage failed validation: {0:?}")]
    Invalid(Vec<Diagnostic>),
    #[error("n_steps must be >= 1")]
    BadStepCount,
}

impl Linkage {
    pub fn joint(&self, id: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.id == id)
    }

    /// Check every structural invariant. Empty result means well-formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();

        for (idx, joint) in self.joints.iter().enumerate() {
            if seen.contains_key(joint.id.as_str()) {
                out.push(Diagnostic::new(
                    &joint.id,
                    "duplicate-id",
                    format!("joint id `{}` declared more than once", joint.id),
                ));
            }
            let check_parent = |out: &mut Vec<Diagnostic>, parent: &str| match seen.get(parent) {
                None => out.push(Diagnostic::new(
                    &joint.id,
                    "unknown-reference",
                    format!(
                        "joint `{}` references `{}`, which is not declared earlier",
                        joint.id, parent
                    ),
                )),
                Some(_) => {}
            };
            match &joint.kind {
                JointKind::Fixed { x, y } => {
                    if !x.is_finite() || !y.is_finite() {
                        out.push(Diagnostic::new(
                            &joint.id,
                            "non-finite-coordinate",
                            format!("fixed joint `{}` has non-finite coordinates", joint.id),
                        ));
                    }
                }
                JointKind::Crank { anchor, radius, .. } => {
                    check_parent(&mut out, anchor);
                    if !(*radius > 0.0) {
                        out.push(Diagnostic::new(
                            &joint.id,
                            "nonpositive-length",
                            format!("crank `{}` radius must be > 0, got {radius}", joint.id),
                        ));
                    }
                }
                JointKind::Revolute {
                    parent0,
                    parent1,
                    dist0,
                    dist1,
                    ..
                } => {
                    check_parent(&mut out, parent0);
                    check_parent(&mut out, parent1);
                    if parent0 == parent1 {
                        out.push(Diagnostic::new(
                            &joint.id,
                            "duplicate-parent",
                            format!("revolute `{}` lists the same parent twice", joint.id),
                        ));
                    }
                    for (name, d) in [("dist0", dist0), ("dist1", dist1)] {
                        if !(*d > 0.0) {
                            out.push(Diagnostic::new(
                                &joint.id,
                                "nonpositive-length",
                                format!("revolute `{}` {name} must be > 0, got {d}", joint.id),
                            ));
                        }
                    }
                }
            }
            seen.insert(joint.id.as_str(), idx);
        }

        if !seen.contains_key(self.target.as_str()) {
            out.push(Diagnostic::new(
                &self.target,
                "missing-target",
                format!("target joint `{}` is not declared", self.target),
            ));
        }

        let cranks = self
            .joints
            .iter()
            .filter(|j| matches!(j.kind, JointKind::Crank { .. }))
            .count();
        if cranks != 1 {
            out.push(Diagnostic::new(
                &self.name,
                "crank-count",
                format!("exactly one crank required, found {cranks}"),
            ));
        }

        // Connectivity: all fixed joints are tied together through the
        // ground link; cranks and revolutes attach to their parents.
        if !self.joints.is_empty() {
            let n = self.joints.len();
            let index: HashMap<&str, usize> = self
                .joints
                .iter()
                .enumerate()
                .map(|(i, j)| (j.id.as_str(), i))
                .collect();
            // union-find with an extra node `n` for the ground link
            let mut parent: Vec<usize> = (0..=n).collect();
            fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
                while parent[a] != a {
                    parent[a] = parent[parent[a]];
                    a = parent[a];
                }
                a
            }
            let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
                let (ra, rb) = (find(parent, a), find(parent, b));
                parent[ra] = rb;
            };
            for (i, joint) in self.joints.iter().enumerate() {
                match &joint.kind {
                    JointKind::Fixed { .. } => union(&mut parent, i, n),
                    JointKind::Crank { anchor, .. } => {
                        if let Some(&a) = index.get(anchor.as_str()) {
                            union(&mut parent, i, a);
                        }
                    }
                    JointKind::Revolute {
                        parent0, parent1, ..
                    } => {
                        for p in [parent0, parent1] {
                            if let Some(&a) = index.get(p.as_str()) {
                                union(&mut parent, i, a);
                            }
                        }
                    }
                }
            }
            let root = find(&mut parent, n);
            for (i, joint) in self.joints.iter().enumerate() {
                if find(&mut parent, i) != root {
                    out.push(Diagnostic::new(
                        &joint.id,
                        "disconnected",
                        format!("joint `{}` is not connected to the ground link", joint.id),
                    ));
                }
            }
        }

        out
    }

    /// Link and pin-joint counts for Grübler mobility.
    ///
    /// Links are the ground plus one rigid bar per distance constraint
    /// (one per crank, two per revolute). Pin joints are all declared
    /// joints, ground pins included.
    pub fn link_joint_counts(&self) -> (usize, usize) {
        let bars: usize = self
            .joints
            .iter()
            .map(|j| match j.kind {
                JointKind::Fixed { .. } => 0,
                JointKind::Crank { .. } => 1,
                JointKind::Revolute { .. } => 2,
            })
            .sum();
        (1 + bars, self.joints.len())
    }

    /// Grübler mobility of a validated linkage.
    pub fn dof(&self) -> Result<i64, LinkageError> {
        let diags = self.validate();
        if !diags.is_empty() {
            return Err(LinkageError::Invalid(diags));
        }
        let (n, j) = self.link_joint_counts();
        Ok(gruebler(n, j))
    }
}

/// Grübler mobility formula `F = 3(n − 1) − 2j` for `n` links and `j`
/// lower-pair joints.
pub fn gruebler(n_links: usize, n_joints: usize) -> i64 {
    3 * (n_links as i64 - 1) - 2 * n_joints as i64
}

/// True iff the candidate parsed against the JSON contract and simulated
/// without errors.
pub fn semantic_success(parse_ok: bool, result: Option<&SimulationResult>) -> bool {
    parse_ok && result.map(|r| r.buildable).unwrap_or(false)
}

/// All intersection points of two circles, `Positive` branch first.
///
/// One point is returned for tangency within `1e-9 · max(r0, r1)`;
/// an empty result signals geometric infeasibility.
pub fn circle_intersection(c0: Point, r0: f64, c1: Point, r1: f64) -> Vec<Point> {
    debug_assert!(r0 > 0.0 && r1 > 0.0);
    let d = c0.dist(c1);
    let tol = 1e-9 * r0.max(r1);
    if d > r0 + r1 + tol || d + tol < (r0 - r1).abs() || d < tol {
        return Vec::new();
    }
    let a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let h2 = r0 * r0 - a * a;
    let dir = (c1 - c0) / d;
    let base = c0 + dir * a;
    if (d - (r0 + r1)).abs() <= tol || (d - (r0 - r1).abs()).abs() <= tol || h2 <= 0.0 {
        return vec![base];
    }
    let offset = dir.perp() * h2.sqrt();
    vec![base + offset, base - offset]
}

/// Solve joint positions over one full crank revolution.
///
/// Phases sample `[0, 2π)` uniformly in `n_steps` steps, plus a duplicated
/// closing sample at `2π`, so each trajectory holds `n_steps + 1` points.
pub fn simulate(linkage: &Linkage, n_steps: usize) -> Result<SimulationResult, LinkageError> {
    let diags = linkage.validate();
    if !diags.is_empty() {
        return Err(LinkageError::Invalid(diags));
    }
    if n_steps == 0 {
        return Err(LinkageError::BadStepCount);
    }

    let (n_links, n_joints) = linkage.link_joint_counts();
    let dof = gruebler(n_links, n_joints);

    let mut per_joint: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let mut buildable = true;

    'outer: for step in 0..=n_steps {
        let phase = std::f64::consts::TAU * step as f64 / n_steps as f64;
        let mut positions: HashMap<&str, Point> = HashMap::new();
        for joint in &linkage.joints {
            let pos = match &joint.kind {
                JointKind::Fixed { x, y } => Point::new(*x, *y),
                JointKind::Crank {
                    anchor,
                    radius,
                    initial_angle,
                } => {
                    let a = positions[anchor.as_str()];
                    let theta = initial_angle + phase;
                    a + Point::new(theta.cos(), theta.sin()) * *radius
                }
                JointKind::Revolute {
                    parent0,
                    parent1,
                    dist0,
                    dist1,
                    branch,
                } => {
                    let p0 = positions[parent0.as_str()];
                    let p1 = positions[parent1.as_str()];
                    let candidates = circle_intersection(p0, *dist0, p1, *dist1);
                    let chosen = match candidates.len() {
                        0 => None,
                        1 => Some(candidates[0]),
                        _ => match branch {
                            Branch::Positive => Some(candidates[0]),
                            Branch::Negative => Some(candidates[1]),
                        },
                    };
                    match chosen {
                        Some(p) => p,
                        None => {
                            buildable = false;
                            diagnostics.push(SimMessage {
                                joint: joint.id.clone(),
                                step: Some(step),
                                message: format!(
                                    "revolute `{}` unsolvable at step {step}: parents {:.6} apart \
                                     vs link lengths {dist0}/{dist1}",
                                    joint.id,
                                    p0.dist(p1)
                                ),
                            });
                            break 'outer;
                        }
                    }
                }
            };
            positions.insert(joint.id.as_str(), pos);
        }
        for joint in &linkage.joints {
            per_joint
                .entry(joint.id.clone())
                .or_default()
                .push(positions[joint.id.as_str()]);
        }
    }

    let per_joint = per_joint
        .into_iter()
        .map(|(id, samples)| (id, Trajectory::new(samples, 1.0)))
        .collect();

    Ok(SimulationResult {
        per_joint,
        buildable,
        diagnostics,
        dof,
        n_links,
        n_joints,
    })
}
