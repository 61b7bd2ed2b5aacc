//! Assembly of the full representation bundle handed to the agents:
//! structural summary, DR motion segments, and CL feature primitives
//! with a synthesized temporal sketch.

use super::events::{detect_events, Event, EventConfig, Guard, Region};
use super::proxies::{proxies, KinematicProxies, LiftingError};
use super::segment::{segment_dr, Segment, SegmentConfig, SegmentStats};
use super::temporal::{
    compose_sketch, synthesize_spec, FeaturePrimitive, SpecConfig, TemporalFormula, Trace,
};
use crate::linkage::SimulationResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftConfig {
    /// Emit the DR (discrete motion-label) block.
    pub dr: bool,
    /// Emit the CL (feature-primitive + temporal sketch) block.
    pub cl: bool,
    pub seed: u64,
    pub segment: SegmentConfig,
    pub events: EventConfig,
    /// Region padding as a fraction of the bounding-box diagonal.
    pub region_pad: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig {
            dr: true,
            cl: true,
            seed: 0,
            segment: SegmentConfig::default(),
            events: EventConfig::default(),
            region_pad: 0.05,
        }
    }
}

/// Topology summary taken from the simulation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structural {
    pub n_links: usize,
    pub n_joints: usize,
    pub dof: i64,
    pub buildable: bool,
    pub end_effector: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrBlock {
    pub segments: Vec<Segment>,
    pub stats: SegmentStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClBlock {
    pub region: Region,
    pub guard: Guard,
    pub events: Vec<Event>,
    pub primitives: Vec<FeaturePrimitive>,
    pub spec: TemporalFormula,
}

/// Whitespace-token counts of the serialized blocks; used to report
/// representation size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokens {
    pub structural: usize,
    pub dr: usize,
    pub cl: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationBundle {
    pub structural: Structural,
    pub dr: Option<DrBlock>,
    pub cl: Option<ClBlock>,
    pub tokens: Tokens,
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

impl RepresentationBundle {
    /// Deterministic plain-text serialization injected into prompts.
    pub fn prompt_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.structural_text());
        if let Some(dr) = &self.dr {
            out.push('\n');
            out.push_str(&dr_text(dr));
        }
        if let Some(cl) = &self.cl {
            out.push('\n');
            out.push_str(&cl_text(cl));
        }
        out
    }

    fn structural_text(&self) -> String {
        let s = &self.structural;
        format!(
            "STRUCTURAL: links={} joints={} dof={} buildable={} end_effector={}\n",
            s.n_links, s.n_joints, s.dof, s.buildable, s.end_effector
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// Trace of the lifted trajectory for evaluating the CL sketch.
    pub fn trace(&self, px: &KinematicProxies, samples_inside: &[bool]) -> Trace {
        let mut membership = BTreeMap::new();
        if let Some(cl) = &self.cl {
            membership.insert(cl.region.id.clone(), samples_inside.to_vec());
        }
        let events: &[Event] = self.cl.as_ref().map(|c| c.events.as_slice()).unwrap_or(&[]);
        Trace::from_lift(px, events, &membership)
    }
}

fn dr_text(dr: &DrBlock) -> String {
    let mut out = String::from("DR:");
    for seg in &dr.segments {
        out.push_str(&format!(
            " {}[{}..{}]",
            seg.label, seg.start, seg.end
        ));
    }
    out.push('\n');
    out.push_str(&format!(
        "DR-STATS: runs={} mean_run={:.2} entropy={:.3}\n",
        dr.segments.len(),
        dr.stats.mean_run_length,
        dr.stats.entropy
    ));
    out
}

fn cl_text(cl: &ClBlock) -> String {
    let mut out = String::from("CL:");
    for p in &cl.primitives {
        out.push(' ');
        out.push_str(&p.to_string());
    }
    out.push('\n');
    out.push_str("EVENTS:");
    for e in &cl.events {
        out.push_str(&format!(" {}@{:.3}", e.kind, e.t));
    }
    out.push('\n');
    out.push_str(&format!("SPEC: {}\n", cl.spec));
    out
}

/// Lift the end-effector trajectory of a simulation into a
/// representation bundle per the configured channels.
pub fn lift(
    sim: &SimulationResult,
    end_effector: &str,
    cfg: &LiftConfig,
) -> Result<RepresentationBundle, LiftingError> {
    let traj = sim
        .per_joint
        .get(end_effector)
        .ok_or_else(|| LiftingError::UnknownJoint(end_effector.into()))?;
    let px = proxies(traj, traj.dt)?;

    let structural = Structural {
        n_links: sim.n_links,
        n_joints: sim.n_joints,
        dof: sim.dof,
        buildable: sim.buildable,
        end_effector: end_effector.into(),
    };

    let dr = if cfg.dr {
        let (segments, stats) = segment_dr(traj, &cfg.segment)?;
        Some(DrBlock { segments, stats })
    } else {
        None
    };

    let cl = if cfg.cl {
        let region = Region::from_trajectory("R_in", &traj.samples, cfg.region_pad);
        let guard = Guard::principal_axis("L_0", &traj.samples);
        let ev_cfg = EventConfig {
            seed: cfg.seed,
            ..cfg.events.clone()
        };
        let events = detect_events(
            traj,
            &px,
            std::slice::from_ref(&region),
            std::slice::from_ref(&guard),
            &ev_cfg,
        );
        let primitives = compose_sketch(&px, &events);
        let spec = synthesize_spec(
            &events,
            &SpecConfig {
                region_id: region.id.clone(),
                guard_id: guard.id.clone(),
                n_samples: traj.samples.len().saturating_sub(1).max(1),
                ..SpecConfig::default()
            },
        );
        Some(ClBlock {
            region,
            guard,
            events,
            primitives,
            spec,
        })
    } else {
        None
    };

    let structural_tokens = word_count(&format!(
        "STRUCTURAL: links={} joints={} dof={} buildable={} end_effector={}",
        structural.n_links,
        structural.n_joints,
        structural.dof,
        structural.buildable,
        structural.end_effector
    ));
    let dr_tokens = dr.as_ref().map(|d| word_count(&dr_text(d))).unwrap_or(0);
    let cl_tokens = cl.as_ref().map(|c| word_count(&cl_text(c))).unwrap_or(0);
    let tokens = Tokens {
        structural: structural_tokens,
        dr: dr_tokens,
        cl: cl_tokens,
        total: structural_tokens + dr_tokens + cl_tokens,
    };

    Ok(RepresentationBundle {
        structural,
        dr,
        cl,
        tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::four_bar;
    use crate::linkage::simulate;

    #[test]
    fn lift_four_bar_produces_both_blocks() {
        let sim = simulate(&four_bar(), 180).unwrap();
        let bundle = lift(&sim, "c", &LiftConfig::default()).unwrap();
        assert!(bundle.dr.is_some());
        let cl = bundle.cl.as_ref().unwrap();
        assert!(!cl.primitives.is_empty());
        assert!(cl.spec.to_string().starts_with("G_[0.000,1.000](in(R_in))"));
        assert!(bundle.tokens.total > 0);
        assert_eq!(
            bundle.tokens.total,
            bundle.tokens.structural + bundle.tokens.dr + bundle.tokens.cl
        );
    }

    #[test]
    fn channel_flags_gate_blocks_and_tokens() {
        let sim = simulate(&four_bar(), 120).unwrap();
        let none = lift(
            &sim,
            "c",
            &LiftConfig {
                dr: false,
                cl: false,
                ..LiftConfig::default()
            },
        )
        .unwrap();
        assert!(none.dr.is_none() && none.cl.is_none());
        assert_eq!(none.tokens.dr, 0);
        assert_eq!(none.tokens.cl, 0);

        let full = lift(&sim, "c", &LiftConfig::default()).unwrap();
        assert!(full.tokens.total > none.tokens.total);
    }

    #[test]
    fn unknown_end_effector_is_an_error() {
        let sim = simulate(&four_bar(), 60).unwrap();
        assert!(lift(&sim, "zzz", &LiftConfig::default()).is_err());
    }

    #[test]
    fn prompt_text_and_json_are_deterministic() {
        let sim = simulate(&four_bar(), 90).unwrap();
        let a = lift(&sim, "c", &LiftConfig::default()).unwrap();
        let b = lift(&sim, "c", &LiftConfig::default()).unwrap();
        assert_eq!(a.prompt_text(), b.prompt_text());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.prompt_text().contains("STRUCTURAL:"));
        assert!(a.prompt_text().contains("SPEC:"));
    }
}
