//! The symbolic lifting operator: trajectory + simulator diagnostics →
//! representation bundle (tokens, sketches, events, temporal spec).

mod bundle;
mod events;
mod proxies;
mod segment;
mod temporal;

pub use bundle::{lift, ClBlock, DrBlock, LiftConfig, RepresentationBundle, Structural, Tokens};
pub use events::{
    detect_events, self_intersections, Event, EventConfig, EventKind, Guard, Region,
};
pub use proxies::{hysteretic_sign, proxies, KinematicProxies, LiftingError, QualSignature};
pub use segment::{segment_dr, MotionLabel, Segment, SegmentConfig, SegmentStats};
pub use temporal::{
    compose_sketch, evaluate, synthesize_spec, Atom, FeaturePrimitive, SpecConfig,
    TemporalFormula, Trace,
};

/// Hysteresis margin for curvature sign extraction.
pub const CURVATURE_MARGIN: f64 = 1e-3;
/// Hysteresis margin for velocity monotonicity components.
pub const MONOTONICITY_MARGIN: f64 = 1e-4;
