//! Planar linkage synthesis engine.
//!
//! The crate simulates planar pin-jointed mechanisms driven by a single
//! crank, scores their end-effector paths against benchmark target curves
//! (ICP alignment + Chamfer distance), lifts trajectories into symbolic
//! representation bundles (motion labels, geometric events, bounded
//! temporal-logic specs), and closes the loop with a four-role agent
//! pipeline plus classical optimizer baselines (grid, PSO, Enum+GA).

pub mod agents;
pub mod fixtures;
pub mod geom;
pub mod harness;
pub mod lifting;
pub mod linkage;
pub mod metrics;
pub mod optimizers;
pub mod targets;

pub use geom::Point;
pub use linkage::{Joint, JointKind, Linkage, SimulationResult, Trajectory};
