//! The four-role agent pipeline (Topology, Critic, Planner, Refiner)
//! and the closed refinement loop, with pluggable text backends.

mod backends;
mod pipeline;
mod remote;
mod scripted;

pub use backends::{extract_json_object, AgentBackend, AgentError, AgentRole};
pub use pipeline::{
    critic, plan, refine, refinement_loop, topology_agent, CriticReport, EpisodeHistory,
    Exemplar, ExemplarMemory, FailureMode, FailureModeTable, IterationRecord, LoopConfig,
    Proposal, RefinementPlan,
};
pub use remote::RemoteBackend;
pub use scripted::{ScriptedBackend, ScriptedFixture};
