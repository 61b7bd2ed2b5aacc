//! The four pipeline roles and the iterative topology refinement loop.

use super::backends::{extract_json_object, AgentBackend, AgentError, AgentRole};
use crate::lifting::{lift, LiftConfig, RepresentationBundle};
use crate::linkage::{semantic_success, simulate, Linkage, SimulationResult};
use crate::optimizers::{
    default_param_space, grid_search, pso, OptimizationResult, OptimizerBudget, OptimizerKind,
    PENALTY,
};
use crate::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

const TOPOLOGY_TEMPLATE: &str = include_str!("../../assets/prompts/topology.txt");
const CRITIC_TEMPLATE: &str = include_str!("../../assets/prompts/critic.txt");
const PLANNER_TEMPLATE: &str = include_str!("../../assets/prompts/planner.txt");
const REFINER_TEMPLATE: &str = include_str!("../../assets/prompts/refiner.txt");

/// The JSON wire contract quoted inside prompts.
pub const JSON_CONTRACT: &str = r#"{"name": <string>, "target": <joint id>, "joints": [
  {"id": <string>, "kind": "fixed", "x": <number>, "y": <number>},
  {"id": <string>, "kind": "crank", "anchor": <joint id>, "radius": <number>, "initial_angle": <number>},
  {"id": <string>, "kind": "revolute", "parent0": <joint id>, "parent1": <joint id>,
   "dist0": <number>, "dist1": <number>, "branch": "Positive"|"Negative"}
]}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureMode {
    Overconstraint,
    Underconstraint,
    KinematicInaccuracy,
    PathDeviation,
    PathMisalignment,
    None,
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailureMode::Overconstraint => "Overconstraint",
            FailureMode::Underconstraint => "Underconstraint",
            FailureMode::KinematicInaccuracy => "KinematicInaccuracy",
            FailureMode::PathDeviation => "PathDeviation",
            FailureMode::PathMisalignment => "PathMisalignment",
            FailureMode::None => "None",
        };
        f.write_str(s)
    }
}

impl FromStr for FailureMode {
    type Err = ();

    fn from_str(s: &str) -> Result<FailureMode, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "overconstraint" => Ok(FailureMode::Overconstraint),
            "underconstraint" => Ok(FailureMode::Underconstraint),
            "kinematicinaccuracy" => Ok(FailureMode::KinematicInaccuracy),
            "pathdeviation" => Ok(FailureMode::PathDeviation),
            "pathmisalignment" => Ok(FailureMode::PathMisalignment),
            "none" => Ok(FailureMode::None),
            _ => Err(()),
        }
    }
}

/// Canonical corrective action template per failure mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureModeTable {
    pub actions: BTreeMap<FailureMode, String>,
}

impl Default for FailureModeTable {
    fn default() -> Self {
        let mut actions = BTreeMap::new();
        actions.insert(
            FailureMode::Overconstraint,
            "remove a redundant link".to_string(),
        );
        actions.insert(FailureMode::Underconstraint, "add a loop".to_string());
        actions.insert(
            FailureMode::KinematicInaccuracy,
            "adjust link lengths".to_string(),
        );
        actions.insert(
            FailureMode::PathDeviation,
            "reposition the ground pivots".to_string(),
        );
        actions.insert(
            FailureMode::PathMisalignment,
            "shift or rotate the mechanism frame".to_string(),
        );
        FailureModeTable { actions }
    }
}

impl FailureModeTable {
    pub fn canonical(&self, mode: FailureMode) -> Option<&str> {
        self.actions.get(&mode).map(String::as_str)
    }

    /// Is the action in the canonical family for the mode?
    pub fn matches_family(&self, mode: FailureMode, action: &str) -> bool {
        match self.canonical(mode) {
            Some(template) => action.to_ascii_lowercase().contains(&template.to_ascii_lowercase()),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementPlan {
    pub failure_mode: FailureMode,
    pub structural_cause: String,
    pub suggested_action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticReport {
    pub kinematic_accuracy: String,
    pub mobility_dof: String,
    pub compositionality: String,
    pub recommendation: String,
}

impl CriticReport {
    pub fn as_text(&self) -> String {
        format!(
            "Kinematic Accuracy: {}\nMobility/DOF: {}\nCompositionality: {}\nRecommendation: {}",
            self.kinematic_accuracy,
            self.mobility_dof,
            self.compositionality,
            self.recommendation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub intent: String,
    pub linkage_json: String,
    pub best_score: f64,
}

/// Bounded, append-only exemplar store for analogical transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarMemory {
    pub capacity: usize,
    pub items: Vec<Exemplar>,
}

impl ExemplarMemory {
    pub fn new(capacity: usize) -> ExemplarMemory {
        ExemplarMemory {
            capacity,
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, exemplar: Exemplar) {
        if self.items.len() == self.capacity {
            self.items.remove(0);
        }
        self.items.push(exemplar);
    }

    fn prompt_section(&self) -> String {
        if self.items.is_empty() {
            return "(none)".into();
        }
        self.items
            .iter()
            .map(|e| format!("- intent: {} score: {:.6}\n  {}", e.intent, e.best_score, e.linkage_json))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone)]
pub struct Proposal {
    pub linkage: Linkage,
    pub params: Vec<f64>,
    pub rationale: String,
    pub attempts: usize,
    pub parse_failures: usize,
}

/// Ask the backend for a topology; retry up to `candidates` attempts on
/// parse or validation failure. Parse failures are reported in the
/// proposal for semantic-success accounting.
pub fn topology_agent(
    intent: &str,
    target_desc: &str,
    memory: &ExemplarMemory,
    backend: &dyn AgentBackend,
    candidates: usize,
) -> Result<Proposal, AgentError> {
    let prompt = TOPOLOGY_TEMPLATE
        .replace("{intent}", intent)
        .replace("{target}", target_desc)
        .replace("{contract}", JSON_CONTRACT)
        .replace("{exemplars}", &memory.prompt_section());

    let mut parse_failures = 0;
    for attempt in 1..=candidates.max(1) {
        let response = backend.complete(AgentRole::Topology, &prompt)?;
        match parse_linkage(&response) {
            Ok(linkage) => {
                let space = default_param_space(&linkage);
                let params = space
                    .extract(&linkage)
                    .map_err(|e| AgentError::Parse {
                        role: AgentRole::Topology,
                        detail: e.to_string(),
                    })?;
                let rationale = response
                    [..response.find('{').unwrap_or(response.len())]
                    .trim()
                    .to_string();
                return Ok(Proposal {
                    linkage,
                    params,
                    rationale,
                    attempts: attempt,
                    parse_failures,
                });
            }
            Err(_) => parse_failures += 1,
        }
    }
    Err(AgentError::RetriesExhausted {
        role: AgentRole::Topology,
        attempts: candidates.max(1),
    })
}

fn parse_linkage(response: &str) -> Result<Linkage, String> {
    let json = extract_json_object(response).ok_or("no JSON object in response")?;
    let linkage: Linkage = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let diagnostics = linkage.validate();
    if !diagnostics.is_empty() {
        return Err(format!("invalid linkage: {}", diagnostics[0].message));
    }
    Ok(linkage)
}

/// Assemble the four-block report. All numbers are injected verbatim by
/// this pipeline from the metrics/simulation values; the backend only
/// contributes prose for the Recommendation block.
pub fn critic(
    linkage: &Linkage,
    chamfer: Option<f64>,
    sim: &SimulationResult,
    bundle: Option<&RepresentationBundle>,
    backend: &dyn AgentBackend,
) -> Result<CriticReport, AgentError> {
    let kinematic_accuracy = match chamfer {
        Some(cd) => format!("chamfer distance after ICP alignment: {cd}"),
        None => "no trajectory available; chamfer not computable".to_string(),
    };

    let mut mobility_dof = format!(
        "links={} joints={} dof={} buildable={}",
        sim.n_links, sim.n_joints, sim.dof, sim.buildable
    );
    if !sim.buildable {
        let detail = sim
            .diagnostics
            .first()
            .map(|d| d.message.clone())
            .unwrap_or_else(|| "unspecified infeasibility".into());
        mobility_dof.push_str(&format!("; infeasibility: {detail}"));
    }

    let compositionality = match bundle {
        Some(b) => match &b.cl {
            Some(cl) => format!(
                "spec: {} (events={}, primitives={}, tokens={})",
                cl.spec,
                cl.events.len(),
                cl.primitives.len(),
                b.tokens.total
            ),
            None => "temporal specification absent from the bundle".to_string(),
        },
        None => "no representation bundle (lifting unavailable)".to_string(),
    };

    let evidence = format!(
        "target joint: {}\n{kinematic_accuracy}\n{mobility_dof}\n{compositionality}",
        linkage.target
    );
    let prompt = CRITIC_TEMPLATE.replace("{evidence}", &evidence).replace(
        "{bundle}",
        &bundle.map(|b| b.prompt_text()).unwrap_or_default(),
    );
    let prose = backend.complete(AgentRole::Critic, &prompt)?;

    let mut recommendation = prose.trim().to_string();
    if !sim.buildable {
        let detail = sim
            .diagnostics
            .first()
            .map(|d| d.message.clone())
            .unwrap_or_default();
        recommendation = format!("{recommendation} (see infeasibility: {detail})");
    }

    Ok(CriticReport {
        kinematic_accuracy,
        mobility_dof,
        compositionality,
        recommendation,
    })
}

/// Parse the planner's strict three-line response. An unrecognized
/// failure mode is an error, never a silent default; an action outside
/// the canonical family is replaced by the table's template
/// (minimal-change heuristic).
pub fn plan(
    report: &CriticReport,
    table: &FailureModeTable,
    backend: &dyn AgentBackend,
) -> Result<RefinementPlan, AgentError> {
    let prompt = PLANNER_TEMPLATE.replace("{report}", &report.as_text());
    let response = backend.complete(AgentRole::Planner, &prompt)?;

    let field = |key: &str| -> Option<String> {
        response.lines().find_map(|l| {
            l.trim()
                .strip_prefix(key)
                .map(|rest| rest.trim_start_matches(':').trim().to_string())
        })
    };

    let mode_text = field("failure_mode").ok_or_else(|| AgentError::Parse {
        role: AgentRole::Planner,
        detail: "missing failure_mode line".into(),
    })?;
    let failure_mode = FailureMode::from_str(&mode_text).map_err(|_| AgentError::Parse {
        role: AgentRole::Planner,
        detail: format!("unrecognized failure mode `{mode_text}`"),
    })?;

    let structural_cause = field("structural_cause").unwrap_or_default();
    let mut suggested_action = field("suggested_action").unwrap_or_default();
    if !table.matches_family(failure_mode, &suggested_action) {
        if let Some(canonical) = table.canonical(failure_mode) {
            suggested_action = canonical.to_string();
        }
    }

    Ok(RefinementPlan {
        failure_mode,
        structural_cause,
        suggested_action,
    })
}

/// Apply the plan via the backend and enforce validity plus DOF parity:
/// structural failure modes must restore mobility one. Non-compliant
/// edits are rejected and retried up to `candidates` attempts.
pub fn refine(
    linkage: &Linkage,
    plan: &RefinementPlan,
    bundle: Option<&RepresentationBundle>,
    backend: &dyn AgentBackend,
    candidates: usize,
) -> Result<(Linkage, Vec<f64>), AgentError> {
    let prompt = REFINER_TEMPLATE
        .replace(
            "{linkage}",
            &serde_json::to_string(linkage).expect("linkage serializes"),
        )
        .replace("{failure_mode}", &plan.failure_mode.to_string())
        .replace("{cause}", &plan.structural_cause)
        .replace("{action}", &plan.suggested_action)
        .replace(
            "{bundle}",
            &bundle.map(|b| b.prompt_text()).unwrap_or_default(),
        )
        .replace("{contract}", JSON_CONTRACT);

    for _ in 1..=candidates.max(1) {
        let response = backend.complete(AgentRole::Refiner, &prompt)?;
        let edited = match parse_linkage(&response) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let needs_parity = matches!(
            plan.failure_mode,
            FailureMode::Overconstraint | FailureMode::Underconstraint
        );
        if needs_parity && edited.dof().map(|d| d != 1).unwrap_or(true) {
            continue;
        }
        let space = default_param_space(&edited);
        if let Ok(params) = space.extract(&edited) {
            return Ok((edited, params));
        }
    }
    Err(AgentError::RetriesExhausted {
        role: AgentRole::Refiner,
        attempts: candidates.max(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub r_max: usize,
    pub epsilon: f64,
    /// Retry budget at proposal and at refinement.
    pub candidates: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub budget: OptimizerBudget,
    pub optimizer: OptimizerKind,
    /// Representation channels handed to the lifting operator.
    pub dr: bool,
    pub cl: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            r_max: 10,
            epsilon: 0.005,
            candidates: 3,
            n_steps: 64,
            seed: 0,
            budget: OptimizerBudget::MEDIUM,
            optimizer: OptimizerKind::Pso,
            dr: true,
            cl: true,
        }
    }
}

/// One line of the episode audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub linkage: Linkage,
    pub chamfer: f64,
    pub accepted: bool,
    pub incumbent_chamfer: f64,
    pub semantic_success: bool,
    pub report: Option<CriticReport>,
    pub plan: Option<RefinementPlan>,
    pub spec_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHistory {
    pub intent: String,
    pub records: Vec<IterationRecord>,
    pub best: Option<Linkage>,
    pub best_chamfer: f64,
    pub parse_attempts: usize,
    pub parse_failures: usize,
    pub aborted: Option<String>,
}

impl EpisodeHistory {
    fn new(intent: &str) -> EpisodeHistory {
        EpisodeHistory {
            intent: intent.into(),
            records: Vec::new(),
            best: None,
            best_chamfer: f64::INFINITY,
            parse_attempts: 0,
            parse_failures: 0,
            aborted: None,
        }
    }

    /// One JSON object per iteration record.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes"))
            .map(|l| l + "\n")
            .collect()
    }
}

fn optimize(linkage: &Linkage, target: &Trajectory, cfg: &LoopConfig, seed: u64) -> OptimizationResult {
    let space = default_param_space(linkage);
    match cfg.optimizer {
        OptimizerKind::Pso => pso(linkage, &space, target, cfg.budget, seed, cfg.n_steps),
        OptimizerKind::Grid => {
            grid_search(linkage, &space, target, cfg.budget.population, cfg.n_steps)
        }
    }
    .expect("non-empty space and budget")
}

/// Iterative topology refinement: propose, optimize, and then critique /
/// plan / refine until convergence (score ≤ ε) or `r_max` rounds. An
/// iteration is accepted only if its optimized score beats the
/// incumbent, making the incumbent sequence non-increasing. Transport
/// failures abort the episode with the partial history preserved.
pub fn refinement_loop(
    intent: &str,
    target_desc: &str,
    target: &Trajectory,
    cfg: &LoopConfig,
    backend: &dyn AgentBackend,
    memory: &mut ExemplarMemory,
) -> EpisodeHistory {
    let mut history = EpisodeHistory::new(intent);
    let table = FailureModeTable::default();

    let proposal = match topology_agent(intent, target_desc, memory, backend, cfg.candidates) {
        Ok(p) => p,
        Err(e) => {
            history.aborted = Some(e.to_string());
            return history;
        }
    };
    history.parse_attempts += proposal.attempts;
    history.parse_failures += proposal.parse_failures;

    let mut incumbent = optimize(&proposal.linkage, target, cfg, cfg.seed);
    let sim0 = simulate(&incumbent.best, cfg.n_steps).ok();
    history.records.push(IterationRecord {
        iteration: 0,
        linkage: incumbent.best.clone(),
        chamfer: incumbent.chamfer,
        accepted: true,
        incumbent_chamfer: incumbent.chamfer,
        semantic_success: semantic_success(true, sim0.as_ref()),
        report: None,
        plan: None,
        spec_text: None,
    });

    'rounds: for round in 1..=cfg.r_max {
        if incumbent.chamfer <= cfg.epsilon {
            break;
        }
        let step = (|| -> Result<IterationRecord, AgentError> {
            let sim = simulate(&incumbent.best, cfg.n_steps).map_err(|e| AgentError::Parse {
                role: AgentRole::Critic,
                detail: e.to_string(),
            })?;
            let bundle = lift(
                &sim,
                &incumbent.best.target,
                &LiftConfig {
                    seed: cfg.seed,
                    dr: cfg.dr,
                    cl: cfg.cl,
                    ..LiftConfig::default()
                },
            )
            .ok();

            let chamfer_evidence =
                (incumbent.chamfer < PENALTY).then_some(incumbent.chamfer);
            let report = critic(
                &incumbent.best,
                chamfer_evidence,
                &sim,
                bundle.as_ref(),
                backend,
            )?;
            let refinement_plan = plan(&report, &table, backend)?;
            let (edited, _) = refine(
                &incumbent.best,
                &refinement_plan,
                bundle.as_ref(),
                backend,
                cfg.candidates,
            )?;

            // an edit that changes nothing cannot beat the incumbent;
            // skip the redundant re-optimization
            let optimized = if edited == incumbent.best {
                incumbent.clone()
            } else {
                optimize(&edited, target, cfg, cfg.seed.wrapping_add(round as u64))
            };
            let accepted = optimized.chamfer < incumbent.chamfer;
            let sim_edited = simulate(&optimized.best, cfg.n_steps).ok();
            let record = IterationRecord {
                iteration: round,
                linkage: optimized.best.clone(),
                chamfer: optimized.chamfer,
                accepted,
                incumbent_chamfer: if accepted {
                    optimized.chamfer
                } else {
                    incumbent.chamfer
                },
                semantic_success: semantic_success(true, sim_edited.as_ref()),
                report: Some(report),
                plan: Some(refinement_plan),
                spec_text: bundle
                    .as_ref()
                    .and_then(|b| b.cl.as_ref())
                    .map(|cl| cl.spec.to_string()),
            };
            if accepted {
                incumbent = optimized;
            }
            Ok(record)
        })();

        match step {
            Ok(record) => history.records.push(record),
            Err(e) => {
                history.aborted = Some(e.to_string());
                break 'rounds;
            }
        }
    }

    history.best_chamfer = incumbent.chamfer;
    history.best = Some(incumbent.best.clone());
    if incumbent.chamfer < PENALTY {
        memory.push(Exemplar {
            intent: intent.into(),
            linkage_json: serde_json::to_string(&incumbent.best).expect("linkage serializes"),
            best_score: incumbent.chamfer,
        });
    }
    history
}
