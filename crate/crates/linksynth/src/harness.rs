//! Experiment harness: configuration matrix, aggregation (mean ± SE),
//! CSV reporting in the appendix layout, and SVG mechanism rendering.

use crate::agents::{
    refinement_loop, AgentBackend, EpisodeHistory, ExemplarMemory, LoopConfig,
    RemoteBackend, ScriptedBackend, ScriptedFixture,
};
use crate::geom::Point;
use crate::linkage::{simulate, JointKind, Linkage, SimulationResult, Trajectory};
use crate::metrics::improvement_pct;
use crate::optimizers::{
    default_param_space, grid_search, pso, OptimizerBudget, OptimizerKind, PENALTY,
};
use crate::targets::{generate, TargetShape};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config invalid: {0}")]
    BadConfig(String),
    #[error("target generation failed: {0}")]
    Target(#[from] crate::targets::TargetError),
    #[error("cannot render an unbuildable simulation")]
    Unbuildable,
    #[error("baseline must be > 0")]
    ZeroBaseline,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model label reported in the table's first column.
    pub model: String,
    pub shape: TargetShape,
    pub optimizer: OptimizerKind,
    pub planner: bool,
    pub dr: bool,
    pub cl: bool,
    pub backend: BackendKind,
    /// Independent samples per config (seeds `seed + i`).
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_budget")]
    pub budget: OptimizerBudget,
    /// Specified target link count for the Goal-links column.
    #[serde(default = "default_target_links")]
    pub target_links: usize,
}

fn default_r_max() -> usize {
    10
}
fn default_epsilon() -> f64 {
    0.005
}
fn default_n_steps() -> usize {
    64
}
fn default_budget() -> OptimizerBudget {
    OptimizerBudget::MEDIUM
}
fn default_target_links() -> usize {
    4
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples == 0 {
            return Err(HarnessError::BadConfig("samples must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Deterministic slug used in output file names.
    pub fn id(&self) -> String {
        let flag = |b: bool| if b { "on" } else { "off" };
        format!(
            "{}_{}_{}_p{}_dr{}_cl{}",
            self.model.replace([' ', '/'], "-"),
            self.shape.kind.name(),
            self.optimizer.to_string().to_lowercase(),
            flag(self.planner),
            flag(self.dr),
            flag(self.cl)
        )
    }
}

/// Mean and standard error (sample standard deviation over √n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Sample mean ± standard error with ddof = 1; `se = 0` for n < 2.
pub fn mean_se(values: &[f64]) -> Stat {
    let n = values.len();
    if n == 0 {
        return Stat {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Stat { mean, se, n }
}

/// Table 2-style ratios: value / baseline per config.
pub fn normalized_index(values: &[f64], baseline: f64) -> Result<Vec<f64>, HarnessError> {
    if !(baseline > 0.0) {
        return Err(HarnessError::ZeroBaseline);
    }
    Ok(values.iter().map(|v| v / baseline).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub seed: u64,
    pub success: bool,
    pub chamfer: Option<f64>,
    /// Reflection iteration at which the best incumbent was reached.
    pub steps: Option<usize>,
    pub improvement_pct: Option<f64>,
    /// True when the % Imp. denominator is not iteration 1's score.
    pub improvement_denominator_shifted: bool,
    pub links: Option<usize>,
    pub history: EpisodeHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub best_chamfer: Stat,
    pub steps: Stat,
    pub improvement_pct: Stat,
    /// Fraction of samples with semantic success, in percent.
    pub semantic_rate: f64,
    pub links: Stat,
    pub goal_links: Stat,
    pub samples: Vec<SampleOutcome>,
}

fn make_backend(kind: BackendKind) -> Result<Box<dyn AgentBackend>, HarnessError> {
    match kind {
        BackendKind::Scripted => Ok(Box::new(ScriptedBackend::new(ScriptedFixture::Default))),
        BackendKind::Remote => RemoteBackend::from_env()
            .map(|b| Box::new(b) as Box<dyn AgentBackend>)
            .map_err(|e| HarnessError::BadConfig(e.to_string())),
    }
}

fn run_sample(
    config: &ExperimentConfig,
    target: &Trajectory,
    backend: &dyn AgentBackend,
    seed: u64,
) -> SampleOutcome {
    let intent = format!("trace a {} curve", config.shape.kind.name());
    let target_desc = format!(
        "{} sampled at {} points",
        config.shape.kind.name(),
        config.shape.n_points
    );
    let loop_cfg = LoopConfig {
        r_max: if config.planner { config.r_max } else { 0 },
        epsilon: config.epsilon,
        n_steps: config.n_steps,
        seed,
        budget: config.budget,
        optimizer: config.optimizer,
        dr: config.dr,
        cl: config.cl,
        ..LoopConfig::default()
    };

    let mut memory = ExemplarMemory::new(8);
    let history = refinement_loop(&intent, &target_desc, target, &loop_cfg, backend, &mut memory);

    let success = history.aborted.is_none()
        && history.best_chamfer < PENALTY
        && history
            .records
            .iter()
            .any(|r| r.accepted && r.semantic_success);

    let (chamfer, steps, improvement, shifted, links) = if success {
        let best = history.best_chamfer;
        let steps = history
            .records
            .iter()
            .find(|r| r.incumbent_chamfer == best)
            .map(|r| r.iteration)
            .unwrap_or(0);
        // % Imp. denominator: the first buildable iteration's score
        let first_ok = history
            .records
            .iter()
            .find(|r| r.chamfer < PENALTY)
            .map(|r| (r.iteration, r.chamfer));
        let (imp, shifted) = match first_ok {
            Some((it, initial)) if initial > 0.0 => (
                improvement_pct(initial, best).ok(),
                it != 0,
            ),
            _ => (None, true),
        };
        let links = history
            .best
            .as_ref()
            .map(|l| l.link_joint_counts().0);
        (Some(best), Some(steps), imp, shifted, links)
    } else {
        (None, None, None, false, None)
    };

    SampleOutcome {
        seed,
        success,
        chamfer,
        steps,
        improvement_pct: improvement,
        improvement_denominator_shifted: shifted,
        links,
        history,
    }
}

/// Run one config `samples` times with seeds `seed + i`.
pub fn run_config(config: &ExperimentConfig) -> Result<RunRecord, HarnessError> {
    config.validate()?;
    let target = generate(&config.shape)?;
    let backend = make_backend(config.backend)?;

    let samples: Vec<SampleOutcome> = (0..config.samples)
        .map(|i| run_sample(config, &target, backend.as_ref(), config.seed + i as u64))
        .collect();

    let successes: Vec<&SampleOutcome> = samples.iter().filter(|s| s.success).collect();
    let chamfers: Vec<f64> = successes.iter().filter_map(|s| s.chamfer).collect();
    let steps: Vec<f64> = successes
        .iter()
        .filter_map(|s| s.steps.map(|v| v as f64))
        .collect();
    let imps: Vec<f64> = successes.iter().filter_map(|s| s.improvement_pct).collect();
    let links: Vec<f64> = successes
        .iter()
        .filter_map(|s| s.links.map(|v| v as f64))
        .collect();
    let goal_links: Vec<f64> = links
        .iter()
        .map(|l| l - config.target_links as f64)
        .collect();

    Ok(RunRecord {
        config: config.clone(),
        best_chamfer: mean_se(&chamfers),
        steps: mean_se(&steps),
        improvement_pct: mean_se(&imps),
        semantic_rate: 100.0 * successes.len() as f64 / samples.len() as f64,
        links: mean_se(&links),
        goal_links: mean_se(&goal_links),
        samples,
    })
}

/// The appendix table column order.
pub const CSV_COLUMNS: &str =
    "Model,Shape,Opt,Planner,DR,CL,Best chamf.,Steps,% Imp.,% Semantic,Links,Goal links";

fn fmt_stat(stat: &Stat, decimals: usize) -> String {
    if stat.n == 0 {
        return "-".into();
    }
    format!("{:.d$} ± {:.d$}", stat.mean, stat.se, d = decimals)
}

pub fn results_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "# Best chamf., Steps, % Imp., Links, Goal links aggregate successful samples only\n",
    );
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for r in records {
        let c = &r.config;
        let flag = |b: bool| if b { "on" } else { "off" };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.1},{},{}",
            c.model,
            c.shape.kind.name(),
            c.optimizer,
            flag(c.planner),
            flag(c.dr),
            flag(c.cl),
            fmt_stat(&r.best_chamfer, 4),
            fmt_stat(&r.steps, 1),
            fmt_stat(&r.improvement_pct, 1),
            r.semantic_rate,
            fmt_stat(&r.links, 1),
            fmt_stat(&r.goal_links, 1),
        )
        .expect("string write");
    }
    out
}

/// Run every config, write `results.csv`, per-config convergence
/// traces, per-sample episode histories, and mechanism SVGs into
/// `out_dir`. Configs run in a worker pool; files are written by this
/// single thread in config order.
pub fn run_matrix(
    configs: &[ExperimentConfig],
    out_dir: &Path,
) -> Result<Vec<RunRecord>, HarnessError> {
    let records: Vec<Result<RunRecord, HarnessError>> =
        configs.par_iter().map(run_config).collect();
    let records: Vec<RunRecord> = records.into_iter().collect::<Result<_, _>>()?;

    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("results.csv"), results_csv(&records))?;

    for record in &records {
        let id = record.config.id();
        std::fs::write(
            out_dir.join(format!("trace_{id}.csv")),
            trace_csv(record),
        )?;
        for (i, sample) in record.samples.iter().enumerate() {
            std::fs::write(
                out_dir.join(format!("history_{id}_{i}.jsonl")),
                sample.history.to_jsonl(),
            )?;
            if let Some(best) = sample.history.best.as_ref().filter(|_| sample.success) {
                if let Ok(sim) = simulate(best, record.config.n_steps) {
                    if sim.buildable {
                        let target = generate(&record.config.shape)?;
                        let svg = render_mechanism(best, &sim, Some(&target))?;
                        std::fs::write(out_dir.join(format!("mech_{id}_{i}.svg")), svg)?;
                    }
                }
            }
        }
    }
    Ok(records)
}

/// Convergence trace of sample 0: `iteration,best_objective`.
fn trace_csv(record: &RunRecord) -> String {
    let mut out = String::from("iteration,best_objective\n");
    if let Some(sample) = record.samples.first() {
        for r in &sample.history.records {
            writeln!(out, "{},{}", r.iteration, r.incumbent_chamfer).expect("string write");
        }
    }
    out
}

const TRAJ_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Render the mechanism at its first solved phase: thin grey polylines
/// for the rigid bars, thick coloured polylines for joint trajectories
/// (end-effector thickest), target curve overlaid in black.
pub fn render_mechanism(
    linkage: &Linkage,
    sim: &SimulationResult,
    target: Option<&Trajectory>,
) -> Result<String, HarnessError> {
    if !sim.buildable {
        return Err(HarnessError::Unbuildable);
    }
    let pos_at = |id: &str, step: usize| -> Option<Point> {
        sim.per_joint.get(id).and_then(|t| t.samples.get(step)).copied()
    };

    let mut all: Vec<Point> = sim
        .per_joint
        .values()
        .flat_map(|t| t.samples.iter().copied())
        .collect();
    if let Some(t) = target {
        all.extend(t.samples.iter().copied());
    }
    let (mut min, mut max) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in &all {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    let span = (max - min).norm().max(1e-9);
    let pad = 0.05 * span;
    let (w, h) = (max.x - min.x + 2.0 * pad, max.y - min.y + 2.0 * pad);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        min.x - pad,
        -(max.y + pad), // y grows downward in SVG; flip via negation
        w,
        h
    )
    .expect("string write");

    let line = |svg: &mut String, a: Point, b: Point, class: &str, stroke: &str, width: f64| {
        writeln!(
            svg,
            r#"<line class="{class}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{stroke}" stroke-width="{width:.3}"/>"#,
            a.x, -a.y, b.x, -b.y
        )
        .expect("string write");
    };
    let bar_width = 0.004 * span;

    // rigid bars at phase 0
    for joint in &linkage.joints {
        match &joint.kind {
            JointKind::Crank { anchor, .. } => {
                if let (Some(a), Some(b)) = (pos_at(anchor, 0), pos_at(&joint.id, 0)) {
                    line(&mut svg, a, b, "bar", "#555555", bar_width);
                }
            }
            JointKind::Revolute {
                parent0, parent1, ..
            } => {
                if let Some(j) = pos_at(&joint.id, 0) {
                    for parent in [parent0, parent1] {
                        if let Some(p) = pos_at(parent, 0) {
                            line(&mut svg, p, j, "bar", "#555555", bar_width);
                        }
                    }
                }
            }
            JointKind::Fixed { .. } => {}
        }
    }
    // the ground link connecting consecutive ground pins
    let fixed: Vec<Point> = linkage
        .joints
        .iter()
        .filter(|j| matches!(j.kind, JointKind::Fixed { .. }))
        .filter_map(|j| pos_at(&j.id, 0))
        .collect();
    for pair in fixed.windows(2) {
        line(&mut svg, pair[0], pair[1], "bar", "#555555", bar_width);
    }

    // joint trajectories, end-effector last and thickest
    let polyline = |svg: &mut String, samples: &[Point], class: &str, stroke: &str, width: f64| {
        let points: Vec<String> = samples
            .iter()
            .map(|p| format!("{:.3},{:.3}", p.x, -p.y))
            .collect();
        writeln!(
            svg,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="{width:.3}"/>"#,
            points.join(" ")
        )
        .expect("string write");
    };
    let mut color = 0usize;
    for (id, traj) in &sim.per_joint {
        if *id == linkage.target {
            continue;
        }
        polyline(
            &mut svg,
            &traj.samples,
            "traj",
            TRAJ_COLORS[color % TRAJ_COLORS.len()],
            0.012 * span,
        );
        color += 1;
    }
    if let Some(traj) = sim.per_joint.get(&linkage.target) {
        polyline(&mut svg, &traj.samples, "traj end-effector", "#e31a1c", 0.02 * span);
    }
    if let Some(t) = target {
        polyline(&mut svg, &t.samples, "target", "#000000", 0.008 * span);
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Parse a declarative JSON list of configs.
pub fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::BadConfig(e.to_string()))
}

/// Standalone optimization run used by the `optimize` CLI subcommand.
pub fn optimize_once(
    base: &Linkage,
    shape: &TargetShape,
    optimizer: OptimizerKind,
    budget: OptimizerBudget,
    seed: u64,
    n_steps: usize,
) -> Result<crate::optimizers::OptimizationResult, HarnessError> {
    let target = generate(shape)?;
    let space = default_param_space(base);
    match optimizer {
        OptimizerKind::Pso => pso(base, &space, &target, budget, seed, n_steps),
        OptimizerKind::Grid => grid_search(base, &space, &target, budget.population, n_steps),
    }
    .map_err(|e| HarnessError::BadConfig(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::four_bar;
    use crate::targets::ShapeKind;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            model: "scripted".into(),
            shape: TargetShape {
                kind: ShapeKind::benchmark("line", 1.0).unwrap(),
                n_points: 32,
            },
            optimizer: OptimizerKind::Pso,
            planner: true,
            dr: true,
            cl: true,
            backend: BackendKind::Scripted,
            samples: 2,
            seed: 100,
            r_max: 2,
            epsilon: 0.005,
            n_steps: 32,
            budget: OptimizerBudget::SMALL,
            target_links: 4,
        }
    }

    #[test]
    fn mean_se_matches_hand_computation() {
        let s = mean_se(&[1.0, 2.0, 3.0]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.se - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_se(&[5.0]).se, 0.0);
    }

    #[test]
    fn normalized_index_is_plain_division() {
        let out = normalized_index(&[0.588, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(out, vec![0.588, 1.0, 2.0]);
        assert!(normalized_index(&[1.0], 0.0).is_err());
    }

    #[test]
    fn run_config_aggregates_over_samples() {
        let record = run_config(&small_config()).unwrap();
        assert_eq!(record.samples.len(), 2);
        assert!(record.semantic_rate > 0.0);
        assert_eq!(record.best_chamfer.n as f64, record.samples.iter().filter(|s| s.success).count() as f64);
    }

    #[test]
    fn results_csv_has_schema_and_header_comment() {
        let record = run_config(&small_config()).unwrap();
        let csv = results_csv(&[record]);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS);
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn svg_render_is_deterministic_with_expected_elements() {
        let linkage = four_bar();
        let sim = simulate(&linkage, 60).unwrap();
        let a = render_mechanism(&linkage, &sim, None).unwrap();
        let b = render_mechanism(&linkage, &sim, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches(r#"class="bar""#).count(), 4);
        assert!(a.matches(r#"class="traj"#).count() >= 3);
        assert!(!a.contains(r#"class="target""#));

        let target = generate(&TargetShape {
            kind: ShapeKind::benchmark("circle", 1.0).unwrap(),
            n_points: 32,
        })
        .unwrap();
        let with_target = render_mechanism(&linkage, &sim, Some(&target)).unwrap();
        assert_eq!(with_target.matches(r#"class="target""#).count(), 1);
    }

    #[test]
    fn run_matrix_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let id = cfg.id();
        run_matrix(&[cfg], dir.path()).unwrap();
        assert!(dir.path().join("results.csv").exists());
        assert!(dir.path().join(format!("trace_{id}.csv")).exists());
        assert!(dir.path().join(format!("history_{id}_0.jsonl")).exists());
        assert!(dir.path().join(format!("history_{id}_1.jsonl")).exists());
    }
}
