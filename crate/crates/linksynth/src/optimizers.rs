//! Numeric parameter optimization (grid search, PSO) and the
//! enumeration + genetic-algorithm baseline over fixed topologies.

use crate::fixtures;
use crate::linkage::{simulate, Joint, JointKind, Linkage, Trajectory};
use crate::metrics::score;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Objective value assigned to linkages that fail validation or
/// simulation.
pub const PENALTY: f64 = 1e6;
/// Hard cap on total grid evaluations before per-axis reduction.
pub const GRID_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("parameter space is empty")]
    EmptySpace,
    #[error("budget must be positive")]
    EmptyBudget,
    #[error("binding references unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("binding field does not apply to joint `{0}`")]
    FieldMismatch(String),
}

/// Tunable scalar field of a joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamField {
    FixedX,
    FixedY,
    CrankRadius,
    CrankInitialAngle,
    Dist0,
    Dist1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBinding {
    pub joint: String,
    pub field: ParamField,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSpace {
    pub bindings: Vec<ParamBinding>,
}

impl ParamSpace {
    pub fn dim(&self) -> usize {
        self.bindings.len()
    }

    /// Instantiate the base linkage with the given parameter vector,
    /// clamped to the binding bounds.
    pub fn apply(&self, base: &Linkage, values: &[f64]) -> Result<Linkage, OptimizerError> {
        assert_eq!(values.len(), self.bindings.len());
        let mut linkage = base.clone();
        for (binding, &raw) in self.bindings.iter().zip(values) {
            let v = raw.clamp(binding.lo, binding.hi);
            let joint = linkage
                .joints
                .iter_mut()
                .find(|j| j.id == binding.joint)
                .ok_or_else(|| OptimizerError::UnknownJoint(binding.joint.clone()))?;
            match (&mut joint.kind, binding.field) {
                (JointKind::Fixed { x, .. }, ParamField::FixedX) => *x = v,
                (JointKind::Fixed { y, .. }, ParamField::FixedY) => *y = v,
                (JointKind::Crank { radius, .. }, ParamField::CrankRadius) => *radius = v,
                (JointKind::Crank { initial_angle, .. }, ParamField::CrankInitialAngle) => {
                    *initial_angle = v
                }
                (JointKind::Revolute { dist0, .. }, ParamField::Dist0) => *dist0 = v,
                (JointKind::Revolute { dist1, .. }, ParamField::Dist1) => *dist1 = v,
                _ => return Err(OptimizerError::FieldMismatch(binding.joint.clone())),
            }
        }
        Ok(linkage)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bindings.iter().map(|b| 0.5 * (b.lo + b.hi)).collect()
    }

    /// Read the current values of the bound fields off a linkage.
    pub fn extract(&self, linkage: &Linkage) -> Result<Vec<f64>, OptimizerError> {
        self.bindings
            .iter()
            .map(|binding| {
                let joint = linkage
                    .joints
                    .iter()
                    .find(|j| j.id == binding.joint)
                    .ok_or_else(|| OptimizerError::UnknownJoint(binding.joint.clone()))?;
                match (&joint.kind, binding.field) {
                    (JointKind::Fixed { x, .. }, ParamField::FixedX) => Ok(*x),
                    (JointKind::Fixed { y, .. }, ParamField::FixedY) => Ok(*y),
                    (JointKind::Crank { radius, .. }, ParamField::CrankRadius) => Ok(*radius),
                    (JointKind::Crank { initial_angle, .. }, ParamField::CrankInitialAngle) => {
                        Ok(*initial_angle)
                    }
                    (JointKind::Revolute { dist0, .. }, ParamField::Dist0) => Ok(*dist0),
                    (JointKind::Revolute { dist1, .. }, ParamField::Dist1) => Ok(*dist1),
                    _ => Err(OptimizerError::FieldMismatch(binding.joint.clone())),
                }
            })
            .collect()
    }
}

/// Bind every tunable scalar of the linkage with generic bounds:
/// lengths in [0.2, 12], ground coordinates in [-10, 15], crank phase
/// in [-π, π].
pub fn default_param_space(linkage: &Linkage) -> ParamSpace {
    let mut bindings = Vec::new();
    for joint in &linkage.joints {
        match &joint.kind {
            JointKind::Fixed { .. } => {
                for field in [ParamField::FixedX, ParamField::FixedY] {
                    bindings.push(ParamBinding {
                        joint: joint.id.clone(),
                        field,
                        lo: -10.0,
                        hi: 15.0,
                    });
                }
            }
            JointKind::Crank { .. } => {
                bindings.push(ParamBinding {
                    joint: joint.id.clone(),
                    field: ParamField::CrankRadius,
                    lo: 0.2,
                    hi: 12.0,
                });
                bindings.push(ParamBinding {
                    joint: joint.id.clone(),
                    field: ParamField::CrankInitialAngle,
                    lo: -std::f64::consts::PI,
                    hi: std::f64::consts::PI,
                });
            }
            JointKind::Revolute { .. } => {
                for field in [ParamField::Dist0, ParamField::Dist1] {
                    bindings.push(ParamBinding {
                        joint: joint.id.clone(),
                        field,
                        lo: 0.2,
                        hi: 12.0,
                    });
                }
            }
        }
    }
    ParamSpace { bindings }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Grid,
    Pso,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Grid => "Grid",
            OptimizerKind::Pso => "PSO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerBudget {
    /// Particles (PSO), population (GA), or points per axis (grid).
    pub population: usize,
    pub iterations: usize,
}

impl OptimizerBudget {
    pub const SMALL: OptimizerBudget = OptimizerBudget {
        population: 3,
        iterations: 20,
    };
    pub const MEDIUM: OptimizerBudget = OptimizerBudget {
        population: 6,
        iterations: 20,
    };
    pub const LARGE: OptimizerBudget = OptimizerBudget {
        population: 60,
        iterations: 300,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: Linkage,
    pub params: Vec<f64>,
    pub chamfer: f64,
    pub evaluations: usize,
    /// Best objective after each iteration (or grid pass).
    pub trace: Vec<f64>,
}

/// Chamfer-after-ICP of the end-effector trajectory against the target,
/// or the penalty for unbuildable or unsolvable candidates.
pub fn objective(linkage: &Linkage, target: &Trajectory, n_steps: usize) -> f64 {
    if !linkage.validate().is_empty() {
        return PENALTY;
    }
    let sim = match simulate(linkage, n_steps) {
        Ok(sim) if sim.buildable => sim,
        _ => return PENALTY,
    };
    let traj = match sim.per_joint.get(&linkage.target) {
        Some(t) => t,
        None => return PENALTY,
    };
    match score(&traj.samples, &target.samples, 50, 1e-9) {
        Ok(s) if s.chamfer.is_finite() => s.chamfer,
        _ => PENALTY,
    }
}

/// Exhaustive axis-aligned grid minimization of an arbitrary function.
/// If the full grid exceeds [`GRID_CAP`], points per axis is reduced
/// until it fits.
pub fn grid_minimize<F: FnMut(&[f64]) -> f64>(
    bounds: &[(f64, f64)],
    points_per_axis: usize,
    mut f: F,
) -> Result<(Vec<f64>, f64, Vec<f64>), OptimizerError> {
    if bounds.is_empty() {
        return Err(OptimizerError::EmptySpace);
    }
    if points_per_axis == 0 {
        return Err(OptimizerError::EmptyBudget);
    }
    let mut k = points_per_axis;
    while k > 1 && (k as f64).powi(bounds.len() as i32) > GRID_CAP as f64 {
        k -= 1;
    }
    if k < points_per_axis {
        log::warn!(
            "grid of {points_per_axis}^{} exceeds cap {GRID_CAP}; reduced to {k} points per axis",
            bounds.len()
        );
    }

    let total = k.pow(bounds.len() as u32);
    let mut best_val = f64::INFINITY;
    let mut best_params: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut trace = Vec::new();
    for flat in 0..total {
        let mut idx = flat;
        let params: Vec<f64> = bounds
            .iter()
            .map(|(lo, hi)| {
                let i = idx % k;
                idx /= k;
                if k == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (k - 1) as f64
                }
            })
            .collect();
        let val = f(&params);
        if val < best_val {
            best_val = val;
            best_params = params;
        }
        trace.push(best_val);
    }
    Ok((best_params, best_val, trace))
}

/// Grid search over a linkage parameter space.
pub fn grid_search(
    base: &Linkage,
    space: &ParamSpace,
    target: &Trajectory,
    points_per_axis: usize,
    n_steps: usize,
) -> Result<OptimizationResult, OptimizerError> {
    let bounds: Vec<(f64, f64)> = space.bindings.iter().map(|b| (b.lo, b.hi)).collect();
    let mut apply_err = None;
    let (best_params, best_val, trace) = grid_minimize(&bounds, points_per_axis, |params| {
        match space.apply(base, params) {
            Ok(candidate) => objective(&candidate, target, n_steps),
            Err(e) => {
                apply_err.get_or_insert(e);
                PENALTY
            }
        }
    })?;
    if let Some(e) = apply_err {
        return Err(e);
    }
    Ok(OptimizationResult {
        best: space.apply(base, &best_params)?,
        params: best_params,
        chamfer: best_val,
        evaluations: trace.len(),
        trace,
    })
}

/// Particle swarm minimization of an arbitrary function: inertia 0.72,
/// cognitive and social coefficients 1.49, velocity clamped to 20% of
/// each axis range, reflecting boundaries, ChaCha8-seeded.
pub fn pso_minimize<F: FnMut(&[f64]) -> f64>(
    bounds: &[(f64, f64)],
    budget: OptimizerBudget,
    seed: u64,
    mut f: F,
) -> Result<(Vec<f64>, f64, Vec<f64>), OptimizerError> {
    if bounds.is_empty() {
        return Err(OptimizerError::EmptySpace);
    }
    if budget.population == 0 || budget.iterations == 0 {
        return Err(OptimizerError::EmptyBudget);
    }
    const INERTIA: f64 = 0.72;
    const COGNITIVE: f64 = 1.49;
    const SOCIAL: f64 = 1.49;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = bounds.len();
    let ranges: Vec<f64> = bounds.iter().map(|(lo, hi)| hi - lo).collect();

    let mut positions: Vec<Vec<f64>> = (0..budget.population)
        .map(|_| bounds.iter().map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect())
        .collect();
    let mut velocities: Vec<Vec<f64>> = (0..budget.population)
        .map(|_| {
            ranges
                .iter()
                .map(|r| rng.gen_range(-0.2 * r..=0.2 * r))
                .collect()
        })
        .collect();

    let mut personal_best = positions.clone();
    let mut personal_val: Vec<f64> = positions.iter().map(|p| f(p)).collect();
    let mut g_idx = 0;
    for (i, v) in personal_val.iter().enumerate() {
        if *v < personal_val[g_idx] {
            g_idx = i;
        }
    }
    let mut global_best = personal_best[g_idx].clone();
    let mut global_val = personal_val[g_idx];

    let mut trace = Vec::with_capacity(budget.iterations);
    for _ in 0..budget.iterations {
        for i in 0..budget.population {
            for d in 0..dim {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                let v = INERTIA * velocities[i][d]
                    + COGNITIVE * r1 * (personal_best[i][d] - positions[i][d])
                    + SOCIAL * r2 * (global_best[d] - positions[i][d]);
                let vmax = 0.2 * ranges[d];
                velocities[i][d] = v.clamp(-vmax, vmax);
                let mut x = positions[i][d] + velocities[i][d];
                let (lo, hi) = bounds[d];
                if x < lo {
                    x = lo + (lo - x).min(hi - lo);
                    velocities[i][d] = -velocities[i][d];
                } else if x > hi {
                    x = hi - (x - hi).min(hi - lo);
                    velocities[i][d] = -velocities[i][d];
                }
                positions[i][d] = x;
            }
            let val = f(&positions[i]);
            if val < personal_val[i] {
                personal_val[i] = val;
                personal_best[i] = positions[i].clone();
            }
            if val < global_val {
                global_val = val;
                global_best = positions[i].clone();
            }
        }
        trace.push(global_val);
    }

    Ok((global_best, global_val, trace))
}

/// PSO over a linkage parameter space.
pub fn pso(
    base: &Linkage,
    space: &ParamSpace,
    target: &Trajectory,
    budget: OptimizerBudget,
    seed: u64,
    n_steps: usize,
) -> Result<OptimizationResult, OptimizerError> {
    let bounds: Vec<(f64, f64)> = space.bindings.iter().map(|b| (b.lo, b.hi)).collect();
    let mut evaluations = 0usize;
    let mut apply_err = None;
    let (best_params, best_val, trace) = pso_minimize(&bounds, budget, seed, |params| {
        evaluations += 1;
        match space.apply(base, params) {
            Ok(candidate) => objective(&candidate, target, n_steps),
            Err(e) => {
                apply_err.get_or_insert(e);
                PENALTY
            }
        }
    })?;
    if let Some(e) = apply_err {
        return Err(e);
    }
    Ok(OptimizationResult {
        best: space.apply(base, &best_params)?,
        params: best_params,
        chamfer: best_val,
        evaluations,
        trace,
    })
}

/// Candidate topology templates for the enumeration baseline: the
/// four-bar plus Watt- and Stephenson-style six-bar variants. Every
/// template has mobility one.
pub fn enumerate_topologies() -> Vec<Linkage> {
    vec![
        fixtures::four_bar(),
        fixtures::six_link_seven_joint(),
        stephenson_like(),
    ]
}

fn stephenson_like() -> Linkage {
    // second dyad hangs off the coupler instead of the first dyad
    Linkage {
        name: "stephenson-six".into(),
        target: "e".into(),
        joints: vec![
            Joint::fixed("a", 0.0, 0.0),
            Joint::fixed("g1", 4.0, 0.0),
            Joint::fixed("g2", 1.0, 4.0),
            Joint::fixed("g3", 0.0, -3.0),
            Joint::crank("b", "a", 1.5, 0.0),
            Joint::revolute("c", "b", "g1", 3.5, 3.0, crate::linkage::Branch::Positive),
            Joint::revolute("e", "b", "g2", 4.0, 3.5, crate::linkage::Branch::Positive),
        ],
        intent: String::new(),
    }
}

/// Genetic algorithm over one topology's parameter space: tournament
/// selection of size 3, blend crossover (α = 0.5), Gaussian mutation
/// with σ = 5% of each axis range, and single-member elitism.
pub fn ga(
    base: &Linkage,
    space: &ParamSpace,
    target: &Trajectory,
    budget: OptimizerBudget,
    seed: u64,
    n_steps: usize,
) -> Result<OptimizationResult, OptimizerError> {
    if space.dim() == 0 {
        return Err(OptimizerError::EmptySpace);
    }
    if budget.population == 0 || budget.iterations == 0 {
        return Err(OptimizerError::EmptyBudget);
    }
    const BLEND_ALPHA: f64 = 0.5;
    const MUTATION_RATE: f64 = 0.2;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = space.dim();

    let mut evaluations = 0usize;
    let mut eval = |params: &[f64]| -> Result<f64, OptimizerError> {
        evaluations += 1;
        Ok(objective(&space.apply(base, params)?, target, n_steps))
    };

    let mut population: Vec<Vec<f64>> = (0..budget.population)
        .map(|_| {
            space
                .bindings
                .iter()
                .map(|b| rng.gen_range(b.lo..=b.hi))
                .collect()
        })
        .collect();
    let mut fitness = Vec::with_capacity(budget.population);
    for ind in &population {
        fitness.push(eval(ind)?);
    }

    let mut trace = Vec::with_capacity(budget.iterations);
    for _ in 0..budget.iterations {
        let elite_idx = (0..population.len())
            .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]))
            .unwrap();
        let mut next = vec![population[elite_idx].clone()];

        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let mut best = rng.gen_range(0..population.len());
            for _ in 0..2 {
                let c = rng.gen_range(0..population.len());
                if fitness[c] < fitness[best] {
                    best = c;
                }
            }
            best
        };

        while next.len() < budget.population {
            let pa = tournament(&mut rng);
            let pb = tournament(&mut rng);
            let mut child = Vec::with_capacity(dim);
            for d in 0..dim {
                let (lo, hi) = (
                    population[pa][d].min(population[pb][d]),
                    population[pa][d].max(population[pb][d]),
                );
                let span = hi - lo;
                let (blo, bhi) = (space.bindings[d].lo, space.bindings[d].hi);
                let mut v = rng.gen_range(
                    (lo - BLEND_ALPHA * span).max(blo)..=(hi + BLEND_ALPHA * span).min(bhi),
                );
                if rng.gen::<f64>() < MUTATION_RATE {
                    let sigma = 0.05 * (bhi - blo);
                    v += gaussian(&mut rng) * sigma;
                }
                child.push(v.clamp(blo, bhi));
            }
            next.push(child);
        }

        population = next;
        fitness.clear();
        for ind in &population {
            fitness.push(eval(ind)?);
        }
        let gen_best = fitness.iter().cloned().fold(f64::INFINITY, f64::min);
        let prev = trace.last().copied().unwrap_or(f64::INFINITY);
        trace.push(gen_best.min(prev));
    }

    let best_idx = (0..population.len())
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]))
        .unwrap();
    let best_params = population[best_idx].clone();
    Ok(OptimizationResult {
        best: space.apply(base, &best_params)?,
        params: best_params.clone(),
        chamfer: fitness[best_idx],
        evaluations,
        trace,
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Enumeration + GA baseline: run the GA on every template topology and
/// return the best result across templates.
pub fn enum_ga(
    target: &Trajectory,
    budget: OptimizerBudget,
    seed: u64,
    n_steps: usize,
) -> Result<OptimizationResult, OptimizerError> {
    let mut best: Option<OptimizationResult> = None;
    let mut total_evals = 0usize;
    for (i, template) in enumerate_topologies().iter().enumerate() {
        let space = default_param_space(template);
        let result = ga(template, &space, target, budget, seed.wrapping_add(i as u64), n_steps)?;
        total_evals += result.evaluations;
        if best.as_ref().map_or(true, |b| result.chamfer < b.chamfer) {
            best = Some(result);
        }
    }
    best.map(|mut b| {
        b.evaluations = total_evals;
        b
    })
    .ok_or(OptimizerError::EmptySpace)
}
