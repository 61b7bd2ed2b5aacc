//! Acceptance gate: every numbered criterion runs in order and prints a
//! single `ACCEPTANCE n: PASS|FAIL` line. The test fails if any
//! criterion fails, but all criteria are still executed and reported.

use std::collections::BTreeMap;
use std::io::Write as IoWrite;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linksynth::agents::{
    critic, plan, refine, refinement_loop, topology_agent, ExemplarMemory, FailureMode,
    FailureModeTable, LoopConfig, ScriptedBackend, ScriptedFixture,
};
use linksynth::fixtures;
use linksynth::geom::Point;
use linksynth::harness::{mean_se, run_matrix, BackendKind, ExperimentConfig, CSV_COLUMNS};
use linksynth::lifting::{
    compose_sketch, detect_events, evaluate, proxies, synthesize_spec, Atom, Event, EventConfig,
    EventKind, Guard, MotionLabel, Region, SegmentConfig, SpecConfig, TemporalFormula, Trace,
    CURVATURE_MARGIN, MONOTONICITY_MARGIN,
};
use linksynth::linkage::{simulate, Branch, JointKind};
use linksynth::metrics::{chamfer, score, RigidTransform2D};
use linksynth::optimizers::{
    default_param_space, enum_ga, ga, grid_minimize, pso_minimize, OptimizerBudget, OptimizerKind,
    PENALTY,
};
use linksynth::targets::{generate, ShapeKind, TargetShape};
use linksynth::Trajectory;

/// Print directly to the process stdout so the per-criterion verdict
/// lines survive libtest's output capture.
fn emit(line: &str) {
    // bypass libtest capture so the verdicts appear in plain
    // `cargo test` output; fall back to the captured stream otherwise
    match std::fs::OpenOptions::new().append(true).open("/dev/stdout") {
        Ok(mut raw) => {
            writeln!(raw, "{line}").ok();
        }
        Err(_) => println!("{line}"),
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(usize, &str, fn())> = vec![
        (1, "Gruebler mobility", criterion_01_gruebler),
        (2, "kinematic closure", criterion_02_closure),
        (3, "metrics oracles", criterion_03_metrics),
        (4, "temporal-logic semantics", criterion_04_temporal),
        (5, "lifting soundness", criterion_05_lifting),
        (6, "hysteresis robustness", criterion_06_hysteresis),
        (7, "segmentation thresholds", criterion_07_segmentation),
        (8, "closed-loop monotonicity", criterion_08_loop),
        (9, "planner mapping", criterion_09_planner),
        (10, "Enum+GA baseline", criterion_10_enum_ga),
        (11, "end-to-end run", criterion_11_end_to_end),
        (12, "optimizer sanity", criterion_12_optimizers),
    ];

    let mut failures = Vec::new();
    for (n, name, f) in criteria {
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(()) => emit(&format!("ACCEPTANCE {n}: PASS ({name})")),
            Err(e) => {
                let detail = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                emit(&format!("ACCEPTANCE {n}: FAIL ({name}: {detail})"));
                failures.push(n);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}

// --- 1. Grübler mobility ------------------------------------------------

fn criterion_01_gruebler() {
    let start = Instant::now();
    assert_eq!(fixtures::four_bar().dof().unwrap(), 1);
    assert_eq!(fixtures::six_link_six_joint().dof().unwrap(), 3);
    assert_eq!(fixtures::six_link_seven_joint().dof().unwrap(), 1);
    assert!(start.elapsed().as_millis() < 1, "dof() must run in < 1 ms");
}

// --- 2. Kinematic closure ----------------------------------------------

/// Independent per-step position oracle: crank by angle addition, the
/// revolute joint via the law of cosines and an explicit rotation of
/// the baseline direction (positive branch = counter-clockwise offset).
fn four_bar_oracle(linkage: &linksynth::Linkage, phase: f64) -> BTreeMap<String, (f64, f64)> {
    let mut pos: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for joint in &linkage.joints {
        let p = match &joint.kind {
            JointKind::Fixed { x, y } => (*x, *y),
            JointKind::Crank {
                anchor,
                radius,
                initial_angle,
            } => {
                let (ax, ay) = pos[anchor.as_str()];
                let theta = initial_angle + phase;
                (ax + radius * theta.cos(), ay + radius * theta.sin())
            }
            JointKind::Revolute {
                parent0,
                parent1,
                dist0,
                dist1,
                branch,
            } => {
                let (bx, by) = pos[parent0.as_str()];
                let (dx, dy) = pos[parent1.as_str()];
                let baseline = ((dx - bx).powi(2) + (dy - by).powi(2)).sqrt();
                let cos_alpha =
                    (dist0 * dist0 + baseline * baseline - dist1 * dist1) / (2.0 * dist0 * baseline);
                let alpha = cos_alpha.clamp(-1.0, 1.0).acos();
                let signed = match branch {
                    Branch::Positive => alpha,
                    Branch::Negative => -alpha,
                };
                let (ux, uy) = ((dx - bx) / baseline, (dy - by) / baseline);
                let (rx, ry) = (
                    ux * signed.cos() - uy * signed.sin(),
                    ux * signed.sin() + uy * signed.cos(),
                );
                (bx + dist0 * rx, by + dist0 * ry)
            }
        };
        pos.insert(joint.id.clone(), p);
    }
    pos
}

fn criterion_02_closure() {
    let linkage = fixtures::grashof_four_bar();
    let n_steps = 360;
    let sim = simulate(&linkage, n_steps).unwrap();
    assert!(sim.buildable);

    for (id, traj) in &sim.per_joint {
        let first = traj.samples[0];
        let last = *traj.samples.last().unwrap();
        assert!(
            first.dist(last) < 1e-6,
            "joint {id} closure gap {}",
            first.dist(last)
        );
    }

    for step in 0..=n_steps {
        let phase = std::f64::consts::TAU * step as f64 / n_steps as f64;
        let oracle = four_bar_oracle(&linkage, phase);
        for (id, traj) in &sim.per_joint {
            let got = traj.samples[step];
            let (ox, oy) = oracle[id];
            let err = ((got.x - ox).powi(2) + (got.y - oy).powi(2)).sqrt();
            assert!(err < 1e-9, "joint {id} step {step} oracle error {err}");
        }
    }
}

// --- 3. Metrics oracles -------------------------------------------------

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
        .collect()
}

fn criterion_03_metrics() {
    // chamfer equals the brute-force double loop, bit for bit
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let na = rng.gen_range(2..30);
        let a = random_cloud(&mut rng, na);
        let nb = rng.gen_range(2..30);
        let b = random_cloud(&mut rng, nb);
        let brute_ab: f64 = a
            .iter()
            .map(|p| b.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / a.len() as f64;
        let brute_ba: f64 = b
            .iter()
            .map(|p| a.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / b.len() as f64;
        assert_eq!(chamfer(&a, &b).unwrap(), 0.5 * (brute_ab + brute_ba));
    }

    // ICP recovers rotation 30°, translation (1, -2) on 50 random clouds
    let rot = 30.0_f64.to_radians();
    let known = RigidTransform2D {
        rotation: rot,
        translation: Point::new(1.0, -2.0),
    };
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let source = random_cloud(&mut rng, 40);
        let target: Vec<Point> = source.iter().map(|p| known.apply(*p)).collect();
        let s = score(&source, &target, 50, 1e-9).unwrap();
        assert!(
            s.chamfer < 1e-6,
            "seed {seed}: post-alignment chamfer {}",
            s.chamfer
        );
    }
}

// --- 4. Temporal-logic semantics ---------------------------------------

const ALL_ATOMS: [Atom; 7] = [
    Atom::CurvZero,
    Atom::Inf,
    Atom::ExX,
    Atom::ExY,
    Atom::Sint,
    Atom::InRegion(String::new()),
    Atom::CrossGuard(String::new()),
];

fn random_atom(rng: &mut ChaCha8Rng) -> Atom {
    match rng.gen_range(0..7) {
        0 => Atom::CurvZero,
        1 => Atom::Inf,
        2 => Atom::ExX,
        3 => Atom::ExY,
        4 => Atom::Sint,
        5 => Atom::InRegion("R_in".into()),
        _ => Atom::CrossGuard("L_0".into()),
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a: f64 = rng.gen_range(0.0..1.0);
    let b: f64 = rng.gen_range(0.0..1.0);
    (a.min(b), a.max(b))
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> TemporalFormula {
    if depth == 0 {
        return TemporalFormula::Atom(random_atom(rng));
    }
    match rng.gen_range(0..7) {
        0 => TemporalFormula::Atom(random_atom(rng)),
        1 => TemporalFormula::Not(Box::new(random_formula(rng, depth - 1))),
        2 => TemporalFormula::And(
            (0..rng.gen_range(1..4))
                .map(|_| random_formula(rng, depth - 1))
                .collect(),
        ),
        3 => TemporalFormula::Or(
            (0..rng.gen_range(1..4))
                .map(|_| random_formula(rng, depth - 1))
                .collect(),
        ),
        4 => {
            let (lo, hi) = random_interval(rng);
            TemporalFormula::Eventually {
                lo,
                hi,
                inner: Box::new(random_formula(rng, depth - 1)),
            }
        }
        5 => {
            let (lo, hi) = random_interval(rng);
            TemporalFormula::Always {
                lo,
                hi,
                inner: Box::new(random_formula(rng, depth - 1)),
            }
        }
        _ => {
            let (lo, hi) = random_interval(rng);
            TemporalFormula::Until {
                lo,
                hi,
                lhs: Box::new(random_formula(rng, depth - 1)),
                rhs: Box::new(random_formula(rng, depth - 1)),
            }
        }
    }
}

fn random_trace(rng: &mut ChaCha8Rng) -> Trace {
    let n = rng.gen_range(5..20);
    let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut trace = Trace::new(times);
    for proto in &ALL_ATOMS {
        let atom = match proto {
            Atom::InRegion(_) => Atom::InRegion("R_in".into()),
            Atom::CrossGuard(_) => Atom::CrossGuard("L_0".into()),
            other => other.clone(),
        };
        trace.set_atom(atom, (0..n).map(|_| rng.gen_bool(0.5)).collect());
    }
    trace
}

fn oracle_in(t: f64, lo: f64, hi: f64) -> bool {
    t >= lo - 1e-12 && t <= hi + 1e-12
}

/// Naive quantifier-enumeration semantics, pointwise at index `k`, with
/// no sharing and no vectorization.
fn oracle_sat(formula: &TemporalFormula, trace: &Trace, k: usize) -> bool {
    let time = |i: usize| trace.times[i];
    match formula {
        TemporalFormula::Atom(a) => trace
            .atoms
            .get(a)
            .map(|v| v[k])
            .unwrap_or(false),
        TemporalFormula::Not(inner) => !oracle_sat(inner, trace, k),
        TemporalFormula::And(parts) => parts.iter().all(|p| oracle_sat(p, trace, k)),
        TemporalFormula::Or(parts) => parts.iter().any(|p| oracle_sat(p, trace, k)),
        TemporalFormula::Eventually { lo, hi, inner } => (0..trace.times.len())
            .any(|j| oracle_in(time(j), *lo, *hi) && oracle_sat(inner, trace, j)),
        TemporalFormula::Always { lo, hi, inner } => (0..trace.times.len())
            .all(|j| !oracle_in(time(j), *lo, *hi) || oracle_sat(inner, trace, j)),
        TemporalFormula::Until { lo, hi, lhs, rhs } => (0..trace.times.len()).any(|j| {
            oracle_in(time(j), *lo, *hi)
                && oracle_sat(rhs, trace, j)
                && (0..j).all(|m| oracle_sat(lhs, trace, m))
        }),
    }
}

fn criterion_04_temporal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..1000 {
        let depth = rng.gen_range(1..=4);
        let formula = random_formula(&mut rng, depth);
        let trace = random_trace(&mut rng);
        let got = evaluate(&formula, &trace).unwrap();
        let want = oracle_sat(&formula, &trace, 0);
        assert_eq!(got, want, "case {case}: formula {formula}");
    }
}

// --- 5. Lifting soundness ----------------------------------------------

fn ellipse_samples(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    let cx = rng.gen_range(-3.0..3.0);
    let cy = rng.gen_range(-3.0..3.0);
    let a = rng.gen_range(0.5..2.5);
    let b = rng.gen_range(0.5..2.5);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / (n - 1) as f64 + phase;
            Point::new(cx + a * t.cos(), cy + b * t.sin())
        })
        .collect()
}

fn criterion_05_lifting() {
    // 100 seeded traces fully inside their region: the invariant clause
    // must be synthesized and must actually hold on the lifted trace
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = rng.gen_range(48..96);
        let samples = ellipse_samples(&mut rng, n);
        let traj = Trajectory::new(samples.clone(), 1.0 / (n - 1) as f64);
        let px = proxies(&traj, traj.dt).unwrap();

        let region = Region::from_trajectory("R_in", &samples, 0.05);
        assert!(samples.iter().all(|p| region.contains(*p)));

        let events = detect_events(
            &traj,
            &px,
            std::slice::from_ref(&region),
            &[],
            &EventConfig::default(),
        );
        let spec = synthesize_spec(
            &events,
            &SpecConfig {
                n_samples: n - 1,
                ..SpecConfig::default()
            },
        );
        let text = spec.to_string();
        assert!(
            text.contains("G_[0.000,1.000](in(R_in))"),
            "seed {seed}: spec {text}"
        );

        let mut membership = BTreeMap::new();
        membership.insert(
            "R_in".to_string(),
            samples.iter().map(|p| region.contains(*p)).collect(),
        );
        let trace = Trace::from_lift(&px, &events, &membership);
        let invariant = TemporalFormula::Always {
            lo: 0.0,
            hi: 1.0,
            inner: Box::new(TemporalFormula::Atom(Atom::InRegion("R_in".into()))),
        };
        assert!(evaluate(&invariant, &trace).unwrap(), "seed {seed}");
    }

    // a constructed curvature zero-crossing with margin > 1e-3 yields INF:
    // y = x³ has curvature 6x/(1+9x⁴)^{3/2}, crossing zero at x = 0
    let n = 101;
    let samples: Vec<Point> = (0..n)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            Point::new(x, x * x * x)
        })
        .collect();
    let margin = samples
        .iter()
        .map(|p| (6.0 * p.x / (1.0 + 9.0 * p.x.powi(4)).powf(1.5)).abs())
        .fold(0.0_f64, f64::max);
    assert!(margin > 1e-3);
    let traj = Trajectory::new(samples, 1.0 / (n - 1) as f64);
    let px = proxies(&traj, traj.dt).unwrap();
    let events = detect_events(&traj, &px, &[], &[], &EventConfig::default());
    assert!(
        events.iter().any(|e| e.kind == EventKind::Inf),
        "no INF event on cubic: {events:?}"
    );
}

// --- 6. Hysteresis robustness ------------------------------------------

fn event_kind_counts(events: &[Event]) -> BTreeMap<EventKind, usize> {
    let mut counts = BTreeMap::new();
    for e in events {
        *counts.entry(e.kind).or_insert(0usize) += 1;
    }
    counts
}

/// Minimum signal-space distance of any sample from a decision
/// boundary: hysteresis band edges on vx / vy / curvature, the guard
/// line, the guard's normal-velocity gate, and the region border.
fn min_active_slack(
    px: &linksynth::lifting::KinematicProxies,
    samples: &[Point],
    region: &Region,
    guard: &Guard,
    guard_min_normal_velocity: f64,
) -> f64 {
    let mut slack = f64::INFINITY;
    for v in &px.velocities {
        slack = slack.min((v.x.abs() - MONOTONICITY_MARGIN).abs());
        slack = slack.min((v.y.abs() - MONOTONICITY_MARGIN).abs());
    }
    for k in &px.curvatures {
        slack = slack.min((k.abs() - CURVATURE_MARGIN).abs());
    }
    let nhat = guard.direction.perp() / guard.direction.norm();
    for (p, v) in samples.iter().zip(&px.velocities) {
        slack = slack.min(guard.side(*p).abs());
        slack = slack.min((v.dot(nhat).abs() - guard_min_normal_velocity).abs());
    }
    for p in samples {
        let dx = (p.x - region.min.x).min(region.max.x - p.x);
        let dy = (p.y - region.min.y).min(region.max.y - p.y);
        slack = slack.min(dx.abs()).min(dy.abs());
    }
    slack
}

fn criterion_06_hysteresis() {
    let cfg = EventConfig::default();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let n = rng.gen_range(60..90);
        let samples = ellipse_samples(&mut rng, n);
        let traj = Trajectory::new(samples.clone(), 1.0 / (n - 1) as f64);
        let px = proxies(&traj, traj.dt).unwrap();

        let region = Region::from_trajectory("R_in", &samples, 0.05);
        let guard = Guard::principal_axis("L_0", &samples);
        let slack =
            min_active_slack(&px, &samples, &region, &guard, cfg.guard_min_normal_velocity);
        assert!(slack > 0.0, "seed {seed}: degenerate slack");

        // finite-difference stencils amplify a position perturbation by
        // O(n) (velocity) and O(n²) (acceleration / curvature); divide
        // the signal slack by a conservative gain to get the
        // position-space active margin
        let gain = 1e4 * (n as f64) * (n as f64);
        let active_margin = slack / gain;
        let bound = 0.5 * active_margin;

        let perturbed: Vec<Point> = samples
            .iter()
            .map(|p| {
                Point::new(
                    p.x + rng.gen_range(-bound..bound),
                    p.y + rng.gen_range(-bound..bound),
                )
            })
            .collect();
        let traj_p = Trajectory::new(perturbed.clone(), traj.dt);
        let px_p = proxies(&traj_p, traj_p.dt).unwrap();

        let events = detect_events(
            &traj,
            &px,
            std::slice::from_ref(&region),
            std::slice::from_ref(&guard),
            &cfg,
        );
        let events_p = detect_events(
            &traj_p,
            &px_p,
            std::slice::from_ref(&region),
            std::slice::from_ref(&guard),
            &cfg,
        );
        assert_eq!(
            event_kind_counts(&events),
            event_kind_counts(&events_p),
            "seed {seed}: event kind counts diverged"
        );

        let prims = compose_sketch(&px, &events);
        let prims_p = compose_sketch(&px_p, &events_p);
        assert_eq!(prims, prims_p, "seed {seed}: primitive lists diverged");
    }
}

// --- 7. Segmentation thresholds ----------------------------------------

fn labels_of(traj: &Trajectory) -> Vec<MotionLabel> {
    let (segments, _) = linksynth::lifting::segment_dr(traj, &SegmentConfig::default()).unwrap();
    segments.iter().map(|s| s.label).collect()
}

fn criterion_07_segmentation() {
    // straight polyline → exactly one Straight segment
    let line: Vec<Point> = (0..40).map(|i| Point::new(i as f64 * 0.1, 0.3)).collect();
    assert_eq!(
        labels_of(&Trajectory::new(line, 1.0)),
        vec![MotionLabel::Straight]
    );

    // steps below 1.5e-4 per unit time → Pause
    let crawl: Vec<Point> = (0..40).map(|i| Point::new(i as f64 * 1.0e-4, 0.0)).collect();
    assert_eq!(
        labels_of(&Trajectory::new(crawl, 1.0)),
        vec![MotionLabel::Pause]
    );

    // 90° corner → a UTurn label at the corner
    let mut corner: Vec<Point> = (0..20).map(|i| Point::new(i as f64 * 0.1, 0.0)).collect();
    corner.extend((1..20).map(|i| Point::new(1.9, i as f64 * 0.1)));
    let labels = labels_of(&Trajectory::new(corner, 1.0));
    assert!(
        labels.contains(&MotionLabel::UTurn),
        "corner labels: {labels:?}"
    );
}

// --- 8. Closed-loop monotonicity ---------------------------------------

fn line_target() -> Trajectory {
    generate(&TargetShape {
        kind: ShapeKind::benchmark("line", 1.0).unwrap(),
        n_points: 64,
    })
    .unwrap()
}

fn criterion_08_loop() {
    let target = line_target();

    // accepted incumbents are non-increasing over a full run
    let backend = ScriptedBackend::new(ScriptedFixture::Default);
    let cfg = LoopConfig {
        r_max: 10,
        epsilon: 0.0,
        seed: 8,
        budget: OptimizerBudget::SMALL,
        ..LoopConfig::default()
    };
    let history = refinement_loop(
        "line",
        "Line",
        &target,
        &cfg,
        &backend,
        &mut ExemplarMemory::new(4),
    );
    assert!(history.aborted.is_none());
    let mut prev = f64::INFINITY;
    for r in &history.records {
        assert!(r.incumbent_chamfer <= prev + 1e-12, "incumbent increased");
        prev = r.incumbent_chamfer;
    }

    // a generous ε stops the loop right after the initial proposal
    let easy = LoopConfig {
        epsilon: 1e3,
        ..cfg.clone()
    };
    let early = refinement_loop(
        "line",
        "Line",
        &target,
        &easy,
        &backend,
        &mut ExemplarMemory::new(4),
    );
    assert_eq!(early.records.len(), 1, "ε-exit must skip all rounds");

    // an unreachable ε caps the episode at R_max = 10 rounds
    let stubborn = ScriptedBackend::new(ScriptedFixture::NeverImproving);
    let capped = refinement_loop(
        "line",
        "Line",
        &target,
        &cfg,
        &stubborn,
        &mut ExemplarMemory::new(4),
    );
    assert_eq!(capped.records.len(), 11, "proposal + R_max rounds");
}

// --- 9. Planner mapping -------------------------------------------------

fn criterion_09_planner() {
    let table = FailureModeTable::default();
    assert_eq!(
        table.canonical(FailureMode::Overconstraint),
        Some("remove a redundant link")
    );
    assert_eq!(table.canonical(FailureMode::Underconstraint), Some("add a loop"));

    // the Ellipse fixture walks the full diagnosis: a dof = 3 proposal
    // is labelled Overconstraint and the refiner restores dof = 1
    let backend = ScriptedBackend::new(ScriptedFixture::EllipseOverconstraint);
    let memory = ExemplarMemory::new(4);
    let proposal = topology_agent("trace an ellipse", "Ellipse", &memory, &backend, 3).unwrap();
    assert_eq!(proposal.linkage.dof().unwrap(), 3);

    let sim = simulate(&proposal.linkage, 32).unwrap();
    let report = critic(&proposal.linkage, None, &sim, None, &backend).unwrap();
    let refinement_plan = plan(&report, &table, &backend).unwrap();
    assert_eq!(refinement_plan.failure_mode, FailureMode::Overconstraint);
    assert!(refinement_plan.suggested_action.contains("remove a redundant link"));

    let (edited, _) = refine(&proposal.linkage, &refinement_plan, None, &backend, 3).unwrap();
    assert_eq!(edited.dof().unwrap(), 1, "edit must restore mobility one");
}

// --- 10. Enum+GA baseline ----------------------------------------------

fn criterion_10_enum_ga() {
    let target = line_target();

    let result = enum_ga(&target, OptimizerBudget::SMALL, 0, 64).unwrap();
    assert!(result.chamfer < PENALTY, "no feasible mechanism found");
    let sim = simulate(&result.best, 64).unwrap();
    assert!(sim.buildable);
    let mut prev = f64::INFINITY;
    for v in &result.trace {
        assert!(*v <= prev + 1e-12, "per-generation best increased");
        prev = *v;
    }

    // budget sweep {3×20, 6×20} × {4, 6} bars → (budget, bars, mean ± SE)
    let budgets = [
        OptimizerBudget {
            population: 3,
            iterations: 20,
        },
        OptimizerBudget {
            population: 6,
            iterations: 20,
        },
    ];
    let templates = [(4usize, fixtures::four_bar()), (6, fixtures::six_link_seven_joint())];
    let mut table = String::from("budget,bars,chamfer\n");
    for budget in budgets {
        for (bars, template) in &templates {
            let space = default_param_space(template);
            let finals: Vec<f64> = (0..3u64)
                .map(|seed| {
                    ga(template, &space, &target, budget, seed, 64)
                        .unwrap()
                        .chamfer
                })
                .collect();
            let stat = mean_se(&finals);
            table += &format!(
                "{}x{},{bars},{:.3} ± {:.3}\n",
                budget.population, budget.iterations, stat.mean, stat.se
            );
        }
    }
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "sweep table must have 4 cells");
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 3);
        assert!(cols[2].contains('±'), "row lacks mean ± SE: {row}");
    }
}

// --- 11. End-to-end run -------------------------------------------------

fn criterion_11_end_to_end() {
    let config = ExperimentConfig {
        model: "scripted".into(),
        shape: TargetShape {
            kind: ShapeKind::benchmark("line", 1.0).unwrap(),
            n_points: 32,
        },
        optimizer: OptimizerKind::Grid,
        planner: true,
        dr: true,
        cl: true,
        backend: BackendKind::Scripted,
        samples: 5,
        seed: 0,
        r_max: 2,
        epsilon: 0.005,
        n_steps: 32,
        budget: OptimizerBudget {
            population: 3,
            iterations: 20,
        },
        target_links: 4,
    };
    let id = config.id();

    let start = Instant::now();
    let dir1 = tempfile::tempdir().unwrap();
    run_matrix(std::slice::from_ref(&config), dir1.path()).unwrap();
    assert!(
        start.elapsed().as_secs() < 60,
        "run took {:?}",
        start.elapsed()
    );

    let csv1 = std::fs::read_to_string(dir1.path().join("results.csv")).unwrap();
    assert!(csv1.contains(CSV_COLUMNS), "missing column set:\n{csv1}");
    for i in 0..5 {
        let path = dir1.path().join(format!("history_{id}_{i}.jsonl"));
        assert!(path.exists(), "missing {path:?}");
    }
    let svgs = std::fs::read_dir(dir1.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".svg")
        })
        .count();
    assert!(svgs >= 1, "no mechanism SVG was rendered");

    // byte-identical rerun with the same seed
    let dir2 = tempfile::tempdir().unwrap();
    run_matrix(std::slice::from_ref(&config), dir2.path()).unwrap();
    let csv2 = std::fs::read_to_string(dir2.path().join("results.csv")).unwrap();
    assert_eq!(csv1, csv2, "results.csv is not reproducible");
}

// --- 12. Optimizer sanity ----------------------------------------------

fn criterion_12_optimizers() {
    // PSO on the 3-D sphere function
    let bounds = [(-5.0, 5.0); 3];
    let budget = OptimizerBudget {
        population: 20,
        iterations: 100,
    };
    let (_, best, _) =
        pso_minimize(&bounds, budget, 0, |x| x.iter().map(|v| v * v).sum()).unwrap();
    assert!(best < 1e-3, "PSO sphere minimum {best}");

    // grid on a 1-D quadratic whose minimum sits on the lattice
    let (params, val, _) = grid_minimize(&[(-2.0, 2.0)], 5, |x| (x[0] - 1.0).powi(2)).unwrap();
    assert_eq!(params, vec![1.0]);
    assert_eq!(val, 0.0);
}
