//! Bounded temporal-logic sketches over lifted traces, plus the
//! feature-primitive sequence used by the CL representation.

use super::events::{Event, EventKind};
use super::proxies::{KinematicProxies, LiftingError, QualSignature};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    InRegion(String),
    CrossGuard(String),
    CurvZero,
    Inf,
    ExX,
    ExY,
    Sint,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::InRegion(id) => write!(f, "in({id})"),
            Atom::CrossGuard(id) => write!(f, "cross({id})"),
            Atom::CurvZero => f.write_str("curv0"),
            Atom::Inf => f.write_str("INF"),
            Atom::ExX => f.write_str("EX_x"),
            Atom::ExY => f.write_str("EX_y"),
            Atom::Sint => f.write_str("SINT"),
        }
    }
}

/// Temporal formula with absolute bounded intervals over normalized
/// time in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TemporalFormula {
    Atom(Atom),
    Not(Box<TemporalFormula>),
    And(Vec<TemporalFormula>),
    Or(Vec<TemporalFormula>),
    Eventually {
        lo: f64,
        hi: f64,
        inner: Box<TemporalFormula>,
    },
    Always {
        lo: f64,
        hi: f64,
        inner: Box<TemporalFormula>,
    },
    Until {
        lo: f64,
        hi: f64,
        lhs: Box<TemporalFormula>,
        rhs: Box<TemporalFormula>,
    },
}

impl fmt::Display for TemporalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalFormula::Atom(a) => write!(f, "{a}"),
            TemporalFormula::Not(inner) => write!(f, "¬{inner}"),
            TemporalFormula::And(parts) => {
                let strs: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                f.write_str(&strs.join(" ∧ "))
            }
            TemporalFormula::Or(parts) => {
                let strs: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                f.write_str(&strs.join(" | "))
            }
            TemporalFormula::Eventually { lo, hi, inner } => {
                write!(f, "F_[{lo:.3},{hi:.3}]({inner})")
            }
            TemporalFormula::Always { lo, hi, inner } => {
                write!(f, "G_[{lo:.3},{hi:.3}]({inner})")
            }
            TemporalFormula::Until { lo, hi, lhs, rhs } => {
                write!(f, "({lhs} U_[{lo:.3},{hi:.3}] {rhs})")
            }
        }
    }
}

/// Sampled trace against which formulas are evaluated: per-atom truth
/// vectors aligned with normalized sample times.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    pub atoms: BTreeMap<Atom, Vec<bool>>,
}

impl Trace {
    pub fn new(times: Vec<f64>) -> Trace {
        Trace {
            times,
            atoms: BTreeMap::new(),
        }
    }

    pub fn set_atom(&mut self, atom: Atom, truth: Vec<bool>) {
        assert_eq!(truth.len(), self.times.len());
        self.atoms.insert(atom, truth);
    }

    fn atom_vec(&self, atom: &Atom) -> Vec<bool> {
        self.atoms
            .get(atom)
            .cloned()
            .unwrap_or_else(|| vec![false; self.times.len()])
    }

    /// Build a trace from kinematic proxies and detected events:
    /// instantaneous events are marked at their nearest sample.
    pub fn from_lift(
        px: &KinematicProxies,
        events: &[Event],
        region_membership: &BTreeMap<String, Vec<bool>>,
    ) -> Trace {
        let n = px.curvatures.len();
        let denom = (n - 1).max(1) as f64;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / denom).collect();
        let mut trace = Trace::new(times);

        let curv0: Vec<bool> = px
            .curvatures
            .iter()
            .map(|k| k.abs() < super::CURVATURE_MARGIN)
            .collect();
        trace.set_atom(Atom::CurvZero, curv0);

        for (id, truth) in region_membership {
            trace.set_atom(Atom::InRegion(id.clone()), truth.clone());
        }

        for ev in events {
            let atom = match &ev.kind {
                EventKind::Inf => Atom::Inf,
                EventKind::ExX => Atom::ExX,
                EventKind::ExY => Atom::ExY,
                EventKind::Sint => Atom::Sint,
                EventKind::GuardCross => {
                    Atom::CrossGuard(ev.payload.clone().unwrap_or_else(|| "L_0".into()))
                }
                _ => continue, // region relations come from membership vectors
            };
            let idx = ((ev.t * denom).round() as usize).min(n - 1);
            let mut truth = trace.atom_vec(&atom);
            truth[idx] = true;
            trace.atoms.insert(atom, truth);
        }
        trace
    }
}

/// Evaluate a formula on a trace. Temporal intervals are absolute, so
/// the result is a single truth value; `U` requires the left operand to
/// hold from t = 0 until the witness of the right operand.
pub fn evaluate(formula: &TemporalFormula, trace: &Trace) -> Result<bool, LiftingError> {
    // a formula is judged at t = 0
    Ok(truth_vector(formula, trace)?[0])
}

fn in_interval(t: f64, lo: f64, hi: f64) -> bool {
    t >= lo - 1e-12 && t <= hi + 1e-12
}

fn truth_vector(formula: &TemporalFormula, trace: &Trace) -> Result<Vec<bool>, LiftingError> {
    let n = trace.times.len();
    if n == 0 {
        return Err(LiftingError::EmptyTrajectory);
    }
    match formula {
        TemporalFormula::Atom(a) => Ok(trace.atom_vec(a)),
        TemporalFormula::Not(inner) => {
            Ok(truth_vector(inner, trace)?.iter().map(|b| !b).collect())
        }
        TemporalFormula::And(parts) => {
            let mut acc = vec![true; n];
            for p in parts {
                let v = truth_vector(p, trace)?;
                for (a, b) in acc.iter_mut().zip(v) {
                    *a = *a && b;
                }
            }
            Ok(acc)
        }
        TemporalFormula::Or(parts) => {
            let mut acc = vec![false; n];
            for p in parts {
                let v = truth_vector(p, trace)?;
                for (a, b) in acc.iter_mut().zip(v) {
                    *a = *a || b;
                }
            }
            Ok(acc)
        }
        TemporalFormula::Eventually { lo, hi, inner } => {
            check_interval(*lo, *hi)?;
            let v = truth_vector(inner, trace)?;
            let holds = trace
                .times
                .iter()
                .zip(&v)
                .any(|(t, b)| *b && in_interval(*t, *lo, *hi));
            Ok(vec![holds; n])
        }
        TemporalFormula::Always { lo, hi, inner } => {
            check_interval(*lo, *hi)?;
            let v = truth_vector(inner, trace)?;
            let holds = trace
                .times
                .iter()
                .zip(&v)
                .all(|(t, b)| *b || !in_interval(*t, *lo, *hi));
            Ok(vec![holds; n])
        }
        TemporalFormula::Until { lo, hi, lhs, rhs } => {
            check_interval(*lo, *hi)?;
            let lv = truth_vector(lhs, trace)?;
            let rv = truth_vector(rhs, trace)?;
            let mut holds = false;
            for k in 0..n {
                if !in_interval(trace.times[k], *lo, *hi) || !rv[k] {
                    continue;
                }
                if lv.iter().take(k).all(|&b| b) {
                    holds = true;
                    break;
                }
            }
            Ok(vec![holds; n])
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<(), LiftingError> {
    if lo > hi || !lo.is_finite() || !hi.is_finite() {
        return Err(LiftingError::BadInterval { lo, hi });
    }
    Ok(())
}

/// One qualitative segment of the CL feature sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePrimitive {
    /// Hysteretic curvature sign over the run: -1, 0, or 1.
    pub curv: i8,
    /// (sign dx, sign dy) monotonicity pair.
    pub mono: (i8, i8),
    /// Fraction of total samples covered by the run.
    pub len: f64,
    /// First event whose time falls inside the run, if any.
    pub ev: Option<EventKind>,
}

impl fmt::Display for FeaturePrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sgn = |s: i8| match s {
            1 => "+",
            -1 => "-",
            _ => "0",
        };
        write!(
            f,
            "[curv={} mono=({},{}) len={:.3}",
            sgn(self.curv),
            sgn(self.mono.0),
            sgn(self.mono.1),
            self.len
        )?;
        if let Some(ev) = &self.ev {
            write!(f, " ev={ev}")?;
        }
        f.write_str("]")
    }
}

/// Compress the qualitative signature into maximal runs of constant
/// (curvature sign, monotonicity pair), annotating each with the first
/// co-located event.
pub fn compose_sketch(px: &KinematicProxies, events: &[Event]) -> Vec<FeaturePrimitive> {
    let sig = QualSignature::from_proxies(px);
    let n = sig.curvature_sign.len();
    if n == 0 {
        return Vec::new();
    }
    let key = |i: usize| (sig.curvature_sign[i], sig.mono_x[i], sig.mono_y[i]);
    let denom = (n - 1).max(1) as f64;
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..=n {
        if i < n && key(i) == key(start) {
            continue;
        }
        let (t0, t1) = (start as f64 / denom, (i - 1) as f64 / denom);
        let ev = events
            .iter()
            .find(|e| e.t >= t0 - 1e-12 && e.t <= t1 + 1e-12)
            .map(|e| e.kind);
        let (curv, mx, my) = key(start);
        out.push(FeaturePrimitive {
            curv,
            mono: (mx, my),
            len: (i - start) as f64 / n as f64,
            ev,
        });
        start = i;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecConfig {
    pub region_id: String,
    pub guard_id: String,
    /// Sample count of the trace; sets the half-width of event windows.
    pub n_samples: usize,
    /// Maximum number of per-event `F` windows emitted.
    pub max_windows: usize,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            region_id: "R_in".into(),
            guard_id: "L_0".into(),
            n_samples: 64,
            max_windows: 4,
        }
    }
}

/// Synthesize a bounded specification sketch from detected events: a
/// global containment invariant, narrow windows around salient events,
/// a global disjunctive reachability clause, and an ordering constraint
/// over the first guard crossing.
pub fn synthesize_spec(events: &[Event], cfg: &SpecConfig) -> TemporalFormula {
    let mut conjuncts = vec![TemporalFormula::Always {
        lo: 0.0,
        hi: 1.0,
        inner: Box::new(TemporalFormula::Atom(Atom::InRegion(cfg.region_id.clone()))),
    }];

    let h = 0.5 / cfg.n_samples.max(1) as f64;
    let atom_of = |kind: EventKind| match kind {
        EventKind::Inf => Some(Atom::Inf),
        EventKind::ExX => Some(Atom::ExX),
        EventKind::ExY => Some(Atom::ExY),
        EventKind::Sint => Some(Atom::Sint),
        _ => None,
    };

    let salient: Vec<(&Event, Atom)> = events
        .iter()
        .filter_map(|e| atom_of(e.kind).map(|a| (e, a)))
        .collect();

    for (ev, atom) in salient.iter().take(cfg.max_windows) {
        conjuncts.push(TemporalFormula::Eventually {
            lo: (ev.t - h).max(0.0),
            hi: (ev.t + h).min(1.0),
            inner: Box::new(TemporalFormula::Atom(atom.clone())),
        });
    }

    if !salient.is_empty() {
        let mut kinds: Vec<Atom> = salient.iter().map(|(_, a)| a.clone()).collect();
        kinds.sort();
        kinds.dedup();
        let disjunct = if kinds.len() == 1 {
            TemporalFormula::Atom(kinds.remove(0))
        } else {
            TemporalFormula::Or(kinds.into_iter().map(TemporalFormula::Atom).collect())
        };
        conjuncts.push(TemporalFormula::Eventually {
            lo: 0.0,
            hi: 1.0,
            inner: Box::new(disjunct),
        });
    }

    if let Some(first_cross) = events
        .iter()
        .find(|e| e.kind == EventKind::GuardCross && e.payload.as_deref() == Some(&cfg.guard_id))
    {
        conjuncts.push(TemporalFormula::Until {
            lo: 0.0,
            hi: first_cross.t,
            lhs: Box::new(TemporalFormula::Not(Box::new(TemporalFormula::Atom(
                Atom::CrossGuard(cfg.guard_id.clone()),
            )))),
            rhs: Box::new(TemporalFormula::Atom(Atom::InRegion(cfg.region_id.clone()))),
        });
    }

    TemporalFormula::And(conjuncts)
}
