//! The six benchmark target curves, generated as point sequences.

use crate::geom::Point;
use crate::linkage::Trajectory;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeKind {
    Circle {
        center: Point,
        radius: f64,
    },
    Ellipse {
        center: Point,
        a: f64,
        b: f64,
    },
    Line {
        from: Point,
        to: Point,
    },
    /// `y = c·t²` over `t ∈ [−1, 1]`, scaled and placed at `origin`.
    Parabola {
        origin: Point,
        scale: f64,
        c: f64,
    },
    /// Lemniscate of Bernoulli, `x = a·cos t/(1+sin²t)`, `y = a·sin t·cos t/(1+sin²t)`.
    Lemniscate {
        center: Point,
        a: f64,
    },
    /// NACA 4-digit profile, upper surface then lower surface.
    NacaAirfoil {
        code: String,
        chord: f64,
        origin: Point,
    },
}

impl ShapeKind {
    pub fn is_closed(&self) -> bool {
        !matches!(self, ShapeKind::Line { .. } | ShapeKind::Parabola { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Circle { .. } => "circle",
            ShapeKind::Ellipse { .. } => "ellipse",
            ShapeKind::Line { .. } => "line",
            ShapeKind::Parabola { .. } => "parabola",
            ShapeKind::Lemniscate { .. } => "lemniscate",
            ShapeKind::NacaAirfoil { .. } => "naca",
        }
    }

    /// The named benchmark shape at its default placement inside the
    /// `[0, 10]²` working box, scaled by `scale` about the box centre.
    pub fn benchmark(name: &str, scale: f64) -> Result<ShapeKind, TargetError> {
        let c = Point::new(5.0, 5.0);
        let kind = match name.to_ascii_lowercase().as_str() {
            "circle" => ShapeKind::Circle {
                center: c,
                radius: 4.0 * scale,
            },
            "ellipse" => ShapeKind::Ellipse {
                center: c,
                a: 4.0 * scale,
                b: 2.5 * scale,
            },
            "line" => ShapeKind::Line {
                from: Point::new(5.0 - 4.0 * scale, 5.0),
                to: Point::new(5.0 + 4.0 * scale, 5.0),
            },
            "parabola" => ShapeKind::Parabola {
                origin: Point::new(5.0, 1.0),
                scale: 4.0 * scale,
                c: 0.5,
            },
            "lemniscate" => ShapeKind::Lemniscate {
                center: c,
                a: 4.8 * scale,
            },
            "naca" | "nacaairfoil" => ShapeKind::NacaAirfoil {
                code: "2412".into(),
                chord: 8.0 * scale,
                origin: Point::new(1.0, 5.0),
            },
            other => return Err(TargetError::UnknownShape(other.into())),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetShape {
    #[serde(flatten)]
    pub kind: ShapeKind,
    pub n_points: usize,
}

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("n_points must be >= 2, got {0}")]
    TooFewPoints(usize),
    #[error("scale parameters must be > 0")]
    NonPositiveScale,
    #[error("NACA code must be 4 digits, got `{0}`")]
    BadNacaCode(String),
}

/// Generate the target as a sampled polyline.
///
/// `n_points` distinct parameter steps; closed shapes append a closing
/// duplicate of the first sample.
pub fn generate(shape: &TargetShape) -> Result<Trajectory, TargetError> {
    let n = shape.n_points;
    if n < 2 {
        return Err(TargetError::TooFewPoints(n));
    }
    let mut samples = Vec::with_capacity(n + 1);
    match &shape.kind {
        ShapeKind::Circle { center, radius } => {
            if !(*radius > 0.0) {
                return Err(TargetError::NonPositiveScale);
            }
            for k in 0..n {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                samples.push(*center + Point::new(radius * t.cos(), radius * t.sin()));
            }
        }
        ShapeKind::Ellipse { center, a, b } => {
            if !(*a > 0.0 && *b > 0.0) {
                return Err(TargetError::NonPositiveScale);
            }
            for k in 0..n {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                samples.push(*center + Point::new(a * t.cos(), b * t.sin()));
            }
        }
        ShapeKind::Line { from, to } => {
            for k in 0..n {
                let t = k as f64 / (n - 1) as f64;
                samples.push(*from + (*to - *from) * t);
            }
        }
        ShapeKind::Parabola { origin, scale, c } => {
            if !(*scale > 0.0) {
                return Err(TargetError::NonPositiveScale);
            }
            for k in 0..n {
                let t = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                samples.push(*origin + Point::new(t, c * t * t) * *scale);
            }
        }
        ShapeKind::Lemniscate { center, a } => {
            if !(*a > 0.0) {
                return Err(TargetError::NonPositiveScale);
            }
            for k in 0..n {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                let denom = 1.0 + t.sin() * t.sin();
                samples.push(
                    *center + Point::new(a * t.cos() / denom, a * t.sin() * t.cos() / denom),
                );
            }
        }
        ShapeKind::NacaAirfoil {
            code,
            chord,
            origin,
        } => {
            if !(*chord > 0.0) {
                return Err(TargetError::NonPositiveScale);
            }
            samples = naca_profile(code, *chord, *origin, n)?;
        }
    }
    if shape.kind.is_closed() {
        let first = samples[0];
        samples.push(first);
    }
    Ok(Trajectory::new(samples, 1.0))
}

/// NACA 4-digit section: upper surface trailing→leading edge, then
/// lower surface leading→trailing edge.
fn naca_profile(
    code: &str,
    chord: f64,
    origin: Point,
    n: usize,
) -> Result<Vec<Point>, TargetError> {
    if code.len() != 4 || !code.bytes().all(|b| b.is_ascii_digit()) {
        return Err(TargetError::BadNacaCode(code.into()));
    }
    let digits: Vec<f64> = code.bytes().map(|b| (b - b'0') as f64).collect();
    let m = digits[0] / 100.0;
    let p = digits[1] / 10.0;
    let tau = (digits[2] * 10.0 + digits[3]) / 100.0;

    let thickness = |x: f64| {
        5.0 * tau
            * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x
                - 0.1015 * x * x * x * x)
    };
    let camber = |x: f64| -> (f64, f64) {
        if m == 0.0 || p == 0.0 {
            (0.0, 0.0)
        } else if x < p {
            (m / (p * p) * (2.0 * p * x - x * x), 2.0 * m / (p * p) * (p - x))
        } else {
            (
                m / ((1.0 - p) * (1.0 - p)) * ((1.0 - 2.0 * p) + 2.0 * p * x - x * x),
                2.0 * m / ((1.0 - p) * (1.0 - p)) * (p - x),
            )
        }
    };

    let half = n / 2;
    let upper = n - half;
    let mut samples = Vec::with_capacity(n);
    // cosine spacing concentrates samples at the leading edge
    for k in 0..upper {
        let beta = std::f64::consts::PI * k as f64 / upper as f64;
        let x = 0.5 * (1.0 + beta.cos()); // 1 → 0
        let (yc, slope) = camber(x);
        let theta = slope.atan();
        let yt = thickness(x);
        samples.push(Point::new(x - yt * theta.sin(), yc + yt * theta.cos()));
    }
    for k in 0..half {
        let beta = std::f64::consts::PI * k as f64 / half as f64;
        let x = 0.5 * (1.0 - beta.cos()); // 0 → 1
        let (yc, slope) = camber(x);
        let theta = slope.atan();
        let yt = thickness(x);
        samples.push(Point::new(x + yt * theta.sin(), yc - yt * theta.cos()));
    }
    Ok(samples
        .into_iter()
        .map(|s| origin + s * chord)
        .collect())
}

/// Two-column x,y CSV with no header.
pub fn to_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    for p in &traj.samples {
        out.push_str(&format!("{:.9},{:.9}\n", p.x, p.y));
    }
    out
}
