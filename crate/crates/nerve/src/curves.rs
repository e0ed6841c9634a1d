//! Input curve geometry: lines, circles, clamped cubic B-splines, and
//! polylines in `[-1,1]^3`, with chord-tolerance sampling to polylines.

use crate::bspline;
use crate::error::{NerveError, Result};
use crate::geom::{self, Vec3};
use serde::{Deserialize, Serialize};

const UNIT_NORMAL_TOL: f64 = 1e-9;

/// A single parametric curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Line {
        a: Vec3,
        b: Vec3,
    },
    Circle {
        center: Vec3,
        radius: f64,
        normal: Vec3,
    },
    BSpline {
        degree: usize,
        control_points: Vec<Vec3>,
        knots: Vec<f64>,
    },
    Polyline {
        vertices: Vec<Vec3>,
        closed: bool,
    },
}

/// Deterministic orthonormal in-plane basis `(u, v)` for a unit normal.
pub fn plane_basis(normal: &Vec3) -> (Vec3, Vec3) {
    let mut axis = 0;
    for a in 1..3 {
        if normal[a].abs() < normal[axis].abs() {
            axis = a;
        }
    }
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    let u = normal.cross(&e).normalize();
    let v = normal.cross(&u);
    (u, v)
}

impl Curve {
    pub fn circle(center: Vec3, radius: f64, normal: Vec3) -> Result<Self> {
        let n = normal.norm();
        if n < UNIT_NORMAL_TOL {
            return Err(NerveError::InvalidCurve("circle normal has zero length".into()));
        }
        Ok(Curve::Circle { center, radius, normal: normal / n })
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Curve::Circle { .. } => true,
            Curve::Polyline { closed, .. } => *closed,
            _ => false,
        }
    }

    /// Curve point at natural parameter `t` in `[0,1]`: lerp for lines,
    /// angle `2*pi*t` for circles, the knot domain for B-splines, and
    /// normalized arc length for polylines.
    pub fn point_at(&self, t: f64) -> Vec3 {
        match self {
            Curve::Line { a, b } => a + (b - a) * t,
            Curve::Circle { center, radius, normal } => {
                let (u, v) = plane_basis(normal);
                let theta = 2.0 * std::f64::consts::PI * t;
                center + (u * theta.cos() + v * theta.sin()) * *radius
            }
            Curve::BSpline { degree, control_points, knots } => {
                let (lo, hi) = bspline::domain(knots, *degree);
                bspline::eval_point(knots, *degree, control_points, lo + (hi - lo) * t)
            }
            Curve::Polyline { vertices, closed } => {
                if *closed {
                    let mut loop_pts = vertices.clone();
                    if loop_pts.first() != loop_pts.last() {
                        loop_pts.push(loop_pts[0]);
                    }
                    geom::polyline_point_at(&loop_pts, t)
                } else {
                    geom::polyline_point_at(vertices, t)
                }
            }
        }
    }

    /// Structural validation: geometry inside `[-1,1]^3`, unit circle
    /// normals, clamped knot vectors.
    pub fn validate(&self) -> Result<()> {
        let check_point = |p: &Vec3| -> Result<()> {
            if !p.iter().all(|c| c.is_finite()) || !geom::in_unit_domain(p) {
                return Err(NerveError::PointOutOfDomain(p.x, p.y, p.z));
            }
            Ok(())
        };
        match self {
            Curve::Line { a, b } => {
                check_point(a)?;
                check_point(b)?;
            }
            Curve::Circle { center, radius, normal } => {
                check_point(center)?;
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(NerveError::InvalidCurve(format!("circle radius {radius} must be positive")));
                }
                if (normal.norm() - 1.0).abs() > UNIT_NORMAL_TOL {
                    return Err(NerveError::InvalidCurve("circle normal must be unit length".into()));
                }
                // extent of the circle along axis a is radius*sqrt(1 - n_a^2)
                for a in 0..3 {
                    let reach = radius * (1.0 - normal[a] * normal[a]).max(0.0).sqrt();
                    if center[a] + reach > 1.0 || center[a] - reach < -1.0 {
                        return Err(NerveError::PointOutOfDomain(center.x, center.y, center.z));
                    }
                }
            }
            Curve::BSpline { degree, control_points, knots } => {
                if *degree != 3 {
                    return Err(NerveError::InvalidCurve(format!("B-spline degree {degree} unsupported; expected 3")));
                }
                for p in control_points {
                    check_point(p)?;
                }
                bspline::validate_knots(knots, *degree, control_points.len())
                    .map_err(NerveError::InvalidCurve)?;
            }
            Curve::Polyline { vertices, .. } => {
                if vertices.len() < 2 {
                    return Err(NerveError::InvalidCurve("polyline needs at least 2 vertices".into()));
                }
                for p in vertices {
                    check_point(p)?;
                }
            }
        }
        Ok(())
    }

    /// Samples the curve to a polyline whose chords deviate from the curve
    /// by at most `chord_tolerance`. Closed curves return a vertex list with
    /// the first vertex repeated at the end.
    pub fn sample(&self, chord_tolerance: f64) -> Result<SampledCurve> {
        if !(chord_tolerance > 0.0) {
            return Err(NerveError::InvalidCurve("chord tolerance must be positive".into()));
        }
        match self {
            Curve::Line { a, b } => {
                if (b - a).norm() == 0.0 {
                    return Err(NerveError::DegenerateCurve("zero-length line segment".into()));
                }
                Ok(SampledCurve { vertices: vec![*a, *b], closed: false })
            }
            Curve::Circle { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(NerveError::DegenerateCurve(format!("circle radius {radius}")));
                }
                // sagitta of a chord over angle dt is r*(1 - cos(dt/2))
                let max_dt = 2.0 * (1.0 - chord_tolerance / radius).clamp(-1.0, 1.0).acos();
                let segments = if max_dt > 0.0 {
                    ((2.0 * std::f64::consts::PI / max_dt).ceil() as usize).max(8)
                } else {
                    8
                };
                let mut vertices: Vec<Vec3> = (0..segments)
                    .map(|k| self.point_at(k as f64 / segments as f64))
                    .collect();
                // close the loop exactly on the first vertex
                vertices.push(vertices[0]);
                Ok(SampledCurve { vertices, closed: true })
            }
            Curve::BSpline { degree, control_points, knots } => {
                let (lo, hi) = bspline::domain(knots, *degree);
                if control_points.iter().all(|p| (p - control_points[0]).norm() == 0.0) {
                    return Err(NerveError::DegenerateCurve("all control points coincide".into()));
                }
                let eval = |u: f64| bspline::eval_point(knots, *degree, control_points, u);
                let mut vertices = vec![eval(lo)];
                // one initial interval per span keeps the recursion from
                // terminating early on symmetric wiggles
                let mut seeds: Vec<f64> = knots
                    .iter()
                    .copied()
                    .filter(|&k| k > lo && k <= hi)
                    .collect();
                seeds.dedup();
                let mut start = lo;
                for end in seeds {
                    subdivide_adaptive(&eval, start, end, chord_tolerance, 0, &mut vertices);
                    start = end;
                }
                Ok(SampledCurve { vertices, closed: false })
            }
            Curve::Polyline { vertices, closed } => {
                if geom::polyline_length(vertices) == 0.0 {
                    return Err(NerveError::DegenerateCurve("zero-length polyline".into()));
                }
                let mut out = vertices.clone();
                if *closed && out.first() != out.last() {
                    out.push(out[0]);
                }
                Ok(SampledCurve { vertices: out, closed: *closed })
            }
        }
    }
}

/// Recursive flatness-driven subdivision; pushes all vertices after `t0`.
fn subdivide_adaptive(
    eval: &impl Fn(f64) -> Vec3,
    t0: f64,
    t1: f64,
    tol: f64,
    depth: u32,
    out: &mut Vec<Vec3>,
) {
    let p0 = eval(t0);
    let p1 = eval(t1);
    let flat = [0.25, 0.5, 0.75].iter().all(|&s| {
        let p = eval(t0 + (t1 - t0) * s);
        point_segment_distance(&p, &p0, &p1) <= 0.5 * tol
    });
    if flat || depth >= 32 {
        out.push(p1);
        return;
    }
    let mid = 0.5 * (t0 + t1);
    subdivide_adaptive(eval, t0, mid, tol, depth + 1, out);
    subdivide_adaptive(eval, mid, t1, tol, depth + 1, out);
}

/// Distance from `p` to segment `[a, b]`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&d) / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Polyline sampled from a curve; closed loops carry an explicit closing
/// vertex equal to the first.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    pub vertices: Vec<Vec3>,
    pub closed: bool,
}

/// Collection of curves forming one shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveSet {
    pub curves: Vec<Curve>,
}

impl CurveSet {
    pub fn new(curves: Vec<Curve>) -> Self {
        Self { curves }
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.curves {
            c.validate()?;
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file: CurveSetJson = self.into();
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: CurveSetJson = serde_json::from_str(s)?;
        let set: CurveSet = (&file).try_into()?;
        set.validate()?;
        Ok(set)
    }
}

/// JSON wire format for curve sets. Fitted-curve outputs reuse the same
/// schema (with an extra `residual` field), so fitted files can be fed back
/// in as inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveSetJson {
    pub curves: Vec<CurveJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurveJson {
    Line {
        a: [f64; 3],
        b: [f64; 3],
    },
    Circle {
        center: [f64; 3],
        radius: f64,
        normal: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residual: Option<f64>,
    },
    BSpline {
        degree: usize,
        control_points: Vec<[f64; 3]>,
        knots: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        residual: Option<f64>,
    },
    Polyline {
        vertices: Vec<[f64; 3]>,
        closed: bool,
    },
}

fn to_vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

fn from_vec3(p: &Vec3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

impl From<&CurveSet> for CurveSetJson {
    fn from(set: &CurveSet) -> Self {
        let curves = set
            .curves
            .iter()
            .map(|c| match c {
                Curve::Line { a, b } => CurveJson::Line { a: from_vec3(a), b: from_vec3(b) },
                Curve::Circle { center, radius, normal } => CurveJson::Circle {
                    center: from_vec3(center),
                    radius: *radius,
                    normal: from_vec3(normal),
                    residual: None,
                },
                Curve::BSpline { degree, control_points, knots } => CurveJson::BSpline {
                    degree: *degree,
                    control_points: control_points.iter().map(from_vec3).collect(),
                    knots: knots.clone(),
                    residual: None,
                },
                Curve::Polyline { vertices, closed } => CurveJson::Polyline {
                    vertices: vertices.iter().map(from_vec3).collect(),
                    closed: *closed,
                },
            })
            .collect();
        CurveSetJson { curves }
    }
}

impl TryFrom<&CurveSetJson> for CurveSet {
    type Error = NerveError;

    fn try_from(file: &CurveSetJson) -> Result<Self> {
        let curves = file
            .curves
            .iter()
            .map(|c| match c {
                CurveJson::Line { a, b } => Curve::Line { a: to_vec3(*a), b: to_vec3(*b) },
                CurveJson::Circle { center, radius, normal, .. } => Curve::Circle {
                    center: to_vec3(*center),
                    radius: *radius,
                    normal: to_vec3(*normal),
                },
                CurveJson::BSpline { degree, control_points, knots, .. } => Curve::BSpline {
                    degree: *degree,
                    control_points: control_points.iter().map(|p| to_vec3(*p)).collect(),
                    knots: knots.clone(),
                },
                CurveJson::Polyline { vertices, closed } => Curve::Polyline {
                    vertices: vertices.iter().map(|p| to_vec3(*p)).collect(),
                    closed: *closed,
                },
            })
            .collect();
        Ok(CurveSet { curves })
    }
}
