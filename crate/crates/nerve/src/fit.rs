//! Parametric curve fitting: constrained least-squares cubic B-splines for
//! open paths, circle-first fitting for closed paths.

use nalgebra::{DMatrix, DVector};

use crate::bspline;
use crate::curves::{plane_basis, CurveJson, CurveSetJson};
use crate::error::{NerveError, Result};
use crate::geom::Vec3;
use crate::pwl::{CurvePath, PwlGraph};

/// Residual threshold below which a closed path is accepted as a circle.
pub const DEFAULT_CIRCLE_THRESHOLD: f64 = 0.001;

pub const SPLINE_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveGeometry {
    BSpline {
        degree: usize,
        control_points: Vec<Vec3>,
        knots: Vec<f64>,
    },
    Circle {
        center: Vec3,
        radius: f64,
        normal: Vec3,
    },
}

/// A fitted curve with its RMS fitting residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCurve {
    pub geometry: CurveGeometry,
    pub residual: f64,
}

impl ParametricCurve {
    pub fn is_circle(&self) -> bool {
        matches!(self.geometry, CurveGeometry::Circle { .. })
    }

    /// Evaluates the curve at normalized parameter `t` in `[0,1]`; circles
    /// use the angle `2*pi*t` in their plane frame.
    pub fn eval(&self, t: f64) -> Vec3 {
        match &self.geometry {
            CurveGeometry::BSpline { degree, control_points, knots } => {
                let (lo, hi) = bspline::domain(knots, *degree);
                bspline::eval_point(knots, *degree, control_points, lo + (hi - lo) * t)
            }
            CurveGeometry::Circle { center, radius, normal } => {
                let (u, v) = plane_basis(normal);
                let theta = 2.0 * std::f64::consts::PI * t;
                center + (u * theta.cos() + v * theta.sin()) * *radius
            }
        }
    }

    /// `count` uniform-parameter samples, endpoints included.
    pub fn sample(&self, count: usize) -> Vec<Vec3> {
        assert!(count >= 2);
        (0..count)
            .map(|k| self.eval(k as f64 / (count - 1) as f64))
            .collect()
    }

    pub fn to_json(&self) -> CurveJson {
        match &self.geometry {
            CurveGeometry::BSpline { degree, control_points, knots } => CurveJson::BSpline {
                degree: *degree,
                control_points: control_points.iter().map(|p| [p.x, p.y, p.z]).collect(),
                knots: knots.clone(),
                residual: Some(self.residual),
            },
            CurveGeometry::Circle { center, radius, normal } => CurveJson::Circle {
                center: [center.x, center.y, center.z],
                radius: *radius,
                normal: [normal.x, normal.y, normal.z],
                residual: Some(self.residual),
            },
        }
    }
}

/// Serializes fitted curves in the curve-set schema, so the output can be
/// fed back in as a `CurveSet`.
pub fn fitted_to_json(curves: &[ParametricCurve]) -> CurveSetJson {
    CurveSetJson { curves: curves.iter().map(|c| c.to_json()).collect() }
}

/// Normalized chord-length parameters for a point sequence.
fn chord_parameters(points: &[Vec3]) -> Result<Vec<f64>> {
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    let mut total = 0.0;
    for w in points.windows(2) {
        total += (w[1] - w[0]).norm();
        cum.push(total);
    }
    if total == 0.0 {
        return Err(NerveError::FitFailed("all path points coincide".into()));
    }
    let mut params: Vec<f64> = cum.iter().map(|c| c / total).collect();
    *params.last_mut().unwrap() = 1.0;
    Ok(params)
}

/// Least-squares cubic B-spline through ordered path points.
///
/// Interior knot count is half the path vertex count, clamped so the system
/// stays solvable; knots are uniform in `(0,1)`; data is parameterized by
/// normalized chord length; the first and last control points are pinned to
/// the path endpoints by substitution, so the fitted curve interpolates the
/// endpoints exactly.
pub fn fit_bspline(points: &[Vec3]) -> Result<ParametricCurve> {
    let n = points.len();
    if n < 2 {
        return Err(NerveError::FitFailed(format!("need at least 2 points, got {n}")));
    }
    let params = chord_parameters(points)?;
    let interior = (n / 2).min(n.saturating_sub(4));
    let knots = bspline::clamped_uniform_knots(SPLINE_DEGREE, interior);
    let ncp = interior + SPLINE_DEGREE + 1;
    let first = points[0];
    let last = points[n - 1];

    let mut control_points = vec![Vec3::zeros(); ncp];
    control_points[0] = first;
    control_points[ncp - 1] = last;

    let free = ncp - 2;
    if free > 0 {
        // chord-line initialization; the least-squares solve below adds the
        // minimum-norm correction, which also pins rank-deficient cases
        let init: Vec<Vec3> = (1..=free)
            .map(|j| first + (last - first) * (j as f64 / (ncp - 1) as f64))
            .collect();
        let mut a = DMatrix::zeros(n, free);
        let mut rhs = DMatrix::zeros(n, 3);
        for (i, (&u, p)) in params.iter().zip(points.iter()).enumerate() {
            let span = bspline::find_span(&knots, SPLINE_DEGREE, u);
            let basis = bspline::basis_functions(&knots, SPLINE_DEGREE, span, u);
            let mut res = *p;
            for (r, &w) in basis.iter().enumerate() {
                let col = span - SPLINE_DEGREE + r;
                if col == 0 {
                    res -= first * w;
                } else if col == ncp - 1 {
                    res -= last * w;
                } else {
                    a[(i, col - 1)] = w;
                    res -= init[col - 1] * w;
                }
            }
            for axis in 0..3 {
                rhs[(i, axis)] = res[axis];
            }
        }
        let svd = a.clone().svd(true, true);
        let eps = svd.singular_values.max() * 1e-12;
        let delta = svd
            .solve(&rhs, eps)
            .map_err(|e| NerveError::FitFailed(e.to_string()))?;
        for j in 0..free {
            control_points[j + 1] =
                init[j] + Vec3::new(delta[(j, 0)], delta[(j, 1)], delta[(j, 2)]);
        }
    }

    let curve = ParametricCurve {
        geometry: CurveGeometry::BSpline {
            degree: SPLINE_DEGREE,
            control_points,
            knots,
        },
        residual: 0.0,
    };
    let ssr: f64 = params
        .iter()
        .zip(points.iter())
        .map(|(&u, p)| (curve.eval(u) - p).norm_squared())
        .sum();
    Ok(ParametricCurve { residual: (ssr / n as f64).sqrt(), ..curve })
}

/// Direct 3D circle fit: best plane by principal component analysis, then a
/// linear algebraic circle fit in the plane. The residual is the RMS
/// distance of the points to the fitted circle (radial and out-of-plane
/// error combined).
pub fn fit_circle(points: &[Vec3]) -> Result<ParametricCurve> {
    let n = points.len();
    if n < 3 {
        return Err(NerveError::FitFailed(format!("need at least 3 points, got {n}")));
    }
    let centroid: Vec3 = points.iter().sum::<Vec3>() / n as f64;
    let mut cov = nalgebra::Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let [lo, mid, hi] = order;
    if eig.eigenvalues[hi] <= 0.0 || eig.eigenvalues[mid] <= 1e-12 * eig.eigenvalues[hi] {
        return Err(NerveError::FitFailed("points are collinear; plane fit is singular".into()));
    }
    let mut normal = Vec3::new(
        eig.eigenvectors[(0, lo)],
        eig.eigenvectors[(1, lo)],
        eig.eigenvectors[(2, lo)],
    )
    .normalize();
    // deterministic sign: largest-magnitude component positive
    let mut axis = 0;
    for a in 1..3 {
        if normal[a].abs() > normal[axis].abs() {
            axis = a;
        }
    }
    if normal[axis] < 0.0 {
        normal = -normal;
    }

    let (u, v) = plane_basis(&normal);
    let coords: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let d = p - centroid;
            (d.dot(&u), d.dot(&v), d.dot(&normal))
        })
        .collect();

    // algebraic fit: x^2 + y^2 = 2ax + 2by + c
    let mut a_mat = DMatrix::zeros(n, 3);
    let mut rhs = DVector::zeros(n);
    for (i, &(x, y, _)) in coords.iter().enumerate() {
        a_mat[(i, 0)] = 2.0 * x;
        a_mat[(i, 1)] = 2.0 * y;
        a_mat[(i, 2)] = 1.0;
        rhs[i] = x * x + y * y;
    }
    let svd = a_mat.svd(true, true);
    let eps = svd.singular_values.max() * 1e-12;
    let sol = svd.solve(&rhs, eps).map_err(|e| NerveError::FitFailed(e.to_string()))?;
    let (ca, cb, cc) = (sol[0], sol[1], sol[2]);
    let r2 = cc + ca * ca + cb * cb;
    if !(r2 > 0.0) {
        return Err(NerveError::FitFailed("degenerate circle fit (nonpositive radius)".into()));
    }
    let radius = r2.sqrt();
    let center = centroid + u * ca + v * cb;

    // RMS distance of each point to the circle as a space curve
    let msd: f64 = coords
        .iter()
        .map(|&(x, y, z)| {
            let radial = ((x - ca).powi(2) + (y - cb).powi(2)).sqrt() - radius;
            radial * radial + z * z
        })
        .sum::<f64>()
        / n as f64;

    Ok(ParametricCurve {
        geometry: CurveGeometry::Circle { center, radius, normal },
        residual: msd.sqrt(),
    })
}

/// Fits one traced path: closed paths try a circle first and fall back to a
/// B-spline (on the loop split at its starting vertex, with coincident
/// endpoints) when the circle residual reaches `circle_threshold`; open
/// paths fit a B-spline directly.
pub fn fit_path(
    path: &CurvePath,
    graph: &PwlGraph,
    circle_threshold: f64,
) -> Result<ParametricCurve> {
    let points = path.points(graph);
    if path.closed {
        if let Ok(circle) = fit_circle(&points) {
            if circle.residual < circle_threshold {
                return Ok(circle);
            }
        }
        let mut loop_points = points;
        loop_points.push(loop_points[0]);
        fit_bspline(&loop_points)
    } else {
        fit_bspline(&points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::PwlVertex;
    use rand::{Rng, SeedableRng};

    fn line_points(n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                Vec3::new(-0.8 + 1.6 * t, 0.2 - 0.4 * t, 0.1 * t)
            })
            .collect()
    }

    #[test]
    fn collinear_points_fit_exactly() {
        let pts = line_points(10);
        let c = fit_bspline(&pts).unwrap();
        assert!(c.residual <= 1e-9, "residual {}", c.residual);
        assert!((c.eval(0.0) - pts[0]).norm() <= 1e-9);
        assert!((c.eval(1.0) - pts[9]).norm() <= 1e-9);
    }

    #[test]
    fn four_points_clamp_to_single_bezier() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.3, 0.2, 0.0),
            Vec3::new(0.6, 0.1, 0.1),
            Vec3::new(0.9, 0.0, 0.0),
        ];
        let c = fit_bspline(&pts).unwrap();
        let CurveGeometry::BSpline { control_points, knots, .. } = &c.geometry else {
            panic!("expected spline")
        };
        assert_eq!(control_points.len(), 4);
        assert_eq!(knots.len(), 8);
        assert!((c.eval(0.0) - pts[0]).norm() <= 1e-12);
        assert!((c.eval(1.0) - pts[3]).norm() <= 1e-12);
    }

    #[test]
    fn two_points_reproduce_segment() {
        let pts = vec![Vec3::new(-0.4, 0.1, 0.0), Vec3::new(0.6, -0.3, 0.2)];
        let c = fit_bspline(&pts).unwrap();
        assert!(c.residual <= 1e-12);
        let mid = c.eval(0.5);
        assert!((mid - (pts[0] + pts[1]) * 0.5).norm() <= 1e-12);
    }

    #[test]
    fn refit_of_spline_samples_is_nested() {
        // gentle, near-arc-length spline: its interior knot 0.5 reappears in
        // the refit knot vector, so the refit space contains the curve
        let cps = vec![
            Vec3::new(-0.8, 0.0, 0.0),
            Vec3::new(-0.4, 0.08, 0.03),
            Vec3::new(0.0, -0.06, -0.04),
            Vec3::new(0.4, 0.08, 0.02),
            Vec3::new(0.8, 0.0, 0.0),
        ];
        let knots = bspline::clamped_uniform_knots(3, 1);
        let original = ParametricCurve {
            geometry: CurveGeometry::BSpline { degree: 3, control_points: cps, knots },
            residual: 0.0,
        };
        let samples = original.sample(50);
        let refit = fit_bspline(&samples).unwrap();
        assert!(refit.residual <= 1e-6, "refit residual {}", refit.residual);
    }

    #[test]
    fn fit_bspline_guards() {
        assert!(fit_bspline(&[Vec3::zeros()]).is_err());
        assert!(fit_bspline(&[Vec3::zeros(); 5]).is_err());
    }

    fn circle_points(center: Vec3, radius: f64, normal: Vec3, n: usize) -> Vec<Vec3> {
        let (u, v) = plane_basis(&normal.normalize());
        (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + (u * th.cos() + v * th.sin()) * radius
            })
            .collect()
    }

    #[test]
    fn exact_circle_recovered() {
        let center = Vec3::new(0.1, 0.2, 0.3);
        let pts = circle_points(center, 0.4, Vec3::new(0.0, 0.0, 1.0), 16);
        let c = fit_circle(&pts).unwrap();
        let CurveGeometry::Circle { center: fc, radius, normal } = c.geometry else {
            panic!("expected circle")
        };
        assert!((fc - center).norm() <= 1e-9);
        assert!((radius - 0.4).abs() <= 1e-9);
        assert!((normal.dot(&Vec3::new(0.0, 0.0, 1.0)).abs() - 1.0).abs() <= 1e-9);
        assert!(c.residual <= 1e-9);
    }

    #[test]
    fn noisy_circle_residual_in_expected_band() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut pts = circle_points(Vec3::new(0.1, 0.2, 0.3), 0.4, Vec3::new(0.0, 0.0, 1.0), 16);
        for p in &mut pts {
            p.z += rng.random_range(-1e-3..1e-3);
        }
        let c = fit_circle(&pts).unwrap();
        assert!(c.residual >= 1e-4 && c.residual <= 1e-2, "residual {}", c.residual);
        let CurveGeometry::Circle { radius, .. } = c.geometry else { unreachable!() };
        assert!((radius - 0.4).abs() <= 1e-2);
    }

    #[test]
    fn collinear_points_rejected() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.5, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        assert!(fit_circle(&pts).is_err());
    }

    #[test]
    fn circle_fit_is_rigid_motion_equivariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let pts = circle_points(
                Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.0),
                rng.random_range(0.2..0.6),
                Vec3::new(0.0, 0.0, 1.0),
                12,
            );
            let rot = nalgebra::Rotation3::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let shift = Vec3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
            );
            let moved: Vec<Vec3> = pts.iter().map(|p| rot * p + shift).collect();
            let a = fit_circle(&pts).unwrap();
            let b = fit_circle(&moved).unwrap();
            let CurveGeometry::Circle { center: c1, radius: r1, normal: n1 } = a.geometry else {
                unreachable!()
            };
            let CurveGeometry::Circle { center: c2, radius: r2, normal: n2 } = b.geometry else {
                unreachable!()
            };
            assert!((r1 - r2).abs() <= 1e-9);
            assert!(((rot * c1 + shift) - c2).norm() <= 1e-9);
            assert!(((rot * n1).dot(&n2).abs() - 1.0).abs() <= 1e-9);
        }
    }

    fn path_graph(points: &[Vec3], closed: bool) -> (CurvePath, PwlGraph) {
        let vertices: Vec<PwlVertex> = points
            .iter()
            .enumerate()
            .map(|(i, p)| PwlVertex { cube: (i as u32, 0, 0), position: *p })
            .collect();
        let n = vertices.len() as u32;
        let mut edges: Vec<(u32, u32)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if closed {
            edges.push((n - 1, 0));
        }
        let graph = PwlGraph::new(vertices, edges).unwrap();
        let path = CurvePath { vertices: (0..n).collect(), closed };
        (path, graph)
    }

    #[test]
    fn closed_circle_path_yields_circle() {
        let pts = circle_points(Vec3::new(0.0, 0.1, -0.2), 0.5, Vec3::new(0.0, 1.0, 0.0), 24);
        let (path, graph) = path_graph(&pts, true);
        let c = fit_path(&path, &graph, DEFAULT_CIRCLE_THRESHOLD).unwrap();
        assert!(c.is_circle());
    }

    #[test]
    fn square_loop_falls_back_to_spline() {
        // 4 corners plus side midpoints of a square: circle residual is far
        // above the 0.001 gate
        let s = 0.4;
        let corners = [
            Vec3::new(-s, -s, 0.0),
            Vec3::new(s, -s, 0.0),
            Vec3::new(s, s, 0.0),
            Vec3::new(-s, s, 0.0),
        ];
        let mut pts = Vec::new();
        for i in 0..4 {
            pts.push(corners[i]);
            pts.push((corners[i] + corners[(i + 1) % 4]) * 0.5);
        }
        let circle = fit_circle(&pts).unwrap();
        assert!(circle.residual >= DEFAULT_CIRCLE_THRESHOLD, "residual {}", circle.residual);
        let (path, graph) = path_graph(&pts, true);
        let c = fit_path(&path, &graph, DEFAULT_CIRCLE_THRESHOLD).unwrap();
        assert!(!c.is_circle());
        // loop split at the starting vertex: both curve ends at the start
        assert!((c.eval(0.0) - pts[0]).norm() <= 1e-9);
        assert!((c.eval(1.0) - pts[0]).norm() <= 1e-9);
    }

    #[test]
    fn open_chain_fits_directly() {
        let pts = line_points(8);
        let (path, graph) = path_graph(&pts, false);
        let c = fit_path(&path, &graph, DEFAULT_CIRCLE_THRESHOLD).unwrap();
        assert!(!c.is_circle());
        assert!(c.residual <= 1e-9);
    }

    #[test]
    fn eval_and_sampling() {
        let pts = line_points(6);
        let c = fit_bspline(&pts).unwrap();
        // equispaced collinear data: chord parameterization is uniform, so
        // t = 0.5 lands on the segment midpoint
        let mid = (pts[0] + pts[5]) * 0.5;
        assert!((c.eval(0.5) - mid).norm() <= 1e-9);
        let two = c.sample(2);
        assert!((two[0] - pts[0]).norm() <= 1e-12);
        assert!((two[1] - pts[5]).norm() <= 1e-12);

        let circle = fit_circle(&circle_points(Vec3::zeros(), 0.5, Vec3::new(0.0, 0.0, 1.0), 16))
            .unwrap();
        assert!((circle.eval(0.0) - circle.eval(1.0)).norm() <= 1e-12);
    }

    #[test]
    fn endpoint_interpolation_on_random_paths() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            let n = rng.random_range(2..40);
            let mut p = Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let mut pts = vec![p];
            for _ in 1..n {
                p += Vec3::new(
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                );
                pts.push(p);
            }
            if pts.windows(2).all(|w| w[0] == w[1]) {
                continue;
            }
            let c = fit_bspline(&pts).unwrap();
            assert!((c.eval(0.0) - pts[0]).norm() <= 1e-9);
            assert!((c.eval(1.0) - pts[n - 1]).norm() <= 1e-9);
        }
    }

    #[test]
    fn least_squares_optimality_under_perturbation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let n = 14;
        let pts: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                Vec3::new(t, (3.0 * t).sin() * 0.2 + rng.random_range(-0.02..0.02), 0.1 * t)
            })
            .collect();
        let fitted = fit_bspline(&pts).unwrap();
        let CurveGeometry::BSpline { control_points, knots, degree } = &fitted.geometry else {
            unreachable!()
        };
        let params = chord_parameters(&pts).unwrap();
        let ssr = |cps: &[Vec3]| -> f64 {
            params
                .iter()
                .zip(pts.iter())
                .map(|(&u, p)| (bspline::eval_point(knots, *degree, cps, u) - p).norm_squared())
                .sum()
        };
        let base = ssr(control_points);
        for j in 1..control_points.len() - 1 {
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    let mut perturbed = control_points.clone();
                    perturbed[j][axis] += sign * 1e-4;
                    assert!(ssr(&perturbed) >= base - 1e-15, "cp {j} axis {axis}");
                }
            }
        }
    }

    #[test]
    fn fitted_json_roundtrips_as_curve_set() {
        let circle = fit_circle(&circle_points(Vec3::zeros(), 0.5, Vec3::new(0.0, 0.0, 1.0), 16))
            .unwrap();
        let spline = fit_bspline(&line_points(6)).unwrap();
        let json = fitted_to_json(&[circle, spline]);
        let text = serde_json::to_string(&json).unwrap();
        let set = crate::curves::CurveSet::from_json_str(&text).unwrap();
        assert_eq!(set.curves.len(), 2);
    }
}
