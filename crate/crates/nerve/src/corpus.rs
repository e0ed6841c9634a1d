//! Deterministic synthetic shape corpus used by the evaluation harness and
//! the acceptance suite: box wireframes, circles at varied orientation,
//! open cubic B-splines, and a theta junction.

use nalgebra::Rotation3;

use crate::bspline;
use crate::curves::{Curve, CurveSet};
use crate::geom::Vec3;

/// A named test shape.
#[derive(Debug, Clone)]
pub struct Shape {
    pub name: String,
    pub curves: CurveSet,
}

/// The 12 wireframe edges of a (possibly rotated) box.
pub fn box_wireframe(center: Vec3, half_extents: Vec3, rotation: Option<Rotation3<f64>>) -> CurveSet {
    let h = half_extents;
    let corner = |sx: f64, sy: f64, sz: f64| {
        let local = Vec3::new(sx * h.x, sy * h.y, sz * h.z);
        match rotation {
            Some(rot) => center + rot * local,
            None => center + local,
        }
    };
    let signs = [-1.0, 1.0];
    let mut corners = Vec::new();
    for &sx in &signs {
        for &sy in &signs {
            for &sz in &signs {
                corners.push(corner(sx, sy, sz));
            }
        }
    }
    // corner index: ((sx+1)/2)*4 + ((sy+1)/2)*2 + (sz+1)/2
    let edges = [
        (0, 1), (2, 3), (4, 5), (6, 7), // z-direction
        (0, 2), (1, 3), (4, 6), (5, 7), // y-direction
        (0, 4), (1, 5), (2, 6), (3, 7), // x-direction
    ];
    let curves = edges
        .iter()
        .map(|&(a, b)| Curve::Line { a: corners[a], b: corners[b] })
        .collect();
    CurveSet::new(curves)
}

/// Clamped cubic spline through the given control points with uniform
/// interior knots.
fn spline(control_points: Vec<Vec3>) -> Curve {
    let interior = control_points.len() - 4;
    Curve::BSpline {
        degree: 3,
        control_points,
        knots: bspline::clamped_uniform_knots(3, interior),
    }
}

/// Three branches between the shared endpoints `(-0.5, 0, 0)` and
/// `(0.5, 0, 0)`: a straight line and two opposite spline arcs.
pub fn theta_shape() -> CurveSet {
    let a = Vec3::new(-0.5, 0.0, 0.0);
    let b = Vec3::new(0.5, 0.0, 0.0);
    let arc = |bulge: f64| {
        spline(vec![
            a,
            Vec3::new(-0.3, 0.85 * bulge, 0.0),
            Vec3::new(0.0, bulge, 0.0),
            Vec3::new(0.3, 0.85 * bulge, 0.0),
            b,
        ])
    };
    CurveSet::new(vec![Curve::Line { a, b }, arc(0.55), arc(-0.55)])
}

/// Twenty shapes covering wireframes, circles, splines, and a junction.
pub fn restoration_corpus() -> Vec<Shape> {
    let mut shapes = Vec::new();
    let mut push = |name: &str, curves: CurveSet| {
        shapes.push(Shape { name: name.to_string(), curves });
    };

    push("cube_wireframe", box_wireframe(Vec3::zeros(), Vec3::new(0.75, 0.75, 0.75), None));
    push(
        "flat_box_wireframe",
        box_wireframe(Vec3::new(0.05, -0.1, 0.0), Vec3::new(0.8, 0.5, 0.3), None),
    );
    push(
        "rotated_box_wireframe",
        box_wireframe(
            Vec3::new(-0.05, 0.05, 0.1),
            Vec3::new(0.55, 0.45, 0.5),
            Some(Rotation3::from_euler_angles(0.35, -0.5, 0.25)),
        ),
    );
    push("small_cube_wireframe", box_wireframe(Vec3::new(0.2, 0.15, -0.2), Vec3::new(0.35, 0.35, 0.35), None));

    let circles: [(Vec3, f64, Vec3); 8] = [
        (Vec3::new(0.0, 0.0, 0.0), 0.6, Vec3::new(0.0, 0.0, 1.0)),
        (Vec3::new(0.1, -0.1, 0.2), 0.45, Vec3::new(1.0, 0.0, 0.0)),
        (Vec3::new(-0.2, 0.1, -0.1), 0.5, Vec3::new(0.0, 1.0, 0.0)),
        (Vec3::new(0.0, 0.2, 0.0), 0.55, Vec3::new(1.0, 1.0, 1.0)),
        (Vec3::new(0.15, 0.0, -0.15), 0.3, Vec3::new(1.0, -1.0, 0.0)),
        (Vec3::new(-0.1, -0.2, 0.1), 0.7, Vec3::new(0.2, 0.3, 1.0)),
        (Vec3::new(0.3, 0.3, 0.3), 0.25, Vec3::new(0.0, 0.0, 1.0)),
        (Vec3::new(-0.3, 0.0, 0.25), 0.4, Vec3::new(1.0, 0.4, -0.3)),
    ];
    for (i, (center, radius, normal)) in circles.into_iter().enumerate() {
        let c = Curve::circle(center, radius, normal).expect("corpus circle normal nonzero");
        push(&format!("circle_{i}"), CurveSet::new(vec![c]));
    }

    let splines: [Vec<Vec3>; 7] = [
        vec![
            Vec3::new(-0.8, -0.6, -0.2),
            Vec3::new(-0.4, -0.5, 0.0),
            Vec3::new(0.0, -0.55, 0.2),
            Vec3::new(0.4, -0.45, 0.1),
            Vec3::new(0.8, -0.6, -0.1),
        ],
        vec![
            Vec3::new(-0.7, 0.7, 0.0),
            Vec3::new(-0.3, 0.5, 0.3),
            Vec3::new(0.1, 0.65, 0.5),
            Vec3::new(0.5, 0.55, 0.2),
            Vec3::new(0.8, 0.7, 0.0),
        ],
        vec![
            Vec3::new(-0.2, -0.8, -0.5),
            Vec3::new(-0.1, -0.4, -0.3),
            Vec3::new(0.15, 0.0, -0.45),
            Vec3::new(0.0, 0.4, -0.3),
            Vec3::new(-0.15, 0.8, -0.5),
        ],
        vec![
            Vec3::new(-0.75, 0.0, 0.6),
            Vec3::new(-0.35, 0.25, 0.5),
            Vec3::new(0.0, 0.0, 0.65),
            Vec3::new(0.35, -0.25, 0.5),
            Vec3::new(0.75, 0.0, 0.6),
        ],
        vec![
            Vec3::new(0.6, -0.7, 0.3),
            Vec3::new(0.4, -0.35, 0.45),
            Vec3::new(0.55, 0.0, 0.3),
            Vec3::new(0.4, 0.35, 0.45),
            Vec3::new(0.6, 0.7, 0.3),
        ],
        vec![
            Vec3::new(-0.8, 0.2, -0.7),
            Vec3::new(-0.45, 0.1, -0.55),
            Vec3::new(-0.1, 0.3, -0.7),
            Vec3::new(0.3, 0.15, -0.55),
            Vec3::new(0.7, 0.3, -0.7),
            Vec3::new(0.8, 0.5, -0.6),
        ],
        vec![
            Vec3::new(-0.6, -0.15, 0.8),
            Vec3::new(-0.25, 0.1, 0.7),
            Vec3::new(0.1, -0.1, 0.8),
            Vec3::new(0.45, 0.15, 0.7),
            Vec3::new(0.75, -0.05, 0.75),
        ],
    ];
    for (i, cps) in splines.into_iter().enumerate() {
        push(&format!("spline_{i}"), CurveSet::new(vec![spline(cps)]));
    }

    push("theta_junction", theta_shape());

    debug_assert!(shapes.len() >= 20);
    debug_assert!(shapes.iter().all(|s| s.curves.validate().is_ok()));
    shapes
}

/// Shapes built from near-parallel line pairs at spacings between the cube
/// edge lengths of resolutions 64 and 32, so the pairs share cubes at 32
/// but separate at 64.
pub fn junction_corpus() -> Vec<Shape> {
    let mut shapes = Vec::new();
    // offsets sit inside one 1/16-wide bin at r=32 and straddle a boundary
    // at r=64
    let pairs: [(Vec3, Vec3, Vec3); 7] = [
        (Vec3::new(-0.8, 0.01, 0.01), Vec3::new(0.8, 0.01, 0.01), Vec3::new(0.0, 0.04, 0.0)),
        (Vec3::new(0.135, -0.8, 0.135), Vec3::new(0.135, 0.8, 0.135), Vec3::new(0.045, 0.0, 0.0)),
        (Vec3::new(0.26, 0.26, -0.8), Vec3::new(0.26, 0.26, 0.8), Vec3::new(0.0, 0.042, 0.0)),
        (Vec3::new(-0.7, -0.365, 0.01), Vec3::new(0.7, -0.365, 0.01), Vec3::new(0.0, 0.0, 0.048)),
        (Vec3::new(-0.6, 0.51, -0.6), Vec3::new(0.6, 0.51, 0.6), Vec3::new(0.0, 0.044, 0.0)),
        (Vec3::new(0.635, -0.6, -0.55), Vec3::new(0.635, 0.6, 0.55), Vec3::new(0.046, 0.0, 0.0)),
        // spacing below the r=64 edge length: this pair keeps sharing cubes
        // even at the higher resolution
        (Vec3::new(-0.75, 0.23, -0.44), Vec3::new(0.75, 0.23, -0.44), Vec3::new(0.0, 0.012, 0.0)),
    ];
    for (i, (a, b, offset)) in pairs.into_iter().enumerate() {
        // a well-separated third line keeps single-curve cubes in the
        // denominator, so the junction fraction is not saturated
        let lone = offset.normalize() * 0.3;
        let curves = CurveSet::new(vec![
            Curve::Line { a, b },
            Curve::Line { a: a + offset, b: b + offset },
            Curve::Line { a: a + lone, b: b + lone },
        ]);
        shapes.push(Shape { name: format!("parallel_pair_{i}"), curves });
    }
    debug_assert!(shapes.iter().all(|s| s.curves.validate().is_ok()));
    shapes
}
