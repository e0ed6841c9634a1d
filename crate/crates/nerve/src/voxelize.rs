//! Ground-truth grid construction: sample curves to polylines, walk the
//! segments through the cube grid, set occupancy and face flags, and place
//! one edge point per occupied cube.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Matrix3;

use crate::curves::CurveSet;
use crate::error::{NerveError, Result};
use crate::geom::{self, Aabb, Vec3};
use crate::grid::{axis_cube_index, cube_extent, cube_of_point, CubeIndex, NerveGrid};

/// One cube interval of a segment walk, with entry/exit parameters in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkStep {
    pub cube: CubeIndex,
    pub t_entry: f64,
    pub t_exit: f64,
}

/// Walks segment `a -> b` through the resolution-`r` grid.
///
/// Intervals are contiguous, cover `[0,1]`, and zero-length intervals at
/// face/corner crossings are merged away (a crossing that hits several grid
/// planes at once steps all of those axes in one move). Points on faces
/// belong to the higher-index cube, matching [`cube_of_point`].
pub fn segment_walk(a: &Vec3, b: &Vec3, resolution: u32) -> Vec<WalkStep> {
    debug_assert!(geom::in_unit_domain(a) && geom::in_unit_domain(b));
    let r = resolution;
    let d = b - a;
    let mut idx = [
        axis_cube_index(a.x, r) as i64,
        axis_cube_index(a.y, r) as i64,
        axis_cube_index(a.z, r) as i64,
    ];
    let plane = |n: i64| -1.0 + 2.0 * n as f64 / r as f64;
    let mut steps = Vec::new();
    let mut t_cur = 0.0;
    loop {
        // parameter at which the segment leaves the current cube along each axis
        let mut t_next = [f64::INFINITY; 3];
        for axis in 0..3 {
            if d[axis] > 0.0 {
                t_next[axis] = (plane(idx[axis] + 1) - a[axis]) / d[axis];
            } else if d[axis] < 0.0 {
                t_next[axis] = (plane(idx[axis]) - a[axis]) / d[axis];
            }
        }
        let t_min = t_next.iter().cloned().fold(f64::INFINITY, f64::min);
        let cube = (idx[0] as u32, idx[1] as u32, idx[2] as u32);
        if t_min >= 1.0 {
            steps.push(WalkStep { cube, t_entry: t_cur, t_exit: 1.0 });
            break;
        }
        if t_min > t_cur {
            steps.push(WalkStep { cube, t_entry: t_cur, t_exit: t_min });
        }
        t_cur = t_min;
        for axis in 0..3 {
            if t_next[axis] == t_min {
                idx[axis] += if d[axis] > 0.0 { 1 } else { -1 };
                idx[axis] = idx[axis].clamp(0, r as i64 - 1);
            }
        }
    }
    steps
}

/// One maximal piece of a sampled curve inside a single cube.
#[derive(Debug, Clone)]
pub struct Run {
    pub points: Vec<Vec3>,
    /// Curve endpoints falling inside this run (0, 1, or 2 of them).
    pub endpoints: Vec<Vec3>,
    /// Index of the originating curve within the curve set.
    pub curve: usize,
}

/// All curve pieces truncated to one cube.
#[derive(Debug, Clone)]
pub struct CubeTruncation {
    pub cube: CubeIndex,
    pub runs: Vec<Run>,
}

/// Point where a sampled curve crosses a cube boundary, with the unsigned
/// unit tangent of the crossing segment.
#[derive(Debug, Clone, Copy)]
pub struct FaceCrossing {
    pub position: Vec3,
    pub tangent: Vec3,
}

/// Rule for placing the per-cube edge point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointRule {
    /// Arc-length midpoint of the truncated curve; curve endpoints take
    /// precedence; multiple pieces average.
    Midpoint,
    /// Minimizer of the summed squared distances to the tangent lines at
    /// the face crossings, regularized by `lambda`.
    Qef { lambda: f64 },
}

pub const DEFAULT_QEF_LAMBDA: f64 = 1e-3;

/// Default chord tolerance `l/10` for a given resolution.
pub fn default_chord_tolerance(resolution: u32) -> f64 {
    0.2 / resolution as f64
}

/// Midpoint rule on a cube truncation.
///
/// Single run: arc-length midpoint. Any curve endpoint in the cube takes
/// precedence (several endpoints average). Several runs without endpoints
/// average their midpoints.
pub fn cube_point_midpoint(trunc: &CubeTruncation) -> Result<Vec3> {
    if trunc.runs.is_empty() {
        return Err(NerveError::EmptyInput("cube truncation has no runs"));
    }
    let endpoints: Vec<Vec3> = trunc.runs.iter().flat_map(|r| r.endpoints.iter().copied()).collect();
    if !endpoints.is_empty() {
        return Ok(endpoints.iter().sum::<Vec3>() / endpoints.len() as f64);
    }
    let midpoints: Vec<Vec3> = trunc
        .runs
        .iter()
        .map(|r| geom::polyline_midpoint(&r.points))
        .collect();
    Ok(midpoints.iter().sum::<Vec3>() / midpoints.len() as f64)
}

/// Quadratic objective of the tangent-line fit after eliminating the
/// per-crossing slide variables: `sum_i ||x-p_i||^2 - w (t_i . (x-p_i))^2`
/// with `w = 1/(1+lambda)`.
pub fn qef_objective(crossings: &[FaceCrossing], lambda: f64, x: &Vec3) -> f64 {
    let w = 1.0 / (1.0 + lambda);
    crossings
        .iter()
        .map(|c| {
            let d = x - c.position;
            let along = c.tangent.dot(&d);
            d.norm_squared() - w * along * along
        })
        .sum()
}

/// Minimizes the regularized tangent-line objective over the cube extent.
///
/// The unconstrained problem reduces to a 3x3 linear system; the box
/// constraint is handled exactly by enumerating active-set configurations,
/// so the result is the true constrained minimizer (it lies on the cube
/// boundary whenever the free minimizer escapes).
pub fn cube_point_qef(crossings: &[FaceCrossing], lambda: f64, cube: &Aabb) -> Result<Vec3> {
    if crossings.is_empty() {
        return Err(NerveError::EmptyInput("no face crossings for the quadratic rule"));
    }
    if !(lambda >= 0.0) {
        return Err(NerveError::FitFailed(format!("lambda {lambda} must be nonnegative")));
    }
    let w = 1.0 / (1.0 + lambda);
    let mut a_mat = Matrix3::zeros();
    let mut b_vec = Vec3::zeros();
    for c in crossings {
        let t = c.tangent;
        let outer = t * t.transpose();
        let term = Matrix3::identity() - outer * w;
        a_mat += term;
        b_vec += term * c.position;
    }
    let eig = nalgebra::SymmetricEigen::new(a_mat);
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= 1e-12 * max_eig.max(1e-300) {
        return Err(NerveError::SingularQef);
    }

    // enumerate coordinate states: 0 = free, 1 = at min, 2 = at max
    let mut best: Option<(f64, Vec3)> = None;
    for config in 0..27u32 {
        let states = [config % 3, (config / 3) % 3, config / 9];
        let mut m = a_mat;
        let mut rhs = b_vec;
        for axis in 0..3 {
            if states[axis] == 0 {
                continue;
            }
            let v = if states[axis] == 1 { cube.min[axis] } else { cube.max[axis] };
            // substitute the fixed coordinate and keep the system 3x3
            for row in 0..3 {
                if states[row] == 0 {
                    rhs[row] -= m[(row, axis)] * v;
                }
            }
            for k in 0..3 {
                m[(axis, k)] = 0.0;
                m[(k, axis)] = 0.0;
            }
            m[(axis, axis)] = 1.0;
            rhs[axis] = v;
        }
        let Some(x) = m.lu().solve(&rhs) else { continue };
        let x = Vec3::new(x[0], x[1], x[2]);
        let feasible = (0..3).all(|axis| {
            x[axis] >= cube.min[axis] - 1e-12 && x[axis] <= cube.max[axis] + 1e-12
        });
        if !feasible {
            continue;
        }
        let x = cube.clamp(&x);
        let f = qef_objective(crossings, lambda, &x);
        if best.map_or(true, |(bf, _)| f < bf) {
            best = Some((f, x));
        }
    }
    Ok(best.expect("corner configurations are always feasible").1)
}

/// Summary counters from voxelization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VoxelizeStats {
    pub occupied_cubes: usize,
    /// Cubes containing truncations from two or more distinct curves.
    pub junction_cubes: usize,
    pub orientation_flags: usize,
}

impl VoxelizeStats {
    pub fn junction_fraction(&self) -> Option<f64> {
        (self.occupied_cubes > 0)
            .then(|| self.junction_cubes as f64 / self.occupied_cubes as f64)
    }
}

#[derive(Default)]
struct CubeData {
    runs: Vec<Run>,
    crossings: Vec<FaceCrossing>,
    curve_ids: BTreeSet<usize>,
}

struct Accumulator {
    resolution: u32,
    cubes: BTreeMap<CubeIndex, CubeData>,
    flags: BTreeSet<(CubeIndex, usize)>,
}

impl Accumulator {
    fn new(resolution: u32) -> Self {
        Self { resolution, cubes: BTreeMap::new(), flags: BTreeSet::new() }
    }

    fn data(&mut self, cube: CubeIndex) -> &mut CubeData {
        self.cubes.entry(cube).or_default()
    }

    /// Records the transition between two face- or corner-adjacent cubes.
    /// Only single-axis transitions flag a shared face; a crossing exactly
    /// through a grid edge or corner connects cubes that share no face, so
    /// no flag can represent it.
    fn transition(&mut self, from: CubeIndex, to: CubeIndex, position: Vec3, tangent: Vec3) {
        let fi = [from.0, from.1, from.2];
        let ti = [to.0, to.1, to.2];
        let diff_axes: Vec<usize> = (0..3).filter(|&a| fi[a] != ti[a]).collect();
        if diff_axes.len() == 1 {
            let axis = diff_axes[0];
            let higher = if ti[axis] > fi[axis] { to } else { from };
            self.flags.insert((higher, axis));
        }
        let crossing = FaceCrossing { position, tangent };
        self.data(from).crossings.push(crossing);
        self.data(to).crossings.push(crossing);
    }

    fn add_curve(&mut self, curve_id: usize, vertices: &[Vec3], closed: bool) {
        let mut verts: Vec<Vec3> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if verts.last() != Some(v) {
                verts.push(*v);
            }
        }
        if verts.len() < 2 {
            // a degenerate single-point curve occupies one cube
            if let Some(v) = verts.first() {
                let cube = cube_of_point(v, self.resolution);
                let mut endpoints = Vec::new();
                if !closed {
                    endpoints.push(*v);
                }
                self.data(cube).runs.push(Run { points: vec![*v], endpoints, curve: curve_id });
                self.data(cube).curve_ids.insert(curve_id);
            }
            return;
        }

        // visits: maximal same-cube pieces of the whole polyline
        let mut visits: Vec<(CubeIndex, Vec<Vec3>)> = Vec::new();
        for seg in verts.windows(2) {
            let (p, q) = (seg[0], seg[1]);
            let dir = (q - p).normalize();
            for step in segment_walk(&p, &q, self.resolution) {
                let entry = if step.t_entry == 0.0 { p } else { p + (q - p) * step.t_entry };
                let exit = if step.t_exit == 1.0 { q } else { p + (q - p) * step.t_exit };
                match visits.last_mut() {
                    Some((cube, points)) if *cube == step.cube => {
                        points.push(exit);
                    }
                    _ => {
                        if let Some((prev, _)) = visits.last() {
                            self.transition(*prev, step.cube, entry, dir);
                        }
                        visits.push((step.cube, vec![entry, exit]));
                    }
                }
            }
        }

        if closed && visits.len() > 1 {
            let first_cube = visits[0].0;
            let last_cube = visits.last().unwrap().0;
            if first_cube == last_cube {
                // the loop passes through its start vertex without leaving
                // the cube: stitch last and first visit into one run
                let (_, last_points) = visits.pop().unwrap();
                let first_points = std::mem::take(&mut visits[0].1);
                let mut merged = last_points;
                merged.extend_from_slice(&first_points[1..]);
                visits[0].1 = merged;
            } else {
                // start vertex sits exactly on a shared boundary; the loop
                // closure is a genuine crossing
                let dir = (verts[1] - verts[0]).normalize();
                self.transition(last_cube, first_cube, verts[0], dir);
            }
        }

        if !closed {
            // a curve endpoint lying exactly on a face belongs to the
            // higher-index cube, which the walk's merge rule skipped; give
            // that cube a lone-endpoint run and the connecting crossing
            let first = verts[0];
            let first_tie = cube_of_point(&first, self.resolution);
            if visits[0].0 != first_tie {
                let dir = (verts[1] - first).normalize();
                self.transition(first_tie, visits[0].0, first, dir);
                visits.insert(0, (first_tie, vec![first]));
            }
            let last = *verts.last().unwrap();
            let last_tie = cube_of_point(&last, self.resolution);
            if visits.last().unwrap().0 != last_tie {
                let dir = (last - verts[verts.len() - 2]).normalize();
                self.transition(visits.last().unwrap().0, last_tie, last, dir);
                visits.push((last_tie, vec![last]));
            }
        }

        // endpoints on the domain wall do not stop "inside" any cube; they
        // fall back to the midpoint rule
        let interior = |p: &Vec3| (0..3).all(|a| p[a].abs() < 1.0);
        let last_visit = visits.len().saturating_sub(1);
        for (vi, (cube, points)) in visits.into_iter().enumerate() {
            let mut endpoints = Vec::new();
            if !closed {
                if vi == 0 && interior(&verts[0]) {
                    endpoints.push(verts[0]);
                }
                if vi == last_visit && interior(verts.last().unwrap()) {
                    endpoints.push(*verts.last().unwrap());
                }
            }
            let data = self.data(cube);
            data.runs.push(Run { points, endpoints, curve: curve_id });
            data.curve_ids.insert(curve_id);
        }
    }
}

/// Voxelizes a curve set at the given resolution and point rule.
pub fn voxelize(
    curves: &CurveSet,
    resolution: u32,
    rule: PointRule,
    chord_tolerance: f64,
) -> Result<NerveGrid> {
    voxelize_with_stats(curves, resolution, rule, chord_tolerance).map(|(g, _)| g)
}

/// Voxelizes and reports occupancy/junction statistics.
pub fn voxelize_with_stats(
    curves: &CurveSet,
    resolution: u32,
    rule: PointRule,
    chord_tolerance: f64,
) -> Result<(NerveGrid, VoxelizeStats)> {
    curves.validate()?;
    let mut grid = NerveGrid::new(resolution)?;
    let mut acc = Accumulator::new(resolution);
    for (curve_id, curve) in curves.curves.iter().enumerate() {
        let sampled = curve.sample(chord_tolerance)?;
        acc.add_curve(curve_id, &sampled.vertices, sampled.closed);
    }

    for &cube in acc.cubes.keys() {
        grid.set_occupancy(cube, true);
    }
    for &(cube, axis) in &acc.flags {
        grid.set_orientation(cube, axis, true)?;
    }

    let mut junction_cubes = 0;
    for (&cube, data) in &acc.cubes {
        if data.curve_ids.len() >= 2 {
            junction_cubes += 1;
        }
        let extent = cube_extent(cube, resolution)?;
        let trunc = CubeTruncation { cube, runs: data.runs.clone() };
        let point = match rule {
            PointRule::Midpoint => cube_point_midpoint(&trunc)?,
            PointRule::Qef { lambda } => {
                if data.crossings.is_empty() {
                    cube_point_midpoint(&trunc)?
                } else {
                    cube_point_qef(&data.crossings, lambda, &extent)?
                }
            }
        };
        grid.set_point(cube, extent.clamp(&point))?;
    }

    let stats = VoxelizeStats {
        occupied_cubes: acc.cubes.len(),
        junction_cubes,
        orientation_flags: acc.flags.len(),
    };
    debug_assert!(grid.validate().is_ok());
    Ok((grid, stats))
}
