//! Topology refinement of PWL graphs: reconnection of degree-1 tips,
//! removal of short (and optionally all) dangling paths, and deduplication
//! of near-coincident multi-paths, iterated to a fixed point.

use std::collections::BTreeSet;

use crate::error::{NerveError, Result};
use crate::geom::Vec3;
use crate::metrics::chamfer;
use crate::pwl::{CurvePath, PwlGraph};

/// Refinement thresholds. `delta_r` and `delta_p` are lengths, usually
/// expressed in multiples of the grid edge length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    /// Maximum distance for reconnecting two degree-1 tips.
    pub delta_r: f64,
    /// Minimum vertex count of a dangling path that survives spur removal.
    pub n_p: usize,
    /// Chamfer threshold below which same-endpoint paths are duplicates.
    pub delta_p: f64,
    /// Lower bound on the tangent dot-sum for reconnection.
    pub tangent_consistency: f64,
    /// Remove all degree-1-terminated paths, not just short ones.
    pub brep_strict: bool,
}

impl RefineParams {
    /// Shipped defaults for a grid with edge length `l`:
    /// `delta_r = 4l`, `n_p = 5`, `delta_p = 2l`, tangent threshold `sqrt(2)`.
    pub fn for_edge_length(l: f64) -> Self {
        Self {
            delta_r: 4.0 * l,
            n_p: 5,
            delta_p: 2.0 * l,
            tangent_consistency: std::f64::consts::SQRT_2,
            brep_strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_r > 0.0) || !(self.delta_p > 0.0) {
            return Err(NerveError::InvalidCurve("refine thresholds must be positive".into()));
        }
        if self.n_p < 2 {
            return Err(NerveError::InvalidCurve("n_p must be at least 2".into()));
        }
        if !(self.tangent_consistency > 0.0 && self.tangent_consistency <= 2.0) {
            return Err(NerveError::InvalidCurve("tangent consistency must lie in (0, 2]".into()));
        }
        Ok(())
    }
}

/// Outward tangent at a degree-1 tip, estimated from the last two chain
/// vertices, or from a 3-vertex least-squares direction when the chain is
/// long enough. Points from the chain into free space.
fn tip_tangent(graph: &PwlGraph, adj: &[Vec<u32>], deg: &[u32], tip: u32) -> Option<Vec3> {
    debug_assert_eq!(deg[tip as usize], 1);
    let mut chain = vec![tip];
    let mut prev = tip;
    let mut cur = adj[tip as usize][0];
    chain.push(cur);
    if deg[cur as usize] == 2 {
        let next = *adj[cur as usize].iter().find(|&&w| w != prev)?;
        prev = cur;
        cur = next;
        let _ = prev;
        chain.push(cur);
    }
    let pts: Vec<Vec3> = chain.iter().map(|&v| graph.position(v)).collect();
    let rough = pts[0] - pts[1];
    if rough.norm() == 0.0 {
        return None;
    }
    if pts.len() < 3 {
        return Some(rough.normalize());
    }
    // principal direction of the three chain points
    let centroid = (pts[0] + pts[1] + pts[2]) / 3.0;
    let mut cov = nalgebra::Matrix3::zeros();
    for p in &pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut best = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let dir = Vec3::new(
        eig.eigenvectors[(0, best)],
        eig.eigenvectors[(1, best)],
        eig.eigenvectors[(2, best)],
    );
    if dir.norm() == 0.0 {
        return Some(rough.normalize());
    }
    let dir = dir.normalize();
    Some(if dir.dot(&rough) >= 0.0 { dir } else { -dir })
}

/// Step 1: adds an edge between pairs of degree-1 tips that are closer than
/// `delta_r` and whose tangents are consistent. For tips `p1`, `p2` with
/// gap direction `t2 = (p2-p1)/|p2-p1|`, the outward tangent `t1` at `p1`
/// and the chain-entering tangent `t3` at `p2` must satisfy
/// `t1.t2 + t2.t3 > tangent_consistency`. Pairs are matched greedily by
/// ascending distance, each tip at most once.
pub fn reconnect(graph: &PwlGraph, params: &RefineParams) -> PwlGraph {
    let mut out = graph.clone();
    let adj = graph.adjacency();
    let deg = graph.degrees();
    let tips: Vec<u32> = (0..graph.vertex_count() as u32)
        .filter(|&v| deg[v as usize] == 1)
        .collect();
    let mut candidates = Vec::new();
    for (i, &u) in tips.iter().enumerate() {
        let Some(tu) = tip_tangent(graph, &adj, &deg, u) else { continue };
        for &v in &tips[i + 1..] {
            if graph.has_edge(u, v) {
                continue;
            }
            let Some(tv) = tip_tangent(graph, &adj, &deg, v) else { continue };
            let gap = graph.position(v) - graph.position(u);
            let dist = gap.norm();
            if dist <= 0.0 || dist >= params.delta_r {
                continue;
            }
            let t2 = gap / dist;
            // tv points outward from v's chain; entering the chain is -tv
            let score = tu.dot(&t2) + t2.dot(&(-tv));
            if score > params.tangent_consistency {
                candidates.push((dist, u, v));
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut matched = BTreeSet::new();
    for (_, u, v) in candidates {
        if matched.contains(&u) || matched.contains(&v) {
            continue;
        }
        out.add_edge(u, v).expect("candidate endpoints are valid vertices");
        matched.insert(u);
        matched.insert(v);
    }
    out
}

/// Removes the given open paths: their edges go away, and any path vertex
/// left without edges goes away with them.
fn delete_paths(graph: &mut PwlGraph, paths: &[&CurvePath]) {
    let mut affected = BTreeSet::new();
    for p in paths {
        for w in p.vertices.windows(2) {
            graph.remove_edge(w[0], w[1]);
        }
        if p.closed && p.vertices.len() > 2 {
            graph.remove_edge(*p.vertices.last().unwrap(), p.vertices[0]);
        }
        affected.extend(p.vertices.iter().copied());
    }
    let deg = graph.degrees();
    let victims: BTreeSet<u32> = affected
        .into_iter()
        .filter(|&v| deg[v as usize] == 0)
        .collect();
    graph.remove_isolated(&victims);
}

/// Step 2: deletes every dangling path (one terminal of degree 1) with
/// fewer than `n_p` vertices; with `brep_strict`, deletes all dangling
/// paths. Degrees are recomputed after each wave until a fixed point.
pub fn remove_spurs(graph: &PwlGraph, params: &RefineParams) -> PwlGraph {
    let mut g = graph.clone();
    loop {
        let deg = g.degrees();
        let paths = g.trace_paths();
        let doomed: Vec<&CurvePath> = paths
            .iter()
            .filter(|p| {
                if p.closed {
                    return false;
                }
                let first = *p.vertices.first().unwrap();
                let last = *p.vertices.last().unwrap();
                let dangling = deg[first as usize] == 1 || deg[last as usize] == 1;
                dangling && (p.vertices.len() < params.n_p || params.brep_strict)
            })
            .collect();
        if doomed.is_empty() {
            return g;
        }
        delete_paths(&mut g, &doomed);
    }
}

/// Canonical comparison form of an open path: the lexicographically smaller
/// of its vertex sequence and the reverse.
fn canonical_sequence(path: &CurvePath) -> Vec<u32> {
    let forward = path.vertices.clone();
    let mut reverse = forward.clone();
    reverse.reverse();
    forward.min(reverse)
}

/// Step 3: while distinct open paths share both endpoints and lie within
/// Chamfer distance `delta_p` of each other, the path with the
/// lexicographically smallest vertex sequence is kept and its duplicates
/// deleted. Each wave removes every duplicate of a surviving path at once
/// (deleting one arc of a multi-path can drop its junctions to degree 2 and
/// merge the survivors into a cycle, which is no longer a multi-path), and
/// waves repeat until no duplicates remain.
pub fn dedupe_multipaths(graph: &PwlGraph, params: &RefineParams) -> PwlGraph {
    let mut g = graph.clone();
    loop {
        let paths = g.trace_paths();
        // group open paths by unordered endpoint pair
        let mut groups: std::collections::BTreeMap<(u32, u32), Vec<&CurvePath>> =
            std::collections::BTreeMap::new();
        for p in paths.iter().filter(|p| !p.closed) {
            let a = *p.vertices.first().unwrap();
            let b = *p.vertices.last().unwrap();
            let key = if a <= b { (a, b) } else { (b, a) };
            groups.entry(key).or_default().push(p);
        }
        let mut doomed: Vec<&CurvePath> = Vec::new();
        for group in groups.values_mut() {
            if group.len() < 2 {
                continue;
            }
            group.sort_by_key(|p| canonical_sequence(p));
            let mut kept: Vec<&CurvePath> = Vec::new();
            for candidate in group.iter() {
                let pc = candidate.points(&g);
                let duplicate = kept.iter().any(|k| {
                    chamfer(&k.points(&g), &pc).expect("paths are nonempty") < params.delta_p
                });
                if duplicate {
                    doomed.push(candidate);
                } else {
                    kept.push(candidate);
                }
            }
        }
        if doomed.is_empty() {
            return g;
        }
        delete_paths(&mut g, &doomed);
    }
}

/// Runs reconnection, spur removal, and multi-path deduplication in order,
/// repeating the sequence until the graph stops changing. The result has no
/// reconnectable tip pairs, no spurs below `n_p`, and no duplicate paths
/// below `delta_p`.
pub fn refine(graph: &PwlGraph, params: &RefineParams) -> PwlGraph {
    let mut g = graph.clone();
    for _ in 0..64 {
        let next = dedupe_multipaths(&remove_spurs(&reconnect(&g, params), params), params);
        if next == g {
            return g;
        }
        g = next;
    }
    log::warn!("refinement did not reach a fixed point within 64 rounds");
    g
}
