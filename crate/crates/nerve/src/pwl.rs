//! The piece-wise linear curve graph: one vertex per occupied cube, one
//! edge per flagged inner face, plus graph analyses (degrees, endpoints,
//! path tracing) and OBJ export.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{NerveError, Result};
use crate::geom::Vec3;
use crate::grid::{CubeIndex, NerveGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwlVertex {
    pub cube: CubeIndex,
    pub position: Vec3,
}

/// Undirected simple graph of edge points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PwlGraph {
    vertices: Vec<PwlVertex>,
    edges: BTreeSet<(u32, u32)>,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl PwlGraph {
    pub fn new(vertices: Vec<PwlVertex>, edges: Vec<(u32, u32)>) -> Result<Self> {
        let mut cubes = BTreeSet::new();
        for v in &vertices {
            if !cubes.insert(v.cube) {
                return Err(NerveError::InvalidCurve(format!(
                    "duplicate vertex for cube ({}, {}, {})",
                    v.cube.0, v.cube.1, v.cube.2
                )));
            }
        }
        let mut graph = Self { vertices, edges: BTreeSet::new() };
        for (a, b) in edges {
            graph.add_edge(a, b)?;
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, id: u32) -> &PwlVertex {
        &self.vertices[id as usize]
    }

    pub fn position(&self, id: u32) -> Vec3 {
        self.vertices[id as usize].position
    }

    pub fn vertices(&self) -> &[PwlVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edges.contains(&edge_key(a, b))
    }

    pub fn add_edge(&mut self, a: u32, b: u32) -> Result<()> {
        let n = self.vertices.len() as u32;
        if a >= n || b >= n {
            return Err(NerveError::InvalidCurve(format!("edge ({a}, {b}) out of vertex range {n}")));
        }
        if a == b {
            return Err(NerveError::InvalidCurve(format!("self-loop at vertex {a}")));
        }
        self.edges.insert(edge_key(a, b));
        Ok(())
    }

    pub fn remove_edge(&mut self, a: u32, b: u32) -> bool {
        self.edges.remove(&edge_key(a, b))
    }

    /// Removes the given vertices (which must be isolated) and renumbers the
    /// survivors, preserving their relative order.
    pub fn remove_isolated(&mut self, victims: &BTreeSet<u32>) {
        if victims.is_empty() {
            return;
        }
        debug_assert!(self
            .edges
            .iter()
            .all(|&(a, b)| !victims.contains(&a) && !victims.contains(&b)));
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut kept = Vec::with_capacity(self.vertices.len() - victims.len());
        for (old, v) in self.vertices.iter().enumerate() {
            if !victims.contains(&(old as u32)) {
                remap[old] = kept.len() as u32;
                kept.push(*v);
            }
        }
        self.vertices = kept;
        self.edges = self
            .edges
            .iter()
            .map(|&(a, b)| (remap[a as usize], remap[b as usize]))
            .collect();
    }

    /// Sorted adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    pub fn degree(&self, id: u32) -> u32 {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == id || b == id)
            .count() as u32
    }

    /// B-Rep endpoints: exactly the vertices with degree greater than 2.
    /// Degree-1 tips terminate paths but are not endpoints.
    pub fn endpoints(&self) -> Vec<u32> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 2)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Partitions the edges into open paths (terminating at degree != 2
    /// vertices) and closed cycles (components with only degree-2 vertices).
    /// Paths are enumerated in ascending start-vertex order.
    pub fn trace_paths(&self) -> Vec<CurvePath> {
        let adj = self.adjacency();
        let deg = self.degrees();
        let mut unused: BTreeSet<(u32, u32)> = self.edges.clone();
        let mut paths = Vec::new();

        for v in 0..self.vertices.len() as u32 {
            if deg[v as usize] == 2 || deg[v as usize] == 0 {
                continue;
            }
            for &nb in &adj[v as usize] {
                if !unused.remove(&edge_key(v, nb)) {
                    continue;
                }
                let mut vertices = vec![v];
                let mut prev = v;
                let mut cur = nb;
                while deg[cur as usize] == 2 {
                    vertices.push(cur);
                    let next = *adj[cur as usize]
                        .iter()
                        .find(|&&w| w != prev)
                        .expect("degree-2 vertex has two neighbors");
                    let consumed = unused.remove(&edge_key(cur, next));
                    debug_assert!(consumed);
                    prev = cur;
                    cur = next;
                }
                vertices.push(cur);
                paths.push(CurvePath { vertices, closed: false });
            }
        }

        // remaining edges all live in degree-2-only components: cycles
        for v in 0..self.vertices.len() as u32 {
            for &nb in &adj[v as usize] {
                if !unused.remove(&edge_key(v, nb)) {
                    continue;
                }
                let mut vertices = vec![v];
                let mut prev = v;
                let mut cur = nb;
                while cur != v {
                    vertices.push(cur);
                    let next = *adj[cur as usize]
                        .iter()
                        .find(|&&w| w != prev)
                        .expect("cycle vertex has two neighbors");
                    let consumed = unused.remove(&edge_key(cur, next));
                    debug_assert!(consumed);
                    prev = cur;
                    cur = next;
                }
                paths.push(CurvePath { vertices, closed: true });
            }
        }
        paths
    }

    /// One point per edge: the midpoint of its vertex positions.
    pub fn sample_edge_midpoints(&self) -> Vec<Vec3> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.position(a) + self.position(b)) * 0.5)
            .collect()
    }

    /// OBJ polyline export: `v` lines in vertex order with 17 significant
    /// digits, then one `l` line per edge (1-based indices).
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!(
                "v {:.16e} {:.16e} {:.16e}\n",
                v.position.x, v.position.y, v.position.z
            ));
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("l {} {}\n", a + 1, b + 1));
        }
        out
    }
}

/// Ordered vertex run between path terminals, or a closed loop
/// (first vertex implied as successor of the last).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurvePath {
    pub vertices: Vec<u32>,
    pub closed: bool,
}

impl CurvePath {
    pub fn points(&self, graph: &PwlGraph) -> Vec<Vec3> {
        self.vertices.iter().map(|&v| graph.position(v)).collect()
    }
}

/// Orientation flag that points into an unoccupied cube; the edge it would
/// define is dropped during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlagInconsistency {
    pub cube: CubeIndex,
    pub axis: usize,
}

#[derive(Debug, Clone)]
pub struct PwlExtraction {
    pub graph: PwlGraph,
    pub inconsistencies: Vec<FlagInconsistency>,
}

/// Extracts the PWL graph: one vertex per occupied cube at its stored point,
/// one edge per flagged inner face with both adjacent cubes occupied. Flags
/// touching unoccupied cubes are reported, not fatal.
pub fn extract_pwl(grid: &NerveGrid) -> PwlExtraction {
    let mut vertex_ids = std::collections::BTreeMap::new();
    let mut vertices = Vec::new();
    for cube in grid.occupied_indices() {
        vertex_ids.insert(cube, vertices.len() as u32);
        vertices.push(PwlVertex { cube, position: grid.point(cube) });
    }
    let mut graph = PwlGraph { vertices, edges: BTreeSet::new() };
    let mut inconsistencies = Vec::new();
    for cube in grid.indices() {
        for axis in 0..3 {
            if !grid.orientation(cube, axis) {
                continue;
            }
            let neighbor = NerveGrid::face_neighbor(cube, axis);
            let pair = neighbor.and_then(|nb| Some((*vertex_ids.get(&cube)?, *vertex_ids.get(&nb)?)));
            match pair {
                Some((a, b)) => {
                    graph.add_edge(a, b).expect("extraction produces valid edges");
                }
                None => inconsistencies.push(FlagInconsistency { cube, axis }),
            }
        }
    }
    PwlExtraction { graph, inconsistencies }
}

/// JSON wire format for traced paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathsJson {
    pub paths: Vec<PathJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathJson {
    pub closed: bool,
    pub vertices: Vec<u32>,
    pub points: Vec<[f64; 3]>,
}

impl PathsJson {
    pub fn from_graph(graph: &PwlGraph, paths: &[CurvePath]) -> Self {
        let paths = paths
            .iter()
            .map(|p| PathJson {
                closed: p.closed,
                vertices: p.vertices.clone(),
                points: p.points(graph).iter().map(|q| [q.x, q.y, q.z]).collect(),
            })
            .collect();
        Self { paths }
    }
}
