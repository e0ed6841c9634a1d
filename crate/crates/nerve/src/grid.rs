//! The volumetric edge grid: a resolution-`r` cube tessellation of `[-1,1]^3`
//! where each cube stores an edge-occupancy bit, three face-orientation bits
//! (on its -x, -y, -z faces), and one edge point.

use crate::error::{NerveError, Result};
use crate::geom::{Aabb, Vec3};
use serde::{Deserialize, Serialize};

pub const MIN_RESOLUTION: u32 = 2;
pub const MAX_RESOLUTION: u32 = 1024;

const MAGIC: &[u8; 6] = b"NERVE1";

/// Cube index `(i, j, k)` with `0 <= i,j,k < r`.
pub type CubeIndex = (u32, u32, u32);

/// Index of the cube containing coordinate `x` along one axis.
///
/// Points on an internal face belong to the higher-index cube; `x = +1`
/// belongs to the last cube.
pub fn axis_cube_index(x: f64, resolution: u32) -> u32 {
    let u = (x + 1.0) * resolution as f64 / 2.0;
    let i = u.floor() as i64;
    i.clamp(0, resolution as i64 - 1) as u32
}

/// Index of the cube containing `p`, under the higher-index tie-break.
pub fn cube_of_point(p: &Vec3, resolution: u32) -> CubeIndex {
    (
        axis_cube_index(p.x, resolution),
        axis_cube_index(p.y, resolution),
        axis_cube_index(p.z, resolution),
    )
}

/// Axis-aligned extent of cube `(i, j, k)` at the given resolution.
pub fn cube_extent(index: CubeIndex, resolution: u32) -> Result<Aabb> {
    let (i, j, k) = index;
    if i >= resolution || j >= resolution || k >= resolution {
        return Err(NerveError::IndexOutOfRange(i, j, k, resolution));
    }
    let r = resolution as f64;
    let corner = |n: u32| -1.0 + 2.0 * n as f64 / r;
    let min = Vec3::new(corner(i), corner(j), corner(k));
    let max = Vec3::new(corner(i + 1), corner(j + 1), corner(k + 1));
    Ok(Aabb::new(min, max))
}

/// Boolean flag per cube, used as an evaluation or prediction mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeMask {
    resolution: u32,
    flags: Vec<bool>,
}

impl CubeMask {
    pub fn empty(resolution: u32) -> Result<Self> {
        check_resolution(resolution)?;
        let n = (resolution as usize).pow(3);
        Ok(Self { resolution, flags: vec![false; n] })
    }

    pub fn full(resolution: u32) -> Result<Self> {
        let mut m = Self::empty(resolution)?;
        m.flags.iter_mut().for_each(|f| *f = true);
        Ok(m)
    }

    /// Mask flagging exactly the cubes that contain at least one of `points`.
    pub fn from_points(points: &[Vec3], resolution: u32) -> Result<Self> {
        let mut mask = Self::empty(resolution)?;
        for p in points {
            if !crate::geom::in_unit_domain(p) {
                return Err(NerveError::PointOutOfDomain(p.x, p.y, p.z));
            }
            let idx = cube_of_point(p, resolution);
            mask.set(idx, true);
        }
        Ok(mask)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn get(&self, index: CubeIndex) -> bool {
        self.flags[linear_index(index, self.resolution)]
    }

    pub fn set(&mut self, index: CubeIndex, value: bool) {
        let li = linear_index(index, self.resolution);
        self.flags[li] = value;
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        let r = self.resolution;
        all_indices(r).filter(move |&idx| self.get(idx))
    }

    /// Morphological dilation by `steps` cubes (6-neighborhood per step).
    pub fn dilate(&self, steps: u32) -> Self {
        let r = self.resolution as i64;
        let mut current = self.clone();
        for _ in 0..steps {
            let mut next = current.clone();
            for (i, j, k) in all_indices(self.resolution) {
                if current.get((i, j, k)) {
                    continue;
                }
                let neighbors = [
                    (i as i64 - 1, j as i64, k as i64),
                    (i as i64 + 1, j as i64, k as i64),
                    (i as i64, j as i64 - 1, k as i64),
                    (i as i64, j as i64 + 1, k as i64),
                    (i as i64, j as i64, k as i64 - 1),
                    (i as i64, j as i64, k as i64 + 1),
                ];
                let touches = neighbors.iter().any(|&(a, b, c)| {
                    a >= 0
                        && b >= 0
                        && c >= 0
                        && a < r
                        && b < r
                        && c < r
                        && current.get((a as u32, b as u32, c as u32))
                });
                if touches {
                    next.set((i, j, k), true);
                }
            }
            current = next;
        }
        current
    }
}

/// Dense attribute grid over the `[-1,1]^3` cube tessellation.
///
/// Linear storage is x-major: index `(i, j, k)` maps to `(i*r + j)*r + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NerveGrid {
    resolution: u32,
    occupancy: Vec<bool>,
    /// Per cube: flags on the -x, -y, -z faces, in that order.
    orientations: Vec<[bool; 3]>,
    points: Vec<Vec3>,
}

fn check_resolution(resolution: u32) -> Result<()> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(NerveError::InvalidResolution(resolution));
    }
    Ok(())
}

fn linear_index(index: CubeIndex, resolution: u32) -> usize {
    let (i, j, k) = index;
    debug_assert!(i < resolution && j < resolution && k < resolution);
    ((i as usize * resolution as usize) + j as usize) * resolution as usize + k as usize
}

/// All cube indices in linear storage order.
pub fn all_indices(resolution: u32) -> impl Iterator<Item = CubeIndex> {
    (0..resolution).flat_map(move |i| {
        (0..resolution).flat_map(move |j| (0..resolution).map(move |k| (i, j, k)))
    })
}

impl NerveGrid {
    /// Fresh grid: everything unoccupied, no orientation flags, points at
    /// cube centers.
    pub fn new(resolution: u32) -> Result<Self> {
        check_resolution(resolution)?;
        let n = (resolution as usize).pow(3);
        let mut points = Vec::with_capacity(n);
        for idx in all_indices(resolution) {
            points.push(cube_extent(idx, resolution)?.center());
        }
        Ok(Self {
            resolution,
            occupancy: vec![false; n],
            orientations: vec![[false; 3]; n],
            points,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Cube edge length `l = 2/r`.
    pub fn edge_length(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    pub fn cube_extent(&self, index: CubeIndex) -> Result<Aabb> {
        cube_extent(index, self.resolution)
    }

    pub fn occupancy(&self, index: CubeIndex) -> bool {
        self.occupancy[linear_index(index, self.resolution)]
    }

    pub fn set_occupancy(&mut self, index: CubeIndex, value: bool) {
        let li = linear_index(index, self.resolution);
        self.occupancy[li] = value;
    }

    /// Orientation flag on the face at the negative side of `axis`
    /// (0 = -x, 1 = -y, 2 = -z).
    pub fn orientation(&self, index: CubeIndex, axis: usize) -> bool {
        self.orientations[linear_index(index, self.resolution)][axis]
    }

    /// Sets an inner-face orientation flag. Grid-boundary faces (index 0
    /// along the flag's axis) never carry connectivity and are rejected.
    pub fn set_orientation(&mut self, index: CubeIndex, axis: usize, value: bool) -> Result<()> {
        let coord = [index.0, index.1, index.2][axis];
        if value && coord == 0 {
            return Err(NerveError::BoundaryOrientation(index.0, index.1, index.2, axis));
        }
        let li = linear_index(index, self.resolution);
        self.orientations[li][axis] = value;
        Ok(())
    }

    pub fn point(&self, index: CubeIndex) -> Vec3 {
        self.points[linear_index(index, self.resolution)]
    }

    /// Stores the cube's edge point; it must lie inside the cube's closed
    /// extent.
    pub fn set_point(&mut self, index: CubeIndex, p: Vec3) -> Result<()> {
        let extent = self.cube_extent(index)?;
        if !p.iter().all(|c| c.is_finite()) || !extent.contains(&p) {
            return Err(NerveError::PointOutsideCube(
                p.x, p.y, p.z, index.0, index.1, index.2,
            ));
        }
        let li = linear_index(index, self.resolution);
        self.points[li] = p;
        Ok(())
    }

    pub fn indices(&self) -> impl Iterator<Item = CubeIndex> {
        all_indices(self.resolution)
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        self.indices().filter(move |&idx| self.occupancy(idx))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Count of set orientation flags (equivalently, of flagged inner faces).
    pub fn orientation_count(&self) -> usize {
        self.orientations
            .iter()
            .map(|o| o.iter().filter(|&&f| f).count())
            .sum()
    }

    /// Mask over the occupied cubes.
    pub fn occupancy_mask(&self) -> CubeMask {
        let mut mask = CubeMask::empty(self.resolution).expect("resolution already validated");
        for idx in self.occupied_indices() {
            mask.set(idx, true);
        }
        mask
    }

    /// The cube sharing the flagged face: `(i-1, j, k)` for axis 0, etc.
    /// `None` when the face lies on the grid boundary.
    pub fn face_neighbor(index: CubeIndex, axis: usize) -> Option<CubeIndex> {
        let (i, j, k) = index;
        match axis {
            0 => (i > 0).then(|| (i - 1, j, k)),
            1 => (j > 0).then(|| (i, j - 1, k)),
            2 => (k > 0).then(|| (i, j, k - 1)),
            _ => None,
        }
    }

    /// Checks the structural invariants: boundary faces carry no flags,
    /// flagged faces imply occupancy on both sides, and every stored point
    /// lies inside its cube's closed extent.
    pub fn validate(&self) -> Result<()> {
        for idx in self.indices() {
            let extent = self.cube_extent(idx)?;
            let p = self.point(idx);
            if !p.iter().all(|c| c.is_finite()) || !extent.contains(&p) {
                return Err(NerveError::PointOutsideCube(p.x, p.y, p.z, idx.0, idx.1, idx.2));
            }
            for axis in 0..3 {
                if !self.orientation(idx, axis) {
                    continue;
                }
                match Self::face_neighbor(idx, axis) {
                    None => {
                        return Err(NerveError::BoundaryOrientation(idx.0, idx.1, idx.2, axis))
                    }
                    Some(nb) => {
                        if !self.occupancy(idx) || !self.occupancy(nb) {
                            return Err(NerveError::Format(format!(
                                "orientation flag at cube ({}, {}, {}) axis {} touches an unoccupied cube",
                                idx.0, idx.1, idx.2, axis
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Serializes to the `NERVE1` binary layout: 6-byte magic, u32 LE
    /// resolution, r^3 occupancy bytes, 3*r^3 orientation bytes (per cube:
    /// -x, -y, -z), then 3*r^3 f64 LE point coordinates (per cube: x, y, z).
    /// Cube order is x-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.occupancy.len();
        let mut out = Vec::with_capacity(6 + 4 + n + 3 * n + 24 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.resolution.to_le_bytes());
        out.extend(self.occupancy.iter().map(|&o| o as u8));
        for flags in &self.orientations {
            out.extend(flags.iter().map(|&f| f as u8));
        }
        for p in &self.points {
            for a in 0..3 {
                out.extend_from_slice(&p[a].to_le_bytes());
            }
        }
        out
    }

    /// Parses the `NERVE1` binary layout and validates all grid invariants.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 {
            return Err(NerveError::Format("truncated header".into()));
        }
        if &bytes[..6] != MAGIC {
            return Err(NerveError::Format("bad magic (expected NERVE1)".into()));
        }
        let resolution = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
        check_resolution(resolution)?;
        let n = (resolution as usize).pow(3);
        let expected = 10 + n + 3 * n + 24 * n;
        if bytes.len() != expected {
            return Err(NerveError::Format(format!(
                "payload length {} does not match resolution {} (expected {})",
                bytes.len(),
                resolution,
                expected
            )));
        }
        let parse_flag = |b: u8, what: &str| -> Result<bool> {
            match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(NerveError::Format(format!("invalid {what} byte {other}"))),
            }
        };
        let mut occupancy = Vec::with_capacity(n);
        for &b in &bytes[10..10 + n] {
            occupancy.push(parse_flag(b, "occupancy")?);
        }
        let mut orientations = Vec::with_capacity(n);
        let ob = &bytes[10 + n..10 + 4 * n];
        for c in 0..n {
            orientations.push([
                parse_flag(ob[3 * c], "orientation")?,
                parse_flag(ob[3 * c + 1], "orientation")?,
                parse_flag(ob[3 * c + 2], "orientation")?,
            ]);
        }
        let pb = &bytes[10 + 4 * n..];
        let mut points = Vec::with_capacity(n);
        for c in 0..n {
            let coord = |a: usize| {
                f64::from_le_bytes(pb[24 * c + 8 * a..24 * c + 8 * a + 8].try_into().unwrap())
            };
            points.push(Vec3::new(coord(0), coord(1), coord(2)));
        }
        let grid = Self { resolution, occupancy, orientations, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_json(&self) -> GridJson {
        GridJson {
            resolution: self.resolution,
            occupancy: self.occupancy.clone(),
            orientations: self.orientations.clone(),
            points: self.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn from_json(json: &GridJson) -> Result<Self> {
        check_resolution(json.resolution)?;
        let n = (json.resolution as usize).pow(3);
        if json.occupancy.len() != n || json.orientations.len() != n || json.points.len() != n {
            return Err(NerveError::Format("attribute array lengths do not match resolution".into()));
        }
        let grid = Self {
            resolution: json.resolution,
            occupancy: json.occupancy.clone(),
            orientations: json.orientations.clone(),
            points: json.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// JSON mirror of the binary grid format, for debugging.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridJson {
    pub resolution: u32,
    pub occupancy: Vec<bool>,
    pub orientations: Vec<[bool; 3]>,
    pub points: Vec<[f64; 3]>,
}

/// Convenience wrappers matching the file-level interface.
pub fn write_grid(grid: &NerveGrid) -> Vec<u8> {
    grid.to_bytes()
}

pub fn read_grid(bytes: &[u8]) -> Result<NerveGrid> {
    NerveGrid::from_bytes(bytes)
}
