//! Volumetric edge grids for curve extraction.
//!
//! A resolution-`r` cube grid over `[-1,1]^3` stores, per cube, an edge
//! occupancy bit, three face-orientation bits, and one edge point. Curves
//! voxelize into such grids; grids convert to piece-wise linear curve
//! graphs; graph paths refine and fit into parametric curves (cubic
//! B-splines and 3D circles). A seeded perturbation harness emulates
//! prediction error so the downstream pipeline can be stress-tested
//! without a learned model.

pub mod bspline;
pub mod corpus;
pub mod curves;
pub mod error;
pub mod fit;
pub mod geom;
pub mod grid;
pub mod metrics;
pub mod perturb;
pub mod pipeline;
pub mod pwl;
pub mod topo;
pub mod voxelize;

pub use curves::{Curve, CurveSet};
pub use error::{NerveError, Result};
pub use fit::{fit_bspline, fit_circle, fit_path, CurveGeometry, ParametricCurve};
pub use geom::{Aabb, Vec3};
pub use grid::{read_grid, write_grid, CubeIndex, CubeMask, NerveGrid};
pub use metrics::{chamfer, curve_cd, grid_report, hausdorff_avg, EvalReport, GridReport};
pub use perturb::{perturb, PerturbSpec};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineResult};
pub use pwl::{extract_pwl, CurvePath, PwlGraph};
pub use topo::{dedupe_multipaths, reconnect, refine, remove_spurs, RefineParams};
pub use voxelize::{
    cube_point_midpoint, cube_point_qef, segment_walk, voxelize, voxelize_with_stats,
    PointRule, VoxelizeStats,
};
