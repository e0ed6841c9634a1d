//! End-to-end pipeline: voxelize (optionally perturb), extract, refine,
//! trace, fit, and evaluate against the input curves.

use crate::curves::CurveSet;
use crate::error::Result;
use crate::fit::{fit_path, ParametricCurve, DEFAULT_CIRCLE_THRESHOLD};
use crate::grid::NerveGrid;
use crate::metrics::{
    curve_cd, default_masks, grid_report, EvalReport, DEFAULT_SAMPLES_PER_CURVE,
};
use crate::perturb::{perturb, PerturbSpec};
use crate::pwl::{extract_pwl, CurvePath, PwlGraph};
use crate::topo::{refine, RefineParams};
use crate::voxelize::{
    default_chord_tolerance, voxelize_with_stats, PointRule, VoxelizeStats,
};

pub const DEFAULT_RESOLUTION: u32 = 32;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub resolution: u32,
    pub point_rule: PointRule,
    /// Defaults to `l/10` for the chosen resolution.
    pub chord_tolerance: Option<f64>,
    /// Defaults to the grid-derived refinement parameters.
    pub refine: Option<RefineParams>,
    pub refine_enabled: bool,
    pub circle_threshold: f64,
    pub perturb: Option<PerturbSpec>,
    pub samples_per_curve: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            point_rule: PointRule::Midpoint,
            chord_tolerance: None,
            refine: None,
            refine_enabled: true,
            circle_threshold: DEFAULT_CIRCLE_THRESHOLD,
            perturb: None,
            samples_per_curve: DEFAULT_SAMPLES_PER_CURVE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// The grid fed into extraction (perturbed when a spec was given).
    pub grid: NerveGrid,
    /// The clean voxelization of the input curves.
    pub gt_grid: NerveGrid,
    pub stats: VoxelizeStats,
    pub inconsistent_flags: usize,
    pub graph: PwlGraph,
    pub paths: Vec<CurvePath>,
    pub fitted: Vec<ParametricCurve>,
    /// Paths that could not be fitted (degenerate geometry).
    pub unfitted_paths: usize,
    pub report: EvalReport,
}

pub fn run_pipeline(curves: &CurveSet, cfg: &PipelineConfig) -> Result<PipelineResult> {
    let chord_tolerance = cfg
        .chord_tolerance
        .unwrap_or_else(|| default_chord_tolerance(cfg.resolution));
    let (gt_grid, stats) =
        voxelize_with_stats(curves, cfg.resolution, cfg.point_rule, chord_tolerance)?;

    let grid = match &cfg.perturb {
        Some(spec) => {
            // stand-in for a surface mask: a band around the true edge cubes
            let surface = gt_grid.occupancy_mask().dilate(2);
            perturb(&gt_grid, spec, &surface)?
        }
        None => gt_grid.clone(),
    };

    let extraction = extract_pwl(&grid);
    let inconsistent_flags = extraction.inconsistencies.len();
    let graph = if cfg.refine_enabled {
        let params = cfg
            .refine
            .unwrap_or_else(|| RefineParams::for_edge_length(grid.edge_length()));
        params.validate()?;
        refine(&extraction.graph, &params)
    } else {
        extraction.graph
    };

    let paths = graph.trace_paths();
    let mut fitted = Vec::with_capacity(paths.len());
    let mut unfitted_paths = 0;
    for path in &paths {
        match fit_path(path, &graph, cfg.circle_threshold) {
            Ok(c) => fitted.push(c),
            Err(err) => {
                unfitted_paths += 1;
                log::warn!("skipping unfittable path ({} vertices): {err}", path.vertices.len());
            }
        }
    }

    let (mask_o, mask_e, mask_p) = default_masks(&gt_grid);
    let grids = grid_report(&grid, &gt_grid, &mask_o, &mask_e, &mask_p)?;
    let (cd, hd) = if fitted.is_empty() {
        (None, None)
    } else {
        let (cd, hd) = curve_cd(&fitted, curves, cfg.samples_per_curve)?;
        (Some(cd), Some(hd))
    };
    let report = EvalReport {
        r_o: grids.r_o,
        p_o: grids.p_o,
        c_e: grids.c_e,
        d_p: grids.d_p,
        cd,
        hd,
    };

    Ok(PipelineResult {
        grid,
        gt_grid,
        stats,
        inconsistent_flags,
        graph,
        paths,
        fitted,
        unfitted_paths,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn wireframe_roundtrip_is_tight() {
        let shape = corpus::box_wireframe(
            crate::geom::Vec3::zeros(),
            crate::geom::Vec3::new(0.75, 0.75, 0.75),
            None,
        );
        let result = run_pipeline(&shape, &PipelineConfig::default()).unwrap();
        assert_eq!(result.inconsistent_flags, 0);
        assert_eq!(result.report.r_o, Some(1.0));
        assert_eq!(result.report.p_o, Some(1.0));
        assert_eq!(result.report.c_e, Some(1.0));
        assert_eq!(result.report.d_p, Some(0.0));
        // 12 wireframe edges -> 12 open paths between corner junctions
        assert_eq!(result.paths.len(), 12);
        assert!(result.paths.iter().all(|p| !p.closed));
        let cd = result.report.cd.unwrap();
        let hd = result.report.hd.unwrap();
        assert!(cd <= 1e-3, "wireframe CD {cd}");
        assert!(hd <= 0.05, "wireframe HD {hd}");
        // corner vertices sit exactly on the wireframe corners
        let corners = result
            .graph
            .endpoints()
            .iter()
            .map(|&v| result.graph.position(v))
            .collect::<Vec<_>>();
        assert_eq!(corners.len(), 8);
        for c in corners {
            assert!((c.x.abs() - 0.75).abs() < 1e-12);
            assert!((c.y.abs() - 0.75).abs() < 1e-12);
            assert!((c.z.abs() - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_roundtrip_fits_a_circle() {
        let shape = CurveSet::new(vec![crate::curves::Curve::circle(
            crate::geom::Vec3::new(0.05, -0.1, 0.2),
            0.55,
            crate::geom::Vec3::new(0.3, 0.2, 1.0),
        )
        .unwrap()]);
        // dense sampling keeps truncation midpoints within the 0.001 circle
        // gate; the default l/10 tolerance is an occupancy-level setting
        let cfg = PipelineConfig {
            chord_tolerance: Some(2.0 / 32.0 / 200.0),
            ..PipelineConfig::default()
        };
        let result = run_pipeline(&shape, &cfg).unwrap();
        assert_eq!(result.paths.len(), 1);
        assert!(result.paths[0].closed);
        assert_eq!(result.fitted.len(), 1);
        assert!(result.fitted[0].is_circle());
        assert!(result.report.cd.unwrap() < 1e-4);
    }
}
