//! Point-set and grid metrics: Chamfer distance, averaged Hausdorff
//! distance, and the masked grid report (occupancy recall/precision,
//! orientation correctness, point distance).

use serde::{Deserialize, Serialize};

use crate::curves::CurveSet;
use crate::error::{NerveError, Result};
use crate::fit::ParametricCurve;
use crate::geom::Vec3;
use crate::grid::{CubeMask, NerveGrid};

pub const DEFAULT_SAMPLES_PER_CURVE: usize = 512;

fn min_sq_dist(p: &Vec3, set: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for q in set {
        let d = (p - q).norm_squared();
        if d < best {
            best = d;
        }
    }
    best
}

/// Chamfer distance: mean squared nearest-neighbor distance, symmetrized
/// by summing both directions.
pub fn chamfer(x: &[Vec3], y: &[Vec3]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(NerveError::EmptyInput("chamfer distance needs nonempty sets"));
    }
    let mut sx = 0.0;
    for p in x {
        sx += min_sq_dist(p, y);
    }
    let mut sy = 0.0;
    for q in y {
        sy += min_sq_dist(q, x);
    }
    Ok(sx / x.len() as f64 + sy / y.len() as f64)
}

/// Averaged Hausdorff distance: half the sum of the two directed max-min
/// distances (unsquared).
pub fn hausdorff_avg(x: &[Vec3], y: &[Vec3]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(NerveError::EmptyInput("hausdorff distance needs nonempty sets"));
    }
    let mut mx: f64 = 0.0;
    for p in x {
        mx = mx.max(min_sq_dist(p, y));
    }
    let mut my: f64 = 0.0;
    for q in y {
        my = my.max(min_sq_dist(q, x));
    }
    Ok(0.5 * (mx.sqrt() + my.sqrt()))
}

/// Masked grid comparison. Metrics whose denominator is empty are reported
/// as `None` rather than 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Occupancy recall over the occupancy mask.
    pub r_o: Option<f64>,
    /// Occupancy precision over the occupancy mask.
    pub p_o: Option<f64>,
    /// Fraction of mask cubes whose three face flags all match.
    pub c_e: Option<f64>,
    /// Mean point distance over the point mask.
    pub d_p: Option<f64>,
}

/// Compares predicted and ground-truth grids under the given masks:
/// occupancy within `mask_o`, orientation correctness within `mask_e`
/// (a cube counts only if all three flags match), and mean point distance
/// within `mask_p`.
pub fn grid_report(
    pred: &NerveGrid,
    gt: &NerveGrid,
    mask_o: &CubeMask,
    mask_e: &CubeMask,
    mask_p: &CubeMask,
) -> Result<GridReport> {
    let r = gt.resolution();
    if pred.resolution() != r {
        return Err(NerveError::ResolutionMismatch(pred.resolution(), r));
    }
    for m in [mask_o, mask_e, mask_p] {
        if m.resolution() != r {
            return Err(NerveError::ResolutionMismatch(m.resolution(), r));
        }
    }

    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for idx in mask_o.indices() {
        match (pred.occupancy(idx), gt.occupancy(idx)) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let r_o = ratio(tp, tp + fn_);
    let p_o = ratio(tp, tp + fp);

    let (mut correct, mut considered) = (0u64, 0u64);
    for idx in mask_e.indices() {
        considered += 1;
        let ok = (0..3).all(|axis| pred.orientation(idx, axis) == gt.orientation(idx, axis));
        if ok {
            correct += 1;
        }
    }
    let c_e = ratio(correct, considered);

    let (mut dist_sum, mut count) = (0.0, 0u64);
    for idx in mask_p.indices() {
        dist_sum += (pred.point(idx) - gt.point(idx)).norm();
        count += 1;
    }
    let d_p = (count > 0).then(|| dist_sum / count as f64);

    Ok(GridReport { r_o, p_o, c_e, d_p })
}

/// Default evaluation masks: occupancy over the whole grid, orientation and
/// point metrics over the ground-truth edge cubes.
pub fn default_masks(gt: &NerveGrid) -> (CubeMask, CubeMask, CubeMask) {
    let full = CubeMask::full(gt.resolution()).expect("grid resolution is valid");
    let occ = gt.occupancy_mask();
    (full, occ.clone(), occ)
}

/// Uniform-parameter samples of every curve in a set, concatenated.
pub fn sample_curve_set(set: &CurveSet, samples_per_curve: usize) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(set.curves.len() * samples_per_curve);
    for c in &set.curves {
        for k in 0..samples_per_curve {
            let t = k as f64 / (samples_per_curve - 1) as f64;
            out.push(c.point_at(t));
        }
    }
    out
}

/// Samples fitted and ground-truth curves and reports `(CD, HD)`.
pub fn curve_cd(
    fitted: &[ParametricCurve],
    gt: &CurveSet,
    samples_per_curve: usize,
) -> Result<(f64, f64)> {
    if fitted.is_empty() || gt.curves.is_empty() {
        return Err(NerveError::EmptyInput("curve comparison needs curves on both sides"));
    }
    if samples_per_curve < 2 {
        return Err(NerveError::EmptyInput("need at least 2 samples per curve"));
    }
    let mut pred = Vec::with_capacity(fitted.len() * samples_per_curve);
    for c in fitted {
        pred.extend(c.sample(samples_per_curve));
    }
    let gt_samples = sample_curve_set(gt, samples_per_curve);
    Ok((chamfer(&pred, &gt_samples)?, hausdorff_avg(&pred, &gt_samples)?))
}

/// Evaluation report emitted by the CLI.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(rename = "R_o")]
    pub r_o: Option<f64>,
    #[serde(rename = "P_o")]
    pub p_o: Option<f64>,
    #[serde(rename = "C_e")]
    pub c_e: Option<f64>,
    #[serde(rename = "D_p")]
    pub d_p: Option<f64>,
    #[serde(rename = "CD")]
    pub cd: Option<f64>,
    #[serde(rename = "HD")]
    pub hd: Option<f64>,
}

impl EvalReport {
    pub fn csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x}"));
        format!(
            "R_o,P_o,C_e,D_p,CD,HD\n{},{},{},{},{},{}\n",
            cell(self.r_o),
            cell(self.p_o),
            cell(self.c_e),
            cell(self.d_p),
            cell(self.cd),
            cell(self.hd)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Curve;
    use rand::{Rng, SeedableRng};

    fn brute_chamfer(x: &[Vec3], y: &[Vec3]) -> f64 {
        let one = |a: &[Vec3], b: &[Vec3]| -> f64 {
            let mut s = 0.0;
            for p in a {
                let mut best = f64::INFINITY;
                for q in b {
                    best = best.min((p - q).norm_squared());
                }
                s += best;
            }
            s
        };
        one(x, y) / x.len() as f64 + one(y, x) / y.len() as f64
    }

    fn brute_hausdorff(x: &[Vec3], y: &[Vec3]) -> f64 {
        let dir = |a: &[Vec3], b: &[Vec3]| -> f64 {
            a.iter()
                .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        0.5 * (dir(x, y) + dir(y, x))
    }

    #[test]
    fn hand_values() {
        let x = vec![Vec3::new(0.0, 0.0, 0.0)];
        let y = vec![Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(chamfer(&x, &x).unwrap(), 0.0);
        assert_eq!(chamfer(&x, &y).unwrap(), 2.0);
        assert_eq!(hausdorff_avg(&x, &x).unwrap(), 0.0);
        assert_eq!(hausdorff_avg(&x, &y).unwrap(), 1.0);
        assert!(chamfer(&x, &[]).is_err());
        assert!(hausdorff_avg(&[], &y).is_err());
    }

    #[test]
    fn matches_brute_force_oracle_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.random_range(1..=100);
            let m = rng.random_range(1..=100);
            let rand_set = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<Vec3> {
                (0..k)
                    .map(|_| {
                        Vec3::new(
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                            rng.random_range(-1.0..1.0),
                        )
                    })
                    .collect()
            };
            let x = rand_set(&mut rng, n);
            let y = rand_set(&mut rng, m);
            assert_eq!(chamfer(&x, &y).unwrap(), brute_chamfer(&x, &y));
            assert_eq!(hausdorff_avg(&x, &y).unwrap(), brute_hausdorff(&x, &y));
        }
    }

    #[test]
    fn symmetry_and_scaling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rand_set = |rng: &mut rand_chacha::ChaCha8Rng, k: usize| -> Vec<Vec3> {
            (0..k)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect()
        };
        for _ in 0..20 {
            let x = rand_set(&mut rng, 17);
            let y = rand_set(&mut rng, 23);
            assert_eq!(chamfer(&x, &y).unwrap(), chamfer(&y, &x).unwrap());
            assert_eq!(hausdorff_avg(&x, &y).unwrap(), hausdorff_avg(&y, &x).unwrap());
            let s = 2.0; // power of two keeps the scaling exact in floating point
            let sx: Vec<Vec3> = x.iter().map(|p| p * s).collect();
            let sy: Vec<Vec3> = y.iter().map(|p| p * s).collect();
            assert_eq!(chamfer(&sx, &sy).unwrap(), s * s * chamfer(&x, &y).unwrap());
            assert_eq!(hausdorff_avg(&sx, &sy).unwrap(), s * hausdorff_avg(&x, &y).unwrap());
        }
    }

    #[test]
    fn grid_report_perfect_and_undefined() {
        let set = CurveSet::new(vec![Curve::Line {
            a: Vec3::new(-0.5, -0.5, -0.5),
            b: Vec3::new(0.5, -0.5, -0.5),
        }]);
        let gt = crate::voxelize::voxelize(&set, 4, crate::voxelize::PointRule::Midpoint, 0.05).unwrap();
        let (mo, me, mp) = default_masks(&gt);
        let perfect = grid_report(&gt, &gt, &mo, &me, &mp).unwrap();
        assert_eq!(perfect.r_o, Some(1.0));
        assert_eq!(perfect.p_o, Some(1.0));
        assert_eq!(perfect.c_e, Some(1.0));
        assert_eq!(perfect.d_p, Some(0.0));

        // all-false prediction: recall 0, precision undefined
        let pred = NerveGrid::new(4).unwrap();
        let rep = grid_report(&pred, &gt, &mo, &me, &mp).unwrap();
        assert_eq!(rep.r_o, Some(0.0));
        assert_eq!(rep.p_o, None);

        // empty masks leave every metric undefined
        let empty = CubeMask::empty(4).unwrap();
        let rep = grid_report(&gt, &gt, &empty, &empty, &empty).unwrap();
        assert_eq!(rep, GridReport { r_o: None, p_o: None, c_e: None, d_p: None });
    }

    #[test]
    fn grid_report_point_distance() {
        let mut gt = NerveGrid::new(2).unwrap();
        gt.set_occupancy((0, 0, 0), true);
        gt.set_point((0, 0, 0), Vec3::new(-0.5, -0.5, -0.5)).unwrap();
        let mut pred = gt.clone();
        pred.set_point((0, 0, 0), Vec3::new(-0.497, -0.5, -0.5)).unwrap();
        let (mo, me, mp) = default_masks(&gt);
        let rep = grid_report(&pred, &gt, &mo, &me, &mp).unwrap();
        assert!((rep.d_p.unwrap() - 0.003).abs() < 1e-15);
    }

    #[test]
    fn grid_report_rejects_resolution_mismatch() {
        let a = NerveGrid::new(2).unwrap();
        let b = NerveGrid::new(4).unwrap();
        let (mo, me, mp) = default_masks(&a);
        assert!(grid_report(&b, &a, &mo, &me, &mp).is_err());
    }

    #[test]
    fn curve_cd_identical_sets_is_tiny() {
        use crate::fit::{CurveGeometry, ParametricCurve};
        let gt = CurveSet::new(vec![
            Curve::circle(Vec3::new(0.1, 0.0, 0.0), 0.5, Vec3::new(0.0, 0.0, 1.0)).unwrap(),
            Curve::Line { a: Vec3::new(-0.8, 0.2, 0.1), b: Vec3::new(0.7, -0.3, 0.4) },
        ]);
        let fitted = vec![
            ParametricCurve {
                geometry: CurveGeometry::Circle {
                    center: Vec3::new(0.1, 0.0, 0.0),
                    radius: 0.5,
                    normal: Vec3::new(0.0, 0.0, 1.0),
                },
                residual: 0.0,
            },
            crate::fit::fit_bspline(&[Vec3::new(-0.8, 0.2, 0.1), Vec3::new(0.7, -0.3, 0.4)])
                .unwrap(),
        ];
        let (cd, hd) = curve_cd(&fitted, &gt, 512).unwrap();
        assert!(cd <= 1e-6, "CD {cd}");
        assert!(hd <= 1e-3, "HD {hd}");
    }

    #[test]
    fn curve_cd_of_normal_offset_circles() {
        use crate::fit::{CurveGeometry, ParametricCurve};
        // circles offset by 0.01 along the shared normal: every sample is
        // exactly 0.01 from the other circle's plane, so CD = 2 * 0.01^2
        let gt = CurveSet::new(vec![Curve::circle(
            Vec3::new(0.0, 0.0, 0.0),
            0.5,
            Vec3::new(0.0, 0.0, 1.0),
        )
        .unwrap()]);
        let fitted = vec![ParametricCurve {
            geometry: CurveGeometry::Circle {
                center: Vec3::new(0.0, 0.0, 0.01),
                radius: 0.5,
                normal: Vec3::new(0.0, 0.0, 1.0),
            },
            residual: 0.0,
        }];
        let (cd, _) = curve_cd(&fitted, &gt, 512).unwrap();
        assert!((cd - 2e-4).abs() <= 1e-9, "CD {cd}");
    }
}
