//! Seeded grid corruption emulating prediction error: point jitter,
//! occupancy false positives/negatives, and orientation flips, followed by
//! invariant repair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NerveError, Result};
use crate::grid::{CubeMask, NerveGrid};

/// Corruption parameters. All draws derive from `seed`; each attribute
/// class uses its own RNG stream, so toggling one probability never shifts
/// another class's draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbSpec {
    /// Isotropic Gaussian jitter for edge points: standard deviation of the
    /// total displacement (length units).
    pub point_sigma: f64,
    /// Probability of flipping an unoccupied surface-mask cube to occupied.
    pub occ_fp: f64,
    /// Probability of dropping an occupied cube.
    pub occ_fn: f64,
    /// Toggle probability per inner-face orientation flag.
    pub orient_flip: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn clean(seed: u64) -> Self {
        Self { point_sigma: 0.0, occ_fp: 0.0, occ_fn: 0.0, orient_flip: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("occ_fp", self.occ_fp), ("occ_fn", self.occ_fn), ("orient_flip", self.orient_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NerveError::InvalidCurve(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.point_sigma >= 0.0) {
            return Err(NerveError::InvalidCurve("point_sigma must be nonnegative".into()));
        }
        Ok(())
    }
}

const STREAM_POINTS: u64 = 0;
const STREAM_OCC_FP: u64 = 1;
const STREAM_OCC_FN: u64 = 2;
const STREAM_ORIENT: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Two standard normal draws via Box-Muller (fixed two uniforms per pair).
fn normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Applies the corruption and repairs the grid invariants: jitters points
/// of occupied cubes (clamped to their cube), flips occupancy (false
/// positives only inside `surface_mask`), toggles inner-face flags, then
/// clears any flag touching an unoccupied cube.
pub fn perturb(grid: &NerveGrid, spec: &PerturbSpec, surface_mask: &CubeMask) -> Result<NerveGrid> {
    spec.validate()?;
    if surface_mask.resolution() != grid.resolution() {
        return Err(NerveError::ResolutionMismatch(surface_mask.resolution(), grid.resolution()));
    }
    let mut out = grid.clone();

    if spec.point_sigma > 0.0 {
        let mut rng = stream_rng(spec.seed, STREAM_POINTS);
        // sigma is the standard deviation of the total displacement, so
        // each axis gets sigma/sqrt(3)
        let axis_sigma = spec.point_sigma / 3f64.sqrt();
        for idx in grid.indices() {
            // fixed draw stride per cube keeps the stream aligned across
            // occupancy patterns
            let (z0, z1) = normal_pair(&mut rng);
            let (z2, _) = normal_pair(&mut rng);
            if grid.occupancy(idx) {
                let extent = grid.cube_extent(idx)?;
                let jittered =
                    grid.point(idx) + crate::geom::Vec3::new(z0, z1, z2) * axis_sigma;
                out.set_point(idx, extent.clamp(&jittered))?;
            }
        }
    }

    if spec.occ_fn > 0.0 {
        let mut rng = stream_rng(spec.seed, STREAM_OCC_FN);
        for idx in grid.indices() {
            let u: f64 = rng.random();
            if grid.occupancy(idx) && u < spec.occ_fn {
                out.set_occupancy(idx, false);
            }
        }
    }

    if spec.occ_fp > 0.0 {
        let mut rng = stream_rng(spec.seed, STREAM_OCC_FP);
        for idx in grid.indices() {
            let u: f64 = rng.random();
            if !grid.occupancy(idx) && surface_mask.get(idx) && u < spec.occ_fp {
                out.set_occupancy(idx, true);
            }
        }
    }

    if spec.orient_flip > 0.0 {
        let mut rng = stream_rng(spec.seed, STREAM_ORIENT);
        for idx in grid.indices() {
            for axis in 0..3 {
                let u: f64 = rng.random();
                let coord = [idx.0, idx.1, idx.2][axis];
                if coord > 0 && u < spec.orient_flip {
                    let flipped = !out.orientation(idx, axis);
                    out.set_orientation(idx, axis, flipped)?;
                }
            }
        }
    }

    // repair: flags into unoccupied cubes are cleared
    for idx in out.indices() {
        for axis in 0..3 {
            if !out.orientation(idx, axis) {
                continue;
            }
            let keep = NerveGrid::face_neighbor(idx, axis)
                .map_or(false, |nb| out.occupancy(idx) && out.occupancy(nb));
            if !keep {
                out.set_orientation(idx, axis, false)?;
            }
        }
    }
    debug_assert!(out.validate().is_ok());
    Ok(out)
}

/// Parses a length expression in cube-edge units or absolute units:
/// `"l"`, `"l/4"`, `"2l"`, `"3l/2"`, or a plain number like `"0.01"`.
pub fn parse_length_expr(text: &str, edge_length: f64) -> Result<f64> {
    let s = text.trim();
    let bad = || NerveError::InvalidCurve(format!("cannot parse length expression '{text}'"));
    if let Some(pos) = s.find('l') {
        let (coeff_s, rest) = s.split_at(pos);
        let rest = &rest[1..];
        let coeff: f64 = if coeff_s.is_empty() { 1.0 } else { coeff_s.parse().map_err(|_| bad())? };
        let divisor: f64 = if rest.is_empty() {
            1.0
        } else if let Some(d) = rest.strip_prefix('/') {
            d.parse().map_err(|_| bad())?
        } else {
            return Err(bad());
        };
        if divisor == 0.0 {
            return Err(bad());
        }
        Ok(coeff * edge_length / divisor)
    } else {
        s.parse().map_err(|_| bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{Curve, CurveSet};
    use crate::geom::Vec3;
    use crate::voxelize::{voxelize, PointRule};

    fn sample_grid() -> NerveGrid {
        let set = CurveSet::new(vec![
            Curve::circle(Vec3::new(0.0, 0.0, 0.0), 0.6, Vec3::new(0.0, 0.0, 1.0)).unwrap(),
            Curve::Line { a: Vec3::new(-0.7, -0.7, -0.7), b: Vec3::new(0.7, 0.6, 0.5) },
        ]);
        voxelize(&set, 16, PointRule::Midpoint, 0.0125).unwrap()
    }

    #[test]
    fn zero_spec_is_identity() {
        let grid = sample_grid();
        let mask = CubeMask::full(16).unwrap();
        let out = perturb(&grid, &PerturbSpec::clean(1), &mask).unwrap();
        assert_eq!(grid.to_bytes(), out.to_bytes());
    }

    #[test]
    fn jitter_keeps_points_in_cubes_and_occupancy_fixed() {
        let grid = sample_grid();
        let l = grid.edge_length();
        let mask = CubeMask::full(16).unwrap();
        let spec = PerturbSpec { point_sigma: l / 4.0, ..PerturbSpec::clean(42) };
        let out = perturb(&grid, &spec, &mask).unwrap();
        out.validate().unwrap();
        let mut moved_far = 0usize;
        let mut total = 0usize;
        for idx in grid.indices() {
            assert_eq!(grid.occupancy(idx), out.occupancy(idx));
            assert_eq!(
                (0..3).map(|a| grid.orientation(idx, a)).collect::<Vec<_>>(),
                (0..3).map(|a| out.orientation(idx, a)).collect::<Vec<_>>()
            );
            if grid.occupancy(idx) {
                total += 1;
                let extent = grid.cube_extent(idx).unwrap();
                assert!(extent.contains(&out.point(idx)));
                if (out.point(idx) - grid.point(idx)).norm() > l / 2.0 {
                    moved_far += 1;
                }
            }
        }
        // with sigma = l/4 at least 99% of points stay within l/2
        assert!(total > 0);
        assert!((moved_far as f64) < 0.01 * total as f64, "{moved_far}/{total} moved > l/2");
    }

    #[test]
    fn full_false_negative_clears_everything() {
        let grid = sample_grid();
        let mask = CubeMask::full(16).unwrap();
        let spec = PerturbSpec { occ_fn: 1.0, ..PerturbSpec::clean(7) };
        let out = perturb(&grid, &spec, &mask).unwrap();
        assert_eq!(out.occupied_count(), 0);
        assert_eq!(out.orientation_count(), 0);
        out.validate().unwrap();
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = sample_grid();
        let mask = grid.occupancy_mask().dilate(2);
        let spec = PerturbSpec {
            point_sigma: 0.02,
            occ_fp: 0.1,
            occ_fn: 0.05,
            orient_flip: 0.02,
            seed: 1234,
        };
        let a = perturb(&grid, &spec, &mask).unwrap();
        let b = perturb(&grid, &spec, &mask).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = perturb(&grid, &PerturbSpec { seed: 1235, ..spec }, &mask).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn streams_are_independent() {
        // enabling occupancy flips must not change which jitter offsets the
        // surviving points receive
        let grid = sample_grid();
        let mask = CubeMask::full(16).unwrap();
        let only_jitter = PerturbSpec { point_sigma: 0.01, ..PerturbSpec::clean(5) };
        let with_flips = PerturbSpec { occ_fp: 0.2, occ_fn: 0.0, ..only_jitter };
        let a = perturb(&grid, &only_jitter, &mask).unwrap();
        let b = perturb(&grid, &with_flips, &mask).unwrap();
        for idx in grid.indices() {
            if grid.occupancy(idx) {
                assert_eq!(a.point(idx), b.point(idx));
            }
        }
    }

    #[test]
    fn false_positives_respect_surface_mask() {
        let grid = sample_grid();
        let near = grid.occupancy_mask().dilate(1);
        let spec = PerturbSpec { occ_fp: 1.0, ..PerturbSpec::clean(3) };
        let out = perturb(&grid, &spec, &near).unwrap();
        for idx in out.indices() {
            if out.occupancy(idx) && !grid.occupancy(idx) {
                assert!(near.get(idx), "false positive outside surface mask");
            }
        }
    }

    #[test]
    fn resolution_mismatch_rejected() {
        let grid = sample_grid();
        let mask = CubeMask::full(8).unwrap();
        assert!(perturb(&grid, &PerturbSpec::clean(0), &mask).is_err());
    }

    #[test]
    fn invalid_spec_rejected() {
        let spec = PerturbSpec { occ_fp: 1.5, ..PerturbSpec::clean(0) };
        assert!(spec.validate().is_err());
        let spec = PerturbSpec { point_sigma: -1.0, ..PerturbSpec::clean(0) };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn length_expressions() {
        let l = 0.0625;
        assert_eq!(parse_length_expr("l", l).unwrap(), l);
        assert_eq!(parse_length_expr("l/4", l).unwrap(), l / 4.0);
        assert_eq!(parse_length_expr("l/2", l).unwrap(), l / 2.0);
        assert_eq!(parse_length_expr("2l", l).unwrap(), 2.0 * l);
        assert_eq!(parse_length_expr("3l/2", l).unwrap(), 1.5 * l);
        assert_eq!(parse_length_expr("0.01", l).unwrap(), 0.01);
        assert!(parse_length_expr("l/0", l).is_err());
        assert!(parse_length_expr("abc", l).is_err());
    }
}
