//! Clamped B-spline basis evaluation (Cox-de Boor) shared by curve
//! evaluation and least-squares fitting.

use crate::geom::Vec3;

/// Index of the knot span containing `u`, i.e. the largest `s` with
/// `knots[s] <= u`, restricted to the valid span range of a clamped curve.
pub fn find_span(knots: &[f64], degree: usize, u: f64) -> usize {
    let n = knots.len() - degree - 2; // last control-point index
    let lo = degree;
    let hi = n + 1;
    if u >= knots[hi] {
        return n;
    }
    if u <= knots[lo] {
        return lo;
    }
    // binary search over [lo, hi)
    let mut low = lo;
    let mut high = hi;
    let mut mid = (low + high) / 2;
    while u < knots[mid] || u >= knots[mid + 1] {
        if u < knots[mid] {
            high = mid;
        } else {
            low = mid;
        }
        mid = (low + high) / 2;
    }
    mid
}

/// The `degree + 1` basis functions that are nonzero on `span`, evaluated
/// at `u`.
pub fn basis_functions(knots: &[f64], degree: usize, span: usize, u: f64) -> Vec<f64> {
    let mut funcs = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    funcs[0] = 1.0;
    for j in 1..=degree {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { funcs[r] / denom };
            funcs[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        funcs[j] = saved;
    }
    funcs
}

/// Parameter domain `[knots[degree], knots[len - 1 - degree]]`.
pub fn domain(knots: &[f64], degree: usize) -> (f64, f64) {
    (knots[degree], knots[knots.len() - 1 - degree])
}

/// Curve point at parameter `u` (in the knot domain).
pub fn eval_point(knots: &[f64], degree: usize, control_points: &[Vec3], u: f64) -> Vec3 {
    let span = find_span(knots, degree, u);
    let funcs = basis_functions(knots, degree, span, u);
    let mut p = Vec3::zeros();
    for (r, w) in funcs.iter().enumerate() {
        p += control_points[span - degree + r] * *w;
    }
    p
}

/// Clamped uniform knot vector on `[0,1]` with `interior` evenly spaced
/// interior knots: `[0; degree+1], 1/(m+1) .. m/(m+1), [1; degree+1]`.
pub fn clamped_uniform_knots(degree: usize, interior: usize) -> Vec<f64> {
    let mut knots = Vec::with_capacity(2 * (degree + 1) + interior);
    knots.extend(std::iter::repeat(0.0).take(degree + 1));
    for j in 1..=interior {
        knots.push(j as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    knots
}

/// Validates a clamped knot vector for `ncp` control points.
pub fn validate_knots(knots: &[f64], degree: usize, ncp: usize) -> Result<(), String> {
    if ncp < degree + 1 {
        return Err(format!("need at least {} control points for degree {}", degree + 1, degree));
    }
    if knots.len() != ncp + degree + 1 {
        return Err(format!(
            "knot count {} does not match control points {} + degree {} + 1",
            knots.len(),
            ncp,
            degree
        ));
    }
    if knots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err("knot vector must be nondecreasing".into());
    }
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if knots[..=degree].iter().any(|&k| k != first)
        || knots[knots.len() - degree - 1..].iter().any(|&k| k != last)
    {
        return Err(format!("knot vector must be clamped with multiplicity {}", degree + 1));
    }
    if first >= last {
        return Err("degenerate knot domain".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_partition_of_unity() {
        let knots = clamped_uniform_knots(3, 4);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let span = find_span(&knots, 3, u);
            let funcs = basis_functions(&knots, 3, span, u);
            let sum: f64 = funcs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "u={u} sum={sum}");
            assert!(funcs.iter().all(|&f| f >= -1e-12));
        }
    }

    #[test]
    fn clamped_eval_hits_end_control_points() {
        let knots = clamped_uniform_knots(3, 2);
        let cps = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(2.0, -1.0, 0.0),
            Vec3::new(3.0, 0.5, 0.0),
            Vec3::new(4.0, 0.0, 1.0),
            Vec3::new(5.0, 2.0, 0.0),
        ];
        assert!((eval_point(&knots, 3, &cps, 0.0) - cps[0]).norm() < 1e-15);
        assert!((eval_point(&knots, 3, &cps, 1.0) - cps[5]).norm() < 1e-15);
    }

    #[test]
    fn straight_control_polygon_gives_linear_curve() {
        let knots = clamped_uniform_knots(3, 0);
        let cps: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64 / 3.0, 0.0, 0.0)).collect();
        // Bezier with equally spaced collinear control points is the line x = u
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            let p = eval_point(&knots, 3, &cps, u);
            assert!((p - Vec3::new(u, 0.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn knot_validation() {
        let knots = clamped_uniform_knots(3, 1);
        assert!(validate_knots(&knots, 3, 5).is_ok());
        assert!(validate_knots(&knots, 3, 4).is_err());
        let mut bad = knots.clone();
        bad[4] = -0.5; // breaks monotonicity
        assert!(validate_knots(&bad, 3, 5).is_err());
        let unclamped = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        assert!(validate_knots(&unclamped, 3, 5).is_err());
    }
}
