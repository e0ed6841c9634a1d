//! Small shared geometry helpers.

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned box, used for cube extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    /// Closed-extent containment.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Componentwise clamp of `p` into the closed extent.
    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

/// True when every coordinate of `p` lies in `[-1, 1]`.
pub fn in_unit_domain(p: &Vec3) -> bool {
    (0..3).all(|a| p[a] >= -1.0 && p[a] <= 1.0)
}

/// Arc-length point at fraction `t` in `[0,1]` along a polyline.
pub fn polyline_point_at(points: &[Vec3], t: f64) -> Vec3 {
    assert!(!points.is_empty());
    if points.len() == 1 {
        return points[0];
    }
    let mut cumulative = Vec::with_capacity(points.len());
    cumulative.push(0.0);
    let mut total = 0.0;
    for w in points.windows(2) {
        total += (w[1] - w[0]).norm();
        cumulative.push(total);
    }
    if total == 0.0 {
        return points[0];
    }
    let target = t.clamp(0.0, 1.0) * total;
    let seg = match cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
        Ok(i) => i.min(points.len() - 2),
        Err(i) => i.saturating_sub(1).min(points.len() - 2),
    };
    let seg_len = cumulative[seg + 1] - cumulative[seg];
    if seg_len == 0.0 {
        return points[seg];
    }
    let local = (target - cumulative[seg]) / seg_len;
    points[seg] + (points[seg + 1] - points[seg]) * local
}

/// Total length of a polyline.
pub fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Arc-length midpoint of a polyline run.
pub fn polyline_midpoint(points: &[Vec3]) -> Vec3 {
    polyline_point_at(points, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_of_uneven_polyline_is_arclength_based() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 3.0, 0.0),
        ];
        // total length 4, midpoint at length 2 -> (1, 1, 0)
        assert!((polyline_midpoint(&pts) - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn point_at_clamps_parameter() {
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert_eq!(polyline_point_at(&pts, -1.0), pts[0]);
        assert_eq!(polyline_point_at(&pts, 2.0), pts[1]);
    }
}
