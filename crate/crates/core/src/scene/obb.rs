use crate::geom::{convex_hull, sin_cos_deg, Mat3, Point2, Vec3};

use super::Transform;

/// Overlap depth (m) below which two boxes are considered touching, not colliding.
pub const CONTACT_EPS: f64 = 1e-6;

/// Rotation matrix for Euler angles in degrees, applied about x, then z, then y.
pub fn rotation_matrix(rot: Vec3) -> Mat3 {
    let (sx, cx) = sin_cos_deg(rot.x);
    let (sy, cy) = sin_cos_deg(rot.y);
    let (sz, cz) = sin_cos_deg(rot.z);
    let rx = Mat3([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]]);
    let ry = Mat3([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]]);
    let rz = Mat3([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]]);
    ry.mul_mat(&rz.mul_mat(&rx))
}

/// World-space box of an object: center, unit local axes and half extents.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub half: Vec3,
}

impl OrientedBox {
    pub fn new(dimensions: Vec3, transform: &Transform) -> Self {
        let m = rotation_matrix(transform.rot);
        OrientedBox {
            center: transform.pos,
            axes: [m.column(0), m.column(1), m.column(2)],
            half: dimensions.mul_elem(transform.scale) * 0.5,
        }
    }

    /// The 8 corners; bit 0 selects +x, bit 1 +y, bit 2 +z in local axes.
    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
            *c = self.center
                + self.axes[0] * (s(1) * self.half.x)
                + self.axes[1] * (s(2) * self.half.y)
                + self.axes[2] * (s(4) * self.half.z);
        }
        out
    }

    /// Half-length of the box's projection onto a unit axis.
    pub fn radius_along(&self, axis: Vec3) -> f64 {
        self.half.x * self.axes[0].dot(axis).abs()
            + self.half.y * self.axes[1].dot(axis).abs()
            + self.half.z * self.axes[2].dot(axis).abs()
    }

    pub fn min_y(&self) -> f64 {
        self.center.y - self.radius_along(Vec3::new(0.0, 1.0, 0.0))
    }

    pub fn max_y(&self) -> f64 {
        self.center.y + self.radius_along(Vec3::new(0.0, 1.0, 0.0))
    }

    /// Convex hull of the corners projected onto the floor plane, counterclockwise in (x, z).
    pub fn footprint(&self) -> Vec<Point2> {
        let pts: Vec<Point2> = self.corners().iter().map(|c| c.xz()).collect();
        convex_hull(&pts)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half.x * self.half.y * self.half.z
    }

    fn bounding_radius(&self) -> f64 {
        self.half.norm()
    }
}

/// Smallest overlap over the separating-axis candidates, or a non-positive
/// value when some axis separates the boxes (its negated gap).
pub fn sat_overlap(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let d = b.center - a.center;
    let mut min_overlap = f64::INFINITY;
    let mut test = |axis: Vec3| {
        let overlap = a.radius_along(axis) + b.radius_along(axis) - d.dot(axis).abs();
        if overlap < min_overlap {
            min_overlap = overlap;
        }
    };
    for axis in a.axes.iter().chain(b.axes.iter()) {
        test(*axis);
    }
    for ea in &a.axes {
        for eb in &b.axes {
            let c = ea.cross(*eb);
            // Parallel edge pairs give no new axis; the face axes already cover them.
            if c.norm() > 1e-9 {
                test(c.normalized().expect("nonzero"));
            }
        }
    }
    min_overlap
}

/// Positive-volume overlap test; faces in contact do not collide.
pub fn boxes_collide(a: &OrientedBox, b: &OrientedBox) -> bool {
    let reach = a.bounding_radius() + b.bounding_radius();
    if (b.center - a.center).norm() >= reach {
        return false;
    }
    sat_overlap(a, b) > CONTACT_EPS
}

/// Minimum translation separating two convex footprints in the floor plane:
/// unit direction to push `b` away from `a`, and the depth. `None` when they
/// do not overlap.
pub fn footprint_mtv(a: &[Point2], b: &[Point2]) -> Option<(Point2, f64)> {
    if a.len() < 3 || b.len() < 3 {
        return None;
    }
    let centroid = |p: &[Point2]| {
        let n = p.len() as f64;
        let (sx, sz) = p.iter().fold((0.0, 0.0), |(x, z), q| (x + q[0], z + q[1]));
        [sx / n, sz / n]
    };
    let (ca, cb) = (centroid(a), centroid(b));
    let mut best: Option<(Point2, f64)> = None;
    for poly in [a, b] {
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (dx, dz) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dz);
            if len < 1e-12 {
                continue;
            }
            let n = [dz / len, -dx / len];
            let proj = |poly: &[Point2]| {
                poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    let t = v[0] * n[0] + v[1] * n[1];
                    (lo.min(t), hi.max(t))
                })
            };
            let (alo, ahi) = proj(a);
            let (blo, bhi) = proj(b);
            let overlap = ahi.min(bhi) - alo.max(blo);
            if overlap <= 0.0 {
                return None;
            }
            if best.is_none_or(|(_, d)| overlap < d) {
                let toward_b = (cb[0] - ca[0]) * n[0] + (cb[1] - ca[1]) * n[1];
                let dir = if toward_b < 0.0 { [-n[0], -n[1]] } else { n };
                best = Some((dir, overlap));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_at(x: f64, y: f64, z: f64) -> OrientedBox {
        OrientedBox::new(Vec3::ONE, &Transform { pos: Vec3::new(x, y, z), ..Transform::default() })
    }

    #[test]
    fn identity_corners() {
        let b = unit_at(0.0, 0.0, 0.0);
        for c in b.corners() {
            assert_eq!(c.abs(), Vec3::new(0.5, 0.5, 0.5));
        }
    }

    #[test]
    fn yaw_quarter_turn_sends_front_to_plus_x() {
        let m = rotation_matrix(Vec3::new(0.0, 90.0, 0.0));
        assert_eq!(m.mul_vec(Vec3::new(0.0, 0.0, 1.0)), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rotation_order_is_x_then_z_then_y() {
        // Independent oracle: rotate a vector step by step about each axis.
        fn about_x(v: Vec3, d: f64) -> Vec3 {
            let (s, c) = d.to_radians().sin_cos();
            Vec3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
        }
        fn about_y(v: Vec3, d: f64) -> Vec3 {
            let (s, c) = d.to_radians().sin_cos();
            Vec3::new(c * v.x + s * v.z, v.y, -s * v.x + c * v.z)
        }
        fn about_z(v: Vec3, d: f64) -> Vec3 {
            let (s, c) = d.to_radians().sin_cos();
            Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
        }
        let rot = Vec3::new(30.0, 50.0, 70.0);
        let v = Vec3::new(0.3, -1.2, 2.0);
        let expected = about_y(about_z(about_x(v, rot.x), rot.z), rot.y);
        let got = rotation_matrix(rot).mul_vec(v);
        assert!((got - expected).norm() < 1e-12);

        // x=90 then z=90 differs from z=90 then x=90.
        let e = Vec3::new(0.0, 1.0, 0.0);
        let xz = rotation_matrix(Vec3::new(90.0, 0.0, 90.0)).mul_vec(e);
        let zx = about_x(about_z(e, 90.0), 90.0);
        assert!((xz - zx).norm() > 0.5);
        assert_eq!(xz, Vec3::new(0.0, 0.0, 1.0));
        assert!((zx - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pure_scaling() {
        let b = OrientedBox::new(Vec3::ONE, &Transform { scale: Vec3::new(2.0, 1.0, 1.0), ..Transform::default() });
        assert_eq!(b.half * 2.0, Vec3::new(2.0, 1.0, 1.0));
    }

    #[test]
    fn disjoint_touching_and_overlapping() {
        assert!(!boxes_collide(&unit_at(0.0, 0.0, 0.0), &unit_at(3.0, 0.0, 0.0)));
        assert!(boxes_collide(&unit_at(0.0, 0.0, 0.0), &unit_at(0.5, 0.0, 0.0)));
        assert!(!boxes_collide(&unit_at(0.0, 0.0, 0.0), &unit_at(1.0, 0.0, 0.0)));
        assert!(!boxes_collide(&unit_at(0.0, 0.0, 0.0), &unit_at(0.0, 1.0, 0.0)));
    }

    #[test]
    fn rotated_diamond_misses_corner() {
        let a = unit_at(0.0, 0.0, 0.0);
        let b = OrientedBox::new(
            Vec3::ONE,
            &Transform { pos: Vec3::new(1.25, 0.0, 1.25), rot: Vec3::new(0.0, 45.0, 0.0), ..Transform::default() },
        );
        // Axis-aligned bounds would overlap; the true shapes do not.
        assert!(!boxes_collide(&a, &b));
    }

    #[test]
    fn footprint_mtv_separates() {
        let a = unit_at(0.0, 0.0, 0.0).footprint();
        let b = unit_at(0.8, 0.0, 0.1).footprint();
        let (dir, depth) = footprint_mtv(&a, &b).unwrap();
        assert!((depth - 0.2).abs() < 1e-12);
        assert_eq!(dir, [1.0, 0.0]);
        assert!(footprint_mtv(&a, &unit_at(2.0, 0.0, 0.0).footprint()).is_none());
    }
}
