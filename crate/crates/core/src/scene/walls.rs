use serde::{Deserialize, Serialize};

use crate::geom::{signed_area, Point2};

use super::{Region, SceneError};

/// One wall extruded outward from a polygon edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallSlab {
    /// Quad in the floor plane: edge start, edge end, outer end, outer start.
    pub footprint: [Point2; 4],
    pub bottom: f64,
    pub top: f64,
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionMesh {
    pub region: String,
    pub floor: Vec<Point2>,
    pub floor_y: f64,
    pub walls: Vec<WallSlab>,
}

/// Walls of thickness `eta` grown outward from every edge, with mitred
/// corners so that neighbouring slabs share their diagonal.
pub fn thicken_walls(region: &Region, eta: f64) -> Result<RegionMesh, SceneError> {
    let v = &region.vertices;
    if v.len() < 3 || !(signed_area(v) > 0.0) {
        return Err(SceneError::DegenerateRegion(region.id.clone()));
    }
    let n = v.len();
    let normal = |i: usize| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let (dx, dz) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dz);
        [dz / len, -dx / len]
    };
    // Vertex offset along the bisector, scaled so both adjacent edges move by eta.
    let offset: Vec<Point2> = (0..n)
        .map(|i| {
            let np = normal((i + n - 1) % n);
            let nn = normal(i);
            let denom = 1.0 + np[0] * nn[0] + np[1] * nn[1];
            let m = if denom.abs() < 1e-12 { nn } else { [(np[0] + nn[0]) / denom, (np[1] + nn[1]) / denom] };
            [v[i][0] + eta * m[0], v[i][1] + eta * m[1]]
        })
        .collect();
    let walls = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            WallSlab {
                footprint: [v[i], v[j], offset[j], offset[i]],
                bottom: region.floor_y,
                top: region.ceiling_y(),
                thickness: eta,
            }
        })
        .collect();
    Ok(RegionMesh { region: region.id.clone(), floor: v.clone(), floor_y: region.floor_y, walls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_segment_distance;

    fn outer_edge(w: &WallSlab) -> (Point2, Point2) {
        (w.footprint[3], w.footprint[2])
    }

    #[test]
    fn square_room_slabs_sit_outside_edges() {
        let r = Region::rectangle("r", 0.0, 0.0, 4.0, 4.0, 3.0).unwrap();
        let mesh = thicken_walls(&r, 0.03).unwrap();
        assert_eq!(mesh.walls.len(), 4);
        for w in &mesh.walls {
            let (a, b) = (w.footprint[0], w.footprint[1]);
            let (oa, ob) = outer_edge(w);
            for p in [oa, ob] {
                // Distance to the infinite edge line is eta.
                let (dx, dz) = (b[0] - a[0], b[1] - a[1]);
                let d = ((p[0] - a[0]) * dz - (p[1] - a[1]) * dx).abs() / dx.hypot(dz);
                assert!((d - 0.03).abs() < 1e-12);
                assert!(!r.contains_point(p, 0.0));
            }
            assert_eq!(w.thickness, 0.03);
        }
        assert_eq!(outer_edge(&mesh.walls[0]).0, [-2.03, -2.03]);
    }

    #[test]
    fn zero_thickness_is_legal() {
        let r = Region::rectangle("r", 0.0, 0.0, 4.0, 4.0, 3.0).unwrap();
        let mesh = thicken_walls(&r, 0.0).unwrap();
        for w in &mesh.walls {
            assert_eq!(w.footprint[0], w.footprint[3]);
            assert_eq!(w.footprint[1], w.footprint[2]);
        }
    }

    #[test]
    fn adjacent_rooms_abut() {
        let eta = 0.03;
        let a = Region::rectangle("a", 0.0, 0.0, 4.0, 4.0, 3.0).unwrap();
        let b = Region::rectangle("b", 4.0 + 2.0 * eta, 0.0, 4.0, 4.0, 3.0).unwrap();
        let ma = thicken_walls(&a, eta).unwrap();
        let mb = thicken_walls(&b, eta).unwrap();
        // East wall of a (edge 1) faces the west wall of b (edge 3).
        let (ea0, ea1) = outer_edge(&ma.walls[1]);
        let (eb0, eb1) = outer_edge(&mb.walls[3]);
        for p in [ea0, ea1] {
            assert!((p[0] - 2.0 - eta).abs() < 1e-9);
            assert!(point_segment_distance(p, eb0, eb1) < 1e-9);
        }
        for p in [eb0, eb1] {
            assert!((p[0] - (2.0 + eta)).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_polygon() {
        let mut r = Region::rectangle("r", 0.0, 0.0, 4.0, 4.0, 3.0).unwrap();
        r.vertices = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        assert_eq!(thicken_walls(&r, 0.03), Err(SceneError::DegenerateRegion("r".into())));
    }
}
