//! Geometric scene model. Coordinates are left-handed: x is width, y is
//! height, z is depth, and an unrotated object faces +z. Rotations are Euler
//! angles in degrees applied about x, then z, then y. An object's position is
//! the center of its box.

mod build;
mod obb;
mod walls;

use serde::{Deserialize, Serialize};

use crate::geom::{
    convex_overlap_area, cross2, is_simple_polygon, point_segment_distance, point_strictly_in_polygon, polygon_edges,
    signed_area, Point2, Vec3,
};

pub use build::{
    build_layout, category_from_id, ConnectionSpec, EntityProps, LightSpec, ObjectSpec, RegionSpec, SceneSpec, SurfaceSpec,
};
pub use obb::{boxes_collide, footprint_mtv, rotation_matrix, sat_overlap, OrientedBox, CONTACT_EPS};
pub use walls::{thicken_walls, RegionMesh, WallSlab};

/// Default wall thickness (m).
pub const DEFAULT_WALL_THICKNESS: f64 = 0.03;
/// Default vertical tolerance for support (m).
pub const SUPPORT_TOLERANCE: f64 = 0.005;
/// Fraction of an object's footprint that must rest on a supporting top face.
pub const SUPPORT_OVERLAP: f64 = 0.5;
/// Slack allowed by containment tests (m).
pub const CONTAINMENT_EPS: f64 = 1e-6;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SceneError {
    #[error("region `{0}` is degenerate (polygon area is not positive)")]
    DegenerateRegion(String),
    #[error("region `{id}` is invalid: {reason}")]
    InvalidRegion { id: String, reason: String },
    #[error("region `{0}` has no geometry: give it in the scene file or assign its pos and scale")]
    MissingRegionGeometry(String),
    #[error("object `{0}` is not assigned to a region")]
    UnassignedObject(String),
    #[error("object `{object}` refers to unknown region `{region}`")]
    UnknownRegion { object: String, region: String },
    #[error("object `{id}` has invalid dimensions or scale: {reason}")]
    InvalidObject { id: String, reason: String },
    #[error("scene file: {0}")]
    Spec(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub pos: Vec3,
    /// Degrees about x, y and z (stored in axis order, applied x, z, y).
    pub rot: Vec3,
    pub scale: Vec3,
}

impl Default for Transform {
    fn default() -> Self {
        Transform { pos: Vec3::ZERO, rot: Vec3::ZERO, scale: Vec3::ONE }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub color: String,
    pub material: String,
    pub features: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub category: String,
    /// Unscaled base extents (m).
    pub dimensions: Vec3,
    pub color: String,
    pub material: String,
    pub features: String,
    pub transform: Transform,
    pub region: String,
    /// Position and rotation requested by the program, used to seed placement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_hint: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rot_hint: Option<Vec3>,
}

impl SceneObject {
    pub fn new(id: &str, dimensions: Vec3, region: &str) -> Self {
        SceneObject {
            id: id.to_string(),
            category: category_from_id(id),
            dimensions,
            color: String::new(),
            material: String::new(),
            features: String::new(),
            transform: Transform::default(),
            region: region.to_string(),
            pos_hint: None,
            rot_hint: None,
        }
    }

    pub fn at(mut self, pos: Vec3) -> Self {
        self.transform.pos = pos;
        self
    }

    pub fn rotated(mut self, rot: Vec3) -> Self {
        self.transform.rot = rot;
        self
    }

    /// World-space extents before rotation: dimensions times scale.
    pub fn extents(&self) -> Vec3 {
        self.dimensions.mul_elem(self.transform.scale)
    }

    pub fn world_box(&self) -> OrientedBox {
        OrientedBox::new(self.dimensions, &self.transform)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    /// Counterclockwise floor polygon, points are (x, z).
    pub vertices: Vec<Point2>,
    pub floor_y: f64,
    pub height: f64,
    pub wall_thickness: f64,
    pub floor: Surface,
    pub wall: Surface,
    /// Values read by `region.pos`, `region.rot` and `region.scale`.
    pub frame: Transform,
}

impl Region {
    /// A region from a polygon. Clockwise input is reversed; the frame is the
    /// polygon's bounding box.
    pub fn new(id: &str, vertices: Vec<Point2>, floor_y: f64, height: f64) -> Result<Self, SceneError> {
        let mut vertices = vertices;
        let area = signed_area(&vertices);
        if vertices.len() < 3 || area.abs() <= 0.0 || !area.is_finite() {
            return Err(SceneError::DegenerateRegion(id.to_string()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        if !is_simple_polygon(&vertices) {
            return Err(SceneError::InvalidRegion { id: id.to_string(), reason: "polygon is self-intersecting".into() });
        }
        if !(height > 0.0) || !floor_y.is_finite() {
            return Err(SceneError::InvalidRegion { id: id.to_string(), reason: "height must be positive".into() });
        }
        let (lo, hi) = crate::geom::bounds2(&vertices);
        let frame = Transform {
            pos: Vec3::new((lo[0] + hi[0]) / 2.0, floor_y, (lo[1] + hi[1]) / 2.0),
            rot: Vec3::ZERO,
            scale: Vec3::new(hi[0] - lo[0], height, hi[1] - lo[1]),
        };
        Ok(Region {
            id: id.to_string(),
            vertices,
            floor_y,
            height,
            wall_thickness: DEFAULT_WALL_THICKNESS,
            floor: Surface::default(),
            wall: Surface::default(),
            frame,
        })
    }

    /// Axis-aligned rectangle centered at (cx, cz).
    pub fn rectangle(id: &str, cx: f64, cz: f64, width: f64, depth: f64, height: f64) -> Result<Self, SceneError> {
        let (hx, hz) = (width / 2.0, depth / 2.0);
        Region::new(id, vec![[cx - hx, cz - hz], [cx + hx, cz - hz], [cx + hx, cz + hz], [cx - hx, cz + hz]], 0.0, height)
    }

    /// A rectangle described by a transform: pos is the floor center, scale
    /// the (width, height, depth) and only the yaw of rot is used.
    pub fn from_frame(id: &str, frame: Transform) -> Result<Self, SceneError> {
        let m = rotation_matrix(Vec3::new(0.0, frame.rot.y, 0.0));
        let (hx, hz) = (frame.scale.x / 2.0, frame.scale.z / 2.0);
        let vertices = [(-hx, -hz), (hx, -hz), (hx, hz), (-hx, hz)]
            .iter()
            .map(|&(x, z)| (frame.pos + m.mul_vec(Vec3::new(x, 0.0, z))).xz())
            .collect();
        let mut region = Region::new(id, vertices, frame.pos.y, frame.scale.y)?;
        region.frame = frame;
        Ok(region)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        crate::geom::bounds2(&self.vertices)
    }

    pub fn ceiling_y(&self) -> f64 {
        self.floor_y + self.height
    }

    /// Point-in-polygon with a boundary allowance of `eps`.
    pub fn contains_point(&self, p: Point2, eps: f64) -> bool {
        point_strictly_in_polygon(p, &self.vertices)
            || polygon_edges(&self.vertices).any(|(a, b)| point_segment_distance(p, a, b) <= eps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub regions: [String; 2],
    pub category: String,
    pub dimensions: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Light {
    pub position: Vec3,
    pub intensity: f64,
    pub color: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub regions: Vec<Region>,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub connections: Vec<Connection>,
    #[serde(default)]
    pub lights: Vec<Light>,
}

impl SceneLayout {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn region_of(&self, object: &SceneObject) -> Option<&Region> {
        self.region(&object.region)
    }

    /// Checks every object sits in exactly one known region and has positive extents.
    pub fn validate(&self) -> Result<(), SceneError> {
        for o in &self.objects {
            if self.region(&o.region).is_none() {
                return Err(SceneError::UnknownRegion { object: o.id.clone(), region: o.region.clone() });
            }
            let e = o.extents();
            if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) || !o.transform.pos.is_finite() || !o.transform.rot.is_finite() {
                return Err(SceneError::InvalidObject { id: o.id.clone(), reason: "extents must be positive and finite".into() });
            }
        }
        for r in &self.regions {
            if !(r.wall_thickness >= 0.0) {
                return Err(SceneError::InvalidRegion { id: r.id.clone(), reason: "wall thickness must be ≥ 0".into() });
            }
        }
        Ok(())
    }
}

/// Positive-volume overlap of two objects.
pub fn collides(a: &SceneObject, b: &SceneObject) -> bool {
    boxes_collide(&a.world_box(), &b.world_box())
}

/// Full containment of the object's box in the region's prism.
pub fn inside(obj: &SceneObject, region: &Region) -> bool {
    box_inside(&obj.world_box(), region)
}

/// Containment of a box: its floor footprint lies within the polygon (which
/// also handles non-convex rooms) and its vertical span within the room.
pub fn box_inside(b: &OrientedBox, region: &Region) -> bool {
    if b.min_y() < region.floor_y - CONTAINMENT_EPS || b.max_y() > region.ceiling_y() + CONTAINMENT_EPS {
        return false;
    }
    footprint_inside(&b.footprint(), region)
}

/// Whether a convex counterclockwise footprint lies inside the region polygon.
pub fn footprint_inside(hull: &[Point2], region: &Region) -> bool {
    let eps = CONTAINMENT_EPS;
    if !hull.iter().all(|&p| region.contains_point(p, eps)) {
        return false;
    }
    if hull.len() < 3 {
        return true;
    }
    // A reflex room corner can poke into the hull even when all hull corners are inside.
    let strictly_in_hull = |p: Point2| {
        polygon_edges(hull).all(|(a, b)| {
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            len > 0.0 && cross2(a, b, p) / len > eps
        })
    };
    if region.vertices.iter().any(|&v| strictly_in_hull(v)) {
        return false;
    }
    for (a, b) in polygon_edges(hull) {
        for (c, d) in polygon_edges(&region.vertices) {
            if segments_cross_with_margin(a, b, c, d, eps) {
                return false;
            }
        }
    }
    true
}

/// Segments cross with each endpoint farther than `eps` from the other segment's line.
fn segments_cross_with_margin(a: Point2, b: Point2, c: Point2, d: Point2, eps: f64) -> bool {
    let lcd = (d[0] - c[0]).hypot(d[1] - c[1]);
    let lab = (b[0] - a[0]).hypot(b[1] - a[1]);
    if lcd == 0.0 || lab == 0.0 {
        return false;
    }
    let d1 = cross2(c, d, a) / lcd;
    let d2 = cross2(c, d, b) / lcd;
    let d3 = cross2(a, b, c) / lab;
    let d4 = cross2(a, b, d) / lab;
    ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
}

/// Direct support: resting on the region floor, or on another object's top
/// face covering at least half of this object's footprint.
pub fn supported(obj: &SceneObject, layout: &SceneLayout, tolerance: f64) -> bool {
    let b = obj.world_box();
    let others: Vec<OrientedBox> = layout.objects.iter().filter(|o| o.id != obj.id).map(SceneObject::world_box).collect();
    box_supported(&b, layout.region_of(obj), others.iter(), tolerance)
}

pub fn box_supported<'a>(
    b: &OrientedBox,
    region: Option<&Region>,
    others: impl Iterator<Item = &'a OrientedBox>,
    tolerance: f64,
) -> bool {
    let bottom = b.min_y();
    if let Some(r) = region {
        if (bottom - r.floor_y).abs() <= tolerance {
            return true;
        }
    }
    let footprint = b.footprint();
    let own_area = signed_area(&footprint);
    others.into_iter().any(|o| {
        (bottom - o.max_y()).abs() <= tolerance
            && convex_overlap_area(&footprint, &o.footprint()) >= SUPPORT_OVERLAP * own_area - 1e-12
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room10() -> Region {
        Region::rectangle("room", 0.0, 0.0, 10.0, 10.0, 3.0).unwrap()
    }

    fn cube(id: &str, pos: Vec3) -> SceneObject {
        SceneObject::new(id, Vec3::ONE, "room").at(pos)
    }

    fn l_room() -> Region {
        Region::new("l", vec![[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [2.0, 2.0], [2.0, 4.0], [0.0, 4.0]], 0.0, 3.0).unwrap()
    }

    #[test]
    fn cube_in_square_room() {
        assert!(inside(&cube("c", Vec3::new(0.0, 0.5, 0.0)), &room10()));
        assert!(!inside(&cube("c", Vec3::new(4.8, 0.5, 0.0)), &room10()));
        assert!(inside(&cube("c", Vec3::new(4.5, 0.5, 0.0)), &room10()));
        assert!(!inside(&cube("c", Vec3::new(0.0, 2.8, 0.0)), &room10()));
    }

    #[test]
    fn l_room_notch_is_outside() {
        let r = l_room();
        // Fully inside one leg.
        assert!(inside(&cube("c", Vec3::new(1.0, 0.5, 3.0)), &r));
        // A thin diagonal box across the reflex corner (2, 2): every corner is
        // inside the polygon, yet part of the box lies in the notch.
        let rotated = SceneObject::new("c", Vec3::new(2.0, 1.0, 0.2), "l")
            .at(Vec3::new(1.95, 0.5, 1.95))
            .rotated(Vec3::new(0.0, 45.0, 0.0));
        assert!(rotated.world_box().corners().iter().all(|c| r.contains_point(c.xz(), 0.0)));
        assert!(!inside(&rotated, &r));
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let r = Region::new("r", vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]], 0.0, 2.0).unwrap();
        assert!(r.area() > 0.0);
        assert_eq!(Region::new("z", vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 0.0, 1.0), Err(SceneError::DegenerateRegion("z".into())));
    }

    #[test]
    fn region_from_frame() {
        let frame = Transform { pos: Vec3::new(1.0, 0.0, 2.0), rot: Vec3::new(0.0, 90.0, 0.0), scale: Vec3::new(4.0, 3.0, 2.0) };
        let r = Region::from_frame("r", frame).unwrap();
        let (lo, hi) = r.bounds();
        assert_eq!((lo, hi), ([0.0, 0.0], [2.0, 4.0]));
        assert_eq!(r.frame, frame);
    }

    #[test]
    fn support_on_floor_and_on_table() {
        let mut layout = SceneLayout { regions: vec![room10()], ..Default::default() };
        let table = SceneObject::new("table", Vec3::new(1.2, 0.75, 0.8), "room").at(Vec3::new(0.0, 0.375, 0.0));
        let book = SceneObject::new("book", Vec3::new(0.2, 0.04, 0.3), "room").at(Vec3::new(0.1, 0.75 + 0.02, 0.0));
        let floating = cube("f", Vec3::new(3.0, 1.0, 3.0));
        layout.objects = vec![table.clone(), book.clone(), floating.clone()];
        assert!(supported(&table, &layout, SUPPORT_TOLERANCE));
        assert!(supported(&book, &layout, SUPPORT_TOLERANCE));
        assert!(!supported(&floating, &layout, 0.01));
        // Hanging mostly off the edge: less than half the footprint on the table.
        let edge = SceneObject::new("e", Vec3::new(0.2, 0.04, 0.2), "room").at(Vec3::new(0.65, 0.77, 0.0));
        layout.objects.push(edge.clone());
        assert!(!supported(&edge, &layout, SUPPORT_TOLERANCE));
    }

    #[test]
    fn world_volume_is_rotation_invariant() {
        let o = SceneObject::new("o", Vec3::new(1.0, 2.0, 3.0), "room").rotated(Vec3::new(10.0, 20.0, 30.0));
        let b = o.world_box();
        // Volume from corners: edges from corner 0 along the three local axes.
        let c = b.corners();
        let (e1, e2, e3) = (c[1] - c[0], c[2] - c[0], c[4] - c[0]);
        let vol = e1.cross(e2).dot(e3).abs();
        assert!((vol - 6.0).abs() < 1e-9 * 6.0);
    }
}
