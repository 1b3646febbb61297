//! Building a [`SceneLayout`] from a checked program plus an optional scene
//! file (`<stem>.scene.toml`) that supplies room polygons, object dimensions
//! and categories, region membership, connections and lights.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::{AssertKind, Assertion, Program};
use crate::geom::Vec3;

use super::{Connection, Light, Region, SceneError, SceneLayout, SceneObject, Surface, Transform};

/// Surface descriptor of a region's floor or walls.
pub type SurfaceSpec = Surface;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub regions: BTreeMap<String, RegionSpec>,
    #[serde(default)]
    pub objects: BTreeMap<String, ObjectSpec>,
    #[serde(default)]
    pub connections: Vec<ConnectionSpec>,
    #[serde(default)]
    pub lights: Vec<LightSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub floor_y: f64,
    pub height: f64,
    #[serde(default)]
    pub wall_thickness: Option<f64>,
    #[serde(default)]
    pub floor: Surface,
    #[serde(default)]
    pub wall: Surface,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub category: Option<String>,
    pub dimensions: Option<[f64; 3]>,
    pub region: Option<String>,
    pub color: Option<String>,
    pub material: Option<String>,
    pub features: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub regions: [String; 2],
    pub category: String,
    pub dimensions: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    pub position: [f64; 3],
    pub intensity: f64,
    #[serde(default)]
    pub color: String,
}

impl SceneSpec {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        toml::from_str(text).map_err(|e| SceneError::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::Spec(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| SceneError::Spec(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }
}

/// Constant property values assigned by a program to one object or region.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EntityProps {
    pub color: Option<String>,
    pub material: Option<String>,
    pub features: Option<String>,
    pub pos: Option<Vec3>,
    pub rot: Option<Vec3>,
    pub scale: Option<Vec3>,
}

/// Object category guessed from an identifier: trailing digits and
/// underscores dropped, inner underscores read as spaces.
pub fn category_from_id(id: &str) -> String {
    let trimmed = id.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
    let base = if trimmed.is_empty() { id } else { trimmed };
    base.replace('_', " ")
}

/// `inside(o, R)` facts asserted unconditionally (top level or inside conjunctions).
fn asserted_membership(program: &Program) -> BTreeMap<String, String> {
    fn walk(a: &Assertion, out: &mut BTreeMap<String, String>) {
        match &a.kind {
            AssertKind::Inside { object, region } => {
                out.entry(object.name.clone()).or_insert_with(|| region.name.clone());
            }
            AssertKind::And(x, y) => {
                walk(x, out);
                walk(y, out);
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    for a in program.assertions() {
        walk(a, &mut out);
    }
    out
}

pub fn build_layout(
    program: &Program,
    props: &BTreeMap<String, EntityProps>,
    spec: &SceneSpec,
) -> Result<SceneLayout, SceneError> {
    let region_ids = program.regions();
    let object_ids = program.objects();
    let declared_regions: BTreeSet<&str> = region_ids.iter().copied().collect();
    let declared_objects: BTreeSet<&str> = object_ids.iter().copied().collect();
    if let Some(r) = spec.regions.keys().find(|r| !declared_regions.contains(r.as_str())) {
        return Err(SceneError::Spec(format!("region `{r}` is not declared in the program")));
    }
    if let Some(o) = spec.objects.keys().find(|o| !declared_objects.contains(o.as_str())) {
        return Err(SceneError::Spec(format!("object `{o}` is not declared in the program")));
    }
    let none = EntityProps::default();
    let mut regions = Vec::new();
    for &id in &region_ids {
        let p = props.get(id).unwrap_or(&none);
        let region = match spec.regions.get(id) {
            Some(rs) => {
                let mut r = Region::new(id, rs.vertices.clone(), rs.floor_y, rs.height)?;
                if let Some(t) = rs.wall_thickness {
                    r.wall_thickness = t;
                }
                r.floor = rs.floor.clone();
                r.wall = rs.wall.clone();
                r
            }
            None => match (p.pos, p.scale) {
                (Some(pos), Some(scale)) => {
                    Region::from_frame(id, Transform { pos, rot: p.rot.unwrap_or(Vec3::ZERO), scale })?
                }
                _ => return Err(SceneError::MissingRegionGeometry(id.to_string())),
            },
        };
        regions.push(region);
    }
    let asserted = asserted_membership(program);
    let mut objects = Vec::new();
    for &id in &object_ids {
        let os = spec.objects.get(id).cloned().unwrap_or_default();
        let p = props.get(id).unwrap_or(&none);
        let region = os
            .region
            .clone()
            .or_else(|| asserted.get(id).cloned())
            .or_else(|| (region_ids.len() == 1).then(|| region_ids[0].to_string()))
            .ok_or_else(|| SceneError::UnassignedObject(id.to_string()))?;
        let Some(home) = regions.iter().find(|r| r.id == region) else {
            return Err(SceneError::UnknownRegion { object: id.to_string(), region });
        };
        let dimensions = os.dimensions.map(Vec3::from).unwrap_or(Vec3::ONE);
        let pick = |dsl: &Option<String>, side: &Option<String>| dsl.clone().or_else(|| side.clone()).unwrap_or_default();
        let transform = Transform {
            pos: p.pos.unwrap_or(home.frame.pos),
            rot: p.rot.unwrap_or(Vec3::ZERO),
            scale: p.scale.unwrap_or(Vec3::ONE),
        };
        objects.push(SceneObject {
            id: id.to_string(),
            category: os.category.clone().unwrap_or_else(|| category_from_id(id)),
            dimensions,
            color: pick(&p.color, &os.color),
            material: pick(&p.material, &os.material),
            features: pick(&p.features, &os.features),
            transform,
            region,
            pos_hint: p.pos,
            rot_hint: p.rot,
        });
    }
    let mut connections = Vec::new();
    for c in &spec.connections {
        for r in &c.regions {
            if !declared_regions.contains(r.as_str()) {
                return Err(SceneError::Spec(format!("connection refers to unknown region `{r}`")));
            }
        }
        connections.push(Connection { regions: c.regions.clone(), category: c.category.clone(), dimensions: c.dimensions.into() });
    }
    let lights = if spec.lights.is_empty() {
        regions
            .iter()
            .map(|r| Light {
                position: Vec3::new(r.frame.pos.x, r.ceiling_y() - 0.1, r.frame.pos.z),
                intensity: 1.0,
                color: "white".into(),
            })
            .collect()
    } else {
        spec.lights
            .iter()
            .map(|l| Light { position: l.position.into(), intensity: l.intensity, color: l.color.clone() })
            .collect()
    };
    let layout = SceneLayout { regions, objects, connections, lights };
    layout.validate()?;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn categories() {
        assert_eq!(category_from_id("chair_2"), "chair");
        assert_eq!(category_from_id("coffee_table"), "coffee table");
        assert_eq!(category_from_id("lamp"), "lamp");
        assert_eq!(category_from_id("_1"), " 1");
    }

    #[test]
    fn spec_drives_geometry_and_membership() {
        let program = parse("region kitchen; region hall; object fridge; object rug; assert inside(rug, hall);").unwrap();
        let spec = SceneSpec::parse(
            r#"
            [regions.kitchen]
            vertices = [[0, 0], [4, 0], [4, 3], [0, 3]]
            height = 2.8
            floor = { color = "white", material = "tile", features = "" }

            [regions.hall]
            vertices = [[4.06, 0], [6, 0], [6, 3], [4.06, 3]]
            height = 2.8
            wall_thickness = 0.05

            [objects.fridge]
            category = "refrigerator"
            dimensions = [0.8, 1.8, 0.7]
            region = "kitchen"

            [[connections]]
            regions = ["kitchen", "hall"]
            category = "door"
            dimensions = [0.9, 2.1, 0.06]
            "#,
        )
        .unwrap();
        let layout = build_layout(&program, &BTreeMap::new(), &spec).unwrap();
        assert_eq!(layout.object("fridge").unwrap().category, "refrigerator");
        assert_eq!(layout.object("rug").unwrap().region, "hall");
        assert_eq!(layout.region("hall").unwrap().wall_thickness, 0.05);
        assert_eq!(layout.region("kitchen").unwrap().floor.material, "tile");
        assert_eq!(layout.connections.len(), 1);
        assert_eq!(layout.lights.len(), 2);
    }

    #[test]
    fn region_from_assignments_and_sole_region_default() {
        let program = parse("region room; object lamp; room.pos <- vec3(0, 0, 0); room.scale <- vec3(5, 3, 4);").unwrap();
        let mut props = BTreeMap::new();
        props.insert(
            "room".to_string(),
            EntityProps { pos: Some(Vec3::ZERO), scale: Some(Vec3::new(5.0, 3.0, 4.0)), ..Default::default() },
        );
        let layout = build_layout(&program, &props, &SceneSpec::default()).unwrap();
        assert_eq!(layout.region("room").unwrap().bounds(), ([-2.5, -2.0], [2.5, 2.0]));
        assert_eq!(layout.object("lamp").unwrap().region, "room");
    }

    #[test]
    fn errors() {
        let program = parse("region a; region b; object x;").unwrap();
        assert_eq!(
            build_layout(&program, &BTreeMap::new(), &SceneSpec::default()),
            Err(SceneError::MissingRegionGeometry("a".into()))
        );
        let spec = SceneSpec::parse(
            "[regions.a]\nvertices=[[0,0],[1,0],[1,1]]\nheight=1\n[regions.b]\nvertices=[[2,0],[3,0],[3,1]]\nheight=1\n",
        )
        .unwrap();
        assert_eq!(build_layout(&program, &BTreeMap::new(), &spec), Err(SceneError::UnassignedObject("x".into())));
        assert!(SceneSpec::parse("[objects.x]\nsize = 3\n").is_err());
        let spec = SceneSpec::parse("[objects.y]\nregion = \"a\"\n").unwrap();
        assert!(matches!(build_layout(&program, &BTreeMap::new(), &spec), Err(SceneError::Spec(_))));
    }
}
