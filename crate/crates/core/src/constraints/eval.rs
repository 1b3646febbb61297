use crate::dsl::Property;
use crate::geom::{signed_area, Point2};
use crate::scene::{
    box_supported, boxes_collide, footprint_inside, OrientedBox, Region, SceneLayout, SceneObject, Transform,
    CONTAINMENT_EPS, SUPPORT_TOLERANCE,
};

use super::ir::{apply_arith, compare, CAssert, CExpr, Value};
use super::{CompiledConstraint, ConstraintKind, ConstraintSet};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum EvalError {
    #[error("layout has no object `{0}`")]
    MissingObject(String),
    #[error("layout has no region `{0}`")]
    MissingRegion(String),
    #[error("object `{object}` lives in unknown region `{region}`")]
    MissingHomeRegion { object: String, region: String },
    #[error("ill-typed value in constraint {0}")]
    IllTyped(usize),
}

/// Cached world geometry of one object.
#[derive(Clone, Debug)]
pub struct ObjectGeometry {
    pub bx: OrientedBox,
    pub footprint: Vec<Point2>,
    pub footprint_area: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl ObjectGeometry {
    pub fn of(obj: &SceneObject) -> Self {
        let bx = obj.world_box();
        let footprint = bx.footprint();
        ObjectGeometry { footprint_area: signed_area(&footprint), min_y: bx.min_y(), max_y: bx.max_y(), footprint, bx }
    }
}

/// A layout bound to a constraint set: objects and regions are looked up by
/// the set's indices, and each object's box is cached. Transforms can be
/// updated in place, which is how the solver explores moves.
#[derive(Clone, Debug)]
pub struct EvalContext {
    layout: SceneLayout,
    /// Constraint-set object index to layout object index.
    object_slots: Vec<usize>,
    /// Constraint-set region index to layout region index.
    region_slots: Vec<usize>,
    /// Layout region index of each constraint-set object's home region.
    home: Vec<usize>,
    geometry: Vec<ObjectGeometry>,
    pub support_tolerance: f64,
}

impl EvalContext {
    pub fn new(layout: &SceneLayout, cs: &ConstraintSet) -> Result<Self, EvalError> {
        let mut object_slots = Vec::with_capacity(cs.objects.len());
        let mut home = Vec::with_capacity(cs.objects.len());
        for name in &cs.objects {
            let idx = layout.object_index(name).ok_or_else(|| EvalError::MissingObject(name.clone()))?;
            let obj = &layout.objects[idx];
            let h = layout.regions.iter().position(|r| r.id == obj.region).ok_or_else(|| {
                EvalError::MissingHomeRegion { object: obj.id.clone(), region: obj.region.clone() }
            })?;
            object_slots.push(idx);
            home.push(h);
        }
        let region_slots = cs
            .regions
            .iter()
            .map(|name| {
                layout.regions.iter().position(|r| &r.id == name).ok_or_else(|| EvalError::MissingRegion(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let geometry = object_slots.iter().map(|&i| ObjectGeometry::of(&layout.objects[i])).collect();
        Ok(EvalContext {
            layout: layout.clone(),
            object_slots,
            region_slots,
            home,
            geometry,
            support_tolerance: SUPPORT_TOLERANCE,
        })
    }

    pub fn layout(&self) -> &SceneLayout {
        &self.layout
    }

    pub fn into_layout(self) -> SceneLayout {
        self.layout
    }

    pub fn object_count(&self) -> usize {
        self.object_slots.len()
    }

    pub fn object(&self, i: usize) -> &SceneObject {
        &self.layout.objects[self.object_slots[i]]
    }

    pub fn geometry(&self, i: usize) -> &ObjectGeometry {
        &self.geometry[i]
    }

    pub fn home_region(&self, i: usize) -> &Region {
        &self.layout.regions[self.home[i]]
    }

    pub fn region(&self, r: usize) -> &Region {
        &self.layout.regions[self.region_slots[r]]
    }

    pub fn transform(&self, i: usize) -> Transform {
        self.object(i).transform
    }

    pub fn set_transform(&mut self, i: usize, t: Transform) {
        let slot = self.object_slots[i];
        self.layout.objects[slot].transform = t;
        self.geometry[i] = ObjectGeometry::of(&self.layout.objects[slot]);
    }

    /// Support of object `i`, either by its room floor or another object's top.
    pub fn is_supported(&self, i: usize) -> bool {
        let others = (0..self.geometry.len()).filter(|&j| j != i).map(|j| &self.geometry[j].bx);
        box_supported(&self.geometry[i].bx, Some(self.home_region(i)), others, self.support_tolerance)
    }

    pub fn collide(&self, a: usize, b: usize) -> bool {
        boxes_collide(&self.geometry[a].bx, &self.geometry[b].bx)
    }

    fn inside_layout_region(&self, i: usize, region: &Region) -> bool {
        let g = &self.geometry[i];
        g.min_y >= region.floor_y - CONTAINMENT_EPS
            && g.max_y <= region.ceiling_y() + CONTAINMENT_EPS
            && footprint_inside(&g.footprint, region)
    }

    pub fn inside_home(&self, i: usize) -> bool {
        self.inside_layout_region(i, self.home_region(i))
    }

    pub fn inside_region(&self, i: usize, r: usize) -> bool {
        self.inside_layout_region(i, self.region(r))
    }

    fn prop_value(&self, property: Property, t: &Transform, obj: Option<&SceneObject>) -> Value {
        match property {
            Property::Pos => Value::Vec3(t.pos),
            Property::Rot => Value::Rot(t.rot),
            Property::Scale => Value::Vec3(t.scale),
            Property::Color => Value::Text(obj.map(|o| o.color.clone()).unwrap_or_default()),
            Property::Material => Value::Text(obj.map(|o| o.material.clone()).unwrap_or_default()),
            Property::Features => Value::Text(obj.map(|o| o.features.clone()).unwrap_or_default()),
        }
    }

    pub fn eval_expr(&self, e: &CExpr) -> Option<Value> {
        Some(match e {
            CExpr::Const(v) => v.clone(),
            CExpr::ObjProp { object, property } => {
                let o = self.object(*object);
                self.prop_value(*property, &o.transform, Some(o))
            }
            CExpr::RegionProp { region, property } => self.prop_value(*property, &self.region(*region).frame, None),
            CExpr::Component(inner, c) => Value::Num(self.eval_expr(inner)?.as_vec()?[c.index()]),
            CExpr::Binary(op, a, b) => apply_arith(*op, &self.eval_expr(a)?, &self.eval_expr(b)?)?,
            CExpr::MakeVec3(p) | CExpr::MakeRot(p) => {
                let mut v = [0.0; 3];
                for (k, part) in p.iter().enumerate() {
                    v[k] = self.eval_expr(part)?.as_num()?;
                }
                let v = crate::geom::Vec3::from(v);
                if matches!(e, CExpr::MakeRot(_)) {
                    Value::Rot(v)
                } else {
                    Value::Vec3(v)
                }
            }
            CExpr::Dot(a, b) => Value::Num(self.eval_expr(a)?.as_vec()?.dot(self.eval_expr(b)?.as_vec()?)),
        })
    }

    pub fn eval_assert(&self, a: &CAssert) -> Option<bool> {
        Some(match a {
            CAssert::Compare(l, op, r) => compare(*op, &self.eval_expr(l)?, &self.eval_expr(r)?)?,
            CAssert::Inside { object, region } => self.inside_region(*object, *region),
            CAssert::And(x, y) => self.eval_assert(x)? & self.eval_assert(y)?,
            CAssert::Or(x, y) => self.eval_assert(x)? | self.eval_assert(y)?,
            CAssert::Not(x) => !self.eval_assert(x)?,
        })
    }

    pub fn evaluate(&self, c: &CompiledConstraint) -> Result<bool, EvalError> {
        Ok(match &c.kind {
            ConstraintKind::Explicit { compiled, .. } => self.eval_assert(compiled).ok_or(EvalError::IllTyped(c.id))?,
            ConstraintKind::NoCollision(a, b) => !self.collide(*a, *b),
            ConstraintKind::Supported(a) => self.is_supported(*a),
            ConstraintKind::WithinRegion(a) => self.inside_home(*a),
        })
    }
}
