//! Compiled expression and assertion trees. Variables are inlined, `rand`
//! draws are frozen, and entity references are indices into the owning
//! [`super::ConstraintSet`]'s object and region lists.

use std::fmt;

use serde::Serialize;

use crate::dsl::{ArithOp, CmpOp, Component, Property};
use crate::geom::Vec3;

/// Equality tolerance for numeric comparisons (m or degrees).
pub const EPS_EQ: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Value {
    Num(f64),
    Vec3(Vec3),
    Rot(Vec3),
    Text(String),
    Bool(bool),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_vec(&self) -> Option<Vec3> {
        match self {
            Value::Vec3(v) | Value::Rot(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Vec3(v) => write!(f, "vec3({}, {}, {})", v.x, v.y, v.z),
            Value::Rot(v) => write!(f, "rot({}, {}, {})", v.x, v.y, v.z),
            Value::Text(s) => write!(f, "{}", crate::dsl::printer::quote_string(s)),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CExpr {
    Const(Value),
    ObjProp { object: usize, property: Property },
    RegionProp { region: usize, property: Property },
    Component(Box<CExpr>, Component),
    Binary(ArithOp, Box<CExpr>, Box<CExpr>),
    MakeVec3(Box<[CExpr; 3]>),
    MakeRot(Box<[CExpr; 3]>),
    Dot(Box<CExpr>, Box<CExpr>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CAssert {
    Compare(CExpr, CmpOp, CExpr),
    Inside { object: usize, region: usize },
    And(Box<CAssert>, Box<CAssert>),
    Or(Box<CAssert>, Box<CAssert>),
    Not(Box<CAssert>),
}

/// Arithmetic on values; `None` for combinations the type checker rejects.
pub fn apply_arith(op: ArithOp, l: &Value, r: &Value) -> Option<Value> {
    use Value::*;
    let num = |a: f64, b: f64| match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a / b,
    };
    let rewrap = |like: &Value, v: crate::geom::Vec3| if matches!(like, Rot(_)) { Rot(v) } else { Vec3(v) };
    Some(match (l, r) {
        (Num(a), Num(b)) => Num(num(*a, *b)),
        (Vec3(a), Vec3(b)) | (Rot(a), Rot(b)) => match op {
            ArithOp::Add => rewrap(l, *a + *b),
            ArithOp::Sub => rewrap(l, *a - *b),
            _ => return None,
        },
        (Vec3(a) | Rot(a), Num(s)) => match op {
            ArithOp::Mul => rewrap(l, *a * *s),
            ArithOp::Div => rewrap(l, *a / *s),
            _ => return None,
        },
        (Num(s), Vec3(a) | Rot(a)) if op == ArithOp::Mul => rewrap(r, *a * *s),
        _ => return None,
    })
}

/// Comparison of two values with tolerance `EPS_EQ` on numeric equality.
pub fn compare(op: CmpOp, l: &Value, r: &Value) -> Option<bool> {
    use Value::*;
    let eq = match (l, r) {
        (Num(a), Num(b)) => {
            return Some(match op {
                CmpOp::Eq => (a - b).abs() <= EPS_EQ,
                CmpOp::Ne => !((a - b).abs() <= EPS_EQ),
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            })
        }
        (Vec3(a), Vec3(b)) | (Rot(a), Rot(b)) => (0..3).all(|i| (a[i] - b[i]).abs() <= EPS_EQ),
        (Text(a), Text(b)) => a == b,
        (Bool(a), Bool(b)) => a == b,
        _ => return None,
    };
    match op {
        CmpOp::Eq => Some(eq),
        CmpOp::Ne => Some(!eq),
        _ => None,
    }
}

impl CExpr {
    pub fn constant(&self) -> Option<&Value> {
        match self {
            CExpr::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Builds a binary node, folding it when both sides are constant.
    pub fn binary(op: ArithOp, l: CExpr, r: CExpr) -> CExpr {
        if let (Some(a), Some(b)) = (l.constant(), r.constant()) {
            if let Some(v) = apply_arith(op, a, b) {
                return CExpr::Const(v);
            }
        }
        CExpr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn component(inner: CExpr, c: Component) -> CExpr {
        match &inner {
            CExpr::Const(v) => match v.as_vec() {
                Some(vec) => CExpr::Const(Value::Num(vec[c.index()])),
                None => CExpr::Component(Box::new(inner), c),
            },
            CExpr::MakeVec3(parts) | CExpr::MakeRot(parts) => parts[c.index()].clone(),
            _ => CExpr::Component(Box::new(inner), c),
        }
    }

    pub fn make(rotation: bool, parts: [CExpr; 3]) -> CExpr {
        if let [Some(x), Some(y), Some(z)] = parts.each_ref().map(|p| p.constant().and_then(Value::as_num)) {
            let v = Vec3::new(x, y, z);
            return CExpr::Const(if rotation { Value::Rot(v) } else { Value::Vec3(v) });
        }
        if rotation {
            CExpr::MakeRot(Box::new(parts))
        } else {
            CExpr::MakeVec3(Box::new(parts))
        }
    }

    pub fn dot(a: CExpr, b: CExpr) -> CExpr {
        if let (Some(x), Some(y)) = (a.constant().and_then(Value::as_vec), b.constant().and_then(Value::as_vec)) {
            return CExpr::Const(Value::Num(x.dot(y)));
        }
        CExpr::Dot(Box::new(a), Box::new(b))
    }

    pub fn objects(&self, out: &mut Vec<usize>) {
        match self {
            CExpr::Const(_) | CExpr::RegionProp { .. } => {}
            CExpr::ObjProp { object, .. } => out.push(*object),
            CExpr::Component(e, _) => e.objects(out),
            CExpr::Binary(_, a, b) | CExpr::Dot(a, b) => {
                a.objects(out);
                b.objects(out);
            }
            CExpr::MakeVec3(p) | CExpr::MakeRot(p) => p.iter().for_each(|e| e.objects(out)),
        }
    }
}

impl CAssert {
    pub fn objects(&self, out: &mut Vec<usize>) {
        match self {
            CAssert::Compare(l, _, r) => {
                l.objects(out);
                r.objects(out);
            }
            CAssert::Inside { object, .. } => out.push(*object),
            CAssert::And(a, b) | CAssert::Or(a, b) => {
                a.objects(out);
                b.objects(out);
            }
            CAssert::Not(a) => a.objects(out),
        }
    }
}
