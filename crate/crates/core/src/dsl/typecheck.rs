//! Type checker: annotates every expression with its type and enforces the
//! typing rules of comparisons, constructors, property reads and assignments.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ast::*;
use super::diagnostic::{Diagnostic, DiagnosticKind, Diagnostics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SymbolKind {
    Object,
    Region,
    Variable(ValueType),
}

impl SymbolKind {
    fn describe(self) -> String {
        match self {
            SymbolKind::Object => "an object".into(),
            SymbolKind::Region => "a region".into(),
            SymbolKind::Variable(t) => format!("a {t} variable"),
        }
    }
}

/// Declared names with their kinds, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SymbolTable {
    kinds: BTreeMap<String, SymbolKind>,
    order: Vec<String>,
}

impl SymbolTable {
    pub fn from_program(program: &Program) -> Self {
        let mut table = SymbolTable::default();
        for d in program.declarations() {
            let kind = match d {
                Declaration::Object { .. } => SymbolKind::Object,
                Declaration::Region { .. } => SymbolKind::Region,
                Declaration::Variable { ty, .. } => SymbolKind::Variable(*ty),
            };
            let name = d.id().name.clone();
            if table.kinds.insert(name.clone(), kind).is_none() {
                table.order.push(name);
            }
        }
        table
    }

    pub fn get(&self, name: &str) -> Option<SymbolKind> {
        self.kinds.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, SymbolKind)> {
        self.order.iter().map(|n| (n.as_str(), self.kinds[n]))
    }
}

/// A program whose expressions all carry a type annotation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypedProgram {
    pub program: Program,
    pub symbols: SymbolTable,
}

/// Parse, resolve and type-check `source`, with diagnostics located in it.
pub fn check(source: &str) -> Result<TypedProgram, Diagnostics> {
    let program = super::parser::parse(source)?;
    typecheck(&program).map_err(|mut d| {
        d.locate(source);
        d
    })
}

pub fn typecheck(program: &Program) -> Result<TypedProgram, Diagnostics> {
    let symbols = SymbolTable::from_program(program);
    let assigned_anywhere = program
        .statements
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Assignment(a) if a.property.is_none() => Some(a.target.name.clone()),
            _ => None,
        })
        .collect();
    let mut checker =
        Checker { symbols: &symbols, errors: Vec::new(), assigned_anywhere, assigned_so_far: BTreeSet::new() };
    let mut typed = program.clone();
    for stmt in &mut typed.statements {
        checker.statement(stmt);
    }
    if checker.errors.is_empty() {
        Ok(TypedProgram { program: typed, symbols })
    } else {
        Err(Diagnostics(checker.errors))
    }
}

/// Whether a value of type `value` may be assigned through `property`.
pub fn property_accepts(property: Property, value: ExprType) -> bool {
    use ValueType::*;
    match property {
        Property::Color => matches!(value, ExprType::Value(Color) | ExprType::Text),
        Property::Material => matches!(value, ExprType::Value(Material) | ExprType::Text),
        Property::Features => value == ExprType::Text,
        Property::Pos | Property::Scale => value == ExprType::Value(Vector3),
        Property::Rot => value == ExprType::Value(Rotation),
    }
}

/// Whether a value of type `value` may be assigned to a variable of type `var`.
pub fn variable_accepts(var: ValueType, value: ExprType) -> bool {
    match (var, value) {
        (ValueType::Number | ValueType::Degree, v) => v.is_numeric(),
        (ValueType::Color | ValueType::Material, ExprType::Text) => true,
        (t, ExprType::Value(v)) => t == v,
        _ => false,
    }
}

/// Type of reading `property` (and optional component) on an object or region.
pub fn property_type(property: Property, component: Option<Component>) -> ExprType {
    match (property, component) {
        (Property::Pos | Property::Scale, None) => ValueType::Vector3.into(),
        (Property::Pos | Property::Scale, Some(_)) => ValueType::Number.into(),
        (Property::Rot, None) => ValueType::Rotation.into(),
        (Property::Rot, Some(_)) => ValueType::Degree.into(),
        (Property::Color, _) => ValueType::Color.into(),
        (Property::Material, _) => ValueType::Material.into(),
        (Property::Features, _) => ExprType::Text,
    }
}

/// Whether `lhs op rhs` is a well-typed comparison.
pub fn comparable(op: CmpOp, lhs: ExprType, rhs: ExprType) -> bool {
    if op.is_ordering() {
        return lhs.is_numeric() && rhs.is_numeric();
    }
    use ExprType::{Text, Value};
    use ValueType::*;
    if lhs.is_numeric() && rhs.is_numeric() {
        return true;
    }
    matches!(
        (lhs, rhs),
        (Value(Vector3), Value(Vector3))
            | (Value(Rotation), Value(Rotation))
            | (Value(Bool), Value(Bool))
            | (Value(Color) | Text, Value(Color) | Text)
            | (Value(Material) | Text, Value(Material) | Text)
    )
}

/// Result type of `lhs op rhs`, if defined.
pub fn arithmetic_type(op: ArithOp, lhs: ExprType, rhs: ExprType) -> Option<ExprType> {
    use ExprType::Value;
    use ValueType::*;
    let vectorish = |t: ExprType| matches!(t, Value(Vector3) | Value(Rotation));
    if lhs.is_numeric() && rhs.is_numeric() {
        let degree = lhs == Value(Degree) || rhs == Value(Degree);
        return Some(if degree { Value(Degree) } else { Value(Number) });
    }
    match op {
        ArithOp::Add | ArithOp::Sub if vectorish(lhs) && lhs == rhs => Some(lhs),
        ArithOp::Mul if vectorish(lhs) && rhs.is_numeric() => Some(lhs),
        ArithOp::Mul if lhs.is_numeric() && vectorish(rhs) => Some(rhs),
        ArithOp::Div if vectorish(lhs) && rhs.is_numeric() => Some(lhs),
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ReadCtx {
    /// Assertions see the final value of every variable.
    Assertion,
    /// Assignments see only variables assigned earlier.
    Assignment,
}

struct Checker<'s> {
    symbols: &'s SymbolTable,
    errors: Vec<Diagnostic>,
    assigned_anywhere: BTreeSet<String>,
    assigned_so_far: BTreeSet<String>,
}

impl Checker<'_> {
    fn error(&mut self, span: Span, msg: impl Into<String>) {
        self.errors.push(Diagnostic::new(DiagnosticKind::TypeError, span, msg));
    }

    fn kind(&self, id: &Ident) -> SymbolKind {
        self.symbols.get(&id.name).expect("resolved before type checking")
    }

    fn expect_kind(&mut self, id: &Ident, want: SymbolKind, role: &str) -> bool {
        let got = self.kind(id);
        if got == want {
            true
        } else {
            self.error(id.span, format!("{role} `{}` must be {}, found {}", id.name, want.describe(), got.describe()));
            false
        }
    }

    fn statement(&mut self, stmt: &mut Statement) {
        match &mut stmt.kind {
            StmtKind::Declaration(_) => {}
            StmtKind::Constraint(ConstraintStmt::Assert { assertion }) => self.assertion(assertion),
            StmtKind::Constraint(ConstraintStmt::AllowCollide { a, b }) => {
                let ok = self.expect_kind(a, SymbolKind::Object, "allowCollide argument")
                    & self.expect_kind(b, SymbolKind::Object, "allowCollide argument");
                if ok && a.name == b.name {
                    self.error(b.span, format!("allowCollide needs two distinct objects, found `{}` twice", a.name));
                }
            }
            StmtKind::Constraint(ConstraintStmt::AllowOutside { id }) => {
                self.expect_kind(id, SymbolKind::Object, "allowOutside argument");
            }
            StmtKind::Assignment(a) => self.assignment(a),
        }
    }

    fn assignment(&mut self, a: &mut Assignment) {
        let value_ty = self.expr(&mut a.value, ReadCtx::Assignment);
        let kind = self.kind(&a.target);
        match a.property {
            None => match kind {
                SymbolKind::Variable(t) => {
                    if let Some(v) = value_ty {
                        if !variable_accepts(t, v) {
                            self.error(a.value.span, format!("expected {t} for `{}`, found {v}", a.target.name));
                        }
                    }
                    self.assigned_so_far.insert(a.target.name.clone());
                }
                other => self.error(
                    a.target.span,
                    format!("`{}` is {}; only variables can be assigned without a property", a.target.name, other.describe()),
                ),
            },
            Some(p) => {
                let target_ok = match kind {
                    SymbolKind::Object => true,
                    SymbolKind::Region => p.is_transform(),
                    SymbolKind::Variable(_) => false,
                };
                if !target_ok {
                    let allowed = if kind == SymbolKind::Region { "pos, rot and scale" } else { "no properties" };
                    self.error(
                        a.target.span,
                        format!("`{}` is {}, which has {allowed}; cannot assign `{}`", a.target.name, kind.describe(), p.name()),
                    );
                } else if let Some(v) = value_ty {
                    if !property_accepts(p, v) {
                        self.error(a.value.span, format!("expected {} for `.{}`, found {v}", expected_for(p), p.name()));
                    }
                }
            }
        }
    }

    fn assertion(&mut self, a: &mut Assertion) {
        match &mut a.kind {
            AssertKind::Compare { lhs, op, rhs } => {
                let l = self.expr(lhs, ReadCtx::Assertion);
                let r = self.expr(rhs, ReadCtx::Assertion);
                if let (Some(l), Some(r)) = (l, r) {
                    if !comparable(*op, l, r) {
                        let need = if op.is_ordering() { "two numeric operands" } else { "operands of the same type family" };
                        self.error(a.span, format!("`{}` needs {need}, found {l} and {r}", op.symbol()));
                    }
                }
            }
            AssertKind::Inside { object, region } => {
                self.expect_kind(object, SymbolKind::Object, "first argument of inside");
                self.expect_kind(region, SymbolKind::Region, "second argument of inside");
            }
            AssertKind::And(x, y) | AssertKind::Or(x, y) => {
                self.assertion(x);
                self.assertion(y);
            }
            AssertKind::Not(x) => self.assertion(x),
        }
    }

    /// Annotates `e` and returns its type, or `None` after reporting an error.
    fn expr(&mut self, e: &mut Expr, ctx: ReadCtx) -> Option<ExprType> {
        let span = e.span;
        let ty = match &mut e.kind {
            ExprKind::Number { .. } => Some(ValueType::Number.into()),
            ExprKind::Str { .. } => Some(ExprType::Text),
            ExprKind::Ident { id } => match self.kind(id) {
                SymbolKind::Variable(t) => self.variable_read(id, ctx).then_some(t.into()),
                other => {
                    self.error(id.span, format!("`{}` is {} and has no value; read one of its properties", id.name, other.describe()));
                    None
                }
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let op = *op;
                let l = self.expr(lhs, ctx);
                let r = self.expr(rhs, ctx);
                match (l, r) {
                    (Some(l), Some(r)) => {
                        let t = arithmetic_type(op, l, r);
                        if t.is_none() {
                            self.error(span, format!("`{}` is not defined for {l} and {r}", op.symbol()));
                        }
                        t
                    }
                    _ => None,
                }
            }
            ExprKind::Rand { lo, hi } => {
                let ok = self.numeric_arg(lo, ctx, "rand") & self.numeric_arg(hi, ctx, "rand");
                ok.then_some(ValueType::Number.into())
            }
            ExprKind::Vec3 { x, y, z } => {
                let ok = self.numeric_arg(x, ctx, "vec3") & self.numeric_arg(y, ctx, "vec3") & self.numeric_arg(z, ctx, "vec3");
                ok.then_some(ValueType::Vector3.into())
            }
            ExprKind::Rot { x, y, z } => {
                let ok = self.numeric_arg(x, ctx, "rot") & self.numeric_arg(y, ctx, "rot") & self.numeric_arg(z, ctx, "rot");
                ok.then_some(ValueType::Rotation.into())
            }
            ExprKind::Dot { a, b } => {
                let ta = self.expr(a, ctx);
                let tb = self.expr(b, ctx);
                let mut ok = ta.is_some() && tb.is_some();
                for (t, arg) in [(ta, &**a), (tb, &**b)] {
                    if let Some(t) = t {
                        if t != ValueType::Vector3.into() {
                            self.error(arg.span, format!("dot expects Vector3 arguments, found {t}"));
                            ok = false;
                        }
                    }
                }
                ok.then_some(ValueType::Number.into())
            }
            ExprKind::Prop(access) => {
                let access = access.clone();
                self.prop_type(&access, span, ctx)
            }
        };
        e.ty = ty;
        ty
    }

    fn numeric_arg(&mut self, e: &mut Expr, ctx: ReadCtx, f: &str) -> bool {
        match self.expr(e, ctx) {
            Some(t) if t.is_numeric() => true,
            Some(t) => {
                self.error(e.span, format!("{f} expects numeric arguments, found {t}"));
                false
            }
            None => false,
        }
    }

    fn variable_read(&mut self, id: &Ident, ctx: ReadCtx) -> bool {
        let ok = match ctx {
            ReadCtx::Assertion => self.assigned_anywhere.contains(&id.name),
            ReadCtx::Assignment => self.assigned_so_far.contains(&id.name),
        };
        if !ok {
            let msg = match ctx {
                ReadCtx::Assertion => format!("variable `{}` is never assigned", id.name),
                ReadCtx::Assignment => format!("variable `{}` is read before it is assigned", id.name),
            };
            self.error(id.span, msg);
        }
        ok
    }

    fn prop_type(&mut self, access: &PropAccess, span: Span, ctx: ReadCtx) -> Option<ExprType> {
        let target = &access.target;
        match (self.kind(target), access.property) {
            (SymbolKind::Variable(t @ (ValueType::Vector3 | ValueType::Rotation)), None) => {
                if !self.variable_read(target, ctx) {
                    return None;
                }
                Some(if t == ValueType::Vector3 { ValueType::Number.into() } else { ValueType::Degree.into() })
            }
            (SymbolKind::Variable(t), _) => {
                self.error(span, format!("`{}` is a {t} variable; only Vector3 and Rotation variables have components", target.name));
                None
            }
            (kind @ (SymbolKind::Object | SymbolKind::Region), None) => {
                let c = access.component.map_or("x", Component::name);
                self.error(span, format!("`{}` is {}; write `{}.pos.{c}`", target.name, kind.describe(), target.name));
                None
            }
            (SymbolKind::Region, Some(p)) if !p.is_transform() => {
                self.error(span, format!("region `{}` has no `{}`; regions have pos, rot and scale", target.name, p.name()));
                None
            }
            (_, Some(p)) => Some(property_type(p, access.component)),
        }
    }
}

fn expected_for(p: Property) -> &'static str {
    match p {
        Property::Color => "Color or a string",
        Property::Material => "Material or a string",
        Property::Features => "a string",
        Property::Pos | Property::Scale => "Vector3",
        Property::Rot => "Rotation",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(src: &str) -> TypedProgram {
        check(src).unwrap_or_else(|e| panic!("{src}: {e}"))
    }

    fn type_error(src: &str) -> Diagnostics {
        let e = check(src).expect_err(src);
        assert!(e.has_kind(DiagnosticKind::TypeError), "{src}: {e}");
        e
    }

    #[test]
    fn dot_of_orthogonal_vectors_is_number() {
        let t = ok("Number d; d <- dot(vec3(1,0,0), vec3(0,1,0));");
        assert_eq!(t.symbols.get("d"), Some(SymbolKind::Variable(ValueType::Number)));
        match &t.program.statements[1].kind {
            StmtKind::Assignment(a) => assert_eq!(a.value.ty, Some(ValueType::Number.into())),
            _ => unreachable!(),
        }
    }

    #[test]
    fn vector_compared_to_number() {
        let e = type_error("assert vec3(1,2,3) > 4;");
        assert!(e.0[0].message.contains("Vector3"));
        assert_eq!(e.0[0].line, 1);
    }

    #[test]
    fn color_assigned_a_vector() {
        let e = type_error("object lamp; lamp.color <- vec3(1,1,1);");
        assert!(e.0[0].message.contains("Color"));
    }

    #[test]
    fn property_value_type_table_has_exactly_five_legal_cells() {
        let sample = |t: ValueType| match t {
            ValueType::Number => "n",
            ValueType::Degree => "g",
            ValueType::Bool => "b",
            ValueType::Vector3 => "v",
            ValueType::Rotation => "r",
            ValueType::Color => "c",
            ValueType::Material => "m",
        };
        let prelude = "object o; Number n; n <- 1; Degree g; g <- 2; Bool b; Vector3 v; v <- vec3(1,1,1); \
                       Rotation r; r <- rot(0,90,0); Color c; c <- \"red\"; Material m; m <- \"oak\";";
        let mut legal = Vec::new();
        for p in Property::ALL {
            for t in ValueType::ALL {
                let src = format!("{prelude} o.{} <- {};", p.name(), sample(t));
                let parsed = crate::dsl::parse(&src).unwrap();
                let accepted = match typecheck(&parsed) {
                    Ok(_) => true,
                    Err(e) => {
                        // The Bool variable is never assigned, so reading it is an error too.
                        assert!(e.has_kind(DiagnosticKind::TypeError));
                        false
                    }
                };
                assert_eq!(accepted, property_accepts(p, t.into()), "{} <- {t}", p.name());
                if accepted {
                    legal.push((p, t));
                }
            }
        }
        assert_eq!(
            legal,
            vec![
                (Property::Color, ValueType::Color),
                (Property::Material, ValueType::Material),
                (Property::Pos, ValueType::Vector3),
                (Property::Rot, ValueType::Rotation),
                (Property::Scale, ValueType::Vector3),
            ]
        );
    }

    #[test]
    fn string_literals_for_alpha_properties() {
        ok(r#"object lamp; lamp.color <- "red"; lamp.material <- "brass"; lamp.features <- "tall, slim";"#);
        type_error("object lamp; lamp.features <- 3;");
    }

    #[test]
    fn regions_take_transform_properties_only() {
        ok("region r; r.pos <- vec3(0,0,0); r.scale <- vec3(4,3,4); r.rot <- rot(0,0,0);");
        type_error(r#"region r; r.color <- "white";"#);
        type_error("region r; assert r.material = \"oak\";");
    }

    #[test]
    fn kinds_of_special_arguments() {
        type_error("object a; region r; assert inside(r, a);");
        type_error("object a; allowCollide(a, a);");
        type_error("region r; allowOutside(r);");
        ok("object a; object b; region r; allowCollide(a, b); allowOutside(a); assert inside(b, r);");
    }

    #[test]
    fn degree_propagates_through_arithmetic() {
        let t = ok("object a; assert a.rot.y + 90 = 180;");
        let a = t.program.assertions().next().unwrap();
        match &a.kind {
            AssertKind::Compare { lhs, .. } => assert_eq!(lhs.ty, Some(ValueType::Degree.into())),
            _ => unreachable!(),
        }
    }

    #[test]
    fn vector_arithmetic() {
        ok("object a; object b; Vector3 d; d <- vec3(1,0,0) * 2 - vec3(0,1,0) / 4; assert a.pos - b.pos = d;");
        type_error("object a; assert a.pos + 1 = a.pos;");
        type_error("object a; assert a.pos + a.rot = a.pos;");
        type_error("Number n; n <- 2 / vec3(1,1,1);");
    }

    #[test]
    fn variables_must_be_assigned() {
        type_error("Number n; object a; assert a.pos.x > n;");
        type_error("Number n; Number m; m <- n; n <- 1;");
        ok("Number n; object a; assert a.pos.x > n; n <- 1;");
    }

    #[test]
    fn whole_entities_are_not_values() {
        type_error("object a; object b; assert a = b;");
        type_error("object a; assert a.x > 0;");
        type_error("Number n; n <- 1; assert n.x > 0;");
        ok("Vector3 v; v <- vec3(1,2,3); assert v.y = 2;");
    }

    #[test]
    fn equality_families() {
        ok(r#"object a; object b; assert a.color = b.color && a.material != "oak" && a.rot = b.rot;"#);
        type_error("object a; assert a.color = a.material;");
        type_error(r#"object a; assert a.color < "red";"#);
    }

    #[test]
    fn every_expression_is_annotated() {
        let t = ok("object a; object b; Number k; k <- rand(1, 2); assert a.pos.y > b.pos.y + b.scale.y * k || !(dot(a.pos, b.pos) >= 0);");
        fn walk(e: &Expr) {
            assert!(e.ty.is_some(), "{e:?}");
            e.children().into_iter().for_each(walk);
        }
        fn walk_a(a: &Assertion) {
            match &a.kind {
                AssertKind::Compare { lhs, rhs, .. } => {
                    walk(lhs);
                    walk(rhs);
                }
                AssertKind::Inside { .. } => {}
                AssertKind::And(x, y) | AssertKind::Or(x, y) => {
                    walk_a(x);
                    walk_a(y);
                }
                AssertKind::Not(x) => walk_a(x),
            }
        }
        t.program.assertions().for_each(walk_a);
    }
}
