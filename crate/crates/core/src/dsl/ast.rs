//! Syntax tree for ScenethesisLang programs.
//!
//! Nodes carry source spans (and, after type checking, expression types), but
//! equality is structural: spans and annotations never take part in `==`.

use std::fmt;

use serde::Serialize;

/// Byte range into the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Ident {
    pub name: String,
    #[serde(skip)]
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), span: Span::default() }
    }

    pub fn with_span(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// The closed set of declarable value types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ValueType {
    Number,
    Degree,
    Bool,
    Vector3,
    Rotation,
    Color,
    Material,
}

impl ValueType {
    pub const ALL: [ValueType; 7] = [
        ValueType::Number,
        ValueType::Degree,
        ValueType::Bool,
        ValueType::Vector3,
        ValueType::Rotation,
        ValueType::Color,
        ValueType::Material,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ValueType::Number => "Number",
            ValueType::Degree => "Degree",
            ValueType::Bool => "Bool",
            ValueType::Vector3 => "Vector3",
            ValueType::Rotation => "Rotation",
            ValueType::Color => "Color",
            ValueType::Material => "Material",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ValueType> {
        ValueType::ALL.into_iter().find(|t| t.keyword() == s)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Type of an expression node: a declarable type, or the type of a bare string literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ExprType {
    Value(ValueType),
    Text,
}

impl ExprType {
    pub fn is_numeric(self) -> bool {
        matches!(self, ExprType::Value(ValueType::Number | ValueType::Degree))
    }
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Value(v) => v.fmt(f),
            ExprType::Text => f.write_str("String"),
        }
    }
}

impl From<ValueType> for ExprType {
    fn from(v: ValueType) -> Self {
        ExprType::Value(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Program {
    pub statements: Vec<Statement>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Statement {
    pub kind: StmtKind,
    #[serde(skip)]
    pub span: Span,
}

impl Statement {
    pub fn new(kind: StmtKind) -> Self {
        Statement { kind, span: Span::default() }
    }
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "camelCase")]
pub enum StmtKind {
    Declaration(Declaration),
    Constraint(ConstraintStmt),
    Assignment(Assignment),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "decl", rename_all = "camelCase")]
pub enum Declaration {
    Object { id: Ident },
    Region { id: Ident },
    Variable { ty: ValueType, id: Ident },
}

impl Declaration {
    pub fn id(&self) -> &Ident {
        match self {
            Declaration::Object { id } | Declaration::Region { id } | Declaration::Variable { id, .. } => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "constraint", rename_all = "camelCase")]
pub enum ConstraintStmt {
    Assert { assertion: Assertion },
    AllowCollide { a: Ident, b: Ident },
    AllowOutside { id: Ident },
}

/// Object properties (`color`, `material`, `features`) and transform
/// properties (`pos`, `rot`, `scale`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Property {
    Color,
    Material,
    Features,
    Pos,
    Rot,
    Scale,
}

impl Property {
    pub const ALL: [Property; 6] =
        [Property::Color, Property::Material, Property::Features, Property::Pos, Property::Rot, Property::Scale];

    pub fn name(self) -> &'static str {
        match self {
            Property::Color => "color",
            Property::Material => "material",
            Property::Features => "features",
            Property::Pos => "pos",
            Property::Rot => "rot",
            Property::Scale => "scale",
        }
    }

    pub fn from_name(s: &str) -> Option<Property> {
        Property::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Transform properties, assignable on both objects and regions.
    pub fn is_transform(self) -> bool {
        matches!(self, Property::Pos | Property::Rot | Property::Scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        }
    }

    pub fn from_name(s: &str) -> Option<Component> {
        Component::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment {
    pub target: Ident,
    pub property: Option<Property>,
    pub value: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub kind: AssertKind,
    #[serde(skip)]
    pub span: Span,
}

impl Assertion {
    pub fn new(kind: AssertKind) -> Self {
        Assertion { kind, span: Span::default() }
    }

    pub fn compare(lhs: Expr, op: CmpOp, rhs: Expr) -> Self {
        Assertion::new(AssertKind::Compare { lhs, op, rhs })
    }

    pub fn and(a: Assertion, b: Assertion) -> Self {
        Assertion::new(AssertKind::And(Box::new(a), Box::new(b)))
    }

    pub fn or(a: Assertion, b: Assertion) -> Self {
        Assertion::new(AssertKind::Or(Box::new(a), Box::new(b)))
    }

    pub fn not(a: Assertion) -> Self {
        Assertion::new(AssertKind::Not(Box::new(a)))
    }

    pub fn inside(object: &str, region: &str) -> Self {
        Assertion::new(AssertKind::Inside { object: Ident::new(object), region: Ident::new(region) })
    }
}

impl PartialEq for Assertion {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum AssertKind {
    Compare { lhs: Expr, op: CmpOp, rhs: Expr },
    Inside { object: Ident, region: Ident },
    And(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
    Not(Box<Assertion>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    #[serde(skip)]
    pub span: Span,
    /// Filled in by the type checker.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ty: Option<ExprType>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// `id.property`, `id.property.component` or (on vector variables) `id.component`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropAccess {
    pub target: Ident,
    pub property: Option<Property>,
    pub component: Option<Component>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "expr", rename_all = "camelCase")]
pub enum ExprKind {
    Number { value: f64 },
    Str { value: String },
    Ident { id: Ident },
    Binary { op: ArithOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Rand { lo: Box<Expr>, hi: Box<Expr> },
    Vec3 { x: Box<Expr>, y: Box<Expr>, z: Box<Expr> },
    Rot { x: Box<Expr>, y: Box<Expr>, z: Box<Expr> },
    Dot { a: Box<Expr>, b: Box<Expr> },
    Prop(PropAccess),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default(), ty: None }
    }

    pub fn num(value: f64) -> Self {
        Expr::new(ExprKind::Number { value })
    }

    pub fn string(value: impl Into<String>) -> Self {
        Expr::new(ExprKind::Str { value: value.into() })
    }

    pub fn ident(name: &str) -> Self {
        Expr::new(ExprKind::Ident { id: Ident::new(name) })
    }

    pub fn binary(op: ArithOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    pub fn vec3(x: Expr, y: Expr, z: Expr) -> Self {
        Expr::new(ExprKind::Vec3 { x: Box::new(x), y: Box::new(y), z: Box::new(z) })
    }

    pub fn rot(x: Expr, y: Expr, z: Expr) -> Self {
        Expr::new(ExprKind::Rot { x: Box::new(x), y: Box::new(y), z: Box::new(z) })
    }

    pub fn dot(a: Expr, b: Expr) -> Self {
        Expr::new(ExprKind::Dot { a: Box::new(a), b: Box::new(b) })
    }

    pub fn rand(lo: Expr, hi: Expr) -> Self {
        Expr::new(ExprKind::Rand { lo: Box::new(lo), hi: Box::new(hi) })
    }

    pub fn prop(target: &str, property: Option<Property>, component: Option<Component>) -> Self {
        Expr::new(ExprKind::Prop(PropAccess { target: Ident::new(target), property, component }))
    }

    /// Children in left-to-right order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Number { .. } | ExprKind::Str { .. } | ExprKind::Ident { .. } | ExprKind::Prop(_) => vec![],
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Rand { lo, hi } => vec![lo, hi],
            ExprKind::Vec3 { x, y, z } | ExprKind::Rot { x, y, z } => vec![x, y, z],
            ExprKind::Dot { a, b } => vec![a, b],
        }
    }

    /// Identifiers referenced anywhere in the expression, in source order.
    pub fn identifiers(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match &self.kind {
            ExprKind::Ident { id } => out.push(id),
            ExprKind::Prop(p) => out.push(&p.target),
            _ => {
                for c in self.children() {
                    c.collect_identifiers(out);
                }
            }
        }
    }
}

impl Assertion {
    /// Identifiers referenced anywhere in the assertion, in source order.
    pub fn identifiers(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        match &self.kind {
            AssertKind::Compare { lhs, rhs, .. } => {
                out.extend(lhs.identifiers());
                out.extend(rhs.identifiers());
            }
            AssertKind::Inside { object, region } => {
                out.push(object);
                out.push(region);
            }
            AssertKind::And(a, b) | AssertKind::Or(a, b) => {
                a.collect_identifiers(out);
                b.collect_identifiers(out);
            }
            AssertKind::Not(a) => a.collect_identifiers(out),
        }
    }
}

impl Program {
    pub fn declarations(&self) -> impl Iterator<Item = &Declaration> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Declaration(d) => Some(d),
            _ => None,
        })
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Constraint(ConstraintStmt::Assert { assertion }) => Some(assertion),
            _ => None,
        })
    }

    /// Object identifiers in declaration order.
    pub fn objects(&self) -> Vec<&str> {
        self.declarations()
            .filter_map(|d| match d {
                Declaration::Object { id } => Some(id.name.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Region identifiers in declaration order.
    pub fn regions(&self) -> Vec<&str> {
        self.declarations()
            .filter_map(|d| match d {
                Declaration::Region { id } => Some(id.name.as_str()),
                _ => None,
            })
            .collect()
    }
}
