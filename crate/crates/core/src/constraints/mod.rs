//! Compiles a checked program into a [`ConstraintSet`]: one constraint per
//! `assert`, plus the hidden physical constraints (pairwise non-collision,
//! support, containment in the object's region) minus the declared exceptions.
//!
//! Compilation inlines variables and freezes every `rand(lo, hi)` to
//! `lo + u * (hi - lo)` with `u` drawn once from a seeded generator. Draws
//! happen for assignments in program order, then for assertions in program
//! order, visiting each expression tree parent-first, left to right.
//! Variables seen by an assertion hold their final assigned value.

mod eval;
mod ir;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dsl::{
    AssertKind, Assertion, CmpOp, ConstraintStmt, Diagnostic, DiagnosticKind, Diagnostics, Expr, ExprKind,
    Property, Span, StmtKind, TypedProgram,
};
use crate::geom::Vec3;
use crate::scene::EntityProps;

pub use eval::{EvalContext, EvalError, ObjectGeometry};
pub use ir::{apply_arith, compare, CAssert, CExpr, Value, EPS_EQ};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    HiddenCollision,
    HiddenGravity,
    HiddenBoundary,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Explicit => "explicit",
            Provenance::HiddenCollision => "hidden-collision",
            Provenance::HiddenGravity => "hidden-gravity",
            Provenance::HiddenBoundary => "hidden-boundary",
        }
    }

    pub fn is_hidden(self) -> bool {
        self != Provenance::Explicit
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConstraintKind {
    Explicit { source: Assertion, compiled: CAssert },
    /// Object indices, first < second.
    NoCollision(usize, usize),
    Supported(usize),
    WithinRegion(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompiledConstraint {
    pub id: usize,
    pub kind: ConstraintKind,
    pub provenance: Provenance,
    /// Indices of the objects the constraint reads, ascending.
    pub involved: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub constraints: Vec<CompiledConstraint>,
    /// Object identifiers in declaration order; constraint indices refer to this list.
    pub objects: Vec<String>,
    /// Region identifiers in declaration order.
    pub regions: Vec<String>,
    /// Unordered pairs, stored with the smaller name first.
    pub allow_collide: BTreeSet<(String, String)>,
    pub allow_outside: BTreeSet<String>,
}

/// Compiler output: the constraint set plus the constant properties assigned
/// to objects and regions.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProgram {
    pub constraints: ConstraintSet,
    pub props: BTreeMap<String, EntityProps>,
}

/// Compiles the constraints of a checked program. Always succeeds.
pub fn compile(typed: &TypedProgram, seed: u64) -> ConstraintSet {
    Compiler::new(typed, seed).run(false).expect("constraint compilation is total").constraints
}

/// Compiles constraints and evaluates property assignments, which must be
/// constant (they may read only properties assigned earlier).
pub fn compile_program(typed: &TypedProgram, seed: u64) -> Result<CompiledProgram, Diagnostics> {
    Compiler::new(typed, seed).run(true)
}

struct Compiler<'p> {
    typed: &'p TypedProgram,
    rng: ChaCha8Rng,
    object_index: BTreeMap<&'p str, usize>,
    region_index: BTreeMap<&'p str, usize>,
    vars: BTreeMap<String, CExpr>,
}

impl<'p> Compiler<'p> {
    fn new(typed: &'p TypedProgram, seed: u64) -> Self {
        let program = &typed.program;
        let object_index = program.objects().into_iter().enumerate().map(|(i, n)| (n, i)).collect();
        let region_index = program.regions().into_iter().enumerate().map(|(i, n)| (n, i)).collect();
        Compiler { typed, rng: ChaCha8Rng::seed_from_u64(seed), object_index, region_index, vars: BTreeMap::new() }
    }

    fn lower(&mut self, e: &Expr) -> CExpr {
        match &e.kind {
            ExprKind::Number { value } => CExpr::Const(Value::Num(*value)),
            ExprKind::Str { value } => CExpr::Const(Value::Text(value.clone())),
            ExprKind::Ident { id } => self.vars.get(&id.name).cloned().expect("type checker guarantees assignment"),
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.lower(lhs);
                let r = self.lower(rhs);
                CExpr::binary(*op, l, r)
            }
            ExprKind::Rand { lo, hi } => {
                let u: f64 = self.rng.gen();
                let lo = self.lower(lo);
                let hi = self.lower(hi);
                let span = CExpr::binary(crate::dsl::ArithOp::Sub, hi, lo.clone());
                let offset = CExpr::binary(crate::dsl::ArithOp::Mul, CExpr::Const(Value::Num(u)), span);
                CExpr::binary(crate::dsl::ArithOp::Add, lo, offset)
            }
            ExprKind::Vec3 { x, y, z } | ExprKind::Rot { x, y, z } => {
                let parts = [self.lower(x), self.lower(y), self.lower(z)];
                CExpr::make(matches!(e.kind, ExprKind::Rot { .. }), parts)
            }
            ExprKind::Dot { a, b } => {
                let a = self.lower(a);
                let b = self.lower(b);
                CExpr::dot(a, b)
            }
            ExprKind::Prop(p) => {
                let name = p.target.name.as_str();
                let base = match p.property {
                    None => self.vars.get(name).cloned().expect("type checker guarantees assignment"),
                    Some(property) => match self.object_index.get(name) {
                        Some(&object) => CExpr::ObjProp { object, property },
                        None => CExpr::RegionProp { region: self.region_index[name], property },
                    },
                };
                match p.component {
                    Some(c) => CExpr::component(base, c),
                    None => base,
                }
            }
        }
    }

    fn lower_assertion(&mut self, a: &Assertion) -> CAssert {
        match &a.kind {
            AssertKind::Compare { lhs, op, rhs } => {
                let l = self.lower(lhs);
                let r = self.lower(rhs);
                CAssert::Compare(l, *op, r)
            }
            AssertKind::Inside { object, region } => {
                CAssert::Inside { object: self.object_index[object.name.as_str()], region: self.region_index[region.name.as_str()] }
            }
            AssertKind::And(x, y) => {
                let x = self.lower_assertion(x);
                CAssert::And(Box::new(x), Box::new(self.lower_assertion(y)))
            }
            AssertKind::Or(x, y) => {
                let x = self.lower_assertion(x);
                CAssert::Or(Box::new(x), Box::new(self.lower_assertion(y)))
            }
            AssertKind::Not(x) => CAssert::Not(Box::new(self.lower_assertion(x))),
        }
    }

    fn run(mut self, evaluate_props: bool) -> Result<CompiledProgram, Diagnostics> {
        let program = &self.typed.program;
        let objects: Vec<String> = program.objects().into_iter().map(String::from).collect();
        let regions: Vec<String> = program.regions().into_iter().map(String::from).collect();
        let mut props: BTreeMap<String, EntityProps> = BTreeMap::new();
        let mut errors = Vec::new();
        let mut allow_collide = BTreeSet::new();
        let mut allow_outside = BTreeSet::new();

        for stmt in &program.statements {
            match &stmt.kind {
                StmtKind::Assignment(a) => {
                    let value = self.lower(&a.value);
                    match a.property {
                        None => {
                            self.vars.insert(a.target.name.clone(), value);
                        }
                        Some(property) if evaluate_props => {
                            match const_eval(&value, &props, &objects, &regions) {
                                Ok(v) => store_prop(props.entry(a.target.name.clone()).or_default(), property, v),
                                Err(read) => errors.push(Diagnostic::new(
                                    DiagnosticKind::TypeError,
                                    a.value.span,
                                    format!(
                                        "value of `{}.{}` must be constant, but reads `{read}`, which has no assigned value yet",
                                        a.target.name,
                                        property.name()
                                    ),
                                )),
                            }
                        }
                        Some(_) => {}
                    }
                }
                StmtKind::Constraint(ConstraintStmt::AllowCollide { a, b }) => {
                    let (x, y) = if a.name <= b.name { (a, b) } else { (b, a) };
                    allow_collide.insert((x.name.clone(), y.name.clone()));
                }
                StmtKind::Constraint(ConstraintStmt::AllowOutside { id }) => {
                    allow_outside.insert(id.name.clone());
                }
                StmtKind::Constraint(ConstraintStmt::Assert { .. }) | StmtKind::Declaration(_) => {}
            }
        }
        if !errors.is_empty() {
            return Err(Diagnostics(errors));
        }

        let mut constraints = Vec::new();
        for a in program.assertions() {
            let compiled = self.lower_assertion(a);
            let mut involved = Vec::new();
            compiled.objects(&mut involved);
            involved.sort_unstable();
            involved.dedup();
            constraints.push(CompiledConstraint {
                id: constraints.len(),
                kind: ConstraintKind::Explicit { source: a.clone(), compiled },
                provenance: Provenance::Explicit,
                involved,
            });
        }
        let push = |constraints: &mut Vec<CompiledConstraint>, kind, provenance, involved| {
            let id = constraints.len();
            constraints.push(CompiledConstraint { id, kind, provenance, involved });
        };
        let n = objects.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let key = if objects[i] <= objects[j] {
                    (objects[i].clone(), objects[j].clone())
                } else {
                    (objects[j].clone(), objects[i].clone())
                };
                if !allow_collide.contains(&key) {
                    push(&mut constraints, ConstraintKind::NoCollision(i, j), Provenance::HiddenCollision, vec![i, j]);
                }
            }
        }
        for i in 0..n {
            push(&mut constraints, ConstraintKind::Supported(i), Provenance::HiddenGravity, vec![i]);
        }
        for (i, name) in objects.iter().enumerate() {
            if !allow_outside.contains(name) {
                push(&mut constraints, ConstraintKind::WithinRegion(i), Provenance::HiddenBoundary, vec![i]);
            }
        }
        Ok(CompiledProgram { constraints: ConstraintSet { constraints, objects, regions, allow_collide, allow_outside }, props })
    }
}

fn store_prop(p: &mut EntityProps, property: Property, v: Value) {
    match (property, v) {
        (Property::Color, Value::Text(s)) => p.color = Some(s),
        (Property::Material, Value::Text(s)) => p.material = Some(s),
        (Property::Features, Value::Text(s)) => p.features = Some(s),
        (Property::Pos, Value::Vec3(v)) => p.pos = Some(v),
        (Property::Scale, Value::Vec3(v)) => p.scale = Some(v),
        (Property::Rot, Value::Rot(v)) => p.rot = Some(v),
        (prop, v) => unreachable!("type checker admits {} <- {v}", prop.name()),
    }
}

/// Evaluates an expression using only constants and properties assigned so
/// far. On failure returns the first unresolvable read, printed.
fn const_eval(
    e: &CExpr,
    props: &BTreeMap<String, EntityProps>,
    objects: &[String],
    regions: &[String],
) -> Result<Value, String> {
    let read = |name: &str, property: Property| -> Result<Value, String> {
        let p = props.get(name);
        let missing = || format!("{name}.{}", property.name());
        let p = p.ok_or_else(missing)?;
        Ok(match property {
            Property::Color => Value::Text(p.color.clone().ok_or_else(missing)?),
            Property::Material => Value::Text(p.material.clone().ok_or_else(missing)?),
            Property::Features => Value::Text(p.features.clone().ok_or_else(missing)?),
            Property::Pos => Value::Vec3(p.pos.ok_or_else(missing)?),
            Property::Scale => Value::Vec3(p.scale.ok_or_else(missing)?),
            Property::Rot => Value::Rot(p.rot.ok_or_else(missing)?),
        })
    };
    let rec = |x: &CExpr| const_eval(x, props, objects, regions);
    Ok(match e {
        CExpr::Const(v) => v.clone(),
        CExpr::ObjProp { object, property } => read(&objects[*object], *property)?,
        CExpr::RegionProp { region, property } => read(&regions[*region], *property)?,
        CExpr::Component(inner, c) => Value::Num(rec(inner)?.as_vec().expect("typed")[c.index()]),
        CExpr::Binary(op, a, b) => apply_arith(*op, &rec(a)?, &rec(b)?).expect("typed"),
        CExpr::MakeVec3(p) | CExpr::MakeRot(p) => {
            let mut v = [0.0; 3];
            for (k, part) in p.iter().enumerate() {
                v[k] = rec(part)?.as_num().expect("typed");
            }
            if matches!(e, CExpr::MakeRot(_)) {
                Value::Rot(Vec3::from(v))
            } else {
                Value::Vec3(Vec3::from(v))
            }
        }
        CExpr::Dot(a, b) => Value::Num(rec(a)?.as_vec().expect("typed").dot(rec(b)?.as_vec().expect("typed"))),
    })
}

/// Canonical form for syntactic duplicate detection: operands of `&&`, `||`,
/// `=` and `!=` are put in a fixed order.
pub fn normalize(a: &Assertion) -> Assertion {
    use crate::dsl::print_assertion;
    use crate::dsl::print_expr;
    let kind = match &a.kind {
        AssertKind::Compare { lhs, op, rhs } if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
            let (l, r) = if print_expr(lhs) <= print_expr(rhs) { (lhs, rhs) } else { (rhs, lhs) };
            AssertKind::Compare { lhs: l.clone(), op: *op, rhs: r.clone() }
        }
        AssertKind::Compare { .. } | AssertKind::Inside { .. } => a.kind.clone(),
        AssertKind::And(x, y) | AssertKind::Or(x, y) => {
            let (x, y) = (normalize(x), normalize(y));
            let (x, y) = if print_assertion(&x) <= print_assertion(&y) { (x, y) } else { (y, x) };
            if matches!(a.kind, AssertKind::And(..)) {
                AssertKind::And(Box::new(x), Box::new(y))
            } else {
                AssertKind::Or(Box::new(x), Box::new(y))
            }
        }
        AssertKind::Not(x) => AssertKind::Not(Box::new(normalize(x))),
    };
    Assertion { kind, span: Span::default() }
}

/// Finding reported by a [`SemanticChecker`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemanticFinding {
    pub constraints: Vec<usize>,
    pub contradictory: bool,
    pub note: String,
}

/// Hook for redundancy and contradiction analysis beyond syntax (for
/// example an external reasoning service). The default finds nothing.
pub trait SemanticChecker {
    fn check(&self, _cs: &ConstraintSet) -> Vec<SemanticFinding> {
        Vec::new()
    }
}

pub struct NoSemanticCheck;

impl SemanticChecker for NoSemanticCheck {}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&CompiledConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    pub fn object_id(&self, i: usize) -> &str {
        &self.objects[i]
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.constraints.iter().filter(|c| c.provenance == provenance).count()
    }

    /// Removes explicit constraints whose normalized assertions are identical,
    /// keeping the first. Ids are left unchanged.
    pub fn dedupe_syntactic(&self) -> ConstraintSet {
        let mut seen = BTreeSet::new();
        let mut out = self.clone();
        out.constraints.retain(|c| match &c.kind {
            ConstraintKind::Explicit { source, .. } => seen.insert(crate::dsl::print_assertion(&normalize(source))),
            _ => true,
        });
        out
    }

    pub fn evaluate_all(&self, ctx: &EvalContext) -> Result<Vec<bool>, EvalError> {
        self.constraints.iter().map(|c| ctx.evaluate(c)).collect()
    }

    /// Satisfied over total, counting explicit and hidden constraints; 1.0 when empty.
    pub fn satisfaction_ratio(&self, ctx: &EvalContext) -> Result<f64, EvalError> {
        let verdicts = self.evaluate_all(ctx)?;
        Ok(ratio(&verdicts))
    }

    /// Human-readable form of a constraint.
    pub fn describe(&self, c: &CompiledConstraint, ctx: Option<&EvalContext>) -> String {
        match &c.kind {
            ConstraintKind::Explicit { source, .. } => crate::dsl::print_assertion(source),
            ConstraintKind::NoCollision(a, b) => format!("!collides({}, {})", self.objects[*a], self.objects[*b]),
            ConstraintKind::Supported(a) => format!("supported({})", self.objects[*a]),
            ConstraintKind::WithinRegion(a) => {
                let region = ctx.map(|x| x.object(*a).region.clone()).unwrap_or_else(|| "<region>".into());
                format!("inside({}, {region})", self.objects[*a])
            }
        }
    }

    /// One line per constraint: `<id> <provenance> <satisfied|violated> <assertion>`.
    pub fn report(&self, ctx: &EvalContext) -> Result<String, EvalError> {
        let mut out = String::new();
        for c in &self.constraints {
            let verdict = if ctx.evaluate(c)? { "satisfied" } else { "violated" };
            out.push_str(&format!("{} {} {} {}\n", c.id, c.provenance, verdict, self.describe(c, Some(ctx))));
        }
        Ok(out)
    }

    /// Object names involved in a constraint.
    pub fn involved_names(&self, c: &CompiledConstraint) -> Vec<&str> {
        c.involved.iter().map(|&i| self.objects[i].as_str()).collect()
    }
}

pub fn ratio(verdicts: &[bool]) -> f64 {
    if verdicts.is_empty() {
        1.0
    } else {
        verdicts.iter().filter(|&&v| v).count() as f64 / verdicts.len() as f64
    }
}
