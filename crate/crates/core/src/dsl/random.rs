//! Random generator of well-typed programs, used by round-trip and
//! evaluation property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::*;

/// Kinds of expression the generator can produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenType {
    Number,
    Degree,
    Vector3,
    Rotation,
    Color,
    Material,
    Text,
}

impl GenType {
    fn value_type(self) -> Option<ValueType> {
        Some(match self {
            GenType::Number => ValueType::Number,
            GenType::Degree => ValueType::Degree,
            GenType::Vector3 => ValueType::Vector3,
            GenType::Rotation => ValueType::Rotation,
            GenType::Color => ValueType::Color,
            GenType::Material => ValueType::Material,
            GenType::Text => return None,
        })
    }
}

/// Names visible to the generator.
#[derive(Clone, Debug, Default)]
pub struct GenEnv {
    pub objects: Vec<String>,
    pub regions: Vec<String>,
    /// Assigned variables with their declared types.
    pub variables: Vec<(String, ValueType)>,
}

const WORDS: &[&str] = &["red", "oak", "soft", "walnut", "matte black", "tall \"slim\"", "a\\b", "two\nlines", ""];

pub fn random_number<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-5i32..=5) as f64,
        1 => (rng.gen_range(-400i32..=400) as f64) / 100.0,
        2 => rng.gen_range(-10.0..10.0),
        _ => [0.0, 90.0, 180.0, 270.0, 0.5, 1e-7, 12345.678][rng.gen_range(0..7)],
    }
}

fn vars_of(env: &GenEnv, t: ValueType) -> Vec<&str> {
    env.variables.iter().filter(|(_, vt)| *vt == t).map(|(n, _)| n.as_str()).collect()
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> Option<&'a str> {
    xs.choose(rng).copied()
}

/// A random expression of type `ty` over the names in `env`.
pub fn random_expr<R: Rng>(rng: &mut R, env: &GenEnv, ty: GenType, depth: u32) -> Expr {
    let objects: Vec<&str> = env.objects.iter().map(String::as_str).collect();
    let transformable: Vec<&str> = env.objects.iter().chain(&env.regions).map(String::as_str).collect();
    let leaf = depth == 0 || rng.gen_bool(0.35);
    match ty {
        GenType::Number | GenType::Degree => {
            let choice = if leaf { rng.gen_range(0..3) } else { rng.gen_range(0..8) };
            match choice {
                0 => Expr::num(random_number(rng)),
                1 => {
                    let want = if ty == GenType::Number { ValueType::Number } else { ValueType::Degree };
                    match pick(rng, &vars_of(env, want)) {
                        Some(v) => Expr::ident(v),
                        None => Expr::num(random_number(rng)),
                    }
                }
                2 => match pick(rng, &transformable) {
                    Some(o) => {
                        let c = *Component::ALL.choose(rng).unwrap();
                        let p = if ty == GenType::Degree {
                            Property::Rot
                        } else {
                            *[Property::Pos, Property::Scale].choose(rng).unwrap()
                        };
                        Expr::prop(o, Some(p), Some(c))
                    }
                    None => Expr::num(random_number(rng)),
                },
                3..=5 => {
                    let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div][rng.gen_range(0..4)];
                    Expr::binary(op, random_expr(rng, env, ty, depth - 1), random_expr(rng, env, ty, depth - 1))
                }
                6 if ty == GenType::Number => Expr::dot(
                    random_expr(rng, env, GenType::Vector3, depth - 1),
                    random_expr(rng, env, GenType::Vector3, depth - 1),
                ),
                6 => Expr::num(random_number(rng)),
                _ => {
                    let vt = if ty == GenType::Number { ValueType::Vector3 } else { ValueType::Rotation };
                    match pick(rng, &vars_of(env, vt)) {
                        Some(v) => Expr::prop(v, None, Some(*Component::ALL.choose(rng).unwrap())),
                        None => Expr::rand(Expr::num(random_number(rng)), Expr::num(random_number(rng))),
                    }
                }
            }
        }
        GenType::Vector3 | GenType::Rotation => {
            let scalar = if ty == GenType::Vector3 { GenType::Number } else { GenType::Degree };
            let choice = if leaf { rng.gen_range(0..3) } else { rng.gen_range(0..6) };
            let vt = ty.value_type().unwrap();
            match choice {
                1 if !vars_of(env, vt).is_empty() => Expr::ident(pick(rng, &vars_of(env, vt)).unwrap()),
                2 if !transformable.is_empty() => {
                    let o = pick(rng, &transformable).unwrap();
                    let p = if ty == GenType::Rotation {
                        Property::Rot
                    } else {
                        *[Property::Pos, Property::Scale].choose(rng).unwrap()
                    };
                    Expr::prop(o, Some(p), None)
                }
                3 => {
                    let op = [ArithOp::Add, ArithOp::Sub][rng.gen_range(0..2)];
                    Expr::binary(op, random_expr(rng, env, ty, depth - 1), random_expr(rng, env, ty, depth - 1))
                }
                4 => {
                    let v = random_expr(rng, env, ty, depth - 1);
                    let s = random_expr(rng, env, GenType::Number, depth - 1);
                    match rng.gen_range(0..3) {
                        0 => Expr::binary(ArithOp::Mul, v, s),
                        1 => Expr::binary(ArithOp::Mul, s, v),
                        _ => Expr::binary(ArithOp::Div, v, s),
                    }
                }
                _ => {
                    let d = depth.saturating_sub(1);
                    let (x, y, z) =
                        (random_expr(rng, env, scalar, d), random_expr(rng, env, scalar, d), random_expr(rng, env, scalar, d));
                    if ty == GenType::Vector3 {
                        Expr::vec3(x, y, z)
                    } else {
                        Expr::rot(x, y, z)
                    }
                }
            }
        }
        GenType::Color | GenType::Material => {
            let vt = ty.value_type().unwrap();
            let prop = if ty == GenType::Color { Property::Color } else { Property::Material };
            match rng.gen_range(0..3) {
                0 if !vars_of(env, vt).is_empty() => Expr::ident(pick(rng, &vars_of(env, vt)).unwrap()),
                1 if !objects.is_empty() => Expr::prop(pick(rng, &objects).unwrap(), Some(prop), None),
                _ => Expr::string(*WORDS.choose(rng).unwrap()),
            }
        }
        GenType::Text => match rng.gen_range(0..2) {
            0 if !objects.is_empty() => Expr::prop(pick(rng, &objects).unwrap(), Some(Property::Features), None),
            _ => Expr::string(*WORDS.choose(rng).unwrap()),
        },
    }
}

/// A random well-typed assertion.
pub fn random_assertion<R: Rng>(rng: &mut R, env: &GenEnv, depth: u32) -> Assertion {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if !leaf {
        return match rng.gen_range(0..3) {
            0 => Assertion::and(random_assertion(rng, env, depth - 1), random_assertion(rng, env, depth - 1)),
            1 => Assertion::or(random_assertion(rng, env, depth - 1), random_assertion(rng, env, depth - 1)),
            _ => Assertion::not(random_assertion(rng, env, depth - 1)),
        };
    }
    if !env.objects.is_empty() && !env.regions.is_empty() && rng.gen_bool(0.15) {
        let o = env.objects.choose(rng).unwrap();
        let r = env.regions.choose(rng).unwrap();
        return Assertion::inside(o, r);
    }
    let e = depth.min(2);
    match rng.gen_range(0..10) {
        0..=5 => {
            let op = *CmpOp::ALL.choose(rng).unwrap();
            let lt = if rng.gen_bool(0.7) { GenType::Number } else { GenType::Degree };
            let rt = if rng.gen_bool(0.7) { lt } else { GenType::Number };
            Assertion::compare(random_expr(rng, env, lt, e), op, random_expr(rng, env, rt, e))
        }
        6 => eq_pair(rng, env, GenType::Vector3, e),
        7 => eq_pair(rng, env, GenType::Rotation, e),
        8 => eq_pair(rng, env, GenType::Color, e),
        _ => eq_pair(rng, env, GenType::Material, e),
    }
}

fn eq_pair<R: Rng>(rng: &mut R, env: &GenEnv, ty: GenType, depth: u32) -> Assertion {
    let op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
    Assertion::compare(random_expr(rng, env, ty, depth), op, random_expr(rng, env, ty, depth))
}

/// A random well-typed program: declarations, assignments, exceptions and assertions.
pub fn random_program<R: Rng>(rng: &mut R) -> Program {
    let mut env = GenEnv::default();
    let mut statements = Vec::new();
    let decl = |d: Declaration| Statement::new(StmtKind::Declaration(d));
    let n_objects = rng.gen_range(1..=4);
    for i in 0..n_objects {
        let name = format!("obj{i}");
        statements.push(decl(Declaration::Object { id: Ident::new(&name) }));
        env.objects.push(name);
    }
    for i in 0..rng.gen_range(0..=2) {
        let name = format!("room_{i}");
        statements.push(decl(Declaration::Region { id: Ident::new(&name) }));
        env.regions.push(name);
    }
    let var_types = [
        (ValueType::Number, GenType::Number),
        (ValueType::Degree, GenType::Degree),
        (ValueType::Vector3, GenType::Vector3),
        (ValueType::Rotation, GenType::Rotation),
        (ValueType::Color, GenType::Color),
        (ValueType::Material, GenType::Material),
    ];
    for i in 0..rng.gen_range(0..=4) {
        let (vt, gt) = *var_types.choose(rng).unwrap();
        let name = format!("v{i}");
        statements.push(decl(Declaration::Variable { ty: vt, id: Ident::new(&name) }));
        let value = random_expr(rng, &env, gt, 2);
        statements.push(Statement::new(StmtKind::Assignment(Assignment { target: Ident::new(&name), property: None, value })));
        env.variables.push((name, vt));
    }
    for _ in 0..rng.gen_range(0..=3) {
        let p = *Property::ALL.choose(rng).unwrap();
        let target = if p.is_transform() && !env.regions.is_empty() && rng.gen_bool(0.3) {
            env.regions.choose(rng).unwrap().clone()
        } else {
            env.objects.choose(rng).unwrap().clone()
        };
        let gt = match p {
            Property::Color => GenType::Color,
            Property::Material => GenType::Material,
            Property::Features => GenType::Text,
            Property::Pos | Property::Scale => GenType::Vector3,
            Property::Rot => GenType::Rotation,
        };
        let value = random_expr(rng, &env, gt, 2);
        statements.push(Statement::new(StmtKind::Assignment(Assignment { target: Ident::new(target), property: Some(p), value })));
    }
    if env.objects.len() >= 2 && rng.gen_bool(0.3) {
        let mut pair: Vec<&String> = env.objects.choose_multiple(rng, 2).collect();
        pair.sort();
        statements.push(Statement::new(StmtKind::Constraint(ConstraintStmt::AllowCollide {
            a: Ident::new(pair[0]),
            b: Ident::new(pair[1]),
        })));
    }
    if rng.gen_bool(0.2) {
        let o = env.objects.choose(rng).unwrap();
        statements.push(Statement::new(StmtKind::Constraint(ConstraintStmt::AllowOutside { id: Ident::new(o) })));
    }
    for _ in 0..rng.gen_range(1..=4) {
        let assertion = random_assertion(rng, &env, 3);
        statements.push(Statement::new(StmtKind::Constraint(ConstraintStmt::Assert { assertion })));
    }
    Program { statements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::typecheck;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_type_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let p = random_program(&mut rng);
            if let Err(e) = typecheck(&p) {
                panic!("{}\n{e}", crate::dsl::print_program(&p));
            }
        }
    }
}
