//! Canonical pretty-printer. One statement per line; parentheses only where
//! precedence or associativity requires them.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.statements {
        out.push_str(&print_statement(stmt));
        out.push('\n');
    }
    out
}

pub fn print_statement(stmt: &Statement) -> String {
    match &stmt.kind {
        StmtKind::Declaration(Declaration::Object { id }) => format!("object {id};"),
        StmtKind::Declaration(Declaration::Region { id }) => format!("region {id};"),
        StmtKind::Declaration(Declaration::Variable { ty, id }) => format!("{ty} {id};"),
        StmtKind::Constraint(ConstraintStmt::Assert { assertion }) => format!("assert {};", print_assertion(assertion)),
        StmtKind::Constraint(ConstraintStmt::AllowCollide { a, b }) => format!("allowCollide({a}, {b});"),
        StmtKind::Constraint(ConstraintStmt::AllowOutside { id }) => format!("allowOutside({id});"),
        StmtKind::Assignment(a) => match a.property {
            Some(p) => format!("{}.{} <- {};", a.target, p.name(), print_expr(&a.value)),
            None => format!("{} <- {};", a.target, print_expr(&a.value)),
        },
    }
}

fn assertion_precedence(a: &Assertion) -> u8 {
    match a.kind {
        AssertKind::Or(..) => 1,
        AssertKind::And(..) => 2,
        AssertKind::Not(..) => 3,
        AssertKind::Compare { .. } | AssertKind::Inside { .. } => 4,
    }
}

pub fn print_assertion(a: &Assertion) -> String {
    let mut out = String::new();
    write_assertion(&mut out, a);
    out
}

fn write_assertion(out: &mut String, a: &Assertion) {
    let prec = assertion_precedence(a);
    let sub = |out: &mut String, child: &Assertion, wrap: bool| {
        if wrap {
            out.push('(');
            write_assertion(out, child);
            out.push(')');
        } else {
            write_assertion(out, child);
        }
    };
    match &a.kind {
        AssertKind::Compare { lhs, op, rhs } => {
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
        }
        AssertKind::Inside { object, region } => {
            let _ = write!(out, "inside({object}, {region})");
        }
        AssertKind::And(l, r) | AssertKind::Or(l, r) => {
            sub(out, l, assertion_precedence(l) < prec);
            out.push_str(if prec == 1 { " || " } else { " && " });
            sub(out, r, assertion_precedence(r) <= prec);
        }
        AssertKind::Not(inner) => {
            out.push('!');
            sub(out, inner, assertion_precedence(inner) < prec);
        }
    }
}

fn expr_precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        _ => 3,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn format_number(value: f64) -> String {
    format!("{value}")
}

pub fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    let call = |out: &mut String, name: &str, args: &[&Expr]| {
        out.push_str(name);
        out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, a);
        }
        out.push(')');
    };
    match &e.kind {
        ExprKind::Number { value } => out.push_str(&format_number(*value)),
        ExprKind::Str { value } => out.push_str(&quote_string(value)),
        ExprKind::Ident { id } => out.push_str(&id.name),
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let wrap_l = expr_precedence(lhs) < prec;
            let wrap_r = expr_precedence(rhs) <= prec;
            for (child, wrap, sep) in [(lhs, wrap_l, true), (rhs, wrap_r, false)] {
                if wrap {
                    out.push('(');
                }
                write_expr(out, child);
                if wrap {
                    out.push(')');
                }
                if sep {
                    let _ = write!(out, " {} ", op.symbol());
                }
            }
        }
        ExprKind::Rand { lo, hi } => call(out, "rand", &[lo, hi]),
        ExprKind::Vec3 { x, y, z } => call(out, "vec3", &[x, y, z]),
        ExprKind::Rot { x, y, z } => call(out, "rot", &[x, y, z]),
        ExprKind::Dot { a, b } => call(out, "dot", &[a, b]),
        ExprKind::Prop(p) => {
            out.push_str(&p.target.name);
            if let Some(prop) = p.property {
                out.push('.');
                out.push_str(prop.name());
            }
            if let Some(c) = p.component {
                out.push('.');
                out.push_str(c.name());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, random::random_program};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_point() {
        let src = "assert a.pos.x = 0;";
        let p = parse(&format!("object a; {src}")).unwrap();
        assert_eq!(print_statement(&p.statements[1]), src);
    }

    #[test]
    fn precedence_forces_parentheses() {
        let e = Expr::binary(
            ArithOp::Mul,
            Expr::binary(ArithOp::Add, Expr::num(1.0), Expr::num(2.0)),
            Expr::num(3.0),
        );
        assert_eq!(print_expr(&e), "(1 + 2) * 3");
        let e = Expr::binary(ArithOp::Sub, Expr::num(1.0), Expr::binary(ArithOp::Sub, Expr::num(2.0), Expr::num(3.0)));
        assert_eq!(print_expr(&e), "1 - (2 - 3)");
        let e = Expr::binary(ArithOp::Sub, Expr::binary(ArithOp::Sub, Expr::num(1.0), Expr::num(2.0)), Expr::num(3.0));
        assert_eq!(print_expr(&e), "1 - 2 - 3");
    }

    #[test]
    fn assertion_parentheses() {
        let cmp = || Assertion::compare(Expr::ident("n"), CmpOp::Gt, Expr::num(-1.0));
        assert_eq!(print_assertion(&Assertion::not(Assertion::and(cmp(), cmp()))), "!(n > -1 && n > -1)");
        assert_eq!(print_assertion(&Assertion::and(Assertion::or(cmp(), cmp()), cmp())), "(n > -1 || n > -1) && n > -1");
        assert_eq!(print_assertion(&Assertion::or(cmp(), Assertion::and(cmp(), cmp()))), "n > -1 || n > -1 && n > -1");
        assert_eq!(print_assertion(&Assertion::not(Assertion::not(cmp()))), "!!n > -1");
    }

    #[test]
    fn strings_are_escaped() {
        assert_eq!(quote_string("a \"b\"\\\n\t"), r#""a \"b\"\\\n\t""#);
    }

    #[test]
    fn numbers_print_without_exponent() {
        assert_eq!(format_number(1e21), "1000000000000000000000");
        assert_eq!(format_number(1.5e-7), "0.00000015");
        assert_eq!(format_number(-0.25), "-0.25");
    }

    #[test]
    fn random_programs_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = random_program(&mut rng);
            let text = print_program(&p);
            let back = parse(&text).unwrap_or_else(|e| panic!("{text}\n{e}"));
            assert_eq!(back, p, "{text}");
            assert_eq!(print_program(&back), text);
        }
    }
}
