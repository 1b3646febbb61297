//! Recursive-descent parser with statement-level error recovery, followed by
//! name resolution (declaration before use, no duplicate declarations).
//!
//! Grammar (`;` terminates every statement):
//!
//! ```text
//! program   := (stmt ";")+
//! stmt      := decl | constraint | assign
//! decl      := ("object" | "entity" | "region") IDENT | TYPE IDENT
//! constraint:= "assert" or | "allowCollide" "(" IDENT "," IDENT ")" | "allowOutside" "(" IDENT ")"
//! assign    := IDENT ("." PROPERTY)? "<-" expr
//! or        := and ("||" and)*
//! and       := not ("&&" not)*
//! not       := "!" not | atom
//! atom      := "inside" "(" IDENT "," IDENT ")" | expr CMP expr | "(" or ")"
//! expr      := term (("+" | "-") term)*
//! term      := primary (("*" | "/") primary)*
//! primary   := NUMBER | "-" NUMBER | STRING | "(" expr ")" | IDENT ("." NAME ("." NAME)?)?
//!            | "rand" "(" expr "," expr ")" | ("vec3" | "rot") "(" expr "," expr "," expr ")"
//!            | "dot" "(" expr "," expr ")"
//! ```

use std::collections::BTreeSet;

use super::ast::*;
use super::diagnostic::{Diagnostic, DiagnosticKind, Diagnostics};
use super::lexer::{lex, Tok, Token};

/// Words that cannot be used as identifiers.
pub const RESERVED: &[&str] = &[
    "object",
    "entity",
    "region",
    "assert",
    "allowCollide",
    "allowOutside",
    "inside",
    "rand",
    "vec3",
    "rot",
    "dot",
    "Number",
    "Degree",
    "Bool",
    "Vector3",
    "Rotation",
    "Color",
    "Material",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Parse and resolve a program.
pub fn parse(source: &str) -> Result<Program, Diagnostics> {
    parse_with_notes(source).map(|(p, _)| p)
}

/// Like [`parse`], also returning informational notes (e.g. `entity` normalised to `object`).
pub fn parse_with_notes(source: &str) -> Result<(Program, Vec<Diagnostic>), Diagnostics> {
    let (tokens, mut errors) = lex(source);
    let mut parser = Parser { tokens: &tokens, pos: 0, errors: Vec::new(), notes: Vec::new() };
    let program = parser.program();
    errors.extend(parser.errors);
    if errors.is_empty() {
        errors.extend(resolve(&program));
    }
    let mut notes = parser.notes;
    for d in errors.iter_mut().chain(notes.iter_mut()) {
        d.locate(source);
    }
    if errors.is_empty() {
        Ok((program, notes))
    } else {
        errors.sort_by_key(|d| d.span.start);
        Err(Diagnostics(errors))
    }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    errors: Vec<Diagnostic>,
    notes: Vec<Diagnostic>,
}

fn err(span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagnosticKind::ParseError, span, msg)
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w == word)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, context: &str) -> PResult<Span> {
        if self.at(&tok) {
            Ok(self.bump().span)
        } else {
            let t = self.peek();
            Err(err(t.span, format!("expected {} {context}, found {}", tok.describe(), t.tok.describe())))
        }
    }

    /// A non-reserved identifier.
    fn ident(&mut self, context: &str) -> PResult<Ident> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(w) if !is_reserved(w) => {
                self.bump();
                Ok(Ident::with_span(w.clone(), t.span))
            }
            Tok::Ident(w) => Err(err(t.span, format!("`{w}` is a reserved word and cannot be used as {context}"))),
            other => Err(err(t.span, format!("expected {context}, found {}", other.describe()))),
        }
    }

    fn program(&mut self) -> Program {
        let mut statements = Vec::new();
        while !self.at(&Tok::Eof) {
            let start = self.pos;
            match self.statement() {
                Ok(stmt) => statements.push(stmt),
                Err(e) => {
                    self.errors.push(e);
                    self.recover(start);
                }
            }
        }
        if statements.is_empty() && self.errors.is_empty() {
            self.errors.push(err(self.peek().span, "a program is one or more `;`-terminated statements"));
        }
        Program { statements }
    }

    /// Skip past the next `;` (always consuming at least one token).
    fn recover(&mut self, start: usize) {
        if self.pos == start && !self.at(&Tok::Eof) {
            self.bump();
        }
        while !self.at(&Tok::Eof) {
            if self.bump().tok == Tok::Semi {
                break;
            }
        }
    }

    fn statement(&mut self) -> PResult<Statement> {
        let start = self.peek().span;
        let kind = match &self.peek().tok {
            Tok::Ident(w) => match w.as_str() {
                "object" | "entity" | "region" => {
                    let kw = self.bump();
                    let id = self.ident("a declared name")?;
                    match &kw.tok {
                        Tok::Ident(k) if k == "region" => StmtKind::Declaration(Declaration::Region { id }),
                        Tok::Ident(k) => {
                            if k == "entity" {
                                self.notes.push(Diagnostic::new(
                                    DiagnosticKind::Note,
                                    kw.span,
                                    "`entity` is accepted as an alias of `object`",
                                ));
                            }
                            StmtKind::Declaration(Declaration::Object { id })
                        }
                        _ => unreachable!(),
                    }
                }
                w if ValueType::from_keyword(w).is_some() => {
                    let ty = ValueType::from_keyword(w).expect("checked");
                    self.bump();
                    let id = self.ident("a variable name")?;
                    StmtKind::Declaration(Declaration::Variable { ty, id })
                }
                "assert" => {
                    self.bump();
                    let assertion = self.assertion()?;
                    StmtKind::Constraint(ConstraintStmt::Assert { assertion })
                }
                "allowCollide" => {
                    self.bump();
                    self.expect(Tok::LParen, "after `allowCollide`")?;
                    let a = self.ident("an object name")?;
                    self.expect(Tok::Comma, "between the two objects of `allowCollide`")?;
                    let b = self.ident("an object name")?;
                    self.expect(Tok::RParen, "to close `allowCollide`")?;
                    StmtKind::Constraint(ConstraintStmt::AllowCollide { a, b })
                }
                "allowOutside" => {
                    self.bump();
                    self.expect(Tok::LParen, "after `allowOutside`")?;
                    let id = self.ident("an object name")?;
                    self.expect(Tok::RParen, "to close `allowOutside`")?;
                    StmtKind::Constraint(ConstraintStmt::AllowOutside { id })
                }
                w if is_reserved(w) => {
                    return Err(err(start, format!("`{w}` cannot start a statement")));
                }
                _ => StmtKind::Assignment(self.assignment()?),
            },
            other => return Err(err(start, format!("expected a statement, found {}", other.describe()))),
        };
        let end = self.expect(Tok::Semi, "to end the statement")?;
        Ok(Statement { kind, span: start.to(end) })
    }

    fn assignment(&mut self) -> PResult<Assignment> {
        let target = self.ident("an assignment target")?;
        let property = if self.eat(&Tok::Dot) {
            let t = self.bump();
            match &t.tok {
                Tok::Ident(name) => match Property::from_name(name) {
                    Some(p) => Some(p),
                    None => {
                        return Err(err(
                            t.span,
                            format!("`{name}` is not an assignable property (expected color, material, features, pos, rot or scale)"),
                        ))
                    }
                },
                other => return Err(err(t.span, format!("expected a property name, found {}", other.describe()))),
            }
        } else {
            None
        };
        if self.at(&Tok::Dot) {
            return Err(err(self.peek().span, "component assignment is not supported; assign the whole vector"));
        }
        self.expect(Tok::Arrow, "in assignment")?;
        let value = self.expr()?;
        Ok(Assignment { target, property, value })
    }

    fn assertion(&mut self) -> PResult<Assertion> {
        let mut lhs = self.and_assertion()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.and_assertion()?;
            let span = lhs.span.to(rhs.span);
            lhs = Assertion { kind: AssertKind::Or(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn and_assertion(&mut self) -> PResult<Assertion> {
        let mut lhs = self.not_assertion()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.not_assertion()?;
            let span = lhs.span.to(rhs.span);
            lhs = Assertion { kind: AssertKind::And(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn not_assertion(&mut self) -> PResult<Assertion> {
        if self.at(&Tok::Bang) {
            let bang = self.bump().span;
            let inner = self.not_assertion()?;
            let span = bang.to(inner.span);
            return Ok(Assertion { kind: AssertKind::Not(Box::new(inner)), span });
        }
        self.atom_assertion()
    }

    fn atom_assertion(&mut self) -> PResult<Assertion> {
        if self.at_word("inside") && self.peek_at(1).tok == Tok::LParen {
            let start = self.bump().span;
            self.bump();
            let object = self.ident("an object name")?;
            self.expect(Tok::Comma, "between the arguments of `inside`")?;
            let region = self.ident("a region name")?;
            let end = self.expect(Tok::RParen, "to close `inside`")?;
            return Ok(Assertion { kind: AssertKind::Inside { object, region }, span: start.to(end) });
        }
        let start = self.pos;
        let as_comparison = self.comparison();
        match as_comparison {
            Ok(a) => Ok(a),
            Err(e) if self.tokens[start].tok == Tok::LParen => {
                let cmp_reach = self.pos;
                self.pos = start;
                let open = self.bump().span;
                let grouped = self.assertion().and_then(|inner| {
                    let close = self.expect(Tok::RParen, "to close the parenthesised assertion")?;
                    Ok(Assertion { kind: inner.kind, span: open.to(close) })
                });
                match grouped {
                    Ok(a) => Ok(a),
                    Err(e2) => {
                        if cmp_reach > self.pos {
                            self.pos = cmp_reach;
                            Err(e)
                        } else {
                            Err(e2)
                        }
                    }
                }
            }
            Err(e) => Err(e),
        }
    }

    fn comparison(&mut self) -> PResult<Assertion> {
        let lhs = self.expr()?;
        let t = self.peek().clone();
        let op = match t.tok {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::Arrow => {
                return Err(err(t.span, "`<-` is assignment; to compare with a negative number write `< -`"));
            }
            other => {
                return Err(err(t.span, format!("expected a comparison operator, found {}", other.describe())));
            }
        };
        self.bump();
        let rhs = self.expr()?;
        let span = lhs.span.to(rhs.span);
        Ok(Assertion { kind: AssertKind::Compare { lhs, op, rhs }, span })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.primary()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek().clone();
        let spanned = |kind, span| Expr { kind, span, ty: None };
        match &t.tok {
            Tok::Number(v) => {
                self.bump();
                Ok(spanned(ExprKind::Number { value: *v }, t.span))
            }
            Tok::Minus | Tok::Plus => {
                self.bump();
                let n = self.peek().clone();
                match n.tok {
                    Tok::Number(v) => {
                        self.bump();
                        let value = if t.tok == Tok::Minus { -v } else { v };
                        Ok(spanned(ExprKind::Number { value }, t.span.to(n.span)))
                    }
                    _ => Err(err(t.span, "a sign is only allowed directly before a number literal")),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(spanned(ExprKind::Str { value: s.clone() }, t.span))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "to close the parenthesised expression")?;
                Ok(Expr { span: t.span.to(close), ..inner })
            }
            Tok::Ident(w) if matches!(w.as_str(), "rand" | "vec3" | "rot" | "dot") => {
                let name = w.clone();
                self.bump();
                self.expect(Tok::LParen, &format!("after `{name}`"))?;
                let arity = if name == "vec3" || name == "rot" { 3 } else { 2 };
                let mut args = Vec::with_capacity(arity);
                for i in 0..arity {
                    if i > 0 {
                        self.expect(Tok::Comma, &format!("between the arguments of `{name}`"))?;
                    }
                    args.push(Box::new(self.expr()?));
                }
                let close = self.expect(Tok::RParen, &format!("to close `{name}` (it takes {arity} arguments)"))?;
                let mut it = args.into_iter();
                let mut next = || it.next().expect("arity");
                let kind = match name.as_str() {
                    "rand" => ExprKind::Rand { lo: next(), hi: next() },
                    "vec3" => ExprKind::Vec3 { x: next(), y: next(), z: next() },
                    "rot" => ExprKind::Rot { x: next(), y: next(), z: next() },
                    _ => ExprKind::Dot { a: next(), b: next() },
                };
                Ok(spanned(kind, t.span.to(close)))
            }
            Tok::Ident(_) => {
                let id = self.ident("an expression")?;
                if !self.at(&Tok::Dot) {
                    return Ok(spanned(ExprKind::Ident { id: id.clone() }, id.span));
                }
                self.bump();
                let (first, first_span) = self.path_segment()?;
                let mut end = first_span;
                let access = if let Some(component) = Component::from_name(&first) {
                    PropAccess { target: id.clone(), property: None, component: Some(component) }
                } else if let Some(property) = Property::from_name(&first) {
                    let component = if self.at(&Tok::Dot) {
                        self.bump();
                        let (second, second_span) = self.path_segment()?;
                        end = second_span;
                        match Component::from_name(&second) {
                            Some(c) if property.is_transform() => Some(c),
                            Some(_) => {
                                return Err(err(second_span, format!("`{first}` has no components")));
                            }
                            None => {
                                return Err(err(second_span, format!("expected x, y or z after `.{first}`, found `{second}`")));
                            }
                        }
                    } else {
                        None
                    };
                    PropAccess { target: id.clone(), property: Some(property), component }
                } else {
                    return Err(err(first_span, format!("unknown property `{first}`")));
                };
                Ok(spanned(ExprKind::Prop(access), id.span.to(end)))
            }
            other => Err(err(t.span, format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn path_segment(&mut self) -> PResult<(String, Span)> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(w) => Ok((w, t.span)),
            other => Err(err(t.span, format!("expected a property name, found {}", other.describe()))),
        }
    }
}

fn binary(op: ArithOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.to(rhs.span);
    Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span, ty: None }
}

/// Declaration-before-use and duplicate-declaration checks.
fn resolve(program: &Program) -> Vec<Diagnostic> {
    let mut declared: BTreeSet<&str> = BTreeSet::new();
    let mut errors = Vec::new();
    let mut check = |id: &Ident, declared: &BTreeSet<&str>| {
        if !declared.contains(id.name.as_str()) {
            errors.push(Diagnostic::new(
                DiagnosticKind::ResolveError,
                id.span,
                format!("undeclared identifier `{}`", id.name),
            ));
        }
    };
    let mut duplicates = Vec::new();
    for stmt in &program.statements {
        match &stmt.kind {
            StmtKind::Declaration(d) => {
                let id = d.id();
                if !declared.insert(id.name.as_str()) {
                    duplicates.push(Diagnostic::new(
                        DiagnosticKind::ResolveError,
                        id.span,
                        format!("`{}` is declared more than once", id.name),
                    ));
                }
            }
            StmtKind::Constraint(ConstraintStmt::Assert { assertion }) => {
                for id in assertion.identifiers() {
                    check(id, &declared);
                }
            }
            StmtKind::Constraint(ConstraintStmt::AllowCollide { a, b }) => {
                check(a, &declared);
                check(b, &declared);
            }
            StmtKind::Constraint(ConstraintStmt::AllowOutside { id }) => check(id, &declared),
            StmtKind::Assignment(a) => {
                check(&a.target, &declared);
                for id in a.value.identifiers() {
                    check(id, &declared);
                }
            }
        }
    }
    errors.extend(duplicates);
    errors
}
