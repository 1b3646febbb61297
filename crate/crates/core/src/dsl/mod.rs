//! ScenethesisLang front end: lexer, parser with name resolution, type
//! checker and canonical printer.

pub mod ast;
pub mod diagnostic;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod random;
pub mod typecheck;

pub use ast::*;
pub use diagnostic::{Diagnostic, DiagnosticKind, Diagnostics};
pub use parser::{parse, parse_with_notes};
pub use printer::{print_assertion, print_expr, print_program, print_statement};
pub use typecheck::{check, typecheck, SymbolKind, SymbolTable, TypedProgram};
