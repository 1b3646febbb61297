use super::ast::Span;
use super::diagnostic::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Semi,
    Comma,
    Dot,
    LParen,
    RParen,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Arrow => "`<-`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Tokenize `src`. Illegal characters produce diagnostics and are skipped so
/// that the parser can still report grammar errors further on.
pub fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'/' if bytes.get(i + 1) == Some(&b'*') => {
                match src[i + 2..].find("*/") {
                    Some(end) => i = i + 2 + end + 2,
                    None => {
                        errors.push(Diagnostic::new(
                            DiagnosticKind::LexError,
                            Span::new(start, src.len()),
                            "unterminated block comment",
                        ));
                        i = bytes.len();
                    }
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token { tok: Tok::Ident(src[start..i].to_string()), span: Span::new(start, i) });
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => tokens.push(Token { tok: Tok::Number(v), span: Span::new(start, i) }),
                    _ => errors.push(Diagnostic::new(
                        DiagnosticKind::LexError,
                        Span::new(start, i),
                        format!("number literal `{text}` is out of range"),
                    )),
                }
            }
            b'"' => {
                i += 1;
                let mut value = String::new();
                let mut closed = false;
                while i < bytes.len() {
                    match bytes[i] {
                        b'"' => {
                            i += 1;
                            closed = true;
                            break;
                        }
                        b'\\' => {
                            let esc = src[i + 1..].chars().next();
                            match esc {
                                Some('"') => value.push('"'),
                                Some('\\') => value.push('\\'),
                                Some('n') => value.push('\n'),
                                Some('t') => value.push('\t'),
                                Some(other) => {
                                    errors.push(Diagnostic::new(
                                        DiagnosticKind::LexError,
                                        Span::new(i, i + 1 + other.len_utf8()),
                                        format!("unknown escape `\\{other}`"),
                                    ));
                                }
                                None => break,
                            }
                            i += 1 + esc.map_or(0, char::len_utf8);
                        }
                        _ => {
                            let ch = src[i..].chars().next().expect("char boundary");
                            value.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                if closed {
                    tokens.push(Token { tok: Tok::Str(value), span: Span::new(start, i) });
                } else {
                    errors.push(Diagnostic::new(
                        DiagnosticKind::LexError,
                        Span::new(start, src.len()),
                        "unterminated string literal",
                    ));
                }
            }
            _ => {
                let two = |next: u8| bytes.get(i + 1) == Some(&next);
                let (tok, len) = match c {
                    b';' => (Some(Tok::Semi), 1),
                    b',' => (Some(Tok::Comma), 1),
                    b'.' => (Some(Tok::Dot), 1),
                    b'(' => (Some(Tok::LParen), 1),
                    b')' => (Some(Tok::RParen), 1),
                    b'+' => (Some(Tok::Plus), 1),
                    b'-' => (Some(Tok::Minus), 1),
                    b'*' => (Some(Tok::Star), 1),
                    b'/' => (Some(Tok::Slash), 1),
                    b'=' => (Some(Tok::Eq), 1),
                    b'<' if two(b'-') => (Some(Tok::Arrow), 2),
                    b'<' if two(b'=') => (Some(Tok::Le), 2),
                    b'<' => (Some(Tok::Lt), 1),
                    b'>' if two(b'=') => (Some(Tok::Ge), 2),
                    b'>' => (Some(Tok::Gt), 1),
                    b'!' if two(b'=') => (Some(Tok::Ne), 2),
                    b'!' => (Some(Tok::Bang), 1),
                    b'&' if two(b'&') => (Some(Tok::AndAnd), 2),
                    b'|' if two(b'|') => (Some(Tok::OrOr), 2),
                    _ => (None, src[i..].chars().next().map_or(1, char::len_utf8)),
                };
                match tok {
                    Some(tok) => tokens.push(Token { tok, span: Span::new(start, start + len) }),
                    None => errors.push(Diagnostic::new(
                        DiagnosticKind::LexError,
                        Span::new(start, start + len),
                        format!("illegal character `{}`", &src[start..start + len]),
                    )),
                }
                i += len;
            }
        }
    }
    tokens.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    (tokens, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let (t, e) = lex(src);
        assert!(e.is_empty(), "{e:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_comments() {
        assert_eq!(
            toks("a <- 1.5; // trailing\n/* block */ b <= c != d && !e || f"),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Number(1.5),
                Tok::Semi,
                Tok::Ident("b".into()),
                Tok::Le,
                Tok::Ident("c".into()),
                Tok::Ne,
                Tok::Ident("d".into()),
                Tok::AndAnd,
                Tok::Bang,
                Tok::Ident("e".into()),
                Tok::OrOr,
                Tok::Ident("f".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r#""a \"b\" \\ c""#), vec![Tok::Str("a \"b\" \\ c".into()), Tok::Eof]);
    }

    #[test]
    fn illegal_character_is_reported_with_span() {
        let (_, errors) = lex("object a; $");
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].kind, DiagnosticKind::LexError);
        assert_eq!(errors[0].span, Span::new(10, 11));
    }

    #[test]
    fn trailing_dot_is_not_part_of_number() {
        assert_eq!(toks("1."), vec![Tok::Number(1.0), Tok::Dot, Tok::Eof]);
    }

    #[test]
    fn unterminated_comment_and_string() {
        assert_eq!(lex("/* open").1[0].kind, DiagnosticKind::LexError);
        assert_eq!(lex("\"open").1[0].kind, DiagnosticKind::LexError);
    }
}
