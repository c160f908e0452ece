use std::ops::Range;

use crate::arith::RelOp;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokKind {
    Int(u64),
    /// Identifier starting with an uppercase letter or `_`.
    Var(String),
    /// Identifier starting with a lowercase letter.
    Atom(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Dot,
    DotDot,
    Plus,
    Minus,
    Star,
    Rel(RelOp),
    Imp,
    Union,
    ReifOr,
    ReifNot,
    Eof,
}

impl TokKind {
    pub fn describe(&self) -> String {
        match self {
            TokKind::Int(v) => v.to_string(),
            TokKind::Var(s) | TokKind::Atom(s) => s.clone(),
            TokKind::Rel(op) => op.symbol().to_string(),
            TokKind::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            TokKind::LParen => "(",
            TokKind::RParen => ")",
            TokKind::LBrack => "[",
            TokKind::RBrack => "]",
            TokKind::LBrace => "{",
            TokKind::RBrace => "}",
            TokKind::Comma => ",",
            TokKind::Dot => ".",
            TokKind::DotDot => "..",
            TokKind::Plus => "+",
            TokKind::Minus => "-",
            TokKind::Star => "*",
            TokKind::Imp => "=>",
            TokKind::Union => "\\/",
            TokKind::ReifOr => "#\\/",
            TokKind::ReifNot => "#\\",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokKind,
    pub span: Range<usize>,
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '%' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let rest = &src[i..];
        let (kind, len) = if c.is_ascii_digit() {
            let n = rest.bytes().take_while(u8::is_ascii_digit).count();
            let v = rest[..n]
                .parse::<u64>()
                .map_err(|_| ParseError::new(start..start + n, "integer literal out of range"))?;
            (TokKind::Int(v), n)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let n = rest.chars().take_while(|&c| is_ident(c)).count();
            let word = rest[..n].to_string();
            if c.is_ascii_uppercase() || c == '_' {
                (TokKind::Var(word), n)
            } else {
                (TokKind::Atom(word), n)
            }
        } else {
            const SYMBOLS: &[(&str, TokKind)] = &[
                ("#\\=", TokKind::Rel(RelOp::Ne)),
                ("#\\/", TokKind::ReifOr),
                ("#\\", TokKind::ReifNot),
                ("#=<", TokKind::Rel(RelOp::Le)),
                ("#>=", TokKind::Rel(RelOp::Ge)),
                ("#=", TokKind::Rel(RelOp::Eq)),
                ("#<", TokKind::Rel(RelOp::Lt)),
                ("#>", TokKind::Rel(RelOp::Gt)),
                ("=>", TokKind::Imp),
                ("=", TokKind::Rel(RelOp::Eq)),
                ("\\/", TokKind::Union),
                ("..", TokKind::DotDot),
                (".", TokKind::Dot),
                ("(", TokKind::LParen),
                (")", TokKind::RParen),
                ("[", TokKind::LBrack),
                ("]", TokKind::RBrack),
                ("{", TokKind::LBrace),
                ("}", TokKind::RBrace),
                (",", TokKind::Comma),
                ("+", TokKind::Plus),
                ("-", TokKind::Minus),
                ("*", TokKind::Star),
            ];
            match SYMBOLS.iter().find(|(s, _)| rest.starts_with(s)) {
                Some((s, k)) => (k.clone(), s.len()),
                None => {
                    let w = rest.chars().next().map_or(1, char::len_utf8);
                    return Err(ParseError::new(start..start + w, format!("unexpected character `{}`", &rest[..w])));
                }
            }
        };
        i += len;
        out.push(Token { kind, span: start..i });
    }
    out.push(Token { kind: TokKind::Eof, span: src.len()..src.len() });
    Ok(out)
}
