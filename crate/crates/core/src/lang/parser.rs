use std::collections::HashMap;

use crate::arith::Expr;
use crate::ctr::{Ctr, GlobalArg, GlobalCall, GlobalKind};
use crate::domain::{Bound, IntDomain, Interval};
use crate::engine::{KLimit, VarId};

use super::lexer::{tokenize, TokKind, Token};
use super::{ParseError, Query};

const MAX_DEPTH: usize = 200;

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    names: Vec<String>,
    index: HashMap<String, VarId>,
    envs: Vec<String>,
    k: KLimit,
    depth: usize,
    anon: usize,
}

/// Parses a query. Variables are numbered in order of first occurrence.
pub fn parse(text: &str) -> Result<Query, ParseError> {
    parse_with_names(text, &[])
}

/// Like [`parse`], with `names[i]` pre-bound to variable `i`.
pub fn parse_with_names(text: &str, names: &[String]) -> Result<Query, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        names: names.to_vec(),
        index: names.iter().enumerate().map(|(i, n)| (n.clone(), VarId::from_index(i))).collect(),
        envs: Vec::new(),
        k: KLimit::Unbounded,
        depth: 0,
        anon: 0,
    };
    let body = p.conj()?.unwrap_or(Ctr::True);
    if p.peek() == &TokKind::Dot {
        p.pos += 1;
    }
    if p.peek() != &TokKind::Eof {
        return Err(p.unexpected(&[",", "."]));
    }
    Ok(Query { k: p.k, body, names: p.names })
}

fn right_nest(mut items: Vec<Ctr>) -> Option<Ctr> {
    let mut acc = items.pop()?;
    while let Some(c) = items.pop() {
        acc = Ctr::conj(c, acc);
    }
    Some(acc)
}

impl Parser {
    fn peek(&self) -> &TokKind {
        &self.toks[self.pos].kind
    }

    fn peek_at(&self, off: usize) -> &TokKind {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].kind
    }

    fn span(&self) -> std::ops::Range<usize> {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> TokKind {
        let k = self.toks[self.pos].kind.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        k
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::expected(self.span(), expected, self.peek())
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> PResult<()> {
        if self.peek() == &kind {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[what]))
        }
    }

    fn is_atom(&self, word: &str) -> bool {
        matches!(self.peek(), TokKind::Atom(w) if w == word)
    }

    fn enter(&mut self) -> PResult<()> {
        if self.depth >= MAX_DEPTH {
            return Err(ParseError::new(self.span(), "nesting too deep"));
        }
        self.depth += 1;
        Ok(())
    }

    fn var(&mut self, name: String) -> VarId {
        let name = if name == "_" {
            self.anon += 1;
            format!("_{}", self.anon)
        } else {
            name
        };
        if let Some(&v) = self.index.get(&name) {
            return v;
        }
        let v = VarId::from_index(self.names.len());
        self.index.insert(name.clone(), v);
        self.names.push(name);
        v
    }

    fn save(&self) -> (usize, usize, usize) {
        (self.pos, self.names.len(), self.anon)
    }

    fn restore(&mut self, (pos, n, anon): (usize, usize, usize)) {
        self.pos = pos;
        for name in self.names.drain(n..) {
            self.index.remove(&name);
        }
        self.anon = anon;
    }

    // ---- constraints ------------------------------------------------------

    /// `item (',' item)*`; `None` when every item is an env directive.
    fn conj(&mut self) -> PResult<Option<Ctr>> {
        let mut items = Vec::new();
        loop {
            if let Some(c) = self.item()? {
                items.push(c);
            }
            if self.peek() != &TokKind::Comma {
                break;
            }
            self.bump();
        }
        Ok(right_nest(items))
    }

    fn item(&mut self) -> PResult<Option<Ctr>> {
        if self.peek_at(1) == &TokKind::LParen {
            if self.is_atom("init_env") {
                self.init_env()?;
                return Ok(None);
            }
            if self.is_atom("end_env") {
                self.bump();
                self.bump();
                self.env_name()?;
                self.expect(TokKind::RParen, ")")?;
                return Ok(None);
            }
        }
        self.imp().map(Some)
    }

    fn env_name(&mut self) -> PResult<()> {
        match self.peek().clone() {
            TokKind::Var(name) => {
                self.bump();
                if !self.envs.contains(&name) {
                    self.envs.push(name);
                }
                Ok(())
            }
            _ => Err(self.unexpected(&["environment variable"])),
        }
    }

    fn init_env(&mut self) -> PResult<()> {
        self.bump();
        self.bump();
        self.env_name()?;
        self.expect(TokKind::Comma, ",")?;
        self.expect(TokKind::LBrack, "[")?;
        if self.peek() != &TokKind::RBrack {
            loop {
                if !self.is_atom("kflag") {
                    return Err(self.unexpected(&["kflag"]));
                }
                self.bump();
                self.expect(TokKind::LParen, "(")?;
                self.k = match self.bump() {
                    TokKind::Int(v) => KLimit::Finite(u32::try_from(v).unwrap_or(u32::MAX)),
                    TokKind::Atom(w) if w == "inf" || w == "sup" => KLimit::Unbounded,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected(&["integer", "inf"]));
                    }
                };
                self.expect(TokKind::RParen, ")")?;
                if self.peek() != &TokKind::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(TokKind::RBrack, "]")?;
        self.expect(TokKind::RParen, ")")
    }

    fn imp(&mut self) -> PResult<Ctr> {
        let lhs = self.disj()?;
        if self.peek() == &TokKind::Imp {
            self.bump();
            self.enter()?;
            let rhs = self.imp();
            self.depth -= 1;
            return Ok(Ctr::imp(lhs, rhs?));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<Ctr> {
        let mut lhs = self.unary()?;
        loop {
            let make: fn(Ctr, Ctr) -> Ctr = match self.peek() {
                TokKind::Atom(w) if w == "cd" => Ctr::cd,
                TokKind::Atom(w) if w == "cxd" => Ctr::cxd,
                TokKind::ReifOr => Ctr::or,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = make(lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Ctr> {
        if self.peek() == &TokKind::ReifNot {
            self.bump();
            self.enter()?;
            let c = self.unary();
            self.depth -= 1;
            return Ok(Ctr::not(c?));
        }
        self.enter()?;
        let c = self.atom();
        self.depth -= 1;
        c
    }

    /// Parses `n` constraint arguments and an optional trailing environment.
    fn ctr_args(&mut self, n: usize) -> PResult<Vec<Ctr>> {
        self.expect(TokKind::LParen, "(")?;
        let mut args = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(TokKind::Comma, ",")?;
            }
            args.push(self.imp()?);
        }
        if self.peek() == &TokKind::Comma {
            self.bump();
            self.env_name()?;
        }
        self.expect(TokKind::RParen, ")")?;
        Ok(args)
    }

    fn atom(&mut self) -> PResult<Ctr> {
        match self.peek().clone() {
            TokKind::LParen => {
                let saved = self.save();
                match self.relation() {
                    Ok(c) => Ok(c),
                    Err(e1) => {
                        self.restore(saved);
                        self.bump();
                        let inner = self.conj().map_err(|e2| furthest(e1, e2))?.unwrap_or(Ctr::True);
                        self.expect(TokKind::RParen, ")")?;
                        Ok(inner)
                    }
                }
            }
            TokKind::Imp if self.peek_at(1) == &TokKind::LParen => {
                self.bump();
                let mut a = self.ctr_args(2)?;
                let b = a.pop().unwrap();
                Ok(Ctr::imp(a.pop().unwrap(), b))
            }
            TokKind::Atom(w) => self.keyword(&w),
            TokKind::Int(v) if v <= 1 && !self.relation_follows(1) => {
                self.bump();
                Ok(if v == 1 { Ctr::True } else { Ctr::False })
            }
            TokKind::Var(name) if !self.relation_follows(1) => {
                self.bump();
                Ok(Ctr::eq(self.var(name), 1))
            }
            TokKind::Int(_) | TokKind::Var(_) | TokKind::Minus => self.relation(),
            _ => Err(self.unexpected(&["constraint"])),
        }
    }

    fn relation_follows(&self, off: usize) -> bool {
        matches!(self.peek_at(off), TokKind::Rel(_) | TokKind::Plus | TokKind::Minus | TokKind::Star)
            || matches!(self.peek_at(off), TokKind::Atom(w) if w == "in")
    }

    fn keyword(&mut self, w: &str) -> PResult<Ctr> {
        let call = self.peek_at(1) == &TokKind::LParen;
        match w {
            "true" => {
                self.bump();
                Ok(Ctr::True)
            }
            "false" => {
                self.bump();
                Ok(Ctr::False)
            }
            "cd" | "cxd" if call => {
                self.bump();
                let mut a = self.ctr_args(2)?;
                let b = a.pop().unwrap();
                let a = a.pop().unwrap();
                Ok(if w == "cd" { Ctr::cd(a, b) } else { Ctr::cxd(a, b) })
            }
            "cn" if call => {
                self.bump();
                Ok(Ctr::cn(self.ctr_args(1)?.pop().unwrap()))
            }
            "ite" if call => {
                self.bump();
                let mut a = self.ctr_args(3)?;
                let e = a.pop().unwrap();
                let t = a.pop().unwrap();
                Ok(Ctr::ite(a.pop().unwrap(), t, e))
            }
            "incr" if call => {
                self.bump();
                self.bump();
                let x = self.var_only()?;
                self.expect(TokKind::Comma, ",")?;
                let y = self.var_only()?;
                self.expect(TokKind::RParen, ")")?;
                Ok(Ctr::Incr(x, y))
            }
            "sum" if call => {
                self.bump();
                self.bump();
                let items = self.expr_list()?;
                self.expect(TokKind::Comma, ",")?;
                let op = match self.peek() {
                    TokKind::Rel(op) => *op,
                    _ => return Err(self.unexpected(&["relational operator"])),
                };
                self.bump();
                self.expect(TokKind::Comma, ",")?;
                let rhs = self.expr()?;
                self.expect(TokKind::RParen, ")")?;
                Ok(Ctr::Sum(items, op, rhs))
            }
            _ if call && GlobalKind::from_name(w).is_some() => self.global(GlobalKind::from_name(w).unwrap()),
            _ => Err(self.unexpected(&["constraint"])),
        }
    }

    fn global(&mut self, kind: GlobalKind) -> PResult<Ctr> {
        let start = self.span().start;
        self.bump();
        self.bump();
        let mut args = Vec::new();
        if self.peek() != &TokKind::RParen {
            loop {
                if self.peek() == &TokKind::LBrack {
                    args.push(GlobalArg::List(self.expr_list()?));
                } else {
                    args.push(GlobalArg::Expr(self.expr()?));
                }
                if self.peek() != &TokKind::Comma {
                    break;
                }
                self.bump();
            }
        }
        let end = self.span().end;
        self.expect(TokKind::RParen, ")")?;
        let g = GlobalCall::new(kind, args);
        g.check().map_err(|m| ParseError::new(start..end, m))?;
        Ok(Ctr::Global(g))
    }

    fn var_only(&mut self) -> PResult<VarId> {
        match self.peek().clone() {
            TokKind::Var(name) => {
                self.bump();
                Ok(self.var(name))
            }
            _ => Err(self.unexpected(&["variable"])),
        }
    }

    fn expr_list(&mut self) -> PResult<Vec<Expr>> {
        self.expect(TokKind::LBrack, "[")?;
        let mut items = Vec::new();
        if self.peek() != &TokKind::RBrack {
            loop {
                items.push(self.expr()?);
                if self.peek() != &TokKind::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(TokKind::RBrack, "]")?;
        Ok(items)
    }

    fn relation(&mut self) -> PResult<Ctr> {
        let lhs = self.expr()?;
        if self.is_atom("in") {
            let Expr::Var(v) = lhs else {
                return Err(ParseError::new(self.span(), "left side of `in` must be a variable"));
            };
            self.bump();
            return Ok(Ctr::InRange(v, self.range()?));
        }
        let op = match self.peek() {
            TokKind::Rel(op) => *op,
            _ => return Err(self.unexpected(&["#=", "#\\=", "#<", "#=<", "#>", "#>=", "in"])),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Ctr::Rel(lhs, op, rhs))
    }

    // ---- ranges -------------------------------------------------------------

    fn range(&mut self) -> PResult<IntDomain> {
        let mut parts = Vec::new();
        loop {
            self.range_part(&mut parts)?;
            if self.peek() != &TokKind::Union {
                break;
            }
            self.bump();
        }
        Ok(IntDomain::from_intervals(parts))
    }

    fn range_part(&mut self, parts: &mut Vec<Interval>) -> PResult<()> {
        match self.peek() {
            TokKind::LBrace => {
                self.bump();
                loop {
                    let v = self.int()?;
                    parts.push(Interval::new(v, v));
                    if self.peek() != &TokKind::Comma {
                        break;
                    }
                    self.bump();
                }
                self.expect(TokKind::RBrace, "}")
            }
            TokKind::LParen => {
                self.bump();
                self.range_part(parts)?;
                self.expect(TokKind::RParen, ")")
            }
            _ => {
                let lo = self.bound()?;
                if self.peek() != &TokKind::DotDot {
                    return match lo {
                        Bound::Finite(v) => {
                            parts.push(Interval::new(v, v));
                            Ok(())
                        }
                        _ => Err(self.unexpected(&[".."])),
                    };
                }
                self.bump();
                let hi = self.bound()?;
                if lo <= hi && lo != Bound::PosInf && hi != Bound::NegInf {
                    parts.push(Interval::new(lo, hi));
                }
                Ok(())
            }
        }
    }

    fn bound(&mut self) -> PResult<Bound> {
        if self.is_atom("inf") {
            self.bump();
            return Ok(Bound::NegInf);
        }
        if self.is_atom("sup") {
            self.bump();
            return Ok(Bound::PosInf);
        }
        Ok(Bound::Finite(self.int()?))
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.peek() == &TokKind::Minus;
        if neg {
            self.bump();
        }
        match self.peek().clone() {
            TokKind::Int(v) => {
                let span = self.span();
                self.bump();
                literal(v, neg).ok_or_else(|| ParseError::new(span, "integer literal out of range"))
            }
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    // ---- expressions ----------------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                TokKind::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                TokKind::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        while self.peek() == &TokKind::Star {
            self.bump();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Expr> {
        self.enter()?;
        let e = self.factor_inner();
        self.depth -= 1;
        e
    }

    fn factor_inner(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            TokKind::Minus => {
                if matches!(self.peek_at(1), TokKind::Int(_)) {
                    return Ok(Expr::Const(self.int()?));
                }
                self.bump();
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            TokKind::Int(_) => Ok(Expr::Const(self.int()?)),
            TokKind::Var(name) => {
                self.bump();
                Ok(Expr::Var(self.var(name)))
            }
            TokKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokKind::RParen, ")")?;
                Ok(e)
            }
            _ => Err(self.unexpected(&["integer", "variable", "("])),
        }
    }
}

fn literal(v: u64, neg: bool) -> Option<i64> {
    if neg {
        0i64.checked_sub_unsigned(v).or((v == 1u64 << 63).then_some(i64::MIN))
    } else {
        i64::try_from(v).ok()
    }
}

fn furthest(a: ParseError, b: ParseError) -> ParseError {
    if a.span.start > b.span.start {
        a
    } else {
        b
    }
}
