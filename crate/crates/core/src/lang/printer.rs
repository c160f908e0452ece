use crate::arith::Expr;
use crate::ctr::{Ctr, GlobalArg};
use crate::domain::{Bound, IntDomain, Interval};
use crate::engine::VarId;

fn name(v: VarId, names: &[String]) -> String {
    names.get(v.index()).cloned().unwrap_or_else(|| format!("_V{}", v.index()))
}

fn bound(b: Bound) -> String {
    match b {
        Bound::NegInf => "inf".into(),
        Bound::PosInf => "sup".into(),
        Bound::Finite(v) => v.to_string(),
    }
}

fn interval(i: &Interval, in_union: bool) -> String {
    if i.lo == i.hi {
        return format!("{{{}}}", bound(i.lo));
    }
    let s = format!("{}..{}", bound(i.lo), bound(i.hi));
    if in_union {
        format!("({s})")
    } else {
        s
    }
}

/// Range syntax: `{k}`, `lo..hi`, or a `\/` union with parenthesized
/// intervals. The empty domain prints as the inverted range `1..0`.
pub fn format_domain(d: &IntDomain) -> String {
    match d.intervals() {
        [] => "1..0".into(),
        [one] => interval(one, false),
        many => many.iter().map(|i| interval(i, true)).collect::<Vec<_>>().join("\\/"),
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Mul(..) => 1,
        _ => 2,
    }
}

fn expr_at(e: &Expr, min: u8, names: &[String], out: &mut String) {
    if prec(e) < min {
        out.push('(');
        expr_into(e, names, out);
        out.push(')');
    } else {
        expr_into(e, names, out);
    }
}

fn expr_into(e: &Expr, names: &[String], out: &mut String) {
    match e {
        Expr::Const(c) => out.push_str(&c.to_string()),
        Expr::Var(v) => out.push_str(&name(*v, names)),
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            expr_at(a, 0, names, out);
            out.push(if matches!(e, Expr::Add(..)) { '+' } else { '-' });
            expr_at(b, 1, names, out);
        }
        Expr::Mul(a, b) => {
            expr_at(a, 1, names, out);
            out.push('*');
            expr_at(b, 2, names, out);
        }
        Expr::Neg(a) => {
            out.push('-');
            if matches!(**a, Expr::Const(_)) {
                out.push('(');
                expr_into(a, names, out);
                out.push(')');
            } else {
                expr_at(a, 2, names, out);
            }
        }
    }
}

pub fn print_expr(e: &Expr, names: &[String]) -> String {
    let mut out = String::new();
    expr_into(e, names, &mut out);
    out
}

fn list(items: &[Expr], names: &[String]) -> String {
    let parts: Vec<String> = items.iter().map(|e| print_expr(e, names)).collect();
    format!("[{}]", parts.join(","))
}

fn paren(c: &Ctr, names: &[String]) -> String {
    format!("({})", ctr(c, 0, names))
}

/// `level` 0 admits a bare conjunction, 1 requires it parenthesized.
fn ctr(c: &Ctr, level: u8, names: &[String]) -> String {
    let bin = |a: &Ctr, op: &str, b: &Ctr| format!("{} {op} {}", paren(a, names), paren(b, names));
    match c {
        Ctr::True => "true".into(),
        Ctr::False => "false".into(),
        Ctr::InRange(v, d) => format!("{} in {}", name(*v, names), format_domain(d)),
        Ctr::Rel(a, op, b) => format!("{}{}{}", print_expr(a, names), op.symbol(), print_expr(b, names)),
        Ctr::Conj(a, b) => {
            let s = format!("{}, {}", ctr(a, 1, names), ctr(b, 0, names));
            if level > 0 {
                format!("({s})")
            } else {
                s
            }
        }
        Ctr::Cd(a, b) => bin(a, "cd", b),
        Ctr::Cxd(a, b) => bin(a, "cxd", b),
        Ctr::Or(a, b) => bin(a, "#\\/", b),
        Ctr::Imp(a, b) => bin(a, "=>", b),
        Ctr::Cn(a) => format!("cn({})", ctr(a, 1, names)),
        Ctr::Not(a) => format!("#\\{}", paren(a, names)),
        Ctr::Ite(g, a, b) => format!("ite({}, {}, {})", ctr(g, 1, names), ctr(a, 1, names), ctr(b, 1, names)),
        Ctr::Incr(x, y) => format!("incr({},{})", name(*x, names), name(*y, names)),
        Ctr::Sum(items, op, rhs) => format!("sum({},{},{})", list(items, names), op.symbol(), print_expr(rhs, names)),
        Ctr::Global(g) => {
            let args: Vec<String> = g
                .args
                .iter()
                .map(|a| match a {
                    GlobalArg::Expr(e) => print_expr(e, names),
                    GlobalArg::List(l) => list(l, names),
                })
                .collect();
            format!("{}({})", g.kind.name(), args.join(","))
        }
    }
}

/// Canonical text for `c`; `names[i]` names variable `i`.
pub fn print_ctr(c: &Ctr, names: &[String]) -> String {
    ctr(c, 0, names)
}
