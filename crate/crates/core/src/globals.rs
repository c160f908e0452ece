//! Global constraints encoded with constructive operators and recursion.
//!
//! Each global expands into a [`Ctr`] tree built exactly as the classic
//! recursive definitions do; the tree is then posted like any other
//! constraint. Expansion may create auxiliary variables in the store.

use crate::arith::{self, Expr, RelOp};
use crate::ctr::{Ctr, GlobalArg, GlobalCall, GlobalKind};
use crate::domain::{Bound, IntDomain};
use crate::engine::{Env, SolveError, Status, Store, VarId};

fn eq(a: impl Into<Expr>, b: impl Into<Expr>) -> Ctr {
    Ctr::eq(a, b)
}

fn rel(a: impl Into<Expr>, op: RelOp, b: impl Into<Expr>) -> Ctr {
    Ctr::rel(a, op, b)
}

/// A variable standing for `e`, plus the constraint tying them when `e` is
/// not already a variable.
fn as_var(store: &mut Store, e: &Expr) -> Result<(VarId, Ctr), SolveError> {
    if let Expr::Var(v) = e {
        return Ok((*v, Ctr::True));
    }
    let (lo, hi) = arith::eval_bounds(e, store);
    let v = store.new_var(IntDomain::range(lo, hi))?;
    Ok((v, eq(v, e.clone())))
}

fn aux(store: &mut Store, lo: i64, hi: i64) -> Result<VarId, SolveError> {
    store.new_var(IntDomain::range(lo, hi))
}

pub fn um3_ctr(x: Expr, y: Expr, z: Expr) -> Ctr {
    let c = |a: Ctr, b: Ctr| Ctr::conj(a, b);
    Ctr::cd(
        Ctr::cd(
            c(rel(x.clone(), RelOp::Gt, y.clone()), eq(y.clone(), z.clone())),
            c(rel(y.clone(), RelOp::Gt, z.clone()), eq(x.clone(), z.clone())),
        ),
        Ctr::cd(c(rel(z.clone(), RelOp::Gt, x.clone()), eq(x.clone(), y.clone())), c(eq(x, y.clone()), eq(y, z))),
    )
}

fn domctr_rec(store: &mut Store, x: VarId, l: &[Expr]) -> Result<Ctr, SolveError> {
    let n = l.len() as i64;
    if n == 1 {
        return Ok(Ctr::conj(eq(x, 1), eq(l[0].clone(), 1)));
    }
    let rest_zero = Ctr::conj_all(l[1..].iter().map(|e| eq(e.clone(), 0)));
    let y = aux(store, 1, n - 1)?;
    let inner = domctr_rec(store, y, &l[1..])?;
    Ok(Ctr::cd(
        Ctr::conj_all([eq(x, 1), eq(l[0].clone(), 1), rest_zero]),
        Ctr::conj_all([rel(x, RelOp::Gt, 1), eq(l[0].clone(), 0), Ctr::Incr(x, y), inner]),
    ))
}

fn domctr_ctr(store: &mut Store, x: &Expr, l: &[Expr]) -> Result<Ctr, SolveError> {
    let (xv, tie) = as_var(store, x)?;
    let n = l.len() as i64;
    let mut parts = vec![tie, Ctr::InRange(xv, IntDomain::range(1, n))];
    parts.extend(l.iter().map(|e| Ctr::rel(e.clone(), RelOp::Ge, 0)));
    parts.extend(l.iter().map(|e| Ctr::rel(e.clone(), RelOp::Le, 1)));
    parts.push(domctr_rec(store, xv, l)?);
    Ok(Ctr::conj_all(parts))
}

fn elemctr_rec(store: &mut Store, i: VarId, l: &[Expr], j: &Expr) -> Result<Ctr, SolveError> {
    let n = l.len() as i64;
    if n == 1 {
        return Ok(Ctr::conj(eq(i, 1), eq(j.clone(), l[0].clone())));
    }
    let i1 = aux(store, 1, n - 1)?;
    let inner = elemctr_rec(store, i1, &l[1..], j)?;
    Ok(Ctr::cd(
        Ctr::conj(eq(i, 1), eq(l[0].clone(), j.clone())),
        Ctr::conj_all([rel(i, RelOp::Gt, 1), Ctr::Incr(i, i1), inner]),
    ))
}

fn elemctr_ctr(store: &mut Store, i: &Expr, l: &[Expr], j: &Expr) -> Result<Ctr, SolveError> {
    let (iv, tie) = as_var(store, i)?;
    let n = l.len() as i64;
    let rec = elemctr_rec(store, iv, l, j)?;
    Ok(Ctr::conj_all([tie, Ctr::InRange(iv, IntDomain::range(1, n)), rec]))
}

/// `X1 = Y1, ..., Xk = Yk` over reversed prefixes, as `gen_eq` builds it.
fn gen_eq(lx: &[Expr], ly: &[Expr]) -> Ctr {
    match (lx, ly) {
        ([x], [y]) => eq(x.clone(), y.clone()),
        ([x, xs @ ..], [y, ys @ ..]) => Ctr::conj(eq(x.clone(), y.clone()), gen_eq(xs, ys)),
        _ => Ctr::True,
    }
}

pub fn lexctr_ctr(xs: &[Expr], ys: &[Expr]) -> Ctr {
    let mut lx = vec![xs[0].clone()];
    let mut ly = vec![ys[0].clone()];
    let mut t = Ctr::False;
    for (x, y) in xs[1..].iter().zip(&ys[1..]) {
        let t1 = gen_eq(&lx, &ly);
        t = Ctr::cd(t, Ctr::conj(rel(x.clone(), RelOp::Lt, y.clone()), t1));
        lx.insert(0, x.clone());
        ly.insert(0, y.clone());
    }
    Ctr::cd(rel(xs[0].clone(), RelOp::Lt, ys[0].clone()), t)
}

fn upper(e: &Expr, store: &Store) -> Bound {
    arith::eval_bounds(e, store).1
}

fn mulctr_ctr(store: &Store, n: &Expr, x: &Expr, min: &Expr, max: &Expr) -> Result<Ctr, SolveError> {
    let nmax = match upper(n, store) {
        Bound::Finite(v) if v > 0 => v,
        Bound::PosInf => return Err(SolveError::Unbounded("mulctr factor".into())),
        _ => return Err(SolveError::InvalidArgument("mulctr needs a positive factor".into())),
    };
    let xmax = upper(x, store).min(upper(max, store));
    let xmax = match xmax {
        Bound::Finite(v) => v,
        Bound::NegInf => return Ok(Ctr::False),
        Bound::PosInf => return Err(SolveError::Unbounded("mulctr multiple".into())),
    };
    let mmax = xmax.div_euclid(nmax);
    let mut chain = Ctr::False;
    for m in (1..=mmax).rev() {
        let c = eq(x.clone(), Expr::Const(m) * n.clone());
        chain = if chain == Ctr::False { c } else { Ctr::cd(c, chain) };
    }
    Ok(Ctr::conj_all([rel(x.clone(), RelOp::Ge, min.clone()), rel(x.clone(), RelOp::Le, max.clone()), chain]))
}

pub fn disjctr_ctr(s: &[Expr], p: &[Expr], h: &Expr) -> Ctr {
    let mut items: Vec<Expr> = s.to_vec();
    items.extend(p.iter().cloned());
    let mut pairs = Vec::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            pairs.push(Ctr::cd(
                rel(s[i].clone() + p[i].clone(), RelOp::Le, s[j].clone()),
                rel(s[j].clone() + p[j].clone(), RelOp::Le, s[i].clone()),
            ));
        }
    }
    Ctr::conj(Ctr::Sum(items, RelOp::Eq, h.clone()), Ctr::conj_all(pairs))
}

/// Expands one global call into its encoding.
pub fn expand(store: &mut Store, g: &GlobalCall) -> Result<Ctr, SolveError> {
    use GlobalArg as A;
    g.check().map_err(SolveError::InvalidArgument)?;
    Ok(match (g.kind, g.args.as_slice()) {
        (GlobalKind::Um3, [A::Expr(x), A::Expr(y), A::Expr(z)]) => um3_ctr(x.clone(), y.clone(), z.clone()),
        (GlobalKind::Domctr, [A::Expr(x), A::List(l)]) => domctr_ctr(store, x, l)?,
        (GlobalKind::Elemctr, [A::Expr(i), A::List(l), A::Expr(j)]) => elemctr_ctr(store, i, l, j)?,
        (GlobalKind::Lexctr, [A::List(a), A::List(b)]) => lexctr_ctr(a, b),
        (GlobalKind::Mulctr, [A::Expr(n), A::Expr(x), A::Expr(lo), A::Expr(hi)]) => mulctr_ctr(store, n, x, lo, hi)?,
        (GlobalKind::Disjctr, [A::List(s), A::List(p), A::Expr(h)]) => disjctr_ctr(s, p, h),
        _ => unreachable!("shape checked"),
    })
}

/// Replaces every global call inside `c` by its encoding.
pub fn expand_all(store: &mut Store, c: &Ctr) -> Result<Ctr, SolveError> {
    let mut rec = |x: &Ctr| expand_all(store, x).map(Box::new);
    Ok(match c {
        Ctr::Global(g) => expand(store, g)?,
        Ctr::Conj(a, b) => Ctr::Conj(rec(a)?, rec(b)?),
        Ctr::Cd(a, b) => Ctr::Cd(rec(a)?, rec(b)?),
        Ctr::Cxd(a, b) => Ctr::Cxd(rec(a)?, rec(b)?),
        Ctr::Imp(a, b) => Ctr::Imp(rec(a)?, rec(b)?),
        Ctr::Or(a, b) => Ctr::Or(rec(a)?, rec(b)?),
        Ctr::Cn(a) => Ctr::Cn(rec(a)?),
        Ctr::Not(a) => Ctr::Not(rec(a)?),
        Ctr::Ite(g, a, b) => Ctr::Ite(rec(g)?, rec(a)?, rec(b)?),
        other => other.clone(),
    })
}

fn exprs(vs: &[VarId]) -> Vec<Expr> {
    vs.iter().map(|&v| Expr::Var(v)).collect()
}

fn post(store: &mut Store, kind: GlobalKind, args: Vec<GlobalArg>, env: &mut Env) -> Result<Status, SolveError> {
    store.post(&Ctr::global(kind, args), env)
}

/// Ultrametric triple: `X>Y=Z or Y>X=Z or Z>X=Y or X=Y=Z`.
pub fn um3(store: &mut Store, x: VarId, y: VarId, z: VarId, env: &mut Env) -> Result<Status, SolveError> {
    let a = |v: VarId| GlobalArg::Expr(v.into());
    post(store, GlobalKind::Um3, vec![a(x), a(y), a(z)], env)
}

/// `X = i` iff `Xs[i] = 1`, positions counted from 1.
pub fn domctr(store: &mut Store, x: VarId, xs: &[VarId], env: &mut Env) -> Result<Status, SolveError> {
    post(store, GlobalKind::Domctr, vec![GlobalArg::Expr(x.into()), GlobalArg::List(exprs(xs))], env)
}

/// `Xs[I] = J`, positions counted from 1.
pub fn elemctr(store: &mut Store, i: VarId, xs: &[VarId], j: VarId, env: &mut Env) -> Result<Status, SolveError> {
    let args = vec![GlobalArg::Expr(i.into()), GlobalArg::List(exprs(xs)), GlobalArg::Expr(j.into())];
    post(store, GlobalKind::Elemctr, args, env)
}

/// Strict lexicographic order `Xs <lex Ys`.
pub fn lexctr(store: &mut Store, xs: &[VarId], ys: &[VarId], env: &mut Env) -> Result<Status, SolveError> {
    post(store, GlobalKind::Lexctr, vec![GlobalArg::List(exprs(xs)), GlobalArg::List(exprs(ys))], env)
}

/// `Min <= X <= Max` and `X` a positive multiple of `N`.
pub fn mulctr(store: &mut Store, n: Expr, x: VarId, min: Expr, max: Expr, env: &mut Env) -> Result<Status, SolveError> {
    let args = vec![GlobalArg::Expr(n), GlobalArg::Expr(x.into()), GlobalArg::Expr(min), GlobalArg::Expr(max)];
    post(store, GlobalKind::Mulctr, args, env)
}

/// Pairwise non-overlapping tasks, with `H = sum(S) + sum(P)`.
pub fn disjctr(
    store: &mut Store,
    starts: &[VarId],
    durations: &[VarId],
    horizon: VarId,
    env: &mut Env,
) -> Result<Status, SolveError> {
    let args = vec![GlobalArg::List(exprs(starts)), GlobalArg::List(exprs(durations)), GlobalArg::Expr(horizon.into())];
    post(store, GlobalKind::Disjctr, args, env)
}
