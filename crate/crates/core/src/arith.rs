//! Arithmetic expressions and their propagators.
//!
//! Linear relations get a bounds-consistent linear propagator, or exact
//! domain filtering when only one variable is involved. Anything containing
//! a product of variables falls back to an HC4-style forward/backward
//! projection over interval hulls.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::domain::{Bound, IntDomain};
use crate::engine::{Env, Filter, Interrupt, Propagator, SolveError, Status, Store, VarId, Wake};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Var(VarId),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge];

    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Ge => RelOp::Lt,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
        }
    }

    pub fn holds(self, a: i128, b: i128) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "#=",
            RelOp::Ne => "#\\=",
            RelOp::Lt => "#<",
            RelOp::Le => "#=<",
            RelOp::Gt => "#>",
            RelOp::Ge => "#>=",
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Expr {
    pub fn var(v: VarId) -> Expr {
        Expr::Var(v)
    }

    pub fn constant(c: i64) -> Expr {
        Expr::Const(c)
    }

    pub fn rel(self, op: RelOp, rhs: impl Into<Expr>) -> crate::ctr::Ctr {
        crate::ctr::Ctr::Rel(self, op, rhs.into())
    }

    /// Appends the variables of the expression, in occurrence order.
    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Neg(a) => a.collect_vars(out),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.is_ground() && b.is_ground(),
            Expr::Neg(a) => a.is_ground(),
        }
    }

    /// Evaluates under an assignment. Wide arithmetic, saturating at the
    /// `i128` range.
    pub fn eval(&self, val: &impl Fn(VarId) -> i64) -> i128 {
        match self {
            Expr::Const(c) => *c as i128,
            Expr::Var(v) => val(*v) as i128,
            Expr::Add(a, b) => a.eval(val).saturating_add(b.eval(val)),
            Expr::Sub(a, b) => a.eval(val).saturating_sub(b.eval(val)),
            Expr::Mul(a, b) => a.eval(val).saturating_mul(b.eval(val)),
            Expr::Neg(a) => a.eval(val).saturating_neg(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => 1 + a.depth().max(b.depth()),
            Expr::Neg(a) => 1 + a.depth(),
        }
    }
}

impl From<VarId> for Expr {
    fn from(v: VarId) -> Self {
        Expr::Var(v)
    }
}

impl From<i64> for Expr {
    fn from(c: i64) -> Self {
        Expr::Const(c)
    }
}

impl<T: Into<Expr>> std::ops::Add<T> for Expr {
    type Output = Expr;
    fn add(self, rhs: T) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs.into()))
    }
}

impl<T: Into<Expr>> std::ops::Sub<T> for Expr {
    type Output = Expr;
    fn sub(self, rhs: T) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs.into()))
    }
}

impl<T: Into<Expr>> std::ops::Mul<T> for Expr {
    type Output = Expr;
    fn mul(self, rhs: T) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs.into()))
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

// ---- interval arithmetic ---------------------------------------------------

/// Closed interval over extended integers. Empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Iv {
    pub lo: Bound,
    pub hi: Bound,
}

const FULL: Iv = Iv { lo: Bound::NegInf, hi: Bound::PosInf };

fn add_lo(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Bound::Finite(x), Bound::Finite(y)) => Bound::from_i128(x as i128 + y as i128),
        (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
        _ => Bound::PosInf,
    }
}

fn add_hi(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Bound::Finite(x), Bound::Finite(y)) => Bound::from_i128(x as i128 + y as i128),
        (Bound::PosInf, _) | (_, Bound::PosInf) => Bound::PosInf,
        _ => Bound::NegInf,
    }
}

fn sign(b: Bound) -> i8 {
    match b {
        Bound::NegInf => -1,
        Bound::PosInf => 1,
        Bound::Finite(v) => v.signum() as i8,
    }
}

fn mul_b(a: Bound, b: Bound) -> Bound {
    match (a, b) {
        (Bound::Finite(x), Bound::Finite(y)) => Bound::from_i128(x as i128 * y as i128),
        _ => match sign(a) * sign(b) {
            0 => Bound::Finite(0),
            1 => Bound::PosInf,
            _ => Bound::NegInf,
        },
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Quotient bound `t / d` for `d` away from zero. `up` selects rounding
/// towards `+inf` (used for lower bounds) and `None` means unconstrained.
fn div_b(t: Bound, d: Bound, up: bool) -> Option<Bound> {
    match (t, d) {
        (Bound::Finite(x), Bound::Finite(y)) => {
            let q = if up { ceil_div(x as i128, y as i128) } else { floor_div(x as i128, y as i128) };
            Some(Bound::from_i128(q))
        }
        (Bound::Finite(_), _) => Some(Bound::Finite(0)),
        (_, Bound::Finite(y)) => Some(if (sign(t) > 0) == (y > 0) { Bound::PosInf } else { Bound::NegInf }),
        _ => None,
    }
}

impl Iv {
    pub fn new(lo: Bound, hi: Bound) -> Iv {
        Iv { lo, hi }
    }

    pub fn point(v: i64) -> Iv {
        Iv::new(Bound::Finite(v), Bound::Finite(v))
    }

    pub fn of(d: &IntDomain) -> Iv {
        match d.bounds() {
            Ok((lo, hi)) => Iv { lo, hi },
            Err(_) => Iv { lo: Bound::PosInf, hi: Bound::NegInf },
        }
    }

    pub fn is_empty(self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(self, v: i64) -> bool {
        self.lo <= Bound::Finite(v) && Bound::Finite(v) <= self.hi
    }

    pub fn meet(self, o: Iv) -> Iv {
        Iv { lo: self.lo.max(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn is_subset(self, o: Iv) -> bool {
        self.is_empty() || (o.lo <= self.lo && self.hi <= o.hi)
    }

    fn hull(self, o: Iv) -> Iv {
        if self.is_empty() {
            return o;
        }
        if o.is_empty() {
            return self;
        }
        Iv { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn add(self, o: Iv) -> Iv {
        Iv { lo: add_lo(self.lo, o.lo), hi: add_hi(self.hi, o.hi) }
    }

    pub fn neg(self) -> Iv {
        Iv { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn sub(self, o: Iv) -> Iv {
        self.add(o.neg())
    }

    pub fn mul(self, o: Iv) -> Iv {
        let c = [mul_b(self.lo, o.lo), mul_b(self.lo, o.hi), mul_b(self.hi, o.lo), mul_b(self.hi, o.hi)];
        Iv { lo: *c.iter().min().unwrap(), hi: *c.iter().max().unwrap() }
    }

    pub fn sqr(self) -> Iv {
        let m = self.mul(self);
        if self.contains(0) {
            Iv { lo: Bound::Finite(0), hi: m.hi }
        } else {
            let a = mul_b(self.lo, self.lo);
            let b = mul_b(self.hi, self.hi);
            Iv { lo: a.min(b), hi: a.max(b) }
        }
    }

    /// Integer values `x` such that `x * d` may land in `self`.
    pub fn div(self, d: Iv) -> Iv {
        let zero_t = self.contains(0);
        if d.contains(0) {
            if zero_t {
                return FULL;
            }
            let neg = Iv::new(d.lo, Bound::Finite(-1)).meet(d);
            let pos = Iv::new(Bound::Finite(1), d.hi).meet(d);
            let mut out = Iv { lo: Bound::PosInf, hi: Bound::NegInf };
            for part in [neg, pos] {
                if !part.is_empty() {
                    out = out.hull(self.div(part));
                }
            }
            return out;
        }
        let mut lo: Option<Bound> = None;
        let mut hi: Option<Bound> = None;
        for t in [self.lo, self.hi] {
            for b in [d.lo, d.hi] {
                let (Some(l), Some(h)) = (div_b(t, b, true), div_b(t, b, false)) else {
                    return FULL;
                };
                lo = Some(lo.map_or(l, |x| x.min(l)));
                hi = Some(hi.map_or(h, |x| x.max(h)));
            }
        }
        Iv { lo: lo.unwrap(), hi: hi.unwrap() }
    }
}

fn fwd(e: &Expr, store: &Store) -> Iv {
    match e {
        Expr::Const(c) => Iv::point(*c),
        Expr::Var(v) => Iv::of(store.dom(*v)),
        Expr::Add(a, b) => fwd(a, store).add(fwd(b, store)),
        Expr::Sub(a, b) => fwd(a, store).sub(fwd(b, store)),
        Expr::Mul(a, b) if a == b => fwd(a, store).sqr(),
        Expr::Mul(a, b) => fwd(a, store).mul(fwd(b, store)),
        Expr::Neg(a) => fwd(a, store).neg(),
    }
}

fn isqrt_floor(b: Bound) -> Bound {
    match b {
        Bound::Finite(v) => Bound::Finite((v.max(0) as u64).isqrt() as i64),
        b => b,
    }
}

/// Values whose square may land in `t`, given the current range `a`.
fn sqrt_range(t: Iv, a: Iv) -> Iv {
    let r = isqrt_floor(t.hi);
    let mut out = Iv::new(r.neg(), r);
    if let Bound::Finite(lo) = t.lo {
        if lo > 0 {
            let f = (lo as u64).isqrt() as i64;
            let s = if f * f == lo { f } else { f + 1 };
            if a.lo > Bound::Finite(-s) {
                out.lo = out.lo.max(Bound::Finite(s));
            }
            if a.hi < Bound::Finite(s) {
                out.hi = out.hi.min(Bound::Finite(-s));
            }
        }
    }
    out
}

/// Sound enclosure of the values `e` can take under the current domains.
/// Variables are treated independently, so `X - X` is not simplified.
pub fn eval_bounds(e: &Expr, store: &Store) -> (Bound, Bound) {
    let iv = fwd(e, store);
    (iv.lo, iv.hi)
}

/// Narrows the subterms of `e` so that `e` may take a value in `target`.
fn backward(e: &Expr, target: Iv, store: &mut Store) -> Filter<()> {
    let t = target.meet(fwd(e, store));
    if t.is_empty() {
        return Err(Interrupt::Fail);
    }
    match e {
        Expr::Const(_) => Ok(()),
        Expr::Var(v) => {
            store.set_min(*v, t.lo)?;
            store.set_max(*v, t.hi)?;
            Ok(())
        }
        Expr::Add(a, b) => {
            backward(a, t.sub(fwd(b, store)), store)?;
            backward(b, t.sub(fwd(a, store)), store)
        }
        Expr::Sub(a, b) => {
            backward(a, t.add(fwd(b, store)), store)?;
            backward(b, fwd(a, store).sub(t), store)
        }
        Expr::Mul(a, b) if a == b => {
            let a_iv = fwd(a, store);
            backward(a, sqrt_range(t, a_iv), store)
        }
        Expr::Mul(a, b) => {
            backward(a, t.div(fwd(b, store)), store)?;
            backward(b, t.div(fwd(a, store)), store)
        }
        Expr::Neg(a) => backward(a, t.neg(), store),
    }
}

// ---- linear normal form ----------------------------------------------------

/// `sum(coef * var) + constant`, with merged, nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linear {
    pub terms: Vec<(VarId, i64)>,
    pub constant: i64,
}

fn lin_rec(e: &Expr, scale: i128, acc: &mut BTreeMap<VarId, i128>, c: &mut i128) -> Option<()> {
    match e {
        Expr::Const(k) => *c = c.checked_add(scale.checked_mul(*k as i128)?)?,
        Expr::Var(v) => {
            let slot = acc.entry(*v).or_insert(0);
            *slot = slot.checked_add(scale)?;
        }
        Expr::Add(a, b) => {
            lin_rec(a, scale, acc, c)?;
            lin_rec(b, scale, acc, c)?;
        }
        Expr::Sub(a, b) => {
            lin_rec(a, scale, acc, c)?;
            lin_rec(b, -scale, acc, c)?;
        }
        Expr::Neg(a) => lin_rec(a, -scale, acc, c)?,
        Expr::Mul(a, b) => {
            if a.is_ground() {
                let k = a.eval(&|_| 0);
                lin_rec(b, scale.checked_mul(k)?, acc, c)?;
            } else if b.is_ground() {
                let k = b.eval(&|_| 0);
                lin_rec(a, scale.checked_mul(k)?, acc, c)?;
            } else {
                return None;
            }
        }
    }
    Some(())
}

/// Linear normal form of `e`, or `None` for non-linear expressions and
/// coefficients outside the `i64` range.
pub fn linearize(e: &Expr) -> Option<Linear> {
    let mut acc = BTreeMap::new();
    let mut c = 0i128;
    lin_rec(e, 1, &mut acc, &mut c)?;
    let mut terms = Vec::new();
    for (v, k) in acc {
        if k != 0 {
            terms.push((v, i64::try_from(k).ok()?));
        }
    }
    Some(Linear { terms, constant: i64::try_from(c).ok()? })
}

// ---- propagators -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LinKind {
    /// `sum + c <= 0`
    Le,
    /// `sum + c == 0`
    Eq,
    /// `sum + c != 0`
    Ne,
}

#[derive(Debug)]
struct LinearProp {
    terms: Vec<(VarId, i64)>,
    constant: i128,
    kind: LinKind,
}

fn term_iv(store: &Store, v: VarId, a: i64) -> Iv {
    Iv::of(store.dom(v)).mul(Iv::point(a))
}

/// Sum of finite parts plus count of infinite contributions.
#[derive(Default)]
struct Acc {
    finite: i128,
    inf: usize,
}

impl LinearProp {
    /// Narrows every term so that `sum + c <= 0` stays satisfiable.
    fn upper(&self, store: &mut Store, sign: i64) -> Filter<()> {
        let mut acc = Acc::default();
        let mins: Vec<Bound> = self
            .terms
            .iter()
            .map(|&(v, a)| {
                let m = term_iv(store, v, a * sign).lo;
                match m {
                    Bound::Finite(x) => acc.finite += x as i128,
                    _ => acc.inf += 1,
                }
                m
            })
            .collect();
        let c = self.constant * sign as i128;
        for (i, &(v, a)) in self.terms.iter().enumerate() {
            let rest = match mins[i] {
                Bound::Finite(x) if acc.inf == 0 => acc.finite - x as i128,
                Bound::NegInf if acc.inf == 1 => acc.finite,
                _ => continue,
            };
            let u = -c - rest;
            let a = a as i128 * sign as i128;
            if a > 0 {
                store.set_max(v, Bound::from_i128(floor_div(u, a)))?;
            } else {
                store.set_min(v, Bound::from_i128(ceil_div(u, a)))?;
            }
        }
        Ok(())
    }

    fn sum_iv(&self, store: &Store) -> Iv {
        self.terms
            .iter()
            .fold(Iv::point(0), |acc, &(v, a)| acc.add(term_iv(store, v, a)))
            .add(Iv::new(Bound::from_i128(self.constant), Bound::from_i128(self.constant)))
    }
}

impl Propagator for LinearProp {
    fn propagate(&self, store: &mut Store, _env: &mut Env) -> Filter {
        match self.kind {
            LinKind::Le => {
                self.upper(store, 1)?;
                let s = self.sum_iv(store);
                Ok(if s.hi <= Bound::Finite(0) { Status::Exit } else { Status::Suspend })
            }
            LinKind::Eq => {
                self.upper(store, 1)?;
                self.upper(store, -1)?;
                let fixed = self.terms.iter().all(|&(v, _)| store.is_fixed(v));
                Ok(if fixed { Status::Exit } else { Status::Suspend })
            }
            LinKind::Ne => {
                let s = self.sum_iv(store);
                if !s.contains(0) {
                    return Ok(Status::Exit);
                }
                let open: Vec<usize> = (0..self.terms.len()).filter(|&i| !store.is_fixed(self.terms[i].0)).collect();
                match open.as_slice() {
                    [] => Err(Interrupt::Fail),
                    [i] => {
                        let (v, a) = self.terms[*i];
                        let rest: i128 = self
                            .terms
                            .iter()
                            .filter(|t| t.0 != v)
                            .map(|&(u, b)| store.value(u).unwrap() as i128 * b as i128)
                            .sum::<i128>()
                            + self.constant;
                        if (-rest) % a as i128 == 0 {
                            if let Ok(x) = i64::try_from(-rest / a as i128) {
                                store.remove_value(v, x)?;
                            }
                        }
                        Ok(Status::Exit)
                    }
                    _ => Ok(Status::Suspend),
                }
            }
        }
    }
}

/// Projection propagator for `e op 0` over a non-linear `e`.
#[derive(Debug)]
struct Hc4 {
    expr: Expr,
    op: RelOp,
}

impl Propagator for Hc4 {
    fn propagate(&self, store: &mut Store, _env: &mut Env) -> Filter {
        let zero = Bound::Finite(0);
        let target = match self.op {
            RelOp::Eq => Iv::point(0),
            RelOp::Le => Iv::new(Bound::NegInf, zero),
            RelOp::Lt => Iv::new(Bound::NegInf, Bound::Finite(-1)),
            RelOp::Ge => Iv::new(zero, Bound::PosInf),
            RelOp::Gt => Iv::new(Bound::Finite(1), Bound::PosInf),
            RelOp::Ne => {
                let s = fwd(&self.expr, store);
                if !s.contains(0) {
                    return Ok(Status::Exit);
                }
                if s == Iv::point(0) {
                    return Err(Interrupt::Fail);
                }
                return Ok(Status::Suspend);
            }
        };
        backward(&self.expr, target, store)?;
        Ok(if fwd(&self.expr, store).is_subset(target) { Status::Exit } else { Status::Suspend })
    }
}

/// Domain-consistent `x = y`.
#[derive(Debug)]
struct DomEq {
    x: VarId,
    y: VarId,
}

impl Propagator for DomEq {
    fn propagate(&self, store: &mut Store, _env: &mut Env) -> Filter {
        let d = store.dom(self.x).intersect(store.dom(self.y));
        store.intersect(self.x, &d)?;
        store.intersect(self.y, &d)?;
        Ok(if store.is_fixed(self.x) { Status::Exit } else { Status::Suspend })
    }
}

/// Domain-consistent `x = y + 1`.
#[derive(Debug)]
struct Incr {
    x: VarId,
    y: VarId,
}

impl Propagator for Incr {
    fn propagate(&self, store: &mut Store, _env: &mut Env) -> Filter {
        let dy = store.dom(self.y).shift(1);
        store.intersect(self.x, &dy)?;
        let dx = store.dom(self.x).shift(-1);
        store.intersect(self.y, &dx)?;
        Ok(if store.is_fixed(self.x) { Status::Exit } else { Status::Suspend })
    }
}

// ---- posting -----------------------------------------------------------------

/// Values `x` with `a*x + c op 0`.
fn single_var_domain(a: i64, c: i64, op: RelOp) -> IntDomain {
    let (a, c) = (a as i128, c as i128);
    // a*x op -c
    let t = -c;
    let (op, a, t) = if a < 0 { (flip(op), -a, -t) } else { (op, a, t) };
    let at = |v: i128| Bound::from_i128(v);
    match op {
        RelOp::Eq | RelOp::Ne => {
            let exact = if t % a == 0 { i64::try_from(t / a).ok() } else { None };
            let eq = exact.map_or_else(IntDomain::empty, IntDomain::singleton);
            if op == RelOp::Eq {
                eq
            } else {
                eq.complement()
            }
        }
        RelOp::Le => IntDomain::range(Bound::NegInf, at(floor_div(t, a))),
        RelOp::Lt => IntDomain::range(Bound::NegInf, at(ceil_div(t, a) - 1)),
        RelOp::Ge => IntDomain::range(at(ceil_div(t, a)), Bound::PosInf),
        RelOp::Gt => IntDomain::range(at(floor_div(t, a) + 1), Bound::PosInf),
    }
}

/// Mirror of `op` under swapping the operands.
fn flip(op: RelOp) -> RelOp {
    match op {
        RelOp::Lt => RelOp::Gt,
        RelOp::Gt => RelOp::Lt,
        RelOp::Le => RelOp::Ge,
        RelOp::Ge => RelOp::Le,
        o => o,
    }
}

pub(crate) fn add_in_range(store: &mut Store, v: VarId, r: &IntDomain) -> Filter<()> {
    store.intersect(v, r).map(|_| ())
}

pub(crate) fn add_rel(store: &mut Store, lhs: &Expr, op: RelOp, rhs: &Expr, env: &mut Env) -> Filter<()> {
    let diff = lhs.clone() - rhs.clone();
    let Some(lin) = linearize(&diff) else {
        let watch: Vec<(VarId, Wake)> = vars_of(&diff).into_iter().map(|v| (v, Wake::Bounds)).collect();
        return store.run_and_register(Arc::new(Hc4 { expr: diff, op }), &watch, env);
    };
    match lin.terms.as_slice() {
        [] => {
            if op.holds(lin.constant as i128, 0) {
                Ok(())
            } else {
                Err(Interrupt::Fail)
            }
        }
        &[(v, a)] => add_in_range(store, v, &single_var_domain(a, lin.constant, op)),
        &[(x, 1), (y, -1)] | &[(x, -1), (y, 1)] if lin.constant == 0 && op == RelOp::Eq => {
            store.run_and_register(Arc::new(DomEq { x, y }), &[(x, Wake::Any), (y, Wake::Any)], env)
        }
        _ => {
            let c = lin.constant as i128;
            let (terms, constant, kind) = match op {
                RelOp::Le => (lin.terms, c, LinKind::Le),
                RelOp::Lt => (lin.terms, c + 1, LinKind::Le),
                RelOp::Ge => (negated(lin.terms), -c, LinKind::Le),
                RelOp::Gt => (negated(lin.terms), -c + 1, LinKind::Le),
                RelOp::Eq => (lin.terms, c, LinKind::Eq),
                RelOp::Ne => (lin.terms, c, LinKind::Ne),
            };
            let g = terms.iter().fold(0i128, |g, &(_, a)| gcd(g, a.unsigned_abs() as i128));
            let constant = match kind {
                LinKind::Le => -floor_div(-constant, g),
                _ if constant % g != 0 => return if kind == LinKind::Eq { Err(Interrupt::Fail) } else { Ok(()) },
                _ => constant / g,
            };
            let terms: Vec<(VarId, i64)> = terms.into_iter().map(|(v, a)| (v, (a as i128 / g) as i64)).collect();
            let wake = if kind == LinKind::Ne { Wake::Fixed } else { Wake::Bounds };
            let watch: Vec<(VarId, Wake)> = terms.iter().map(|&(v, _)| (v, wake)).collect();
            store.run_and_register(Arc::new(LinearProp { terms, constant, kind }), &watch, env)
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn negated(terms: Vec<(VarId, i64)>) -> Vec<(VarId, i64)> {
    terms.into_iter().map(|(v, a)| (v, -a)).collect()
}

fn vars_of(e: &Expr) -> Vec<VarId> {
    let mut out = Vec::new();
    e.collect_vars(&mut out);
    out.sort();
    out.dedup();
    out
}

pub(crate) fn add_incr(store: &mut Store, x: VarId, y: VarId, env: &mut Env) -> Filter<()> {
    if x == y {
        return Err(Interrupt::Fail);
    }
    store.run_and_register(Arc::new(Incr { x, y }), &[(x, Wake::Any), (y, Wake::Any)], env)
}

pub(crate) fn sum_expr(items: &[Expr]) -> Expr {
    let mut it = items.iter().cloned();
    let first = it.next().unwrap_or(Expr::Const(0));
    it.fold(first, |acc, e| acc + e)
}

/// Posts `lhs op rhs`.
pub fn post_rel(store: &mut Store, lhs: Expr, op: RelOp, rhs: Expr, env: &mut Env) -> Result<Status, SolveError> {
    store.post(&crate::ctr::Ctr::Rel(lhs, op, rhs), env)
}

/// Posts `x = y + 1` with domain consistency.
pub fn post_incr(store: &mut Store, x: VarId, y: VarId, env: &mut Env) -> Result<Status, SolveError> {
    store.post(&crate::ctr::Ctr::Incr(x, y), env)
}

/// Posts `sum(items) op total`.
pub fn post_sum(
    store: &mut Store,
    items: Vec<Expr>,
    op: RelOp,
    total: Expr,
    env: &mut Env,
) -> Result<Status, SolveError> {
    if items.is_empty() {
        return Err(SolveError::InvalidArgument("sum over an empty list".into()));
    }
    store.post(&crate::ctr::Ctr::Sum(items, op, total), env)
}

pub fn post_in_range(store: &mut Store, v: VarId, r: IntDomain, env: &mut Env) -> Result<Status, SolveError> {
    store.post(&crate::ctr::Ctr::InRange(v, r), env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn var(s: &mut Store, lo: i64, hi: i64) -> VarId {
        s.new_var(IntDomain::range(lo, hi)).unwrap()
    }

    #[test]
    fn bounds_of_product_and_difference() {
        let mut s = Store::new();
        let j0 = s.new_var(IntDomain::singleton(2)).unwrap();
        let i0 = var(&mut s, 5, 16);
        let e = Expr::Var(j0) * Expr::Var(i0);
        assert_eq!(eval_bounds(&e, &s), (Bound::Finite(10), Bound::Finite(32)));
        let x = var(&mut s, 1, 3);
        assert_eq!(eval_bounds(&(Expr::Var(x) - Expr::Var(x)), &s), (Bound::Finite(-2), Bound::Finite(2)));
        assert_eq!(eval_bounds(&Expr::Const(7), &s), (Bound::Finite(7), Bound::Finite(7)));
        let u = s.new_var(IntDomain::full()).unwrap();
        assert_eq!(eval_bounds(&(Expr::Var(u) * Expr::Const(0)), &s), (Bound::Finite(0), Bound::Finite(0)));
    }

    #[test]
    fn relop_negation() {
        assert_eq!(RelOp::Le.negate(), RelOp::Gt);
        assert_eq!(RelOp::Eq.negate(), RelOp::Ne);
        for op in RelOp::ALL {
            assert_eq!(op.negate().negate(), op);
        }
    }

    #[test]
    fn linear_le() {
        let mut s = Store::new();
        let mut env = Env::default();
        let a = var(&mut s, 1, 10);
        let b = var(&mut s, 1, 10);
        post_rel(&mut s, Expr::Var(a) + 7, RelOp::Le, Expr::Var(b), &mut env).unwrap();
        assert_eq!(s.dom(a), &IntDomain::range(1, 3));
        assert_eq!(s.dom(b), &IntDomain::range(8, 10));
    }

    #[test]
    fn single_variable_is_exact() {
        let mut s = Store::new();
        let mut env = Env::default();
        let x = var(&mut s, 1, 10);
        assert_eq!(post_rel(&mut s, Expr::Var(x), RelOp::Ne, Expr::Const(5), &mut env), Ok(Status::Exit));
        assert_eq!(s.dom(x), &IntDomain::from_values([1, 2, 3, 4, 6, 7, 8, 9, 10]));
        assert_eq!(post_rel(&mut s, Expr::Var(x), RelOp::Eq, Expr::Const(6), &mut env), Ok(Status::Exit));
        assert_eq!(s.value(x), Some(6));
        let y = var(&mut s, 0, 20);
        post_rel(&mut s, Expr::Var(y) * 3, RelOp::Eq, Expr::Const(7), &mut env).unwrap();
        assert!(s.is_failed());
    }

    #[test]
    fn incr_examples() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = s.new_var(IntDomain::full()).unwrap();
        let y = s.new_var(IntDomain::from_values([1, 5])).unwrap();
        post_incr(&mut s, x, y, &mut env).unwrap();
        assert_eq!(s.dom(x), &IntDomain::from_values([2, 6]));

        let mut s = Store::new();
        let x = var(&mut s, 3, 4);
        let y = var(&mut s, 1, 9);
        post_incr(&mut s, x, y, &mut env).unwrap();
        assert_eq!(s.dom(y), &IntDomain::range(2, 3));

        let mut s = Store::new();
        let x = var(&mut s, 1, 1);
        let y = var(&mut s, 1, 1);
        assert_eq!(post_incr(&mut s, x, y, &mut env), Ok(Status::Fail));
    }

    #[test]
    fn sum_examples() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, 1, 9);
        let y = s.new_var(IntDomain::full()).unwrap();
        post_sum(&mut s, vec![x.into(), y.into()], RelOp::Eq, 10.into(), &mut env).unwrap();
        assert_eq!(s.dom(y), &IntDomain::range(1, 9));

        let mut s = Store::new();
        let x = s.new_var(IntDomain::full()).unwrap();
        post_sum(&mut s, vec![x.into()], RelOp::Eq, 5.into(), &mut env).unwrap();
        assert_eq!(s.value(x), Some(5));

        let mut s = Store::new();
        let v: Vec<Expr> = (0..3).map(|_| var(&mut s, 0, 2).into()).collect();
        assert_eq!(post_sum(&mut s, v, RelOp::Eq, 7.into(), &mut env), Ok(Status::Fail));
    }

    #[test]
    fn in_range_examples() {
        let mut env = Env::default();
        let mut s = Store::new();
        let y = s.new_var(IntDomain::full()).unwrap();
        post_in_range(&mut s, y, IntDomain::range(62, 77), &mut env).unwrap();
        assert_eq!(s.dom(y), &IntDomain::range(62, 77));
        let x = var(&mut s, 1, 10);
        post_in_range(&mut s, x, IntDomain::range(5, 20), &mut env).unwrap();
        assert_eq!(s.dom(x), &IntDomain::range(5, 10));
        assert_eq!(post_in_range(&mut s, x, IntDomain::empty(), &mut env), Ok(Status::Fail));
    }

    #[test]
    fn product_projection() {
        let mut env = Env::default();
        let mut s = Store::new();
        let j2 = s.new_var(IntDomain::full()).unwrap();
        let j0 = s.new_var(IntDomain::singleton(2)).unwrap();
        let i0 = s.new_var(IntDomain::range(Bound::NegInf, 16)).unwrap();
        post_rel(&mut s, j2.into(), RelOp::Gt, 8.into(), &mut env).unwrap();
        post_rel(&mut s, j2.into(), RelOp::Eq, Expr::Var(j0) * Expr::Var(i0), &mut env).unwrap();
        assert_eq!(s.dom(i0), &IntDomain::range(5, 16));
        assert_eq!(s.dom(j2), &IntDomain::range(10, 32));
    }

    #[test]
    fn square_below_bound() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, 1, 9);
        post_rel(&mut s, Expr::Var(x) * Expr::Var(x), RelOp::Lt, 9.into(), &mut env).unwrap();
        assert_eq!(s.dom(x), &IntDomain::range(1, 2));
    }

    #[test]
    fn interval_division() {
        let iv = |a: i64, b: i64| Iv::new(Bound::Finite(a), Bound::Finite(b));
        assert_eq!(iv(9, 32).div(iv(2, 2)), iv(5, 16));
        assert_eq!(iv(-4, 4).div(iv(-1, 1)), FULL);
        assert_eq!(iv(6, 6).div(iv(-2, 3)), iv(-6, 6));
        assert!(iv(1, 1).div(iv(0, 0)).is_empty());
    }

    fn enumerate_rel(op: RelOp, f: impl Fn(i64, i64) -> i128, lo: i64, hi: i64) -> (IntDomain, IntDomain) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for x in lo..=hi {
            for y in lo..=hi {
                if op.holds(f(x, y), 0) {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        (IntDomain::from_values(xs), IntDomain::from_values(ys))
    }

    proptest! {
        #[test]
        fn propagation_is_sound(a in -3i64..=3, b in -3i64..=3, c in -6i64..=6, op_i in 0usize..6,
                                lo in -4i64..=0, hi in 0i64..=4, nonlinear in any::<bool>()) {
            let op = RelOp::ALL[op_i];
            let mut s = Store::new();
            let mut env = Env::default();
            let x = var(&mut s, lo, hi);
            let y = var(&mut s, lo, hi);
            let e = if nonlinear {
                Expr::Var(x) * Expr::Var(y) + Expr::Var(x) * a + c
            } else {
                Expr::Var(x) * a + Expr::Var(y) * b + c
            };
            let f = |vx: i64, vy: i64| e.eval(&|v| if v == x { vx } else { vy });
            let (px, py) = enumerate_rel(op, f, lo, hi);
            let st = post_rel(&mut s, e.clone(), op, 0.into(), &mut env).unwrap();
            if px.is_empty() {
                // bounds reasoning need not detect unsatisfiable products
                prop_assert!(nonlinear || st == Status::Fail);
            } else {
                prop_assert!(st != Status::Fail);
                prop_assert!(px.is_subset(s.dom(x)));
                prop_assert!(py.is_subset(s.dom(y)));
                // bounds of linear relations are supported within the hulls
                if !nonlinear && op != RelOp::Ne {
                    let (hx, hy) = (Iv::of(s.dom(x)), Iv::of(s.dom(y)));
                    for (v, b) in [(x, hx.lo), (x, hx.hi), (y, hy.lo), (y, hy.hi)] {
                        let b = b.finite().unwrap();
                        let other = if v == x { hy } else { hx };
                        let (olo, ohi) = (other.lo.finite().unwrap(), other.hi.finite().unwrap());
                        let ok = (olo..=ohi).any(|o| {
                            let (vx, vy) = if v == x { (b, o) } else { (o, b) };
                            op.holds(f(vx, vy), 0)
                        });
                        prop_assert!(ok, "unsupported bound {} of {:?}", b, v);
                    }
                }
            }
        }

        #[test]
        fn eval_bounds_monotone(lo in -5i64..=5, w in 0i64..=5, cut in 0i64..=5) {
            let mut s = Store::new();
            let x = var(&mut s, lo, lo + w);
            let y = var(&mut s, -3, 3);
            let e = Expr::Var(x) * Expr::Var(y) - Expr::Var(x);
            let before = eval_bounds(&e, &s);
            s.set_max(x, Bound::Finite(lo + w - cut.min(w))).unwrap();
            let after = eval_bounds(&e, &s);
            prop_assert!(before.0 <= after.0 && after.1 <= before.1);
        }
    }
}
