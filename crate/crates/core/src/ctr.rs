//! Constraint AST.

use crate::arith::{Expr, RelOp};
use crate::domain::IntDomain;
use crate::engine::VarId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GlobalKind {
    Um3,
    Domctr,
    Elemctr,
    Lexctr,
    Mulctr,
    Disjctr,
}

impl GlobalKind {
    pub const ALL: [GlobalKind; 6] = [
        GlobalKind::Um3,
        GlobalKind::Domctr,
        GlobalKind::Elemctr,
        GlobalKind::Lexctr,
        GlobalKind::Mulctr,
        GlobalKind::Disjctr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GlobalKind::Um3 => "um3",
            GlobalKind::Domctr => "domctr",
            GlobalKind::Elemctr => "elemctr",
            GlobalKind::Lexctr => "lexctr",
            GlobalKind::Mulctr => "mulctr",
            GlobalKind::Disjctr => "disjctr",
        }
    }

    pub fn from_name(s: &str) -> Option<GlobalKind> {
        GlobalKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GlobalArg {
    Expr(Expr),
    List(Vec<Expr>),
}

impl GlobalArg {
    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            GlobalArg::Expr(e) => e.collect_vars(out),
            GlobalArg::List(l) => l.iter().for_each(|e| e.collect_vars(out)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalCall {
    pub kind: GlobalKind,
    pub args: Vec<GlobalArg>,
}

impl GlobalCall {
    pub fn new(kind: GlobalKind, args: Vec<GlobalArg>) -> GlobalCall {
        GlobalCall { kind, args }
    }

    /// Checks argument count and shape. Returns a description of the first
    /// mismatch.
    pub fn check(&self) -> Result<(), String> {
        use GlobalArg as A;
        let name = self.kind.name();
        let ok = match (self.kind, self.args.as_slice()) {
            (GlobalKind::Um3, [A::Expr(_), A::Expr(_), A::Expr(_)]) => true,
            (GlobalKind::Domctr, [A::Expr(_), A::List(l)]) => !l.is_empty(),
            (GlobalKind::Elemctr, [A::Expr(_), A::List(l), A::Expr(_)]) => !l.is_empty(),
            (GlobalKind::Lexctr, [A::List(a), A::List(b)]) => !a.is_empty() && a.len() == b.len(),
            (GlobalKind::Mulctr, [A::Expr(_), A::Expr(_), A::Expr(_), A::Expr(_)]) => true,
            (GlobalKind::Disjctr, [A::List(s), A::List(p), A::Expr(_)]) => s.len() >= 2 && s.len() == p.len(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("malformed arguments for {name}/{}", self.args.len()))
        }
    }

    /// The defining predicate, evaluated under a total assignment.
    pub fn holds(&self, val: &impl Fn(VarId) -> i64) -> bool {
        use GlobalArg as A;
        let ev = |e: &Expr| e.eval(val);
        let evl = |l: &[Expr]| l.iter().map(|e| e.eval(val)).collect::<Vec<i128>>();
        match (self.kind, self.args.as_slice()) {
            (GlobalKind::Um3, [A::Expr(x), A::Expr(y), A::Expr(z)]) => {
                let (x, y, z) = (ev(x), ev(y), ev(z));
                (x > y && y == z) || (y > z && x == z) || (z > x && x == y) || (x == y && y == z)
            }
            (GlobalKind::Domctr, [A::Expr(x), A::List(l)]) => {
                let x = ev(x);
                let l = evl(l);
                (1..=l.len() as i128).contains(&x)
                    && l.iter().enumerate().all(|(i, &b)| (b == 0 || b == 1) && ((b == 1) == (x == i as i128 + 1)))
            }
            (GlobalKind::Elemctr, [A::Expr(i), A::List(l), A::Expr(j)]) => {
                let i = ev(i);
                let l = evl(l);
                (1..=l.len() as i128).contains(&i) && l[(i - 1) as usize] == ev(j)
            }
            (GlobalKind::Lexctr, [A::List(a), A::List(b)]) => evl(a) < evl(b),
            (GlobalKind::Mulctr, [A::Expr(n), A::Expr(x), A::Expr(lo), A::Expr(hi)]) => {
                let (n, x) = (ev(n), ev(x));
                ev(lo) <= x && x <= ev(hi) && n > 0 && x % n == 0 && x / n >= 1
            }
            (GlobalKind::Disjctr, [A::List(s), A::List(p), A::Expr(h)]) => {
                let (s, p) = (evl(s), evl(p));
                let total: i128 = s.iter().chain(p.iter()).sum();
                total == ev(h)
                    && (0..s.len()).all(|i| (i + 1..s.len()).all(|j| s[i] + p[i] <= s[j] || s[j] + p[j] <= s[i]))
            }
            _ => false,
        }
    }
}

/// A constraint of the ITE language.
///
/// `Or` and `Not` are the reified connectives `#\/` and `#\`; the remaining
/// connectives are constructive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ctr {
    True,
    False,
    InRange(VarId, IntDomain),
    Rel(Expr, RelOp, Expr),
    Conj(Box<Ctr>, Box<Ctr>),
    Cn(Box<Ctr>),
    Cd(Box<Ctr>, Box<Ctr>),
    Cxd(Box<Ctr>, Box<Ctr>),
    Imp(Box<Ctr>, Box<Ctr>),
    Ite(Box<Ctr>, Box<Ctr>, Box<Ctr>),
    Or(Box<Ctr>, Box<Ctr>),
    Not(Box<Ctr>),
    /// `x = y + 1`, domain consistent.
    Incr(VarId, VarId),
    Sum(Vec<Expr>, RelOp, Expr),
    Global(GlobalCall),
}

impl Ctr {
    pub fn rel(a: impl Into<Expr>, op: RelOp, b: impl Into<Expr>) -> Ctr {
        Ctr::Rel(a.into(), op, b.into())
    }

    pub fn eq(a: impl Into<Expr>, b: impl Into<Expr>) -> Ctr {
        Ctr::rel(a, RelOp::Eq, b)
    }

    pub fn conj(a: Ctr, b: Ctr) -> Ctr {
        Ctr::Conj(Box::new(a), Box::new(b))
    }

    /// Right-nested conjunction; `True` when empty.
    pub fn conj_all(items: impl IntoIterator<Item = Ctr>) -> Ctr {
        let mut v: Vec<Ctr> = items.into_iter().collect();
        let Some(mut acc) = v.pop() else {
            return Ctr::True;
        };
        while let Some(c) = v.pop() {
            acc = Ctr::conj(c, acc);
        }
        acc
    }

    pub fn cn(a: Ctr) -> Ctr {
        Ctr::Cn(Box::new(a))
    }

    pub fn cd(a: Ctr, b: Ctr) -> Ctr {
        Ctr::Cd(Box::new(a), Box::new(b))
    }

    pub fn cxd(a: Ctr, b: Ctr) -> Ctr {
        Ctr::Cxd(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Ctr, b: Ctr) -> Ctr {
        Ctr::Imp(Box::new(a), Box::new(b))
    }

    pub fn ite(c: Ctr, a: Ctr, b: Ctr) -> Ctr {
        Ctr::Ite(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn or(a: Ctr, b: Ctr) -> Ctr {
        Ctr::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Ctr) -> Ctr {
        Ctr::Not(Box::new(a))
    }

    pub fn global(kind: GlobalKind, args: Vec<GlobalArg>) -> Ctr {
        Ctr::Global(GlobalCall::new(kind, args))
    }

    /// Appends variables in occurrence order, with repetitions.
    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Ctr::True | Ctr::False => {}
            Ctr::InRange(v, _) => out.push(*v),
            Ctr::Rel(a, _, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Ctr::Conj(a, b) | Ctr::Cd(a, b) | Ctr::Cxd(a, b) | Ctr::Imp(a, b) | Ctr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Ctr::Cn(a) | Ctr::Not(a) => a.collect_vars(out),
            Ctr::Ite(c, a, b) => {
                c.collect_vars(out);
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Ctr::Incr(x, y) => {
                out.push(*x);
                out.push(*y);
            }
            Ctr::Sum(items, _, t) => {
                items.iter().for_each(|e| e.collect_vars(out));
                t.collect_vars(out);
            }
            Ctr::Global(g) => g.args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Distinct variables, in first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut all = Vec::new();
        self.collect_vars(&mut all);
        let mut seen = std::collections::HashSet::new();
        all.retain(|v| seen.insert(*v));
        all
    }

    pub fn is_ground(&self) -> bool {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.is_empty()
    }

    /// Truth value under a total assignment of the variables.
    pub fn eval(&self, val: &impl Fn(VarId) -> i64) -> bool {
        match self {
            Ctr::True => true,
            Ctr::False => false,
            Ctr::InRange(v, r) => r.contains(val(*v)),
            Ctr::Rel(a, op, b) => op.holds(a.eval(val), b.eval(val)),
            Ctr::Conj(a, b) => a.eval(val) && b.eval(val),
            Ctr::Cn(a) | Ctr::Not(a) => !a.eval(val),
            Ctr::Cd(a, b) | Ctr::Or(a, b) => a.eval(val) || b.eval(val),
            Ctr::Cxd(a, b) => a.eval(val) != b.eval(val),
            Ctr::Imp(a, b) => !a.eval(val) || b.eval(val),
            Ctr::Ite(c, a, b) => {
                if c.eval(val) {
                    a.eval(val)
                } else {
                    b.eval(val)
                }
            }
            Ctr::Incr(x, y) => val(*x) as i128 == val(*y) as i128 + 1,
            Ctr::Sum(items, op, t) => op.holds(items.iter().map(|e| e.eval(val)).sum(), t.eval(val)),
            Ctr::Global(g) => g.holds(val),
        }
    }

    /// Truth value of a variable-free constraint.
    pub fn eval_ground(&self) -> bool {
        self.eval(&|v| panic!("variable {v:?} in a ground constraint"))
    }

    /// Nesting depth of the syntax tree.
    pub fn depth(&self) -> usize {
        match self {
            Ctr::Conj(a, b) | Ctr::Cd(a, b) | Ctr::Cxd(a, b) | Ctr::Imp(a, b) | Ctr::Or(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Ctr::Cn(a) | Ctr::Not(a) => 1 + a.depth(),
            Ctr::Ite(c, a, b) => 1 + c.depth().max(a.depth()).max(b.depth()),
            _ => 1,
        }
    }

    /// Deepest nesting of constructive binary operators.
    pub fn disjunctive_depth(&self) -> usize {
        match self {
            Ctr::Cd(a, b) | Ctr::Cxd(a, b) | Ctr::Imp(a, b) => 1 + a.disjunctive_depth().max(b.disjunctive_depth()),
            Ctr::Ite(c, a, b) => 1 + c.disjunctive_depth().max(a.disjunctive_depth()).max(b.disjunctive_depth()),
            Ctr::Conj(a, b) | Ctr::Or(a, b) => a.disjunctive_depth().max(b.disjunctive_depth()),
            Ctr::Cn(a) | Ctr::Not(a) => a.disjunctive_depth(),
            _ => 0,
        }
    }

    /// Conjuncts of a conjunction tree, left to right.
    pub fn conjuncts(&self) -> Vec<&Ctr> {
        match self {
            Ctr::Conj(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            c => vec![c],
        }
    }
}

impl From<bool> for Ctr {
    fn from(b: bool) -> Self {
        if b {
            Ctr::True
        } else {
            Ctr::False
        }
    }
}
