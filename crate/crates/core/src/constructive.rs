//! Constructive logical operators.
//!
//! Every binary connective is filtered by the same two-branch engine: each
//! branch is propagated speculatively with a budget of `k - 1`, then the
//! variables of both branches are narrowed to the union of what the two
//! speculations left. A refuted branch commits the store to the other one.
//! The connectives differ only in how the branches are built:
//!
//! | operator        | branch 1      | branch 2       |
//! |-----------------|---------------|----------------|
//! | `cd(A, B)`      | `A`           | `B`            |
//! | `cxd(A, B)`     | `A, cn(B)`    | `cn(A), B`     |
//! | `A => B`        | `cn(A)`       | `B`            |
//! | `ite(C, A, B)`  | `C, A`        | `cn(C), B`     |
//!
//! Negation is compiled away before posting by [`negate`].

use std::sync::Arc;

use crate::arith::{self, Expr, RelOp};
use crate::ctr::Ctr;
use crate::domain::IntDomain;
use crate::engine::{Env, Filter, Interrupt, KLimit, PropResult, Propagator, SolveError, Status, Store, VarId, Wake};
use crate::globals;
use crate::reify::{self, Entailment};

/// Domains of a branch after speculation, `None` if it failed.
type Branch = Option<Vec<IntDomain>>;

/// Negation normal form of `cn(c)`. The result contains no `Cn` node.
pub fn negate(c: &Ctr) -> Result<Ctr, SolveError> {
    if !matches!(c, Ctr::True | Ctr::False) && c.is_ground() {
        return Ok((!c.eval_ground()).into());
    }
    Ok(match c {
        Ctr::True => Ctr::False,
        Ctr::False => Ctr::True,
        Ctr::InRange(v, r) => Ctr::InRange(*v, r.complement()),
        Ctr::Rel(a, op, b) => Ctr::Rel(a.clone(), op.negate(), b.clone()),
        Ctr::Conj(a, b) => Ctr::cd(negate(a)?, negate(b)?),
        Ctr::Cd(a, b) | Ctr::Or(a, b) => Ctr::conj(negate(a)?, negate(b)?),
        Ctr::Cxd(a, b) => Ctr::cd(Ctr::conj(nnf(a)?, nnf(b)?), Ctr::conj(negate(a)?, negate(b)?)),
        Ctr::Imp(a, b) => Ctr::conj(nnf(a)?, negate(b)?),
        Ctr::Ite(g, a, b) => Ctr::conj(Ctr::cd(negate(g)?, negate(a)?), Ctr::cd(nnf(g)?, negate(b)?)),
        Ctr::Cn(a) | Ctr::Not(a) => nnf(a)?,
        Ctr::Incr(x, y) => Ctr::Rel(Expr::Var(*x), RelOp::Ne, Expr::Var(*y) + 1),
        Ctr::Sum(items, op, t) => Ctr::Sum(items.clone(), op.negate(), t.clone()),
        Ctr::Global(g) => return Err(SolveError::NegatedGlobal(g.kind.name().to_string())),
    })
}

/// Rewrites every `cn` node of `c` away.
pub fn nnf(c: &Ctr) -> Result<Ctr, SolveError> {
    let b = |x: &Ctr| nnf(x).map(Box::new);
    Ok(match c {
        Ctr::Cn(a) => negate(a)?,
        Ctr::Conj(a, c) => Ctr::Conj(b(a)?, b(c)?),
        Ctr::Cd(a, c) => Ctr::Cd(b(a)?, b(c)?),
        Ctr::Cxd(a, c) => Ctr::Cxd(b(a)?, b(c)?),
        Ctr::Imp(a, c) => Ctr::Imp(b(a)?, b(c)?),
        Ctr::Or(a, c) => Ctr::Or(b(a)?, b(c)?),
        Ctr::Not(a) => Ctr::Not(b(a)?),
        Ctr::Ite(g, a, c) => Ctr::Ite(b(g)?, b(a)?, b(c)?),
        other => other.clone(),
    })
}

/// Posts `c` into the store without running the queue.
pub(crate) fn add(store: &mut Store, c: &Ctr, env: &mut Env) -> Filter<()> {
    match c {
        Ctr::True => Ok(()),
        Ctr::False => Err(Interrupt::Fail),
        Ctr::InRange(v, r) => arith::add_in_range(store, *v, r),
        Ctr::Rel(a, op, b) => arith::add_rel(store, a, *op, b, env),
        Ctr::Conj(a, b) => {
            add(store, a, env)?;
            add(store, b, env)
        }
        Ctr::Cn(a) => add(store, &negate(a)?, env),
        Ctr::Cd(..) | Ctr::Cxd(..) | Ctr::Imp(..) | Ctr::Ite(..) => {
            let (b1, b2) = branches(c, env)?;
            add_constructive(store, b1, b2, env)
        }
        Ctr::Or(..) | Ctr::Not(..) => reify::add_reified(store, c, env),
        Ctr::Incr(x, y) => arith::add_incr(store, *x, *y, env),
        Ctr::Sum(items, op, t) => arith::add_rel(store, &arith::sum_expr(items), *op, t, env),
        Ctr::Global(g) => {
            let enc = globals::expand(store, g)?;
            add(store, &enc, env)
        }
    }
}

/// The two speculative branches of a constructive connective.
fn branches(c: &Ctr, env: &Env) -> Result<(Ctr, Ctr), SolveError> {
    Ok(match c {
        Ctr::Cd(a, b) => (nnf(a)?, nnf(b)?),
        Ctr::Cxd(a, b) => (Ctr::conj(nnf(a)?, negate(b)?), Ctr::conj(negate(a)?, nnf(b)?)),
        Ctr::Imp(a, b) => {
            let second = if env.strengthen_imp { Ctr::conj(nnf(a)?, nnf(b)?) } else { nnf(b)? };
            (negate(a)?, second)
        }
        Ctr::Ite(g, a, b) => (Ctr::conj(nnf(g)?, nnf(a)?), Ctr::conj(negate(g)?, nnf(b)?)),
        _ => unreachable!("not a constructive connective"),
    })
}

fn add_constructive(store: &mut Store, b1: Ctr, b2: Ctr, env: &mut Env) -> Filter<()> {
    let b1 = globals::expand_all(store, &b1)?;
    let b2 = globals::expand_all(store, &b2)?;
    let mut vars = b1.vars();
    for v in b2.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let watch: Vec<(VarId, Wake)> = vars.iter().map(|&v| (v, Wake::Any)).collect();
    store.run_and_register(Arc::new(Constructive { b1, b2, vars }), &watch, env)
}

/// Truth value of `c` once all its variables are instantiated.
fn ground_value(c: &Ctr, store: &Store) -> Option<bool> {
    let mut vars = Vec::new();
    c.collect_vars(&mut vars);
    if vars.iter().all(|&v| store.is_fixed(v)) {
        Some(c.eval(&|v| store.value(v).expect("fixed")))
    } else {
        None
    }
}

/// Two-branch constructive filter with stratified speculation.
#[derive(Debug)]
struct Constructive {
    b1: Ctr,
    b2: Ctr,
    vars: Vec<VarId>,
}

impl Constructive {
    fn speculate_both(&self, store: &mut Store, env: &mut Env) -> Filter<(Branch, Branch)> {
        let k = env.k;
        env.k = k.decrement();
        let d1 = store.speculate_raw(&self.b1, &self.vars, env);
        let d2 = match d1 {
            Ok(_) => store.speculate_raw(&self.b2, &self.vars, env),
            Err(_) => Ok(None),
        };
        env.k = k;
        Ok((d1?, d2?))
    }
}

impl Propagator for Constructive {
    fn idempotent(&self) -> bool {
        true
    }

    fn propagate(&self, store: &mut Store, env: &mut Env) -> Filter {
        let g1 = ground_value(&self.b1, store);
        let g2 = ground_value(&self.b2, store);
        match (g1, g2) {
            (Some(true), _) | (_, Some(true)) => return Ok(Status::Exit),
            (Some(false), Some(false)) => return Err(Interrupt::Fail),
            (Some(false), None) => {
                add(store, &self.b2, env)?;
                return Ok(Status::Exit);
            }
            (None, Some(false)) => {
                add(store, &self.b1, env)?;
                return Ok(Status::Exit);
            }
            (None, None) => {}
        }
        if env.k.is_zero() {
            return Ok(Status::Suspend);
        }
        match self.speculate_both(store, env)? {
            (None, None) => Err(Interrupt::Fail),
            (None, Some(d)) => {
                self.narrow(store, &d)?;
                add(store, &self.b2, env)?;
                Ok(Status::Exit)
            }
            (Some(d), None) => {
                self.narrow(store, &d)?;
                add(store, &self.b1, env)?;
                Ok(Status::Exit)
            }
            (Some(d1), Some(d2)) => {
                for (i, &v) in self.vars.iter().enumerate() {
                    store.intersect(v, &d1[i].union(&d2[i]))?;
                }
                Ok(Status::Suspend)
            }
        }
    }
}

impl Constructive {
    fn narrow(&self, store: &mut Store, d: &[IntDomain]) -> Filter<()> {
        for (i, &v) in self.vars.iter().enumerate() {
            store.intersect(v, &d[i])?;
        }
        Ok(())
    }
}

/// Entailment by refutation: `Yes` when propagating `cn(c)` fails.
pub fn abs_entailed(c: &Ctr, store: &mut Store, env: &mut Env) -> Result<Entailment, SolveError> {
    let neg = negate(c)?;
    match store.speculate(&neg, &[], env)?.status {
        Status::Fail => Ok(Entailment::Yes),
        _ => Ok(Entailment::Unknown),
    }
}

fn filter(c: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    let vars = c.vars();
    let status = store.post(&c, env)?;
    let domains = vars
        .into_iter()
        .map(|v| (v, if status == Status::Fail { IntDomain::empty() } else { store.dom(v).clone() }))
        .collect();
    Ok(PropResult { domains, status })
}

/// Constructive disjunction with unbounded speculation. Mutates the store:
/// the filter stays posted while it suspends.
pub fn cd_filter_full(c1: Ctr, c2: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    let k = env.k;
    env.k = KLimit::Unbounded;
    let r = filter(Ctr::cd(c1, c2), store, env);
    env.k = k;
    r
}

/// Constructive disjunction under the budget `env.k`.
pub fn cd_filter_stratified(c1: Ctr, c2: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    filter(Ctr::cd(c1, c2), store, env)
}

pub fn cxd_filter(c1: Ctr, c2: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    filter(Ctr::cxd(c1, c2), store, env)
}

pub fn imp_filter(c1: Ctr, c2: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    filter(Ctr::imp(c1, c2), store, env)
}

pub fn ite_filter(c: Ctr, c1: Ctr, c2: Ctr, store: &mut Store, env: &mut Env) -> Result<PropResult, SolveError> {
    filter(Ctr::ite(c, c1, c2), store, env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Bound;

    fn var(s: &mut Store, lo: impl Into<Bound>, hi: impl Into<Bound>) -> VarId {
        s.new_var(IntDomain::range(lo, hi)).unwrap()
    }

    fn rel(a: impl Into<Expr>, op: RelOp, b: impl Into<Expr>) -> Ctr {
        Ctr::rel(a, op, b)
    }

    #[test]
    fn negation_rules() {
        let mut s = Store::new();
        let a = var(&mut s, 1, 10);
        let b = var(&mut s, 1, 10);
        let x = rel(Expr::Var(b) + 7, RelOp::Gt, a);
        assert_eq!(negate(&x).unwrap(), rel(Expr::Var(b) + 7, RelOp::Le, a));
        let conj = Ctr::conj(Ctr::eq(a, 1), Ctr::eq(b, 2));
        assert_eq!(negate(&conj).unwrap(), Ctr::cd(rel(a, RelOp::Ne, 1), rel(b, RelOp::Ne, 2)));
        assert_eq!(nnf(&Ctr::cn(Ctr::cn(x.clone()))).unwrap(), x);
        assert_eq!(negate(&Ctr::eq(3, 4)).unwrap(), Ctr::True);
        assert_eq!(
            negate(&Ctr::InRange(a, IntDomain::range(62, 77))).unwrap(),
            Ctr::InRange(
                a,
                IntDomain::from_intervals([
                    crate::domain::Interval::new(Bound::NegInf, 61),
                    crate::domain::Interval::new(78, Bound::PosInf)
                ])
            )
        );
        let g = Ctr::global(crate::ctr::GlobalKind::Um3, vec![crate::ctr::GlobalArg::Expr(a.into()); 3]);
        assert!(matches!(negate(&g), Err(SolveError::NegatedGlobal(_))));
    }

    #[test]
    fn example_two() {
        let mut s = Store::new();
        let mut env = Env::default();
        let y = var(&mut s, 62, 77);
        let x = s.new_var(IntDomain::full()).unwrap();
        let c = Ctr::cd(Ctr::cd(Ctr::eq(x, 6), Ctr::eq(x, 13)), Ctr::eq(x, y));
        s.post(&c, &mut env).unwrap();
        let expect = IntDomain::from_values([6, 13]).union(&IntDomain::range(62, 77));
        assert_eq!(s.dom(x), &expect);
    }

    #[test]
    fn example_three() {
        let mut s = Store::new();
        let mut env = Env::default();
        let a = var(&mut s, 1, 10);
        let b = var(&mut s, 1, 10);
        let c1 = Ctr::cd(
            Ctr::conj(rel(a, RelOp::Gt, 1), rel(b, RelOp::Lt, 9)),
            Ctr::conj(rel(a, RelOp::Gt, 2), rel(b, RelOp::Lt, 10)),
        );
        let c2 = Ctr::cd(rel(Expr::Var(a) + 7, RelOp::Le, b), Ctr::cn(rel(Expr::Var(b) + 7, RelOp::Gt, a)));
        s.post(&Ctr::conj(c1, c2), &mut env).unwrap();
        assert_eq!(s.dom(a), &IntDomain::range(8, 10));
        assert_eq!(s.dom(b), &IntDomain::range(1, 3));
    }

    #[test]
    fn example_five() {
        let mut s = Store::new();
        let mut env = Env::default();
        let v: Vec<VarId> = (0..3).map(|_| var(&mut s, 1, 5)).collect();
        let d = |x: VarId, y: VarId| Ctr::cd(rel(Expr::Var(x) - y, RelOp::Eq, 4), rel(Expr::Var(y) - x, RelOp::Eq, 4));
        s.post(&Ctr::conj(d(v[0], v[1]), d(v[0], v[2])), &mut env).unwrap();
        for &x in &v {
            assert_eq!(s.dom(x), &IntDomain::from_values([1, 5]));
        }
    }

    #[test]
    fn example_six() {
        let mut s = Store::new();
        let mut env = Env::default();
        let i0 = s.new_var(IntDomain::full()).unwrap();
        let j2 = s.new_var(IntDomain::full()).unwrap();
        let j0 = s.new_var(IntDomain::full()).unwrap();
        let c = Ctr::conj_all([
            Ctr::ite(rel(i0, RelOp::Le, 16), Ctr::eq(j2, Expr::Var(j0) * i0), Ctr::eq(j2, j0)),
            rel(j2, RelOp::Gt, 8),
            Ctr::eq(j0, 2),
        ]);
        s.post(&c, &mut env).unwrap();
        assert_eq!(s.value(j0), Some(2));
        assert_eq!(s.dom(i0), &IntDomain::range(5, 16));
        assert_eq!(s.dom(j2), &IntDomain::range(10, 32));
    }

    fn example_seven(k: KLimit) -> (IntDomain, IntDomain) {
        let mut s = Store::new();
        let mut env = Env::new(k);
        let x = s.new_var(IntDomain::full()).unwrap();
        let y = s.new_var(IntDomain::full()).unwrap();
        let c = Ctr::conj(
            Ctr::cd(Ctr::cd(Ctr::eq(x, 0), Ctr::cd(Ctr::eq(y, 4), Ctr::eq(y, 5))), Ctr::eq(x, 9)),
            Ctr::cd(Ctr::cd(Ctr::eq(y, 9), Ctr::eq(y, 6)), Ctr::cd(Ctr::eq(y, 2), Ctr::eq(y, 7))),
        );
        s.post(&c, &mut env).unwrap();
        (s.dom(x).clone(), s.dom(y).clone())
    }

    #[test]
    fn example_seven_strata() {
        let x3 = IntDomain::from_values([0, 9]);
        let y3 = IntDomain::from_values([2, 6, 7, 9]);
        assert_eq!(example_seven(KLimit::Finite(3)), (x3.clone(), y3.clone()));
        assert_eq!(example_seven(KLimit::Finite(2)), (IntDomain::full(), y3.clone()));
        assert_eq!(example_seven(KLimit::Finite(1)), (IntDomain::full(), IntDomain::full()));
        assert_eq!(example_seven(KLimit::Unbounded), (x3, y3));
    }

    #[test]
    fn abs_entailment() {
        let mut s = Store::new();
        let mut env = Env::default();
        let x = var(&mut s, 1, 10);
        assert_eq!(abs_entailed(&rel(x, RelOp::Ge, 1), &mut s, &mut env), Ok(Entailment::Yes));
        assert_eq!(abs_entailed(&Ctr::eq(x, 5), &mut s, &mut env), Ok(Entailment::Unknown));
        let x1 = var(&mut s, 2, 4);
        let x2 = var(&mut s, 2, 4);
        s.post(&rel(x1, RelOp::Le, x2), &mut env).unwrap();
        assert_eq!(abs_entailed(&rel(x1, RelOp::Le, Expr::Var(x2) + 1), &mut s, &mut env), Ok(Entailment::Yes));
    }

    #[test]
    fn cd_filter_cases() {
        let mut s = Store::new();
        let mut env = Env::default();
        let x = var(&mut s, 1, 10);
        let r = cd_filter_full(Ctr::False, Ctr::eq(x, 4), &mut s, &mut env).unwrap();
        assert_eq!(r.status, Status::Exit);
        assert_eq!(r.domains, vec![(x, IntDomain::singleton(4))]);

        let mut s = Store::new();
        let x = var(&mut s, 1, 10);
        let r = cd_filter_full(Ctr::eq(x, 2), Ctr::eq(x, 7), &mut s, &mut env).unwrap();
        assert_eq!(r.status, Status::Suspend);
        assert_eq!(r.domains, vec![(x, IntDomain::from_values([2, 7]))]);
        let r = cd_filter_full(Ctr::eq(x, 12), Ctr::eq(x, 0), &mut s, &mut env).unwrap();
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn cxd_cases() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, 1, 3);
        assert_eq!(cxd_filter(Ctr::eq(x, 1), Ctr::eq(x, 1), &mut s, &mut env).unwrap().status, Status::Fail);

        let mut s = Store::new();
        let x = var(&mut s, 1, 5);
        let r = cxd_filter(Ctr::eq(x, 1), Ctr::eq(x, 2), &mut s, &mut env).unwrap();
        assert_eq!(r.domains[0].1, IntDomain::range(1, 2));

        let mut s = Store::new();
        let x = var(&mut s, 1, 5);
        cxd_filter(Ctr::True, rel(x, RelOp::Gt, 2), &mut s, &mut env).unwrap();
        assert_eq!(s.dom(x), &IntDomain::range(1, 2));
    }

    #[test]
    fn imp_and_ite_cases() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, 6, 9);
        let y = var(&mut s, 0, 3);
        imp_filter(rel(x, RelOp::Gt, 5), Ctr::eq(y, 1), &mut s, &mut env).unwrap();
        assert_eq!(s.value(y), Some(1));

        let mut s = Store::new();
        let y = var(&mut s, 0, 3);
        let r = imp_filter(Ctr::False, Ctr::eq(y, 1), &mut s, &mut env).unwrap();
        assert_eq!(r.status, Status::Exit);
        assert_eq!(s.dom(y), &IntDomain::range(0, 3));

        let mut s = Store::new();
        let x = var(&mut s, 1, 5);
        let y = var(&mut s, 0, 3);
        ite_filter(rel(x, RelOp::Gt, 0), Ctr::eq(y, 1), Ctr::eq(y, 2), &mut s, &mut env).unwrap();
        assert_eq!(s.value(y), Some(1));

        let mut s = Store::new();
        let y = var(&mut s, 0, 3);
        ite_filter(Ctr::True, Ctr::eq(y, 3), Ctr::eq(y, 2), &mut s, &mut env).unwrap();
        assert_eq!(s.value(y), Some(3));
    }

    #[test]
    fn ground_branch_at_k_zero() {
        let mut s = Store::new();
        let mut env = Env::with_k(0);
        let x = var(&mut s, 1, 10);
        let y = var(&mut s, 1, 10);
        s.post(&Ctr::cd(Ctr::eq(x, 3), Ctr::eq(y, 4)), &mut env).unwrap();
        assert_eq!(s.dom(y), &IntDomain::range(1, 10));
        s.post(&Ctr::eq(x, 5), &mut env).unwrap();
        assert_eq!(s.value(y), Some(4));
    }
}
