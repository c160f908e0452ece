//! Reified connectives: the non-constructive baseline.
//!
//! Each elementary constraint gets a 0/1 variable kept in sync with local
//! entailment tests, and connectives only propagate between those 0/1
//! variables. No information is constructed from the disjuncts.

use std::sync::Arc;

use crate::arith::{self, Expr, Iv, RelOp};
use crate::constructive::{self, negate};
use crate::ctr::Ctr;
use crate::domain::IntDomain;
use crate::engine::{Env, Filter, Propagator, SolveError, Status, Store, VarId, Wake};
use crate::globals;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailment {
    Yes,
    No,
    Unknown,
}

fn rel_parts(c: &Ctr) -> Option<(Expr, RelOp, Expr)> {
    match c {
        Ctr::Rel(a, op, b) => Some((a.clone(), *op, b.clone())),
        Ctr::Incr(x, y) => Some((Expr::Var(*x), RelOp::Eq, Expr::Var(*y) + 1)),
        Ctr::Sum(items, op, t) => Some((arith::sum_expr(items), *op, t.clone())),
        _ => None,
    }
}

/// Entailment over the interval hulls of the current domains.
pub fn interval_entailed(c: &Ctr, store: &Store) -> Entailment {
    if let Ctr::InRange(v, r) = c {
        let hull = store.dom(*v).hull();
        return if hull.is_subset(r) {
            Entailment::Yes
        } else if hull.intersect(r).is_empty() {
            Entailment::No
        } else {
            Entailment::Unknown
        };
    }
    let Some((a, op, b)) = rel_parts(c) else {
        return Entailment::Unknown;
    };
    let (lo, hi) = arith::eval_bounds(&(a - b), store);
    let d = Iv::new(lo, hi);
    let zero = crate::domain::Bound::Finite(0);
    let (yes, no) = match op {
        RelOp::Eq => (d == Iv::point(0), !d.contains(0)),
        RelOp::Ne => (!d.contains(0), d == Iv::point(0)),
        RelOp::Lt => (hi < zero, lo >= zero),
        RelOp::Le => (hi <= zero, lo > zero),
        RelOp::Gt => (lo > zero, hi <= zero),
        RelOp::Ge => (lo >= zero, hi < zero),
    };
    if d.is_empty() {
        Entailment::Unknown
    } else if yes {
        Entailment::Yes
    } else if no {
        Entailment::No
    } else {
        Entailment::Unknown
    }
}

/// Entailment over all tuples of the current domains, by enumeration when
/// the tuple count is at most `cap`, by [`interval_entailed`] otherwise.
pub fn domain_entailed(c: &Ctr, store: &Store, cap: u128) -> Entailment {
    if let Ctr::InRange(v, r) = c {
        let d = store.dom(*v);
        return if d.is_subset(r) {
            Entailment::Yes
        } else if d.intersect(r).is_empty() {
            Entailment::No
        } else {
            Entailment::Unknown
        };
    }
    let vars = c.vars();
    let mut count: u128 = 1;
    for &v in &vars {
        match store.dom(v).size() {
            Some(n) => count = count.saturating_mul(n),
            None => return interval_entailed(c, store),
        }
        if count > cap {
            return interval_entailed(c, store);
        }
    }
    let domains: Vec<Vec<i64>> = vars.iter().map(|&v| store.dom(v).values().collect()).collect();
    let mut idx = vec![0usize; vars.len()];
    let (mut any_true, mut any_false) = (false, false);
    loop {
        let lookup = |v: VarId| {
            let i = vars.iter().position(|&u| u == v).expect("known variable");
            domains[i][idx[i]]
        };
        if c.eval(&lookup) {
            any_true = true;
        } else {
            any_false = true;
        }
        if any_true && any_false {
            return Entailment::Unknown;
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return if any_true { Entailment::Yes } else { Entailment::No };
            }
            idx[pos] += 1;
            if idx[pos] < domains[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `b <-> c` for an elementary constraint `c`.
#[derive(Debug)]
struct ReifLeaf {
    c: Ctr,
    neg: Ctr,
    b: VarId,
}

impl Propagator for ReifLeaf {
    fn propagate(&self, store: &mut Store, env: &mut Env) -> Filter {
        match store.value(self.b) {
            Some(1) => {
                constructive::add(store, &self.c, env)?;
                return Ok(Status::Exit);
            }
            Some(_) => {
                constructive::add(store, &self.neg, env)?;
                return Ok(Status::Exit);
            }
            None => {}
        }
        match domain_entailed(&self.c, store, env.entail_cap) {
            Entailment::Yes => {
                store.assign(self.b, 1)?;
                Ok(Status::Exit)
            }
            Entailment::No => {
                store.assign(self.b, 0)?;
                Ok(Status::Exit)
            }
            Entailment::Unknown => Ok(Status::Suspend),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    And,
    Or,
}

/// `out <-> a op b` over 0/1 variables.
#[derive(Debug)]
struct BoolGate {
    gate: Gate,
    out: VarId,
    a: VarId,
    b: VarId,
}

impl Propagator for BoolGate {
    fn propagate(&self, store: &mut Store, _env: &mut Env) -> Filter {
        // An Or gate is an And gate over the complemented literals.
        let (absorb, unit) = match self.gate {
            Gate::And => (0, 1),
            Gate::Or => (1, 0),
        };
        let (o, a, b) = (store.value(self.out), store.value(self.a), store.value(self.b));
        if o == Some(unit) {
            store.assign(self.a, unit)?;
            store.assign(self.b, unit)?;
        } else if a == Some(absorb) || b == Some(absorb) {
            store.assign(self.out, absorb)?;
        } else if a == Some(unit) && b == Some(unit) {
            store.assign(self.out, unit)?;
        } else if o == Some(absorb) {
            if a == Some(unit) {
                store.assign(self.b, absorb)?;
            } else if b == Some(unit) {
                store.assign(self.a, absorb)?;
            }
        }
        let done = [self.out, self.a, self.b].iter().all(|&v| store.is_fixed(v));
        Ok(if done { Status::Exit } else { Status::Suspend })
    }
}

fn gate(store: &mut Store, gate: Gate, a: VarId, b: VarId, env: &mut Env) -> Filter<VarId> {
    let out = store.new_bool();
    let watch = [(out, Wake::Fixed), (a, Wake::Fixed), (b, Wake::Fixed)];
    store.run_and_register(Arc::new(BoolGate { gate, out, a, b }), &watch, env)?;
    Ok(out)
}

/// Creates a 0/1 variable equivalent to `c`.
fn reify_node(store: &mut Store, c: &Ctr, env: &mut Env) -> Filter<VarId> {
    match c {
        Ctr::True | Ctr::False => {
            let b = store.new_bool();
            store.assign(b, i64::from(*c == Ctr::True))?;
            Ok(b)
        }
        Ctr::InRange(..) | Ctr::Rel(..) | Ctr::Incr(..) | Ctr::Sum(..) => {
            let b = store.new_bool();
            let neg = negate(c)?;
            let mut watch: Vec<(VarId, Wake)> = c.vars().into_iter().map(|v| (v, Wake::Any)).collect();
            watch.push((b, Wake::Fixed));
            store.run_and_register(Arc::new(ReifLeaf { c: c.clone(), neg, b }), &watch, env)?;
            Ok(b)
        }
        Ctr::Conj(x, y) => {
            let (bx, by) = (reify_node(store, x, env)?, reify_node(store, y, env)?);
            gate(store, Gate::And, bx, by, env)
        }
        Ctr::Cd(x, y) | Ctr::Or(x, y) => {
            let (bx, by) = (reify_node(store, x, env)?, reify_node(store, y, env)?);
            gate(store, Gate::Or, bx, by, env)
        }
        Ctr::Cxd(x, y) => {
            let t = Ctr::or(
                Ctr::conj((**x).clone(), Ctr::not((**y).clone())),
                Ctr::conj(Ctr::not((**x).clone()), (**y).clone()),
            );
            reify_node(store, &t, env)
        }
        Ctr::Imp(x, y) => reify_node(store, &Ctr::or(Ctr::not((**x).clone()), (**y).clone()), env),
        Ctr::Ite(g, x, y) => {
            let t = Ctr::or(Ctr::conj((**g).clone(), (**x).clone()), Ctr::conj(Ctr::not((**g).clone()), (**y).clone()));
            reify_node(store, &t, env)
        }
        Ctr::Cn(x) | Ctr::Not(x) => reify_node(store, &negate(x)?, env),
        Ctr::Global(g) => {
            let enc = globals::expand(store, g)?;
            reify_node(store, &enc, env)
        }
    }
}

/// Posts `c` with every connective reified.
pub(crate) fn add_reified(store: &mut Store, c: &Ctr, env: &mut Env) -> Filter<()> {
    let b = reify_node(store, c, env)?;
    store.assign(b, 1).map(|_| ())
}

/// Posts `c` with the reified baseline semantics, whatever its connectives.
/// Top-level conjunctions stay plain, as the host language would post them.
pub fn post_reified(store: &mut Store, c: &Ctr, env: &mut Env) -> Result<Status, SolveError> {
    let mut status = Status::Exit;
    for part in c.conjuncts() {
        match store.post_with(env, |s, e| add_reified(s, part, e))? {
            Status::Fail => return Ok(Status::Fail),
            Status::Suspend => status = Status::Suspend,
            Status::Exit => {}
        }
    }
    Ok(status)
}

/// Links `b` to the truth value of an elementary constraint.
pub fn reify(store: &mut Store, c: &Ctr, b: VarId, env: &mut Env) -> Result<Status, SolveError> {
    if !matches!(c, Ctr::Rel(..) | Ctr::InRange(..) | Ctr::Incr(..) | Ctr::Sum(..)) {
        return Err(SolveError::InvalidArgument("only elementary constraints are reifiable".into()));
    }
    let neg = negate(c)?;
    let c = c.clone();
    store.post_with(env, move |s, e| {
        s.intersect(b, &IntDomain::range(0, 1))?;
        let mut watch: Vec<(VarId, Wake)> = c.vars().into_iter().map(|v| (v, Wake::Any)).collect();
        watch.push((b, Wake::Fixed));
        s.run_and_register(Arc::new(ReifLeaf { c, neg, b }), &watch, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn var(s: &mut Store, d: IntDomain) -> VarId {
        s.new_var(d).unwrap()
    }

    #[test]
    fn entailment_examples() {
        let mut s = Store::new();
        let x = var(&mut s, IntDomain::range(2, 4));
        let y = var(&mut s, IntDomain::range(2, 4));
        let c = Ctr::rel(x, RelOp::Le, Expr::Var(y) + 1);
        assert_eq!(domain_entailed(&c, &s, 4096), Entailment::Unknown);

        let x = var(&mut s, IntDomain::range(1, 2));
        let y = var(&mut s, IntDomain::range(5, 9));
        assert_eq!(domain_entailed(&Ctr::rel(x, RelOp::Lt, y), &s, 4096), Entailment::Yes);
        assert_eq!(domain_entailed(&Ctr::rel(x, RelOp::Gt, y), &s, 4096), Entailment::No);
        let z = var(&mut s, IntDomain::singleton(3));
        assert_eq!(domain_entailed(&Ctr::eq(z, 3), &s, 4096), Entailment::Yes);

        let x = var(&mut s, IntDomain::from_values([1, 3]));
        let y = var(&mut s, IntDomain::from_values([5, 9]));
        assert_eq!(interval_entailed(&Ctr::rel(x, RelOp::Le, y), &s), Entailment::Yes);
        let w = var(&mut s, IntDomain::singleton(2));
        assert_eq!(interval_entailed(&Ctr::eq(x, w), &s), Entailment::Unknown);
        assert_eq!(domain_entailed(&Ctr::eq(x, w), &s, 4096), Entailment::No);
        assert_eq!(interval_entailed(&Ctr::rel(x, RelOp::Gt, y), &s), Entailment::No);
    }

    #[test]
    fn reify_examples() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, IntDomain::range(7, 9));
        let b = s.new_bool();
        reify(&mut s, &Ctr::eq(x, 6), b, &mut env).unwrap();
        assert_eq!(s.value(b), Some(0));

        let mut s = Store::new();
        let x = var(&mut s, IntDomain::range(1, 10));
        let b = var(&mut s, IntDomain::singleton(1));
        reify(&mut s, &Ctr::eq(x, 6), b, &mut env).unwrap();
        assert_eq!(s.value(x), Some(6));
    }

    #[test]
    fn reified_disjunction_does_not_prune() {
        let mut env = Env::default();
        let mut s = Store::new();
        let y = var(&mut s, IntDomain::range(62, 77));
        let x = var(&mut s, IntDomain::full());
        let c = Ctr::or(Ctr::or(Ctr::eq(x, 6), Ctr::eq(x, 13)), Ctr::eq(x, y));
        assert_eq!(s.post(&c, &mut env), Ok(Status::Suspend));
        assert!(s.dom(x).is_full());
    }

    #[test]
    fn clause_propagation() {
        let mut env = Env::default();
        let mut s = Store::new();
        let x = var(&mut s, IntDomain::range(1, 10));
        let y = var(&mut s, IntDomain::range(1, 10));
        s.post(&Ctr::or(Ctr::eq(x, 20), Ctr::eq(y, 3)), &mut env).unwrap();
        assert_eq!(s.value(y), Some(3));
        let c = Ctr::not(Ctr::or(Ctr::eq(x, 1), Ctr::eq(x, 2)));
        s.post(&c, &mut env).unwrap();
        assert_eq!(s.dom(x), &IntDomain::range(3, 10));
    }

    #[test]
    fn bool_gates() {
        let mut env = Env::default();
        let mut s = Store::new();
        let a = s.new_bool();
        let b = s.new_bool();
        let o = gate(&mut s, Gate::Or, a, b, &mut env).unwrap();
        s.assign(o, 1).unwrap();
        s.assign(a, 0).unwrap();
        s.fixpoint(&mut env).unwrap();
        assert_eq!(s.value(b), Some(1));
        let c = s.new_bool();
        let d = s.new_bool();
        let g = gate(&mut s, Gate::And, c, d, &mut env).unwrap();
        s.assign(g, 1).unwrap();
        s.fixpoint(&mut env).unwrap();
        assert_eq!((s.value(c), s.value(d)), (Some(1), Some(1)));
    }

    proptest! {
        #[test]
        fn interval_yes_implies_domain_yes(
            xs in proptest::collection::vec(-4i64..=4, 1..4),
            ys in proptest::collection::vec(-4i64..=4, 1..4),
            op_i in 0usize..6, k in -3i64..=3,
        ) {
            let mut s = Store::new();
            let x = var(&mut s, IntDomain::from_values(xs));
            let y = var(&mut s, IntDomain::from_values(ys));
            let c = Ctr::rel(Expr::Var(x) + k, RelOp::ALL[op_i], y);
            let i = interval_entailed(&c, &s);
            let d = domain_entailed(&c, &s, 4096);
            if i != Entailment::Unknown {
                prop_assert_eq!(i, d);
            }
        }
    }
}
