//! Brute-force reference solver, random instance generation and the
//! cross-check of propagation and labeling against exhaustive enumeration.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{Expr, RelOp};
use crate::ctr::{Ctr, GlobalArg, GlobalKind};
use crate::domain::IntDomain;
use crate::engine::{Env, KLimit, SolveError, Status, Store, VarId};
use crate::lang::Query;
use crate::parallel;
use crate::search;

/// Largest box the oracle agrees to enumerate.
pub const MAX_ASSIGNMENTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("instance has {0} assignments, more than the oracle enumerates")]
    TooLarge(u128),
    #[error("variable {0} has an unbounded initial domain")]
    Unbounded(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// A constraint over variables `0..doms.len()` with their initial domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub doms: Vec<IntDomain>,
    pub ctr: Ctr,
}

impl Instance {
    pub fn vars(&self) -> Vec<VarId> {
        (0..self.doms.len()).map(VarId::from_index).collect()
    }

    pub fn box_size(&self) -> Result<u128, OracleError> {
        self.doms
            .iter()
            .enumerate()
            .try_fold(1u128, |acc, (i, d)| d.size().map(|s| acc.saturating_mul(s)).ok_or(OracleError::Unbounded(i)))
    }

    /// A store holding the instance variables, nothing posted yet.
    pub fn store(&self) -> Result<Store, SolveError> {
        let mut s = Store::new();
        for d in &self.doms {
            s.new_var(d.clone())?;
        }
        Ok(s)
    }
}

/// Every assignment of the box satisfying the instance, in lexicographic
/// order of the value tuples.
pub fn solutions(inst: &Instance) -> Result<Vec<Vec<i64>>, OracleError> {
    let size = inst.box_size()?;
    if size > MAX_ASSIGNMENTS {
        return Err(OracleError::TooLarge(size));
    }
    let values: Vec<Vec<i64>> = inst.doms.iter().map(|d| d.values().collect()).collect();
    let mut out = Vec::new();
    if values.iter().any(|v| v.is_empty()) {
        return Ok(out);
    }
    let n = values.len();
    let mut idx = vec![0usize; n];
    let mut cur: Vec<i64> = values.iter().map(|v| v[0]).collect();
    loop {
        if inst.ctr.eval(&|v: VarId| cur[v.index()]) {
            out.push(cur.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < values[i].len() {
                cur[i] = values[i][idx[i]];
                break;
            }
            idx[i] = 0;
            cur[i] = values[i][0];
        }
    }
}

/// Per-variable projections of a solution set.
pub fn projections(sols: &[Vec<i64>], n: usize) -> Vec<IntDomain> {
    (0..n).map(|i| IntDomain::from_values(sols.iter().map(|s| s[i]))).collect()
}

/// Outcome of checking one instance at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct KCheck {
    pub k: KLimit,
    /// Variables whose fixpoint domain lost a value of the projection.
    pub unsound: Vec<usize>,
    /// Variables whose fixpoint domain is a strict superset of the projection.
    pub gaps: usize,
    pub labeling_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCheck {
    pub solutions: usize,
    pub per_k: Vec<KCheck>,
}

impl InstanceCheck {
    pub fn sound(&self) -> bool {
        self.per_k.iter().all(|c| c.unsound.is_empty())
    }

    pub fn labeling_ok(&self) -> bool {
        self.per_k.iter().all(|c| c.labeling_ok)
    }

    pub fn gaps(&self) -> usize {
        self.per_k.iter().map(|c| c.gaps).sum()
    }
}

/// The budgets every instance is checked under.
pub const DEFAULT_KS: [KLimit; 5] =
    [KLimit::Finite(0), KLimit::Finite(1), KLimit::Finite(2), KLimit::Finite(3), KLimit::Unbounded];

/// Compares fixpoint domains and labeled solutions with the oracle at each
/// budget in `ks`.
pub fn check_instance(inst: &Instance, ks: &[KLimit]) -> Result<InstanceCheck, OracleError> {
    let sols = solutions(inst)?;
    let proj = projections(&sols, inst.doms.len());
    let vars = inst.vars();
    let mut per_k = Vec::new();
    for &k in ks {
        let mut store = inst.store()?;
        let mut env = Env::new(k);
        let status = store.post(&inst.ctr, &mut env)?;
        let mut unsound = Vec::new();
        let mut gaps = 0;
        for (i, p) in proj.iter().enumerate() {
            let d = if status == Status::Fail { IntDomain::empty() } else { store.dom(vars[i]).clone() };
            if !p.is_subset(&d) {
                unsound.push(i);
            } else if d != *p {
                gaps += 1;
            }
        }
        let labeled = if status == Status::Fail {
            Vec::new()
        } else {
            search::all_solutions(&mut store, &vars, &mut env)?.into_iter().map(|s| s.tuple()).collect()
        };
        per_k.push(KCheck { k, unsound, gaps, labeling_ok: labeled == sols });
    }
    Ok(InstanceCheck { solutions: sols.len(), per_k })
}

/// Which connectives random formulas may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectives {
    /// The constructive language: conjunction, `cd`, `cxd`, `=>`, `cn`, `ite`.
    Constructive,
    /// The constructive language plus the reified `#\/` and `#\`.
    All,
    /// Conjunction and `cd` only.
    CdOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub max_vars: usize,
    pub lo: i64,
    pub hi: i64,
    /// Bound on [`Ctr::depth`].
    pub max_depth: usize,
    pub connectives: Connectives,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { max_vars: 4, lo: 0, hi: 9, max_depth: 4, connectives: Connectives::All }
    }
}

fn rand_var(rng: &mut ChaCha8Rng, n: usize) -> VarId {
    VarId::from_index(rng.gen_range(0..n))
}

/// A random arithmetic term over `n` variables, at most `depth` deep.
pub fn random_expr(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_bool(0.5) {
        return if rng.gen_bool(0.7) { Expr::Var(rand_var(rng, n)) } else { Expr::Const(rng.gen_range(-3..=12)) };
    }
    let a = random_expr(rng, n, depth - 1);
    let b = random_expr(rng, n, depth - 1);
    match rng.gen_range(0..7) {
        0 | 1 => a + b,
        2 | 3 => a - b,
        4 | 5 => a * b,
        _ => Expr::Neg(Box::new(a)),
    }
}

fn random_range(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> IntDomain {
    let mut d = IntDomain::empty();
    for _ in 0..rng.gen_range(1..=2) {
        let a = rng.gen_range(lo..=hi);
        let b = rng.gen_range(a..=hi);
        d = d.union(&IntDomain::range(a, b));
    }
    d
}

fn random_leaf(rng: &mut ChaCha8Rng, n: usize, o: &GenOptions) -> Ctr {
    match rng.gen_range(0..20) {
        0 => Ctr::True,
        1 => Ctr::False,
        2 | 3 => Ctr::InRange(rand_var(rng, n), random_range(rng, o.lo, o.hi)),
        4 => Ctr::Incr(rand_var(rng, n), rand_var(rng, n)),
        5 => {
            let items = (0..rng.gen_range(1..=3)).map(|_| random_expr(rng, n, 1)).collect();
            Ctr::Sum(items, *RelOp::ALL.choose(rng).expect("nonempty"), random_expr(rng, n, 1))
        }
        _ => {
            let op = *RelOp::ALL.choose(rng).expect("nonempty");
            Ctr::Rel(random_expr(rng, n, 2), op, random_expr(rng, n, 2))
        }
    }
}

/// A random constraint tree over `n` variables with `depth() <= depth`.
pub fn random_ctr(rng: &mut ChaCha8Rng, n: usize, depth: usize, o: &GenOptions) -> Ctr {
    if depth <= 1 || rng.gen_bool(0.25) {
        return random_leaf(rng, n, o);
    }
    let d = depth - 1;
    let arms = match o.connectives {
        Connectives::CdOnly => 2,
        Connectives::Constructive => 6,
        Connectives::All => 8,
    };
    let sub = |rng: &mut ChaCha8Rng| random_ctr(rng, n, d, o);
    match rng.gen_range(0..arms) {
        0 => Ctr::conj(sub(rng), sub(rng)),
        1 => Ctr::cd(sub(rng), sub(rng)),
        2 => Ctr::cxd(sub(rng), sub(rng)),
        3 => Ctr::imp(sub(rng), sub(rng)),
        4 => Ctr::cn(sub(rng)),
        5 => Ctr::ite(sub(rng), sub(rng), sub(rng)),
        6 => Ctr::or(sub(rng), sub(rng)),
        _ => Ctr::not(sub(rng)),
    }
}

/// A random CSP: up to `max_vars` variables with domains inside `lo..hi`
/// and one constraint tree over them.
pub fn random_instance(rng: &mut ChaCha8Rng, o: &GenOptions) -> Instance {
    let n = rng.gen_range(1..=o.max_vars);
    let doms = (0..n)
        .map(|_| {
            let a = rng.gen_range(o.lo..=o.hi);
            let b = rng.gen_range(a..=o.hi);
            IntDomain::range(a, b)
        })
        .collect();
    let depth = rng.gen_range(1..=o.max_depth);
    Instance { doms, ctr: random_ctr(rng, n, depth, o) }
}

fn vars_expr(from: usize, count: usize) -> Vec<Expr> {
    (from..from + count).map(|i| Expr::Var(VarId::from_index(i))).collect()
}

fn v(i: usize) -> Expr {
    Expr::Var(VarId::from_index(i))
}

/// Small instances of a global constraint whose truth set the oracle can
/// enumerate. `n` is the list length; um3 ignores it and mulctr uses it as
/// the factor.
pub fn global_instance(kind: GlobalKind, n: usize) -> Instance {
    let r = |lo: i64, hi: i64| IntDomain::range(lo, hi);
    let ni = n as i64;
    let (doms, args) = match kind {
        GlobalKind::Um3 => {
            (vec![r(0, 4); 3], vec![GlobalArg::Expr(v(0)), GlobalArg::Expr(v(1)), GlobalArg::Expr(v(2))])
        }
        GlobalKind::Domctr => {
            let mut d = vec![r(0, ni + 1)];
            d.extend(vec![r(0, 1); n]);
            (d, vec![GlobalArg::Expr(v(0)), GlobalArg::List(vars_expr(1, n))])
        }
        GlobalKind::Elemctr => {
            let mut d = vec![r(0, ni + 1)];
            d.extend(vec![r(0, 3); n]);
            d.push(r(0, 3));
            (d, vec![GlobalArg::Expr(v(0)), GlobalArg::List(vars_expr(1, n)), GlobalArg::Expr(v(n + 1))])
        }
        GlobalKind::Lexctr => {
            (vec![r(0, 2); 2 * n], vec![GlobalArg::List(vars_expr(0, n)), GlobalArg::List(vars_expr(n, n))])
        }
        GlobalKind::Mulctr => (
            vec![r(0, 20); 3],
            vec![GlobalArg::Expr(Expr::Const(ni)), GlobalArg::Expr(v(0)), GlobalArg::Expr(v(1)), GlobalArg::Expr(v(2))],
        ),
        GlobalKind::Disjctr => {
            let n = n.max(2);
            let mut d = vec![r(0, 2); n];
            d.extend(vec![r(1, 2); n]);
            d.push(r(n as i64, 4 * n as i64));
            (d, vec![GlobalArg::List(vars_expr(0, n)), GlobalArg::List(vars_expr(n, n)), GlobalArg::Expr(v(2 * n))])
        }
    };
    Instance { doms, ctr: Ctr::global(kind, args) }
}

/// An instance from a query whose variables all have finite top-level
/// `in` declarations.
pub fn instance_from_query(q: &Query) -> Result<Instance, OracleError> {
    let mut doms = vec![IntDomain::full(); q.names.len()];
    for c in q.body.conjuncts() {
        if let Ctr::InRange(v, d) = c {
            doms[v.index()] = doms[v.index()].intersect(d);
        }
    }
    if let Some(i) = doms.iter().position(|d| !d.is_finite()) {
        return Err(OracleError::Unbounded(i));
    }
    Ok(Instance { doms, ctr: q.body.clone() })
}

/// Aggregate of many instance checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub cases: usize,
    /// Indices of instances where some fixpoint lost a solution value.
    pub unsound: Vec<usize>,
    /// Indices of instances where labeling disagreed with the oracle.
    pub labeling: Vec<usize>,
    pub gaps: usize,
    pub solutions: usize,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.unsound.is_empty() && self.labeling.is_empty()
    }

    fn add(&mut self, i: usize, c: &InstanceCheck) {
        self.cases += 1;
        self.gaps += c.gaps();
        self.solutions += c.solutions;
        if !c.sound() {
            self.unsound.push(i);
        }
        if !c.labeling_ok() {
            self.labeling.push(i);
        }
    }
}

impl std::fmt::Display for SweepReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cases={} solutions={} soundness_violations={} labeling_mismatches={} filtering_gaps={}",
            self.cases,
            self.solutions,
            self.unsound.len(),
            self.labeling.len(),
            self.gaps
        )
    }
}

/// Checks every instance, `jobs` at a time.
pub fn sweep(instances: &[Instance], ks: &[KLimit], jobs: usize) -> Result<SweepReport, OracleError> {
    let checks = parallel::par_map(instances, jobs, |inst| check_instance(inst, ks));
    let mut r = SweepReport::default();
    for (i, c) in checks.into_iter().enumerate() {
        r.add(i, &c?);
    }
    Ok(r)
}

/// `cases` random instances drawn from `seed`.
pub fn random_instances(seed: u64, cases: usize, o: &GenOptions) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases).map(|_| random_instance(&mut rng, o)).collect()
}

/// Instances of `kind` for list lengths `1..=max_n`.
pub fn global_instances(kind: GlobalKind, max_n: usize) -> Vec<Instance> {
    let lo = if kind == GlobalKind::Disjctr { 2 } else { 1 };
    (lo..=max_n.max(lo)).map(|n| global_instance(kind, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_and_projection() {
        let inst = Instance {
            doms: vec![IntDomain::range(1, 3), IntDomain::range(1, 3)],
            ctr: Ctr::rel(v(0), RelOp::Lt, v(1)),
        };
        let s = solutions(&inst).unwrap();
        assert_eq!(s, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        let p = projections(&s, 2);
        assert_eq!(p[0], IntDomain::range(1, 2));
        assert_eq!(p[1], IntDomain::range(2, 3));
    }

    #[test]
    fn oversize_and_unbounded_rejected() {
        let big = Instance { doms: vec![IntDomain::range(0, 999); 3], ctr: Ctr::True };
        assert!(matches!(solutions(&big), Err(OracleError::TooLarge(_))));
        let inf = Instance { doms: vec![IntDomain::full()], ctr: Ctr::True };
        assert_eq!(solutions(&inf), Err(OracleError::Unbounded(0)));
    }

    #[test]
    fn example_five_matches_exactly() {
        let d = IntDomain::range(1, 5);
        let ab = |a: usize, b: usize| Ctr::cd(Ctr::eq(v(a) - v(b), 4), Ctr::eq(v(b) - v(a), 4));
        let inst = Instance { doms: vec![d; 3], ctr: Ctr::conj(ab(0, 1), ab(0, 2)) };
        let c = check_instance(&inst, &[KLimit::Unbounded]).unwrap();
        assert!(c.sound() && c.labeling_ok());
        assert_eq!(c.gaps(), 0);
    }

    #[test]
    fn random_instances_respect_options() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let o = GenOptions::default();
        for _ in 0..200 {
            let inst = random_instance(&mut rng, &o);
            assert!(inst.ctr.depth() <= o.max_depth);
            assert!(inst.doms.len() <= o.max_vars);
            assert!(inst.ctr.vars().iter().all(|v| v.index() < inst.doms.len()));
            assert!(inst.box_size().unwrap() <= 10_000);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let gen = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| random_instance(&mut rng, &GenOptions::default())).collect::<Vec<_>>()
        };
        assert_eq!(gen(3), gen(3));
    }

    #[test]
    fn small_random_sweep_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let inst = random_instance(&mut rng, &GenOptions::default());
            let c = check_instance(&inst, &DEFAULT_KS).unwrap();
            assert!(c.sound(), "{inst:?}");
            assert!(c.labeling_ok(), "{inst:?}");
        }
    }

    #[test]
    fn globals_have_enumerable_boxes() {
        for kind in GlobalKind::ALL {
            for n in 1..=5 {
                let inst = global_instance(kind, n);
                assert!(inst.box_size().unwrap() <= MAX_ASSIGNMENTS, "{kind:?} {n}");
            }
        }
    }
}
