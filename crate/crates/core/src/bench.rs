//! Benchmark families and the runner behind `ite bench`.
//!
//! Every family builds one deterministic instance per size and labels it with
//! a fixed strategy, so implementations differ only in how their constraints
//! propagate. Domain is the square-root query with `domctr`; the other
//! shapes are reconstructions, described on each variant.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{Expr, RelOp};
use crate::ctr::{Ctr, GlobalArg, GlobalKind};
use crate::domain::IntDomain;
use crate::engine::{Env, KLimit, SolveError, Stats, Status, Store, VarId};
use crate::parallel;
use crate::reify::post_reified;
use crate::search::{self, LabelOptions, Labeling, ValOrder};

pub const CSV_HEADER: &str = "family,n,impl,k,duration_ms,prop_runs,speculations,outcome";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `domctr(X, L)` over `N` booleans, `X*X #< N`, maximize `X` labeling `L`.
    Domain,
    /// `elemctr(I, V, J)` over the constant list `V` of `N` even numbers
    /// around `N`, with `I #=< 3`, `J #= 2*H+1` and `sum(Z) #= H` over `N`
    /// booleans `Z`; label `Z`. Unsatisfiable by parity, which only a union
    /// over the first three list positions reveals.
    Element,
    /// `lexctr(X, Y)` over `2N` booleans, label `X` then `Y`, largest value
    /// first.
    Lex,
    /// `N` independent `mulctr(7, X_i, 7a, 7(a+3)+6)` with `a = 1 + i mod 4`,
    /// each window holding four multiples; label every `X_i` largest first.
    Mulctr,
    /// `disjctr(S, P, H)` over `N` tasks with seeded durations in 1..3,
    /// starts within the total duration; label `S`.
    Disjunctive,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Domain, Family::Element, Family::Lex, Family::Mulctr, Family::Disjunctive];

    pub fn name(self) -> &'static str {
        match self {
            Family::Domain => "domain",
            Family::Element => "element",
            Family::Lex => "lex",
            Family::Mulctr => "mulctr",
            Family::Disjunctive => "disjunctive",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown family `{s}`"))
    }
}

/// How the disjunctive parts of an instance are posted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Impl {
    /// Constructive operators with budget `k`.
    Cd(KLimit),
    /// Every connective reified.
    Reified,
}

impl Impl {
    pub fn k_column(self) -> String {
        match self {
            Impl::Cd(k) => k.to_string(),
            Impl::Reified => "-".into(),
        }
    }
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Impl::Cd(KLimit::Unbounded) => f.write_str("cd"),
            Impl::Cd(KLimit::Finite(k)) => write!(f, "cd({k})"),
            Impl::Reified => f.write_str("reified"),
        }
    }
}

impl FromStr for Impl {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cd" => Ok(Impl::Cd(KLimit::Unbounded)),
            "reified" => Ok(Impl::Reified),
            _ => s
                .strip_prefix("cd(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|k| k.parse().ok())
                .map(Impl::Cd)
                .ok_or_else(|| format!("unknown implementation `{s}`")),
        }
    }
}

/// Parses a comma-separated implementation list. `cd(2..7)` expands to
/// `cd(2),...,cd(7)`.
pub fn parse_impls(s: &str) -> Result<Vec<Impl>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let range = item.strip_prefix("cd(").and_then(|r| r.strip_suffix(')')).and_then(|r| r.split_once(".."));
        match range {
            Some((a, b)) => {
                let (a, b): (u32, u32) = (
                    a.parse().map_err(|_| format!("bad range `{item}`"))?,
                    b.parse().map_err(|_| format!("bad range `{item}`"))?,
                );
                out.extend((a..=b).map(|k| Impl::Cd(KLimit::Finite(k))));
            }
            None => out.push(item.parse()?),
        }
    }
    if out.is_empty() {
        return Err("empty implementation list".into());
    }
    Ok(out)
}

/// Parses `lo..hi:step`, `lo..hi` or a single size.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("bad size range `{s}`, expected lo..hi:step");
    let (range, step) = match s.split_once(':') {
        Some((r, st)) => (r, st.parse::<usize>().map_err(|_| bad())?),
        None => (s, 1),
    };
    let (lo, hi) = match range.split_once("..") {
        Some((a, b)) => (a.parse::<usize>().map_err(|_| bad())?, b.parse::<usize>().map_err(|_| bad())?),
        None => {
            let n = range.parse::<usize>().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo == 0 || step == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).step_by(step).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchCase {
    pub family: Family,
    pub n: usize,
    pub imp: Impl,
    pub timeout: Duration,
    pub seed: u64,
}

/// Cases in definition order: sizes outermost, implementations inner.
pub fn cases(family: Family, sizes: &[usize], impls: &[Impl], timeout: Duration, seed: u64) -> Vec<BenchCase> {
    sizes.iter().flat_map(|&n| impls.iter().map(move |&imp| BenchCase { family, n, imp, timeout, seed })).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchOutcome {
    Solved,
    Unsat,
    Timeout,
}

impl fmt::Display for BenchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchOutcome::Solved => "solved",
            BenchOutcome::Unsat => "unsat",
            BenchOutcome::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub case: BenchCase,
    pub duration: Duration,
    pub stats: Stats,
    pub outcome: BenchOutcome,
    /// The labeled values of the solution found, if any.
    pub solution: Option<Vec<i64>>,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        let c = &self.case;
        format!(
            "{},{},{},{},{:.3},{},{},{}",
            c.family,
            c.n,
            c.imp,
            c.imp.k_column(),
            self.duration.as_secs_f64() * 1e3,
            self.stats.prop_runs,
            self.stats.speculations,
            self.outcome
        )
    }
}

/// An instance ready to be posted.
pub struct Model {
    pub store: Store,
    /// Constraints posted with the implementation under test.
    pub main: Vec<Ctr>,
    /// Plain arithmetic side constraints, posted the same way for everyone.
    pub side: Vec<Ctr>,
    pub label: Vec<VarId>,
    pub maximize: Option<VarId>,
    pub val_order: ValOrder,
}

fn bools(store: &mut Store, n: usize) -> Result<Vec<VarId>, SolveError> {
    (0..n).map(|_| store.new_var(IntDomain::range(0, 1))).collect()
}

fn exprs(vs: &[VarId]) -> Vec<Expr> {
    vs.iter().map(|&v| Expr::Var(v)).collect()
}

/// Builds the instance of `family` at size `n`.
pub fn model(family: Family, n: usize, seed: u64) -> Result<Model, SolveError> {
    if n == 0 {
        return Err(SolveError::InvalidArgument("benchmark size must be at least 1".into()));
    }
    let mut store = Store::new();
    let ni = n as i64;
    let m = match family {
        Family::Domain => {
            let l: Vec<VarId> = (0..n).map(|_| store.new_var(IntDomain::full())).collect::<Result<_, _>>()?;
            let x = store.new_var(IntDomain::full())?;
            let main =
                vec![Ctr::global(GlobalKind::Domctr, vec![GlobalArg::Expr(Expr::Var(x)), GlobalArg::List(exprs(&l))])];
            let side = vec![Ctr::rel(Expr::Var(x) * Expr::Var(x), RelOp::Lt, ni)];
            Model { store, main, side, label: l, maximize: Some(x), val_order: ValOrder::Ascending }
        }
        Family::Element => {
            let z = bools(&mut store, n)?;
            let h = store.new_var(IntDomain::range(0, ni))?;
            let i = store.new_var(IntDomain::range(1, ni))?;
            let j = store.new_var(IntDomain::full())?;
            let base = 2 * (ni / 2);
            let list: Vec<Expr> = (0..ni).map(|m| Expr::Const(base + 2 * m)).collect();
            let main = vec![Ctr::global(
                GlobalKind::Elemctr,
                vec![GlobalArg::Expr(Expr::Var(i)), GlobalArg::List(list), GlobalArg::Expr(Expr::Var(j))],
            )];
            let side = vec![
                Ctr::Sum(exprs(&z), RelOp::Eq, Expr::Var(h)),
                Ctr::eq(j, Expr::Var(h) * 2 + 1),
                Ctr::rel(i, RelOp::Le, 3),
            ];
            Model { store, main, side, label: z, maximize: None, val_order: ValOrder::Ascending }
        }
        Family::Lex => {
            let x = bools(&mut store, n)?;
            let y = bools(&mut store, n)?;
            let main =
                vec![Ctr::global(GlobalKind::Lexctr, vec![GlobalArg::List(exprs(&x)), GlobalArg::List(exprs(&y))])];
            let label = x.iter().chain(y.iter()).copied().collect();
            Model { store, main, side: Vec::new(), label, maximize: None, val_order: ValOrder::Descending }
        }
        Family::Mulctr => {
            let xs: Vec<VarId> = (0..n).map(|_| store.new_var(IntDomain::full())).collect::<Result<_, _>>()?;
            let main = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let a = 1 + (i as i64 % 4);
                    Ctr::global(
                        GlobalKind::Mulctr,
                        vec![
                            GlobalArg::Expr(Expr::Const(7)),
                            GlobalArg::Expr(Expr::Var(x)),
                            GlobalArg::Expr(Expr::Const(7 * a)),
                            GlobalArg::Expr(Expr::Const(7 * (a + 3) + 6)),
                        ],
                    )
                })
                .collect();
            Model { store, main, side: Vec::new(), label: xs, maximize: None, val_order: ValOrder::Descending }
        }
        Family::Disjunctive => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p: Vec<i64> = (0..n.max(2)).map(|_| rng.gen_range(1..=3)).collect();
            let total: i64 = p.iter().sum();
            let s: Vec<VarId> =
                (0..p.len()).map(|_| store.new_var(IntDomain::range(0, total))).collect::<Result<_, _>>()?;
            let h = store.new_var(IntDomain::full())?;
            let main = vec![Ctr::global(
                GlobalKind::Disjctr,
                vec![
                    GlobalArg::List(exprs(&s)),
                    GlobalArg::List(p.iter().map(|&d| Expr::Const(d)).collect()),
                    GlobalArg::Expr(Expr::Var(h)),
                ],
            )];
            Model { store, main, side: Vec::new(), label: s, maximize: None, val_order: ValOrder::Ascending }
        }
    };
    Ok(m)
}

/// Posts the model's constraints under `imp`.
pub fn post_model(m: &mut Model, imp: Impl, env: &mut Env) -> Result<Status, SolveError> {
    for c in &m.main {
        let st = match imp {
            Impl::Cd(_) => m.store.post(c, env)?,
            Impl::Reified => post_reified(&mut m.store, c, env)?,
        };
        if st == Status::Fail {
            return Ok(Status::Fail);
        }
    }
    for c in &m.side {
        if m.store.post(c, env)? == Status::Fail {
            return Ok(Status::Fail);
        }
    }
    Ok(if m.store.is_failed() { Status::Fail } else { Status::Suspend })
}

fn env_for(imp: Impl) -> Env {
    match imp {
        Impl::Cd(k) => Env::new(k),
        Impl::Reified => Env::new(KLimit::Unbounded),
    }
}

fn search(m: &mut Model, env: &mut Env) -> Result<Option<Vec<i64>>, SolveError> {
    let label = m.label.clone();
    let sol = match m.maximize {
        Some(obj) => search::maximize_with(&mut m.store, &label, obj, m.val_order, env)?,
        None => {
            let opts = LabelOptions { val_order: m.val_order, ..LabelOptions::default() };
            Labeling::new(&mut m.store, &label, opts, env).next().transpose()?
        }
    };
    Ok(sol.map(|s| label.iter().map(|&v| s.get(v).expect("labeled")).collect()))
}

/// Runs one case on the current thread.
pub fn run_case(case: &BenchCase) -> BenchRecord {
    let start = Instant::now();
    let mut env = env_for(case.imp).with_deadline(start + case.timeout);
    let result = model(case.family, case.n, case.seed).and_then(|mut m| {
        if post_model(&mut m, case.imp, &mut env)? == Status::Fail {
            return Ok(None);
        }
        search(&mut m, &mut env)
    });
    let duration = start.elapsed();
    let (outcome, solution) = match result {
        Ok(Some(s)) => (BenchOutcome::Solved, Some(s)),
        Ok(None) => (BenchOutcome::Unsat, None),
        Err(SolveError::Timeout) => (BenchOutcome::Timeout, None),
        Err(e) => panic!("benchmark instance {} n={} is malformed: {e}", case.family, case.n),
    };
    BenchRecord { case: case.clone(), duration, stats: env.stats, outcome, solution }
}

/// Runs every case, `jobs` at a time (`0` = all cores), and returns the
/// records in case order.
pub fn run_cases(cases: &[BenchCase], jobs: usize) -> Vec<BenchRecord> {
    parallel::par_map(cases, jobs, run_case)
}

/// Domains of the instance variables after the root fixpoint, or `None`
/// when it fails. Used to compare pruning across implementations.
pub fn root_domains(family: Family, n: usize, imp: Impl, seed: u64) -> Result<Option<Vec<IntDomain>>, SolveError> {
    let mut m = model(family, n, seed)?;
    let count = m.store.num_vars();
    let mut env = env_for(imp);
    if post_model(&mut m, imp, &mut env)? == Status::Fail {
        return Ok(None);
    }
    Ok(Some((0..count).map(|i| m.store.dom(VarId::from_index(i)).clone()).collect()))
}
