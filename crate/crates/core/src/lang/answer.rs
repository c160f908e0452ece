use std::time::{Duration, Instant};

use crate::ctr::Ctr;
use crate::domain::IntDomain;
use crate::engine::{Env, KLimit, SolveError, Stats, Status, Store, VarId};
use crate::search;

use super::printer::format_domain;
use super::{parse, ParseError, Query};

/// Renders variable domains the way the toplevel prints answers: bound
/// variables first as `V = k`, then `V in Range` in the given order, with
/// variables sharing an identical finite domain grouped as `A,B in Range`.
pub fn print_answer(store: &Store, vars: &[(String, VarId)]) -> String {
    let mut parts = Vec::new();
    for (name, v) in vars {
        if let Some(k) = store.value(*v) {
            parts.push(format!("{name} = {k}"));
        }
    }
    let open: Vec<(&str, &IntDomain)> =
        vars.iter().filter(|(_, v)| !store.is_fixed(*v)).map(|(n, v)| (n.as_str(), store.dom(*v))).collect();
    let mut used = vec![false; open.len()];
    for i in 0..open.len() {
        if used[i] {
            continue;
        }
        let (name, d) = open[i];
        let mut names = vec![name];
        if d.is_finite() {
            for j in i + 1..open.len() {
                if !used[j] && open[j].1 == d {
                    used[j] = true;
                    names.push(open[j].0);
                }
            }
        }
        parts.push(format!("{} in {}", names.join(","), format_domain(d)));
    }
    parts.join(", ")
}

/// Variables worth printing: those whose final domain differs from what
/// their top-level `in` declarations already state.
pub fn visible_vars(q: &Query, store: &Store) -> Vec<(String, VarId)> {
    let mut declared: Vec<Option<IntDomain>> = vec![None; q.names.len()];
    for c in q.body.conjuncts() {
        if let Ctr::InRange(v, d) = c {
            let slot = &mut declared[v.index()];
            *slot = Some(slot.as_ref().map_or_else(|| d.clone(), |old| old.intersect(d)));
        }
    }
    q.names
        .iter()
        .enumerate()
        .filter(|&(i, _)| declared[i].as_ref() != Some(store.dom(VarId::from_index(i))))
        .filter(|(_, n)| !n.starts_with('_'))
        .map(|(i, n)| (n.clone(), VarId::from_index(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Show {
    #[default]
    Visible,
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the query's own `kflag`.
    pub k: Option<KLimit>,
    pub timeout: Option<Duration>,
    /// Variables to label to a first solution; `None` only propagates.
    pub label: Option<Show>,
    pub show: Show,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Propagation entailed everything, or labeling found a solution.
    Solved,
    /// A fixpoint with constraints still pending.
    Suspended,
    Unsat,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct Answer {
    pub outcome: Outcome,
    pub k: KLimit,
    pub text: String,
    pub domains: Vec<(String, IntDomain)>,
    pub stats: Stats,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn resolve(q: &Query, store: &Store, sel: &Show) -> Result<Vec<(String, VarId)>, RunError> {
    Ok(match sel {
        Show::Visible => visible_vars(q, store),
        Show::All => q.names.iter().enumerate().map(|(i, n)| (n.clone(), VarId::from_index(i))).collect(),
        Show::Vars(names) => names
            .iter()
            .map(|n| q.var(n).map(|v| (n.clone(), v)).ok_or_else(|| RunError::Usage(format!("unknown variable `{n}`"))))
            .collect::<Result<_, _>>()?,
    })
}

fn answer(outcome: Outcome, k: KLimit, text: String, env: &Env) -> Answer {
    Answer { outcome, k, text, domains: Vec::new(), stats: env.stats }
}

/// Parses, posts and optionally labels a query, then renders the answer.
pub fn run(text: &str, opts: &RunOptions) -> Result<Answer, RunError> {
    let q = parse(text)?;
    let k = opts.k.unwrap_or(q.k);
    let mut env = Env::new(k);
    if let Some(t) = opts.timeout {
        env.deadline = Some(Instant::now() + t);
    }
    let mut store = Store::new();
    for _ in &q.names {
        store.new_var(IntDomain::full())?;
    }
    let mut status = match store.post(&q.body, &mut env) {
        Ok(s) => s,
        Err(SolveError::Timeout) => return Ok(answer(Outcome::Timeout, k, "timeout".into(), &env)),
        Err(e) => return Err(e.into()),
    };
    if status != Status::Fail {
        if let Some(sel) = &opts.label {
            let vars: Vec<VarId> = resolve(&q, &store, sel)?.into_iter().map(|(_, v)| v).collect();
            let first = search::label(&mut store, &vars, &mut env).next();
            match first {
                None => status = Status::Fail,
                Some(Err(SolveError::Timeout)) => return Ok(answer(Outcome::Timeout, k, "timeout".into(), &env)),
                Some(Err(SolveError::Unbounded(m))) => return Err(RunError::Usage(format!("cannot label: {m}"))),
                Some(Err(e)) => return Err(e.into()),
                Some(Ok(sol)) => {
                    let fix = Ctr::conj_all(sol.values.iter().map(|&(v, x)| Ctr::InRange(v, IntDomain::singleton(x))));
                    store.post(&fix, &mut env)?;
                    status = Status::Exit;
                }
            }
        }
    }
    if status == Status::Fail {
        return Ok(answer(Outcome::Unsat, k, "no".into(), &env));
    }
    let shown = resolve(&q, &store, &opts.show)?;
    let text = if shown.is_empty() { "yes".to_string() } else { print_answer(&store, &shown) };
    let outcome = if status == Status::Exit { Outcome::Solved } else { Outcome::Suspended };
    let mut a = answer(outcome, k, text, &env);
    a.domains = shown.into_iter().map(|(n, v)| (n, store.dom(v).clone())).collect();
    Ok(a)
}
