//! Deterministic depth-first labeling and branch-and-bound maximization.

use crate::ctr::Ctr;
use crate::domain::{Bound, IntDomain};
use crate::engine::{Env, Mark, SolveError, Status, Store, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarOrder {
    /// The order the variables were given in.
    #[default]
    Leftmost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelOptions {
    pub var_order: VarOrder,
    pub val_order: ValOrder,
    pub maximize: Option<VarId>,
}

/// Values of the labeled variables, in labeling order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    pub values: Vec<(VarId, i64)>,
}

impl Solution {
    pub fn get(&self, v: VarId) -> Option<i64> {
        self.values.iter().find(|(w, _)| *w == v).map(|&(_, x)| x)
    }

    pub fn tuple(&self) -> Vec<i64> {
        self.values.iter().map(|&(_, x)| x).collect()
    }
}

struct Frame {
    var: VarId,
    rest: IntDomain,
    mark: Option<Mark>,
}

/// Lazy enumeration of the solutions of a store, projected on `vars`.
///
/// Each value trial snapshots the store, assigns the value and propagates;
/// the store is back in its initial state once the iterator is exhausted
/// or dropped.
pub struct Labeling<'a> {
    store: &'a mut Store,
    env: &'a mut Env,
    vars: Vec<VarId>,
    opts: LabelOptions,
    stack: Vec<Frame>,
    root: Option<Mark>,
    started: bool,
    done: bool,
    bound: Option<i64>,
}

fn check_finite(store: &Store, vars: &[VarId]) -> Result<(), SolveError> {
    match vars.iter().find(|&&v| !store.dom(v).is_finite()) {
        Some(v) => Err(SolveError::Unbounded(format!("variable #{} has an infinite domain", v.index()))),
        None => Ok(()),
    }
}

impl<'a> Labeling<'a> {
    pub fn new(store: &'a mut Store, vars: &[VarId], opts: LabelOptions, env: &'a mut Env) -> Self {
        Labeling {
            store,
            env,
            vars: vars.to_vec(),
            opts,
            stack: Vec::new(),
            root: None,
            started: false,
            done: false,
            bound: None,
        }
    }

    fn next_value(&self, d: &IntDomain) -> Option<i64> {
        let b = match self.opts.val_order {
            ValOrder::Ascending => d.min().ok()?,
            ValOrder::Descending => d.max().ok()?,
        };
        b.finite()
    }

    /// Index of the first unfixed variable, if any.
    fn pending(&self) -> Option<VarId> {
        self.vars.iter().copied().find(|&v| !self.store.is_fixed(v))
    }

    fn push_next(&mut self) -> Option<VarId> {
        let v = self.pending()?;
        self.stack.push(Frame { var: v, rest: self.store.dom(v).clone(), mark: None });
        Some(v)
    }

    fn trial(&mut self, var: VarId, value: i64) -> Result<bool, SolveError> {
        self.env.stats.nodes += 1;
        let mut c = Ctr::InRange(var, IntDomain::singleton(value));
        if let (Some(obj), Some(b)) = (self.opts.maximize, self.bound) {
            c = Ctr::conj(Ctr::InRange(obj, IntDomain::range(Bound::from_i128(b as i128 + 1), Bound::PosInf)), c);
        }
        Ok(self.store.post(&c, self.env)? != Status::Fail)
    }

    /// Whether the remaining (typically auxiliary) variables admit some
    /// completion. Variables with infinite domains are left open.
    fn completes(&mut self) -> Result<bool, SolveError> {
        if self.store.live_propagators() == 0 {
            return Ok(true);
        }
        let Some(v) = self.store.vars().find(|&v| !self.store.is_fixed(v) && self.store.dom(v).is_finite()) else {
            return Ok(true);
        };
        let values: Vec<i64> = self.store.dom(v).values().collect();
        for x in values {
            let mark = self.store.snapshot();
            let ok = self.trial(v, x)? && self.completes()?;
            self.store.restore(mark)?;
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn solution(&self) -> Solution {
        Solution { values: self.vars.iter().map(|&v| (v, self.store.value(v).expect("labeled"))).collect() }
    }

    fn start(&mut self) -> Result<bool, SolveError> {
        self.started = true;
        if self.store.is_failed() || self.store.fixpoint(self.env)? == Status::Fail {
            return Ok(false);
        }
        check_finite(self.store, &self.vars)?;
        if let Some(obj) = self.opts.maximize {
            check_finite(self.store, &[obj])?;
        }
        self.root = Some(self.store.snapshot());
        Ok(true)
    }

    fn step(&mut self) -> Result<Option<Solution>, SolveError> {
        if !self.started {
            if !self.start()? {
                return Ok(None);
            }
            if self.push_next().is_none() {
                return Ok(self.completes()?.then(|| self.solution()));
            }
        }
        loop {
            let Some(top) = self.stack.last_mut() else {
                return Ok(None);
            };
            if let Some(m) = top.mark.take() {
                self.store.restore(m)?;
            }
            let top = self.stack.last().expect("nonempty");
            let Some(x) = self.next_value(&top.rest) else {
                self.stack.pop();
                continue;
            };
            let var = top.var;
            let mark = self.store.snapshot();
            let top = self.stack.last_mut().expect("nonempty");
            top.rest = top.rest.remove(x);
            top.mark = Some(mark);
            if !self.trial(var, x)? {
                continue;
            }
            if self.push_next().is_none() && self.completes()? {
                let s = self.solution();
                if let Some(obj) = self.opts.maximize {
                    self.bound = self.store.value(obj);
                }
                return Ok(Some(s));
            }
        }
    }

    fn finish(&mut self) {
        self.done = true;
        self.stack.clear();
        if let Some(m) = self.root.take() {
            let _ = self.store.restore(m);
        }
    }
}

impl Iterator for Labeling<'_> {
    type Item = Result<Solution, SolveError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(s)) => Some(Ok(s)),
            Ok(None) => {
                self.finish();
                None
            }
            Err(e) => {
                self.finish();
                Some(Err(e))
            }
        }
    }
}

impl Drop for Labeling<'_> {
    fn drop(&mut self) {
        if !self.done {
            self.finish();
        }
    }
}

/// Solutions of the store projected on `vars`, depth-first, leftmost
/// variable first, smallest value first.
pub fn label<'a>(store: &'a mut Store, vars: &[VarId], env: &'a mut Env) -> Labeling<'a> {
    Labeling::new(store, vars, LabelOptions::default(), env)
}

/// Every solution, collected.
pub fn all_solutions(store: &mut Store, vars: &[VarId], env: &mut Env) -> Result<Vec<Solution>, SolveError> {
    label(store, vars, env).collect()
}

/// Branch-and-bound: after each solution the objective must strictly
/// improve. Returns the last (best) solution, or `None` when unsatisfiable.
pub fn maximize(store: &mut Store, vars: &[VarId], obj: VarId, env: &mut Env) -> Result<Option<Solution>, SolveError> {
    maximize_with(store, vars, obj, ValOrder::Ascending, env)
}

/// [`maximize`] with an explicit value order. The objective is labeled
/// last when it is not among `vars`.
pub fn maximize_with(
    store: &mut Store,
    vars: &[VarId],
    obj: VarId,
    val_order: ValOrder,
    env: &mut Env,
) -> Result<Option<Solution>, SolveError> {
    let mut all = vars.to_vec();
    if !all.contains(&obj) {
        all.push(obj);
    }
    let opts = LabelOptions { maximize: Some(obj), val_order, ..LabelOptions::default() };
    let mut best = None;
    for s in Labeling::new(store, &all, opts, env) {
        best = Some(s?);
    }
    Ok(best)
}
