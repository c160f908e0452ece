use std::collections::VecDeque;
use std::sync::Arc;

use super::{settle, Env, Event, Filter, Interrupt, Propagator, SolveError, Status, VarId, Wake};
use crate::constructive;
use crate::ctr::Ctr;
use crate::domain::{Bound, IntDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(u32);

#[derive(Debug)]
struct Slot {
    prop: Arc<dyn Propagator>,
    alive: bool,
    queued: bool,
    /// Speculation depth at which the propagator is currently executing.
    running: Option<u32>,
    /// Set when the running propagator narrowed one of its own variables.
    touched: bool,
}

#[derive(Debug)]
enum Trail {
    Domain(VarId, IntDomain),
    Revive(PropId),
}

/// Restoration point produced by [`Store::snapshot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    id: u64,
    trail: usize,
    props: usize,
    vars: usize,
    failed: bool,
}

/// Domains of a speculatively propagated constraint, already rolled back
/// in the store. `domains` is `None` when propagation failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Speculation {
    pub domains: Option<Vec<IntDomain>>,
    pub status: Status,
}

/// Filtered domains projected on the variables of a constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropResult {
    pub domains: Vec<(VarId, IntDomain)>,
    pub status: Status,
}

/// Variables, their domains, and the posted propagators.
///
/// A store is single-threaded. Every domain update is trailed so that
/// [`Store::restore`] rewinds to a [`Mark`] bit-identically, including
/// variables and propagators created after the mark.
#[derive(Debug, Default)]
pub struct Store {
    domains: Vec<IntDomain>,
    subs: Vec<Vec<(PropId, Wake)>>,
    props: Vec<Slot>,
    queue: VecDeque<PropId>,
    trail: Vec<Trail>,
    marks: Vec<u64>,
    next_mark: u64,
    depth: u32,
    failed: bool,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn new_var(&mut self, initial: IntDomain) -> Result<VarId, SolveError> {
        if initial.is_empty() {
            return Err(SolveError::EmptyInitialDomain);
        }
        let id = VarId(self.domains.len() as u32);
        self.domains.push(initial);
        self.subs.push(Vec::new());
        Ok(id)
    }

    pub(crate) fn new_bool(&mut self) -> VarId {
        self.new_var(IntDomain::range(0, 1)).expect("nonempty")
    }

    pub fn num_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        (0..self.domains.len() as u32).map(VarId)
    }

    pub fn dom(&self, v: VarId) -> &IntDomain {
        &self.domains[v.index()]
    }

    pub fn value(&self, v: VarId) -> Option<i64> {
        self.dom(v).value()
    }

    pub fn is_fixed(&self, v: VarId) -> bool {
        self.dom(v).is_singleton()
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    /// Speculation nesting level; zero for live propagation.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn live_propagators(&self) -> usize {
        self.props.iter().filter(|s| s.alive).count()
    }

    // ---- narrowing -------------------------------------------------------

    /// Narrows `v` to `dom(v) ∩ d`. Returns whether the domain changed.
    pub fn intersect(&mut self, v: VarId, d: &IntDomain) -> Filter<bool> {
        let new = self.dom(v).intersect(d);
        self.update(v, new)
    }

    pub fn set_min(&mut self, v: VarId, lo: Bound) -> Filter<bool> {
        if lo == Bound::NegInf || self.dom(v).min().is_ok_and(|m| m >= lo) {
            return Ok(false);
        }
        self.intersect(v, &IntDomain::range(lo, Bound::PosInf))
    }

    pub fn set_max(&mut self, v: VarId, hi: Bound) -> Filter<bool> {
        if hi == Bound::PosInf || self.dom(v).max().is_ok_and(|m| m <= hi) {
            return Ok(false);
        }
        self.intersect(v, &IntDomain::range(Bound::NegInf, hi))
    }

    pub fn assign(&mut self, v: VarId, value: i64) -> Filter<bool> {
        self.intersect(v, &IntDomain::singleton(value))
    }

    pub fn remove_value(&mut self, v: VarId, value: i64) -> Filter<bool> {
        if !self.dom(v).contains(value) {
            return Ok(false);
        }
        let new = self.dom(v).remove(value);
        self.update(v, new)
    }

    fn update(&mut self, v: VarId, new: IntDomain) -> Filter<bool> {
        let old = &self.domains[v.index()];
        if *old == new {
            return Ok(false);
        }
        debug_assert!(new.is_subset(old), "propagation must be contracting");
        let ev = if new.is_singleton() {
            Event::Fixed
        } else if new.min() != old.min() || new.max() != old.max() {
            Event::Bounds
        } else {
            Event::Domain
        };
        let empty = new.is_empty();
        let old = std::mem::replace(&mut self.domains[v.index()], new);
        self.trail.push(Trail::Domain(v, old));
        if empty {
            self.failed = true;
            return Err(Interrupt::Fail);
        }
        self.wake(v, ev);
        Ok(true)
    }

    fn wake(&mut self, v: VarId, ev: Event) {
        let depth = self.depth;
        for &(p, w) in &self.subs[v.index()] {
            if !w.triggered_by(ev) {
                continue;
            }
            let slot = &mut self.props[p.0 as usize];
            if !slot.alive {
                continue;
            }
            match slot.running {
                Some(d) => {
                    if d == depth {
                        slot.touched = true;
                    }
                }
                None => {
                    if !slot.queued {
                        slot.queued = true;
                        self.queue.push_back(p);
                    }
                }
            }
        }
    }

    // ---- registry --------------------------------------------------------

    /// Registers a propagator and queues it for its first run.
    pub fn register(&mut self, prop: Arc<dyn Propagator>, watch: &[(VarId, Wake)]) -> PropId {
        let id = self.subscribe(prop, watch);
        self.props[id.0 as usize].queued = true;
        self.queue.push_back(id);
        id
    }

    fn subscribe(&mut self, prop: Arc<dyn Propagator>, watch: &[(VarId, Wake)]) -> PropId {
        let id = PropId(self.props.len() as u32);
        self.props.push(Slot { prop, alive: true, queued: false, running: None, touched: false });
        let mut seen: Vec<(VarId, Wake)> = Vec::with_capacity(watch.len());
        for &(v, w) in watch {
            match seen.iter_mut().find(|(u, _)| *u == v) {
                Some(entry) => entry.1 = entry.1.min(w),
                None => seen.push((v, w)),
            }
        }
        for (v, w) in seen {
            self.subs[v.index()].push((id, w));
        }
        id
    }

    /// Runs `prop` once and registers it only if it suspends.
    pub(crate) fn run_and_register(
        &mut self,
        prop: Arc<dyn Propagator>,
        watch: &[(VarId, Wake)],
        env: &mut Env,
    ) -> Filter<()> {
        env.stats.prop_runs += 1;
        match prop.propagate(self, env)? {
            Status::Exit => Ok(()),
            Status::Fail => {
                self.failed = true;
                Err(Interrupt::Fail)
            }
            Status::Suspend => {
                let idem = prop.idempotent();
                let id = self.subscribe(prop, watch);
                if !idem {
                    self.props[id.0 as usize].queued = true;
                    self.queue.push_back(id);
                }
                Ok(())
            }
        }
    }

    fn kill(&mut self, p: PropId) {
        let slot = &mut self.props[p.0 as usize];
        if slot.alive {
            slot.alive = false;
            self.trail.push(Trail::Revive(p));
        }
    }

    fn clear_queue(&mut self) {
        for p in self.queue.drain(..) {
            self.props[p.0 as usize].queued = false;
        }
    }

    // ---- propagation -----------------------------------------------------

    /// Runs queued propagators until no domain changes.
    pub(crate) fn run_queue(&mut self, env: &mut Env) -> Filter<()> {
        if self.failed {
            self.clear_queue();
            return Err(Interrupt::Fail);
        }
        while let Some(p) = self.queue.pop_front() {
            let idx = p.0 as usize;
            let slot = &mut self.props[idx];
            slot.queued = false;
            if !slot.alive {
                continue;
            }
            if env.expired() {
                self.clear_queue();
                return Err(Interrupt::Error(SolveError::Timeout));
            }
            slot.running = Some(self.depth);
            slot.touched = false;
            let prop = Arc::clone(&slot.prop);
            env.stats.prop_runs += 1;
            let r = prop.propagate(self, env);
            let slot = &mut self.props[idx];
            slot.running = None;
            match r {
                Ok(Status::Exit) => self.kill(p),
                Ok(Status::Suspend) => {
                    if slot.touched && !slot.queued && !slot.prop.idempotent() {
                        slot.queued = true;
                        self.queue.push_back(p);
                    }
                }
                Ok(Status::Fail) | Err(Interrupt::Fail) => {
                    self.failed = true;
                    self.clear_queue();
                    return Err(Interrupt::Fail);
                }
                Err(e) => {
                    self.clear_queue();
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    /// Propagates to fixpoint.
    pub fn fixpoint(&mut self, env: &mut Env) -> Result<Status, SolveError> {
        settle(self.run_queue(env).map(|_| Status::Exit))
    }

    /// Posts `c`, propagates to fixpoint, and reports the status of the
    /// posted constraint tree: `Exit` when none of its propagators survive.
    pub fn post(&mut self, c: &Ctr, env: &mut Env) -> Result<Status, SolveError> {
        self.post_with(env, |s, e| constructive::add(s, c, e))
    }

    pub(crate) fn post_with(
        &mut self,
        env: &mut Env,
        add: impl FnOnce(&mut Store, &mut Env) -> Filter<()>,
    ) -> Result<Status, SolveError> {
        if self.failed {
            return Ok(Status::Fail);
        }
        let first = self.props.len();
        let r = add(self, env).and_then(|_| self.run_queue(env));
        if r == Err(Interrupt::Fail) {
            self.failed = true;
            self.clear_queue();
        }
        settle(r.map(|_| self.status_since(first)))
    }

    fn status_since(&self, first: usize) -> Status {
        if self.props[first..].iter().any(|s| s.alive) {
            Status::Suspend
        } else {
            Status::Exit
        }
    }

    // ---- trail -----------------------------------------------------------

    pub fn snapshot(&mut self) -> Mark {
        let id = self.next_mark;
        self.next_mark += 1;
        self.marks.push(id);
        Mark { id, trail: self.trail.len(), props: self.props.len(), vars: self.domains.len(), failed: self.failed }
    }

    /// Rewinds every change made after `mark`. Restoring an older mark
    /// discards the marks taken after it.
    pub fn restore(&mut self, mark: Mark) -> Result<(), SolveError> {
        let pos = self.marks.iter().rposition(|&m| m == mark.id).ok_or(SolveError::StaleMark)?;
        self.marks.truncate(pos);
        self.clear_queue();
        while self.trail.len() > mark.trail {
            match self.trail.pop().expect("nonempty") {
                Trail::Domain(v, d) => {
                    if v.index() < self.domains.len() {
                        self.domains[v.index()] = d;
                    }
                }
                Trail::Revive(p) => {
                    if let Some(slot) = self.props.get_mut(p.0 as usize) {
                        slot.alive = true;
                    }
                }
            }
        }
        self.props.truncate(mark.props);
        self.domains.truncate(mark.vars);
        self.subs.truncate(mark.vars);
        let limit = mark.props as u32;
        for list in &mut self.subs {
            while list.last().is_some_and(|(p, _)| p.0 >= limit) {
                list.pop();
            }
        }
        self.failed = mark.failed;
        Ok(())
    }

    /// Propagates `c` inside a snapshot, copies the domains of `vars`, and
    /// rolls everything back. The pending queue of the caller is preserved.
    pub(crate) fn speculate_raw(&mut self, c: &Ctr, vars: &[VarId], env: &mut Env) -> Filter<Option<Vec<IntDomain>>> {
        let outer: Vec<PropId> = self.queue.drain(..).collect();
        for p in &outer {
            self.props[p.0 as usize].queued = false;
        }
        env.stats.speculations += 1;
        let mark = self.snapshot();
        self.depth += 1;
        let r = constructive::add(self, c, env).and_then(|_| self.run_queue(env));
        let out = match r {
            Ok(()) => Ok(Some(vars.iter().map(|&v| self.dom(v).clone()).collect())),
            Err(Interrupt::Fail) => Ok(None),
            Err(e) => Err(e),
        };
        self.depth -= 1;
        self.restore(mark).expect("speculation mark is on top");
        for p in outer {
            let slot = &mut self.props[p.0 as usize];
            if !slot.queued {
                slot.queued = true;
                self.queue.push_back(p);
            }
        }
        out
    }

    /// Speculatively propagates `c` and returns the domains of `vars` it
    /// would produce. The store is left unchanged.
    pub fn speculate(&mut self, c: &Ctr, vars: &[VarId], env: &mut Env) -> Result<Speculation, SolveError> {
        if self.failed {
            return Ok(Speculation { domains: None, status: Status::Fail });
        }
        match self.speculate_raw(c, vars, env) {
            Ok(Some(d)) => Ok(Speculation { domains: Some(d), status: Status::Suspend }),
            Ok(None) => Ok(Speculation { domains: None, status: Status::Fail }),
            Err(Interrupt::Fail) => Ok(Speculation { domains: None, status: Status::Fail }),
            Err(Interrupt::Error(e)) => Err(e),
        }
    }

    /// Filters `c` with the budget `env.k` and returns the resulting domains
    /// of `vars(c)`, leaving the store untouched.
    pub fn propagate_k(&mut self, c: &Ctr, env: &mut Env) -> Result<PropResult, SolveError> {
        let vars = c.vars();
        if self.failed {
            return Ok(PropResult {
                domains: vars.into_iter().map(|v| (v, IntDomain::empty())).collect(),
                status: Status::Fail,
            });
        }
        let mark = self.snapshot();
        let first = self.props.len();
        let r = constructive::add(self, c, env).and_then(|_| self.run_queue(env));
        let res = match r {
            Ok(()) => Ok(PropResult {
                domains: vars.iter().map(|&v| (v, self.dom(v).clone())).collect(),
                status: self.status_since(first),
            }),
            Err(Interrupt::Fail) => Ok(PropResult {
                domains: vars.iter().map(|&v| (v, IntDomain::empty())).collect(),
                status: Status::Fail,
            }),
            Err(Interrupt::Error(e)) => Err(e),
        };
        self.restore(mark)?;
        res
    }
}
