//! Propagation engine: variable store, propagator registry, FIFO fixpoint
//! queue, and a trail supporting nested snapshots for speculative
//! propagation.

mod env;
mod store;

pub use env::{Env, KLimit, Stats};
pub use store::{Mark, PropId, PropResult, Speculation, Store};

use std::fmt;

/// Handle to a variable of the [`Store`] that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Builds a handle from a raw index. The caller is responsible for the
    /// index being valid in the store it is used with.
    pub fn from_index(i: usize) -> Self {
        VarId(i as u32)
    }
}

/// Outcome of a filtering step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Fail,
    /// The constraint is entailed; the propagator is deregistered.
    Exit,
    /// The propagator stays subscribed.
    Suspend,
}

/// Which domain events wake a propagator on a given variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Wake {
    /// Any removal of values.
    Any,
    /// A change of the minimum or maximum.
    Bounds,
    /// The variable became a singleton.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Event {
    Domain,
    Bounds,
    Fixed,
}

impl Wake {
    pub(crate) fn triggered_by(self, ev: Event) -> bool {
        match self {
            Wake::Any => true,
            Wake::Bounds => ev != Event::Domain,
            Wake::Fixed => ev == Event::Fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("deadline exceeded")]
    Timeout,
    #[error("cannot negate global constraint `{0}`")]
    NegatedGlobal(String),
    #[error("initial domain of a new variable is empty")]
    EmptyInitialDomain,
    #[error("snapshot mark is stale or foreign to this store")]
    StaleMark,
    #[error("variable {0} has an unbounded domain and cannot be enumerated")]
    Unbounded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Non-local exit from filtering: a wiped-out domain or a hard error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Interrupt {
    Fail,
    Error(SolveError),
}

impl From<SolveError> for Interrupt {
    fn from(e: SolveError) -> Self {
        Interrupt::Error(e)
    }
}

pub type Filter<T = Status> = Result<T, Interrupt>;

/// A filtering procedure attached to a constraint.
///
/// `propagate` must only narrow domains. It reports `Exit` once the
/// constraint is entailed and `Suspend` otherwise; failures are signalled
/// through `Interrupt::Fail`, usually by letting a narrowing call bubble up.
pub trait Propagator: fmt::Debug + Send + Sync {
    fn propagate(&self, store: &mut Store, env: &mut Env) -> Filter;

    /// Whether a run already reaches a fixpoint of this propagator alone, so
    /// its own narrowing need not wake it again.
    fn idempotent(&self) -> bool {
        false
    }
}

/// Maps the filtering result of a top-level operation onto its public shape.
pub(crate) fn settle(r: Filter) -> Result<Status, SolveError> {
    match r {
        Ok(s) => Ok(s),
        Err(Interrupt::Fail) => Ok(Status::Fail),
        Err(Interrupt::Error(e)) => Err(e),
    }
}
