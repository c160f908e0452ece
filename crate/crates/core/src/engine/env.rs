use std::time::Instant;

/// Stratification budget: how deep constructive operators may nest their
/// speculative propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KLimit {
    Finite(u32),
    Unbounded,
}

impl KLimit {
    /// Budget handed to a nested speculation. Saturates at zero.
    pub fn decrement(self) -> KLimit {
        match self {
            KLimit::Finite(k) => KLimit::Finite(k.saturating_sub(1)),
            KLimit::Unbounded => KLimit::Unbounded,
        }
    }

    pub fn is_zero(self) -> bool {
        self == KLimit::Finite(0)
    }
}

impl std::fmt::Display for KLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KLimit::Finite(k) => write!(f, "{k}"),
            KLimit::Unbounded => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for KLimit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "unbounded" => Ok(KLimit::Unbounded),
            _ => s.parse::<u32>().map(KLimit::Finite).map_err(|e| format!("bad k `{s}`: {e}")),
        }
    }
}

/// Machine-independent effort counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub prop_runs: u64,
    pub speculations: u64,
    pub snapshots: u64,
    pub nodes: u64,
}

/// Solving environment threaded through every filtering call.
#[derive(Debug, Clone)]
pub struct Env {
    /// Budget in effect for the propagation currently running. Constructive
    /// operators lower it around their speculations and restore it after.
    pub k: KLimit,
    pub stats: Stats,
    /// Use `(c1, c2)` instead of `c2` as the second branch of `=>`.
    pub strengthen_imp: bool,
    /// Largest tuple count enumerated by domain entailment before falling
    /// back to interval entailment.
    pub entail_cap: u128,
    pub deadline: Option<Instant>,
}

impl Default for Env {
    fn default() -> Self {
        Env::new(KLimit::Unbounded)
    }
}

impl Env {
    pub fn new(k: KLimit) -> Self {
        Env { k, stats: Stats::default(), strengthen_imp: false, entail_cap: 4096, deadline: None }
    }

    pub fn with_k(k: u32) -> Self {
        Env::new(KLimit::Finite(k))
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub(crate) fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}
