//! Constructive disjunction and stratified constraint propagation over
//! integer interval-set domains.

pub mod arith;
pub mod bench;
pub mod constructive;
pub mod ctr;
pub mod domain;
pub mod engine;
pub mod globals;
pub mod lang;
pub mod maxk;
pub mod oracle;
pub mod parallel;
pub mod reify;
pub mod search;

pub use arith::{Expr, RelOp};
pub use ctr::{Ctr, GlobalArg, GlobalCall, GlobalKind};
pub use domain::{Bound, IntDomain, Interval};
pub use engine::{Env, KLimit, SolveError, Status, Store, VarId};
