//! The maximal stratification budget of a query.

use crate::ctr::Ctr;
use crate::domain::IntDomain;
use crate::engine::{Env, KLimit, SolveError, Status, Store};
use crate::lang::Query;

/// Domains of the query variables after one fixpoint under budget `k`;
/// all empty when propagation fails.
pub fn stratum(q: &Query, k: KLimit, deadline: Option<std::time::Instant>) -> Result<Vec<IntDomain>, SolveError> {
    let mut store = Store::new();
    let vars: Vec<_> = q.names.iter().map(|_| store.new_var(IntDomain::full())).collect::<Result<_, _>>()?;
    let mut env = Env::new(k);
    env.deadline = deadline;
    Ok(match store.post(&q.body, &mut env)? {
        Status::Fail => vec![IntDomain::empty(); vars.len()],
        _ => vars.iter().map(|&v| store.dom(v).clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalK {
    /// `None` when the domains still changed between `kmax` and `kmax + 1`.
    pub k: Option<u32>,
    pub kmax: u32,
    /// Domains under budgets `0..=kmax + 1`.
    pub strata: Vec<Vec<IntDomain>>,
    /// Depth-based estimate; not guaranteed to agree with `k`.
    pub heuristic: usize,
}

impl std::fmt::Display for MaximalK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.k {
            Some(k) => write!(f, "{k}")?,
            None => write!(f, ">= {}", self.kmax)?,
        }
        write!(f, " (heuristic: {})", self.heuristic)
    }
}

/// Nesting depth of constructive operators, counting the outermost as one.
/// Taken as a guess for the maximal k.
pub fn depth_heuristic(c: &Ctr) -> usize {
    c.disjunctive_depth()
}

/// The greatest `k <= kmax` such that budget `k + 1` prunes nothing more
/// than `k`, while `k` itself still pruned more than `k - 1`.
pub fn maximal_k(q: &Query, kmax: u32) -> Result<MaximalK, SolveError> {
    let strata = (0..=kmax + 1).map(|k| stratum(q, KLimit::Finite(k), None)).collect::<Result<Vec<_>, _>>()?;
    let heuristic = depth_heuristic(&q.body);
    let stable = strata[kmax as usize] == strata[kmax as usize + 1];
    let k = stable.then(|| {
        (0..=kmax)
            .rev()
            .find(|&k| {
                let k = k as usize;
                strata[k] == strata[k + 1] && (k == 0 || strata[k] != strata[k - 1])
            })
            .expect("k = kmax or an earlier change point qualifies")
    });
    Ok(MaximalK { k, kmax, strata, heuristic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    const EXAMPLE7: &str = "cd(cd(X=0,cd(Y=4,Y=5)),X=9), cd(cd(Y=9,Y=6),cd(Y=2,Y=7)).";

    #[test]
    fn example_seven_is_three() {
        let r = maximal_k(&parse(EXAMPLE7).unwrap(), 6).unwrap();
        assert_eq!(r.k, Some(3));
        assert_eq!(r.heuristic, 3);
        assert_ne!(r.strata[1], r.strata[2]);
        assert_ne!(r.strata[2], r.strata[3]);
    }

    #[test]
    fn flat_and_plain() {
        let flat = parse("X in 1..9, (X#=2) cd (X#=5).").unwrap();
        assert_eq!(maximal_k(&flat, 4).unwrap().k, Some(1));
        let plain = parse("X in 1..9, X #> 3, Y #= X + 1.").unwrap();
        assert_eq!(maximal_k(&plain, 4).unwrap().k, Some(0));
        assert_eq!(depth_heuristic(&plain.body), 0);
    }

    #[test]
    fn not_stabilized() {
        let r = maximal_k(&parse(EXAMPLE7).unwrap(), 2).unwrap();
        assert_eq!(r.k, None);
        assert_eq!(r.to_string(), ">= 2 (heuristic: 3)");
    }
}
