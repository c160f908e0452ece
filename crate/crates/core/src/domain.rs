//! Integer domains as canonical sets of closed intervals.
//!
//! A domain is a sorted list of disjoint, non-adjacent intervals. The first
//! lower bound may be `NegInf` and the last upper bound may be `PosInf`, so the
//! unconstrained domain `inf..sup` is representable without sentinel values.
//! Because the representation is canonical, structural equality is set
//! equality.

use std::cmp::Ordering;

/// An interval end point: an integer or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Bound {
    pub fn finite(self) -> Option<i64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    /// Converts a wide integer back to a bound, saturating to the
    /// infinities outside the `i64` range.
    pub fn from_i128(v: i128) -> Bound {
        if v > i64::MAX as i128 {
            Bound::PosInf
        } else if v < i64::MIN as i128 {
            Bound::NegInf
        } else {
            Bound::Finite(v as i64)
        }
    }

    /// Saturating successor; infinities are fixed points.
    pub fn succ(self) -> Bound {
        match self {
            Bound::Finite(v) => Bound::from_i128(v as i128 + 1),
            b => b,
        }
    }

    /// Saturating predecessor; infinities are fixed points.
    pub fn pred(self) -> Bound {
        match self {
            Bound::Finite(v) => Bound::from_i128(v as i128 - 1),
            b => b,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(v) => Bound::from_i128(-(v as i128)),
        }
    }

    /// Adds `delta`, mapping infinities to themselves.
    pub fn offset(self, delta: i64) -> Bound {
        match self {
            Bound::Finite(v) => Bound::from_i128(v as i128 + delta as i128),
            b => b,
        }
    }
}

fn clamp_lo(b: Bound) -> Bound {
    if b == Bound::PosInf {
        Bound::Finite(i64::MAX)
    } else {
        b
    }
}

fn clamp_hi(b: Bound) -> Bound {
    if b == Bound::NegInf {
        Bound::Finite(i64::MIN)
    } else {
        b
    }
}

impl From<i64> for Bound {
    fn from(v: i64) -> Self {
        Bound::Finite(v)
    }
}

/// A closed interval `lo..hi` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn new(lo: impl Into<Bound>, hi: impl Into<Bound>) -> Self {
        Interval { lo: lo.into(), hi: hi.into() }
    }

    fn size(&self) -> Option<u128> {
        match (self.lo, self.hi) {
            (Bound::Finite(a), Bound::Finite(b)) => Some((b as i128 - a as i128 + 1) as u128),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("bounds requested on an empty domain")]
pub struct EmptyDomain;

/// Canonical interval-set domain over the integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntDomain {
    intervals: Vec<Interval>,
}

impl IntDomain {
    pub fn empty() -> Self {
        IntDomain { intervals: Vec::new() }
    }

    /// `inf..sup`.
    pub fn full() -> Self {
        IntDomain { intervals: vec![Interval { lo: Bound::NegInf, hi: Bound::PosInf }] }
    }

    pub fn singleton(v: i64) -> Self {
        IntDomain { intervals: vec![Interval::new(v, v)] }
    }

    /// The interval `lo..hi`; empty when `lo > hi`.
    pub fn range(lo: impl Into<Bound>, hi: impl Into<Bound>) -> Self {
        let (lo, hi) = (lo.into(), hi.into());
        if lo > hi || lo == Bound::PosInf || hi == Bound::NegInf {
            return IntDomain::empty();
        }
        IntDomain { intervals: vec![Interval { lo, hi }] }
    }

    /// Builds a canonical domain from arbitrary (possibly overlapping,
    /// unsorted, or inverted) intervals. Inverted intervals are dropped.
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(items: I) -> Self {
        let mut v: Vec<Interval> =
            items.into_iter().filter(|i| i.lo <= i.hi && i.lo != Bound::PosInf && i.hi != Bound::NegInf).collect();
        v.sort_by_key(|a| a.lo);
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match out.last_mut() {
                Some(last) if i.lo <= last.hi.succ() => {
                    if i.hi > last.hi {
                        last.hi = i.hi;
                    }
                }
                _ => out.push(i),
            }
        }
        IntDomain { intervals: out }
    }

    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        Self::from_intervals(values.into_iter().map(|v| Interval::new(v, v)))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0].lo == Bound::NegInf && self.intervals[0].hi == Bound::PosInf
    }

    pub fn is_finite(&self) -> bool {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(f), Some(l)) => f.lo.is_finite() && l.hi.is_finite(),
            _ => true,
        }
    }

    pub fn min(&self) -> Result<Bound, EmptyDomain> {
        self.intervals.first().map(|i| i.lo).ok_or(EmptyDomain)
    }

    pub fn max(&self) -> Result<Bound, EmptyDomain> {
        self.intervals.last().map(|i| i.hi).ok_or(EmptyDomain)
    }

    pub fn bounds(&self) -> Result<(Bound, Bound), EmptyDomain> {
        Ok((self.min()?, self.max()?))
    }

    /// Number of values, `None` when unbounded.
    pub fn size(&self) -> Option<u128> {
        self.intervals.iter().try_fold(0u128, |acc, i| i.size().map(|s| acc + s))
    }

    pub fn is_singleton(&self) -> bool {
        self.value().is_some()
    }

    /// The single value of a singleton domain.
    pub fn value(&self) -> Option<i64> {
        match self.intervals.as_slice() {
            [Interval { lo: Bound::Finite(a), hi: Bound::Finite(b) }] if a == b => Some(*a),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        let b = Bound::Finite(v);
        self.intervals
            .binary_search_by(|i| {
                if i.hi < b {
                    Ordering::Less
                } else if i.lo > b {
                    Ordering::Greater
                } else {
                    Ordering::Equal
                }
            })
            .is_ok()
    }

    /// Interval hull `min..max`.
    pub fn hull(&self) -> IntDomain {
        match self.bounds() {
            Ok((lo, hi)) => IntDomain::range(lo, hi),
            Err(_) => IntDomain::empty(),
        }
    }

    pub fn union(&self, other: &IntDomain) -> IntDomain {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    pub fn intersect(&self, other: &IntDomain) -> IntDomain {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if lo <= hi {
                out.push(Interval { lo, hi });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntDomain { intervals: out }
    }

    /// Complement with respect to `inf..sup`.
    pub fn complement(&self) -> IntDomain {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut next = Bound::NegInf;
        for i in &self.intervals {
            if i.lo != Bound::NegInf {
                let hi = i.lo.pred();
                if next <= hi {
                    out.push(Interval { lo: next, hi });
                }
            }
            if i.hi == Bound::PosInf {
                return IntDomain { intervals: out };
            }
            next = i.hi.succ();
        }
        out.push(Interval { lo: next, hi: Bound::PosInf });
        IntDomain { intervals: out }
    }

    pub fn difference(&self, other: &IntDomain) -> IntDomain {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &IntDomain) -> bool {
        self.intersect(other) == *self
    }

    /// Pointwise translation by `delta`. Finite bounds that overflow stay
    /// at the extreme finite value on the inner side of the interval.
    pub fn shift(&self, delta: i64) -> IntDomain {
        if delta == 0 {
            return self.clone();
        }
        Self::from_intervals(
            self.intervals
                .iter()
                .map(|i| Interval { lo: clamp_lo(i.lo.offset(delta)), hi: clamp_hi(i.hi.offset(delta)) }),
        )
    }

    /// Pointwise negation.
    pub fn negate(&self) -> IntDomain {
        Self::from_intervals(self.intervals.iter().map(|i| Interval { lo: i.hi.neg(), hi: i.lo.neg() }))
    }

    pub fn remove(&self, v: i64) -> IntDomain {
        if !self.contains(v) {
            return self.clone();
        }
        self.difference(&IntDomain::singleton(v))
    }

    /// Iterates the values of a domain whose bounds are finite.
    pub fn values(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().flat_map(|i| match (i.lo, i.hi) {
            (Bound::Finite(a), Bound::Finite(b)) => a..=b,
            _ => panic!("cannot enumerate an unbounded domain"),
        })
    }

    /// Checks the canonical-form invariants.
    pub fn validate(&self) -> bool {
        let n = self.intervals.len();
        for (idx, i) in self.intervals.iter().enumerate() {
            if i.lo > i.hi || i.lo == Bound::PosInf || i.hi == Bound::NegInf {
                return false;
            }
            if i.lo == Bound::NegInf && idx != 0 {
                return false;
            }
            if i.hi == Bound::PosInf && idx != n - 1 {
                return false;
            }
            if idx + 1 < n {
                let next = self.intervals[idx + 1];
                if next.lo <= i.hi.succ() {
                    return false;
                }
            }
        }
        true
    }
}
