//! Unions of closed real intervals.

use serde::{Deserialize, Serialize};

/// Sorted, pairwise disjoint, non-touching closed intervals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
    total: f64,
}

impl IntervalSet {
    /// Union of arbitrary intervals by sort and sweep. Intervals that touch
    /// or overlap are merged; empty ones (`hi < lo`) are dropped.
    pub fn from_unsorted(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|&(lo, hi)| hi >= lo);
        raw.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(raw.len() / 4 + 1);
        for (lo, hi) in raw {
            match intervals.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => intervals.push((lo, hi)),
            }
        }
        let total = intervals.iter().map(|(lo, hi)| hi - lo).sum();
        IntervalSet { intervals, total }
    }

    /// Union length of the intervals without keeping them.
    pub fn union_length(raw: Vec<(f64, f64)>) -> f64 {
        IntervalSet::from_unsorted(raw).total
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|iv| iv.1 < x);
        self.intervals.get(i).is_some_and(|iv| iv.0 <= x)
    }

    /// Smallest interval containing the union.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }
}
