//! Influence schedules over a finite slot horizon.
//!
//! Slots are numbered 1..=T. A schedule is the set of slots in which the
//! external influencer acts; the budget caps its size at floor(b*T).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::util::tolerant_floor;

/// Horizon length T, budget fraction b, and the derived slot budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    t_total: u32,
    b: f64,
    budget: u32,
}

impl Horizon {
    pub fn new(t_total: u32, b: f64) -> Result<Self> {
        if t_total == 0 {
            return Err(Error::InvalidHorizon {
                reason: "horizon must have at least one slot".into(),
            });
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidHorizon {
                reason: format!("budget fraction must lie in [0, 1], got {b}"),
            });
        }
        let budget = tolerant_floor(b * t_total as f64) as u32;
        debug_assert!(budget <= t_total);
        Ok(Horizon { t_total, b, budget })
    }

    pub fn t_total(self) -> u32 {
        self.t_total
    }

    pub fn b(self) -> f64 {
        self.b
    }

    pub fn budget(self) -> u32 {
        self.budget
    }
}

/// Set of influenced slots, each in 1..=T, at most `budget` of them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InfluenceSchedule {
    slots: BTreeSet<u32>,
}

impl InfluenceSchedule {
    pub fn empty() -> Self {
        InfluenceSchedule {
            slots: BTreeSet::new(),
        }
    }

    pub fn new(slots: impl IntoIterator<Item = u32>, h: &Horizon) -> Result<Self> {
        let slots: BTreeSet<u32> = slots.into_iter().collect();
        if let Some(&bad) = slots.iter().find(|&&s| s < 1 || s > h.t_total()) {
            return Err(Error::InvalidSchedule {
                reason: format!("slot {bad} outside 1..={}", h.t_total()),
            });
        }
        if slots.len() > h.budget() as usize {
            return Err(Error::InvalidSchedule {
                reason: format!("{} slots exceed the budget of {}", slots.len(), h.budget()),
            });
        }
        Ok(InfluenceSchedule { slots })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, slot: u32) -> bool {
        self.slots.contains(&slot)
    }

    pub fn slots(&self) -> impl Iterator<Item = u32> + '_ {
        self.slots.iter().copied()
    }

    /// Dense influenced-or-not lookup indexed by slot; index 0 is unused.
    pub fn flags(&self, t_total: u32) -> Vec<bool> {
        let mut flags = vec![false; t_total as usize + 1];
        for &s in &self.slots {
            debug_assert!(s >= 1 && s <= t_total);
            flags[s as usize] = true;
        }
        flags
    }
}

impl fmt::Display for InfluenceSchedule {
    /// Sorted comma-separated slot list; empty schedule prints as "".
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.slots {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for InfluenceSchedule {
    type Err = Error;

    /// Inverse of Display. No budget to check against here; bounds are
    /// enforced when the schedule is attached to a horizon.
    fn from_str(s: &str) -> Result<Self> {
        let mut slots = BTreeSet::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let slot: u32 = tok.parse().map_err(|e| Error::InvalidSchedule {
                reason: format!("bad slot {tok:?}: {e}"),
            })?;
            if slot == 0 {
                return Err(Error::InvalidSchedule {
                    reason: "slots are numbered from 1".into(),
                });
            }
            slots.insert(slot);
        }
        Ok(InfluenceSchedule { slots })
    }
}

/// The first floor(bT) slots.
pub fn first_slots(h: &Horizon) -> InfluenceSchedule {
    InfluenceSchedule {
        slots: (1..=h.budget()).collect(),
    }
}

/// The last floor(bT) slots.
pub fn last_slots(h: &Horizon) -> InfluenceSchedule {
    InfluenceSchedule {
        slots: (h.t_total() - h.budget() + 1..=h.t_total()).collect(),
    }
}

/// Budget-many consecutive slots starting at t_start.
pub fn consecutive(h: &Horizon, t_start: u32) -> Result<InfluenceSchedule> {
    let max_start = h.t_total() - h.budget() + 1;
    if t_start < 1 || t_start > max_start {
        return Err(Error::WindowStartOutOfRange { t_start, max_start });
    }
    Ok(InfluenceSchedule {
        slots: (t_start..t_start + h.budget()).collect(),
    })
}

const ENUMERATION_CAP: u64 = 1_000_000;

/// C(n, k) if it stays at or below `cap`.
fn binomial_capped(n: u64, k: u64, cap: u64) -> Option<u64> {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Every size-budget subset of 1..=T, exactly once, in lexicographic order.
/// Rejected when C(T, budget) exceeds 10^6.
pub fn enumerate_all(h: &Horizon) -> Result<impl Iterator<Item = InfluenceSchedule>> {
    binomial_capped(h.t_total() as u64, h.budget() as u64, ENUMERATION_CAP).ok_or(
        Error::EnumerationTooLarge {
            cap: ENUMERATION_CAP,
        },
    )?;
    let iter = (1..=h.t_total())
        .combinations(h.budget() as usize)
        .map(|slots| InfluenceSchedule {
            slots: slots.into_iter().collect(),
        });
    Ok(iter)
}
