use std::fmt;

use serde::{Deserialize, Serialize};

/// Station identifier, drawn from `1..=p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub u32);

/// Task identifier, drawn from `1..=t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl StationId {
    /// Zero-based slot, for indexing per-station tables.
    #[inline]
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    #[inline]
    pub fn from_slot(slot: usize) -> Self {
        StationId(slot as u32 + 1)
    }
}

impl TaskId {
    #[inline]
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    #[inline]
    pub fn from_slot(slot: usize) -> Self {
        TaskId(slot as u32 + 1)
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// All stations `1..=p` in ascending order.
pub fn all_stations(p: usize) -> Vec<StationId> {
    (1..=p as u32).map(StationId).collect()
}
