//! Multi-threshold policies `(n1, n2)`: idle below `n1`, compressed on
//! `[n1, n2)`, uncompressed from `n2` on.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::Action;

/// A threshold position on the AoSI axis. `Infinite` means the segment it
/// opens is never reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Threshold {
    Finite(usize),
    Infinite,
}

impl Threshold {
    pub fn finite(self) -> Option<usize> {
        match self {
            Threshold::Finite(n) => Some(n),
            Threshold::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Threshold::Finite(_))
    }

    /// `true` when `s` lies at or beyond this threshold.
    pub fn reached_by(self, s: usize) -> bool {
        match self {
            Threshold::Finite(n) => s >= n,
            Threshold::Infinite => false,
        }
    }
}

impl Ord for Threshold {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Threshold::Finite(a), Threshold::Finite(b)) => a.cmp(b),
            (Threshold::Finite(_), Threshold::Infinite) => Ordering::Less,
            (Threshold::Infinite, Threshold::Finite(_)) => Ordering::Greater,
            (Threshold::Infinite, Threshold::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<usize> for Threshold {
    fn from(n: usize) -> Self {
        Threshold::Finite(n)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(n) => write!(f, "{n}"),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "+inf" => Ok(Threshold::Infinite),
            t => t
                .parse::<usize>()
                .map(Threshold::Finite)
                .map_err(|_| format!("invalid threshold `{t}` (expected a non-negative integer or `inf`)")),
        }
    }
}

// Finite thresholds serialize as JSON integers, infinite ones as "inf".
impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Threshold::Finite(n) => serializer.serialize_u64(*n as u64),
            Threshold::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(n) => Ok(Threshold::Finite(n as usize)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("threshold order violated: n1 = {n1} > n2 = {n2}")]
pub struct ThresholdOrderError {
    pub n1: Threshold,
    pub n2: Threshold,
}

/// Pair `(n1, n2)` with `n1 <= n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ThresholdPolicy {
    n1: Threshold,
    n2: Threshold,
}

impl<'de> Deserialize<'de> for ThresholdPolicy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n1: Threshold,
            n2: Threshold,
        }
        let r = Repr::deserialize(deserializer)?;
        ThresholdPolicy::new(r.n1, r.n2).map_err(serde::de::Error::custom)
    }
}

impl ThresholdPolicy {
    pub fn new(n1: impl Into<Threshold>, n2: impl Into<Threshold>) -> Result<Self, ThresholdOrderError> {
        let (n1, n2) = (n1.into(), n2.into());
        if n1 > n2 {
            return Err(ThresholdOrderError { n1, n2 });
        }
        Ok(ThresholdPolicy { n1, n2 })
    }

    /// Finite pair; panics if `n1 > n2`.
    pub fn finite(n1: usize, n2: usize) -> Self {
        Self::new(n1, n2).expect("n1 <= n2")
    }

    /// Idle everywhere.
    pub fn never_transmit() -> Self {
        ThresholdPolicy { n1: Threshold::Infinite, n2: Threshold::Infinite }
    }

    /// Idle below `n1`, compressed from `n1` on; never uncompressed.
    pub fn never_uncompressed(n1: usize) -> Self {
        ThresholdPolicy { n1: Threshold::Finite(n1), n2: Threshold::Infinite }
    }

    pub fn n1(&self) -> Threshold {
        self.n1
    }

    pub fn n2(&self) -> Threshold {
        self.n2
    }

    pub fn is_finite(&self) -> bool {
        self.n1.is_finite() && self.n2.is_finite()
    }

    pub fn action_at(&self, s: usize) -> Action {
        if self.n2.reached_by(s) {
            Action::Uncompressed
        } else if self.n1.reached_by(s) {
            Action::Compressed
        } else {
            Action::Idle
        }
    }
}

impl PartialOrd for ThresholdPolicy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on `(n1, n2)`, infinite after every finite value.
impl Ord for ThresholdPolicy {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n1, self.n2).cmp(&(other.n1, other.n2))
    }
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n1, self.n2)
    }
}
