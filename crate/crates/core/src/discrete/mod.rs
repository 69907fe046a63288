//! Discrete variables, assignments, decision trees and discrete-phase elimination.

mod conditional;
mod factor;
mod prune;
mod tree;

pub use conditional::{DiscreteConditional, DiscreteLookup};
pub(crate) use factor::safe_ln;
pub use factor::DiscreteFactor;
pub use prune::prune_to_top;
pub use tree::DecisionTree;

use crate::error::{Error, Result};
use crate::key::Key;
use std::collections::BTreeMap;
use std::fmt;

/// Default cap on the number of joint assignments any enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

/// A discrete variable: identifier plus cardinality `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteKey {
    pub key: Key,
    pub cardinality: usize,
}

impl DiscreteKey {
    pub fn new(key: impl Into<Key>, cardinality: usize) -> Result<Self> {
        if cardinality == 0 {
            return Err(Error::InvalidStructure("discrete key cardinality must be at least 1".into()));
        }
        Ok(DiscreteKey { key: key.into(), cardinality })
    }

    /// Binary key (cardinality 2).
    pub fn binary(key: impl Into<Key>) -> Self {
        DiscreteKey { key: key.into(), cardinality: 2 }
    }
}

impl fmt::Display for DiscreteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.key, self.cardinality)
    }
}

/// Values for a set of discrete variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteAssignment(BTreeMap<Key, usize>);

impl DiscreteAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: Key) -> Option<usize> {
        self.0.get(&key).copied()
    }

    pub fn insert(&mut self, key: Key, value: usize) -> Option<usize> {
        self.0.insert(key, value)
    }

    pub fn remove(&mut self, key: Key) -> Option<usize> {
        self.0.remove(&key)
    }

    pub fn contains(&self, key: Key) -> bool {
        self.0.contains_key(&key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, usize)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    /// Restriction of this assignment to `keys`.
    pub fn project(&self, keys: &[DiscreteKey]) -> DiscreteAssignment {
        keys.iter().filter_map(|dk| self.get(dk.key).map(|v| (dk.key, v))).collect()
    }

    /// True when both assignments agree on every shared key.
    pub fn is_consistent_with(&self, other: &DiscreteAssignment) -> bool {
        self.iter().all(|(k, v)| other.get(k).is_none_or(|w| w == v))
    }

    /// Checks every value against the cardinality of the matching key in `keys`.
    pub fn validate(&self, keys: &[DiscreteKey]) -> Result<()> {
        for dk in keys {
            if let Some(v) = self.get(dk.key) {
                if v >= dk.cardinality {
                    return Err(Error::InvalidAssignment(format!(
                        "{}={} out of range for cardinality {}",
                        dk.key, v, dk.cardinality
                    )));
                }
            }
        }
        Ok(())
    }
}

impl FromIterator<(Key, usize)> for DiscreteAssignment {
    fn from_iter<I: IntoIterator<Item = (Key, usize)>>(iter: I) -> Self {
        DiscreteAssignment(iter.into_iter().collect())
    }
}

impl Extend<(Key, usize)> for DiscreteAssignment {
    fn extend<I: IntoIterator<Item = (Key, usize)>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

impl fmt::Display for DiscreteAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, "}}")
    }
}

/// Number of joint assignments over `keys`, or an error past `cap`.
pub fn assignment_count(keys: &[DiscreteKey], cap: usize) -> Result<usize> {
    let mut count: u128 = 1;
    for dk in keys {
        count = count.saturating_mul(dk.cardinality as u128);
        if count > cap as u128 {
            let total = keys.iter().fold(1u128, |acc, k| acc.saturating_mul(k.cardinality as u128));
            return Err(Error::EnumerationTooLarge { count: total, cap });
        }
    }
    Ok(count as usize)
}

/// All joint assignments of `keys`, lexicographic by key id then value.
pub fn enumerate_assignments(keys: &[DiscreteKey]) -> Result<Vec<DiscreteAssignment>> {
    enumerate_assignments_with_cap(keys, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_assignments_with_cap(keys: &[DiscreteKey], cap: usize) -> Result<Vec<DiscreteAssignment>> {
    let sorted = sorted_unique_keys(keys)?;
    let count = assignment_count(&sorted, cap)?;
    Ok((0..count).map(|i| decode_index(&sorted, i)).collect())
}

/// Sorts keys by id and rejects duplicates with conflicting cardinalities.
pub(crate) fn sorted_unique_keys(keys: &[DiscreteKey]) -> Result<Vec<DiscreteKey>> {
    let mut sorted = keys.to_vec();
    sorted.sort_by_key(|k| k.key);
    let mut out: Vec<DiscreteKey> = Vec::with_capacity(sorted.len());
    for dk in sorted {
        if dk.cardinality == 0 {
            return Err(Error::InvalidStructure(format!("{} has cardinality 0", dk.key)));
        }
        match out.last() {
            Some(last) if last.key == dk.key => {
                if last.cardinality != dk.cardinality {
                    return Err(Error::InvalidStructure(format!(
                        "key {} used with cardinalities {} and {}",
                        dk.key, last.cardinality, dk.cardinality
                    )));
                }
            }
            _ => out.push(dk),
        }
    }
    Ok(out)
}

/// Union of two key lists, sorted by id.
pub(crate) fn union_keys(a: &[DiscreteKey], b: &[DiscreteKey]) -> Result<Vec<DiscreteKey>> {
    let mut all = a.to_vec();
    all.extend_from_slice(b);
    sorted_unique_keys(&all)
}

/// Decodes a row-major flat index (first key most significant) over sorted keys.
pub(crate) fn decode_index(keys: &[DiscreteKey], mut index: usize) -> DiscreteAssignment {
    let mut digits = vec![0usize; keys.len()];
    for (i, dk) in keys.iter().enumerate().rev() {
        digits[i] = index % dk.cardinality;
        index /= dk.cardinality;
    }
    keys.iter().zip(digits).map(|(dk, v)| (dk.key, v)).collect()
}
