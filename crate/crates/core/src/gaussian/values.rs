use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::DVector;
use std::collections::BTreeMap;

/// Continuous variable values (or updates) keyed by variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorValues<T: Scalar> {
    values: BTreeMap<Key, DVector<T>>,
}

impl<T: Scalar> VectorValues<T> {
    pub fn new() -> Self {
        VectorValues { values: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: Key, value: DVector<T>) -> Option<DVector<T>> {
        self.values.insert(key, value)
    }

    pub fn get(&self, key: Key) -> Option<&DVector<T>> {
        self.values.get(&key)
    }

    /// Like [`VectorValues::get`] but reports a missing key as an error.
    pub fn at(&self, key: Key) -> Result<&DVector<T>> {
        self.values.get(&key).ok_or_else(|| Error::IncompleteValues(format!("no value for {key}")))
    }

    pub fn contains(&self, key: Key) -> bool {
        self.values.contains_key(&key)
    }

    pub fn remove(&mut self, key: Key) -> Option<DVector<T>> {
        self.values.remove(&key)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Key, &DVector<T>)> + '_ {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    /// Largest absolute entry over all vectors.
    pub fn max_abs(&self) -> T {
        self.values.values().flat_map(|v| v.iter()).fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Overwrites/extends with the entries of `other`.
    pub fn extend(&mut self, other: &VectorValues<T>) {
        for (k, v) in other.iter() {
            self.values.insert(k, v.clone());
        }
    }
}

impl<T: Scalar> FromIterator<(Key, DVector<T>)> for VectorValues<T> {
    fn from_iter<I: IntoIterator<Item = (Key, DVector<T>)>>(iter: I) -> Self {
        VectorValues { values: iter.into_iter().collect() }
    }
}
