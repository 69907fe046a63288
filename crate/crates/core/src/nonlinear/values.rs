use super::Pose2;
use crate::error::{Error, Result};
use crate::gaussian::VectorValues;
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::{DVector, Vector3};
use std::collections::BTreeMap;

/// Value of one continuous variable on its manifold.
#[derive(Clone, Debug, PartialEq)]
pub enum Variable<T: Scalar> {
    Pose2(Pose2<T>),
    Vector(DVector<T>),
}

impl<T: Scalar> Variable<T> {
    /// Tangent-space dimension.
    pub fn dim(&self) -> usize {
        match self {
            Variable::Pose2(_) => 3,
            Variable::Vector(v) => v.len(),
        }
    }

    pub fn retract(&self, delta: &DVector<T>) -> Result<Self> {
        if delta.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "update of dimension {} for a variable of dimension {}",
                delta.len(),
                self.dim()
            )));
        }
        Ok(match self {
            Variable::Pose2(p) => Variable::Pose2(p.retract(&Vector3::new(delta[0], delta[1], delta[2]))),
            Variable::Vector(v) => Variable::Vector(v + delta),
        })
    }

    /// Tangent vector taking `self` to `other`.
    pub fn local(&self, other: &Variable<T>) -> Result<DVector<T>> {
        match (self, other) {
            (Variable::Pose2(a), Variable::Pose2(b)) => Ok(DVector::from_column_slice(a.local(b).as_slice())),
            (Variable::Vector(a), Variable::Vector(b)) if a.len() == b.len() => Ok(b - a),
            _ => Err(Error::DimensionMismatch("local coordinates between incompatible variables".into())),
        }
    }
}

/// Linearization point: a value for every continuous variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Values<T: Scalar>(BTreeMap<Key, Variable<T>>);

impl<T: Scalar> Values<T> {
    pub fn new() -> Self {
        Values(BTreeMap::new())
    }

    pub fn insert(&mut self, key: Key, value: Variable<T>) -> Option<Variable<T>> {
        self.0.insert(key, value)
    }

    pub fn insert_pose(&mut self, key: Key, pose: Pose2<T>) {
        self.0.insert(key, Variable::Pose2(pose));
    }

    pub fn insert_vector(&mut self, key: Key, v: DVector<T>) {
        self.0.insert(key, Variable::Vector(v));
    }

    pub fn get(&self, key: Key) -> Result<&Variable<T>> {
        self.0.get(&key).ok_or_else(|| Error::IncompleteValues(format!("no value for {key}")))
    }

    pub fn pose(&self, key: Key) -> Result<Pose2<T>> {
        match self.get(key)? {
            Variable::Pose2(p) => Ok(*p),
            Variable::Vector(_) => Err(Error::InvalidStructure(format!("{key} is not a pose"))),
        }
    }

    pub fn vector(&self, key: Key) -> Result<&DVector<T>> {
        match self.get(key)? {
            Variable::Vector(v) => Ok(v),
            Variable::Pose2(_) => Err(Error::InvalidStructure(format!("{key} is not a vector"))),
        }
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

    pub fn iter(&self) -> impl Iterator<Item = (Key, &Variable<T>)> + '_ {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    pub fn dim(&self, key: Key) -> Result<usize> {
        Ok(self.get(key)?.dim())
    }

    /// Applies `delta` to every variable it mentions; others are unchanged.
    pub fn retract(&self, delta: &VectorValues<T>) -> Result<Self> {
        let mut out = self.clone();
        for (k, d) in delta.iter() {
            let v = out.get(k)?.retract(d)?;
            out.0.insert(k, v);
        }
        Ok(out)
    }

    /// Retracts a single variable.
    pub fn retract_one(&self, key: Key, delta: &DVector<T>) -> Result<Self> {
        let mut out = self.clone();
        let v = out.get(key)?.retract(delta)?;
        out.0.insert(key, v);
        Ok(out)
    }

    /// Tangent vectors taking `self` to `other` for every shared key.
    pub fn local(&self, other: &Values<T>) -> Result<VectorValues<T>> {
        let mut out = VectorValues::new();
        for (k, v) in self.iter() {
            if let Ok(w) = other.get(k) {
                out.insert(k, v.local(w)?);
            }
        }
        Ok(out)
    }
}

impl<T: Scalar> FromIterator<(Key, Variable<T>)> for Values<T> {
    fn from_iter<I: IntoIterator<Item = (Key, Variable<T>)>>(iter: I) -> Self {
        Values(iter.into_iter().collect())
    }
}
