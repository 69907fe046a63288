use crate::error::{Error, Result};
use crate::hybrid::HybridGaussianFactorGraph;
use crate::key::Key;
use crate::scalar::Scalar;
use std::collections::{BTreeMap, BTreeSet};

/// Strong elimination ordering: every continuous variable before any discrete one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ordering {
    continuous: Vec<Key>,
    discrete: Vec<Key>,
}

impl Ordering {
    pub fn new(continuous: Vec<Key>, discrete: Vec<Key>) -> Self {
        Ordering { continuous, discrete }
    }

    pub fn continuous(&self) -> &[Key] {
        &self.continuous
    }

    pub fn discrete(&self) -> &[Key] {
        &self.discrete
    }

    /// All keys, continuous block first.
    pub fn iter(&self) -> impl Iterator<Item = Key> + '_ {
        self.continuous.iter().chain(&self.discrete).copied()
    }

    /// Checks that the ordering lists each variable of `graph` exactly once.
    pub fn validate<T: Scalar>(&self, graph: &HybridGaussianFactorGraph<T>) -> Result<()> {
        let continuous: BTreeSet<Key> = graph.continuous_keys()?.into_keys().collect();
        let discrete: BTreeSet<Key> = graph.discrete_keys()?.into_iter().map(|k| k.key).collect();
        check_block(&self.continuous, &continuous, "continuous")?;
        check_block(&self.discrete, &discrete, "discrete")
    }
}

fn check_block(order: &[Key], expected: &BTreeSet<Key>, what: &str) -> Result<()> {
    let listed: BTreeSet<Key> = order.iter().copied().collect();
    if listed.len() != order.len() {
        return Err(Error::InvalidOrdering(format!("{what} block lists a variable twice")));
    }
    if &listed != expected {
        let missing: Vec<String> = expected.difference(&listed).map(|k| k.to_string()).collect();
        let extra: Vec<String> = listed.difference(expected).map(|k| k.to_string()).collect();
        return Err(Error::InvalidOrdering(format!(
            "{what} block: missing [{}], unknown [{}]",
            missing.join(" "),
            extra.join(" ")
        )));
    }
    Ok(())
}

/// Minimum-degree ordering of the continuous variables (ties by id),
/// followed by the discrete variables in id order.
pub fn strong_ordering<T: Scalar>(graph: &HybridGaussianFactorGraph<T>) -> Result<Ordering> {
    let mut adjacency: BTreeMap<Key, BTreeSet<Key>> =
        graph.continuous_keys()?.into_keys().map(|k| (k, BTreeSet::new())).collect();
    for f in graph.factors() {
        let keys: Vec<Key> = f.continuous_keys().into_iter().map(|(k, _)| k).collect();
        for a in &keys {
            for b in &keys {
                if a != b {
                    adjacency.get_mut(a).expect("registered key").insert(*b);
                }
            }
        }
    }
    let mut continuous = Vec::with_capacity(adjacency.len());
    while let Some(next) = adjacency.iter().min_by_key(|(k, n)| (n.len(), **k)).map(|(k, _)| *k) {
        let neighbors = adjacency.remove(&next).expect("present");
        for a in &neighbors {
            let set = adjacency.get_mut(a).expect("neighbor present");
            set.remove(&next);
            set.extend(neighbors.iter().filter(|b| *b != a));
        }
        continuous.push(next);
    }
    let discrete = graph.discrete_keys()?.into_iter().map(|k| k.key).collect();
    Ok(Ordering { continuous, discrete })
}
