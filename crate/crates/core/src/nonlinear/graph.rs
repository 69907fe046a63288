use super::{HybridNonlinearFactor, NonlinearFactor, Values};
use crate::discrete::{sorted_unique_keys, DiscreteAssignment, DiscreteFactor, DiscreteKey};
use crate::elimination::Restrict;
use crate::error::Result;
use crate::hybrid::{HybridFactor, HybridGaussianFactorGraph};
use crate::key::Key;
use crate::scalar::Scalar;
use std::collections::BTreeSet;

/// Any factor of a hybrid nonlinear graph.
#[derive(Clone, Debug)]
pub enum NonlinearGraphFactor<T: Scalar> {
    Nonlinear(NonlinearFactor<T>),
    Hybrid(HybridNonlinearFactor<T>),
    Discrete(DiscreteFactor<T>),
}

impl<T: Scalar> NonlinearGraphFactor<T> {
    pub fn continuous_keys(&self) -> &[Key] {
        match self {
            NonlinearGraphFactor::Nonlinear(f) => f.keys(),
            NonlinearGraphFactor::Hybrid(f) => f.continuous_keys(),
            NonlinearGraphFactor::Discrete(_) => &[],
        }
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        match self {
            NonlinearGraphFactor::Nonlinear(_) => &[],
            NonlinearGraphFactor::Hybrid(f) => f.discrete_keys(),
            NonlinearGraphFactor::Discrete(f) => f.keys(),
        }
    }

    /// Negative log of the factor at `(values, modes)`.
    pub fn error(&self, values: &Values<T>, modes: &DiscreteAssignment) -> Result<T> {
        match self {
            NonlinearGraphFactor::Nonlinear(f) => f.error(values),
            NonlinearGraphFactor::Hybrid(f) => f.error(values, modes),
            NonlinearGraphFactor::Discrete(f) => f.error(modes),
        }
    }

    pub fn linearize(&self, values: &Values<T>) -> Result<HybridFactor<T>> {
        Ok(match self {
            NonlinearGraphFactor::Nonlinear(f) => HybridFactor::Gaussian(f.linearize(values)?),
            NonlinearGraphFactor::Hybrid(f) => HybridFactor::Hybrid(f.linearize(values)?),
            NonlinearGraphFactor::Discrete(f) => HybridFactor::Discrete(f.clone()),
        })
    }

    /// Fixes the modes in `fixed`; a hybrid factor left without discrete keys
    /// becomes a plain nonlinear factor.
    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(match self {
            NonlinearGraphFactor::Nonlinear(f) => NonlinearGraphFactor::Nonlinear(f.clone()),
            NonlinearGraphFactor::Hybrid(f) => {
                let r = f.restrict(fixed)?;
                match r.components().leaves() {
                    [Some(c)] if r.discrete_keys().is_empty() => NonlinearGraphFactor::Nonlinear(c.as_ref().clone()),
                    _ => NonlinearGraphFactor::Hybrid(r),
                }
            }
            NonlinearGraphFactor::Discrete(f) => NonlinearGraphFactor::Discrete(f.choose(fixed)?),
        })
    }
}

impl<T: Scalar> From<NonlinearFactor<T>> for NonlinearGraphFactor<T> {
    fn from(f: NonlinearFactor<T>) -> Self {
        NonlinearGraphFactor::Nonlinear(f)
    }
}

impl<T: Scalar> From<HybridNonlinearFactor<T>> for NonlinearGraphFactor<T> {
    fn from(f: HybridNonlinearFactor<T>) -> Self {
        NonlinearGraphFactor::Hybrid(f)
    }
}

impl<T: Scalar> From<DiscreteFactor<T>> for NonlinearGraphFactor<T> {
    fn from(f: DiscreteFactor<T>) -> Self {
        NonlinearGraphFactor::Discrete(f)
    }
}

/// Nonlinear hybrid factor graph `Φ(X, M)`.
#[derive(Clone, Debug, Default)]
pub struct HybridNonlinearFactorGraph<T: Scalar> {
    factors: Vec<NonlinearGraphFactor<T>>,
}

impl<T: Scalar> HybridNonlinearFactorGraph<T> {
    pub fn new() -> Self {
        HybridNonlinearFactorGraph { factors: Vec::new() }
    }

    pub fn push(&mut self, factor: impl Into<NonlinearGraphFactor<T>>) {
        self.factors.push(factor.into());
    }

    pub fn factors(&self) -> &[NonlinearGraphFactor<T>] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn continuous_keys(&self) -> BTreeSet<Key> {
        self.factors.iter().flat_map(|f| f.continuous_keys().iter().copied()).collect()
    }

    pub fn discrete_keys(&self) -> Result<Vec<DiscreteKey>> {
        let all: Vec<DiscreteKey> = self.factors.iter().flat_map(|f| f.discrete_keys().to_vec()).collect();
        sorted_unique_keys(&all)
    }

    pub fn error(&self, values: &Values<T>, modes: &DiscreteAssignment) -> Result<T> {
        let mut total = T::zero();
        for f in &self.factors {
            total += f.error(values, modes)?;
        }
        Ok(total)
    }

    /// Linear hybrid graph in the update `δ` around `values`.
    pub fn linearize(&self, values: &Values<T>) -> Result<HybridGaussianFactorGraph<T>> {
        let mut g = HybridGaussianFactorGraph::new();
        for f in &self.factors {
            g.push(f.linearize(values)?);
        }
        Ok(g)
    }
}

impl<T: Scalar> Restrict for HybridNonlinearFactorGraph<T> {
    fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(HybridNonlinearFactorGraph {
            factors: self.factors.iter().map(|f| f.restrict(fixed)).collect::<Result<_>>()?,
        })
    }
}

impl<T: Scalar, F: Into<NonlinearGraphFactor<T>>> FromIterator<F> for HybridNonlinearFactorGraph<T> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut g = HybridNonlinearFactorGraph::new();
        for f in iter {
            g.push(f);
        }
        g
    }
}
