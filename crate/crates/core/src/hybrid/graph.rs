use super::{HybridGaussianFactor, HybridValues};
use crate::discrete::{sorted_unique_keys, DiscreteAssignment, DiscreteFactor, DiscreteKey};
use crate::error::{Error, Result};
use crate::gaussian::JacobianFactor;
use crate::key::Key;
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Any factor a hybrid Gaussian graph may hold.
///
/// Discrete factors only ever see discrete variables, so a discrete
/// variable can never end up conditioned on a continuous one.
#[derive(Clone, Debug, PartialEq)]
pub enum HybridFactor<T: Scalar> {
    Gaussian(JacobianFactor<T>),
    Hybrid(HybridGaussianFactor<T>),
    Discrete(DiscreteFactor<T>),
}

impl<T: Scalar> HybridFactor<T> {
    pub fn continuous_keys(&self) -> Vec<(Key, usize)> {
        match self {
            HybridFactor::Gaussian(f) => f.dims(),
            HybridFactor::Hybrid(f) => f.continuous_keys().to_vec(),
            HybridFactor::Discrete(_) => Vec::new(),
        }
    }

    pub fn involves_continuous(&self, key: Key) -> bool {
        match self {
            HybridFactor::Gaussian(f) => f.has_key(key),
            HybridFactor::Hybrid(f) => f.has_continuous(key),
            HybridFactor::Discrete(_) => false,
        }
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        match self {
            HybridFactor::Gaussian(_) => &[],
            HybridFactor::Hybrid(f) => f.discrete_keys(),
            HybridFactor::Discrete(f) => f.keys(),
        }
    }

    /// Negative log of the factor at `values`.
    pub fn error(&self, values: &HybridValues<T>) -> Result<T> {
        match self {
            HybridFactor::Gaussian(f) => f.error(&values.continuous),
            HybridFactor::Hybrid(f) => f.error(values),
            HybridFactor::Discrete(f) => f.error(&values.discrete),
        }
    }

    /// Fixes the modes in `fixed`. A hybrid factor left without discrete keys
    /// collapses into a Gaussian factor (its constant no longer matters).
    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(match self {
            HybridFactor::Gaussian(f) => HybridFactor::Gaussian(f.clone()),
            HybridFactor::Hybrid(f) => {
                let r = f.restrict(fixed)?;
                match r.components().leaves() {
                    [Some(c)] if r.discrete_keys().is_empty() => HybridFactor::Gaussian(c.factor.clone()),
                    _ => HybridFactor::Hybrid(r),
                }
            }
            HybridFactor::Discrete(f) => HybridFactor::Discrete(f.choose(fixed)?),
        })
    }
}

impl<T: Scalar> From<JacobianFactor<T>> for HybridFactor<T> {
    fn from(f: JacobianFactor<T>) -> Self {
        HybridFactor::Gaussian(f)
    }
}

impl<T: Scalar> From<HybridGaussianFactor<T>> for HybridFactor<T> {
    fn from(f: HybridGaussianFactor<T>) -> Self {
        HybridFactor::Hybrid(f)
    }
}

impl<T: Scalar> From<DiscreteFactor<T>> for HybridFactor<T> {
    fn from(f: DiscreteFactor<T>) -> Self {
        HybridFactor::Discrete(f)
    }
}

/// Linear hybrid factor graph `Φ(X, M)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridGaussianFactorGraph<T: Scalar> {
    factors: Vec<Arc<HybridFactor<T>>>,
}

impl<T: Scalar> HybridGaussianFactorGraph<T> {
    pub fn new() -> Self {
        HybridGaussianFactorGraph { factors: Vec::new() }
    }

    pub fn push(&mut self, factor: impl Into<HybridFactor<T>>) {
        self.factors.push(Arc::new(factor.into()));
    }

    pub fn extend(&mut self, other: &HybridGaussianFactorGraph<T>) {
        self.factors.extend(other.factors.iter().cloned());
    }

    pub fn factors(&self) -> impl ExactSizeIterator<Item = &HybridFactor<T>> + '_ {
        self.factors.iter().map(|f| f.as_ref())
    }

    pub(crate) fn shared_factors(&self) -> &[Arc<HybridFactor<T>>] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Continuous variables with their dimensions.
    pub fn continuous_keys(&self) -> Result<BTreeMap<Key, usize>> {
        let mut dims = BTreeMap::new();
        for f in &self.factors {
            for (k, d) in f.continuous_keys() {
                if let Some(prev) = dims.insert(k, d) {
                    if prev != d {
                        return Err(Error::DimensionMismatch(format!(
                            "variable {k} used with dimensions {prev} and {d}"
                        )));
                    }
                }
            }
        }
        Ok(dims)
    }

    /// Discrete variables sorted by id.
    pub fn discrete_keys(&self) -> Result<Vec<DiscreteKey>> {
        let all: Vec<DiscreteKey> = self.factors.iter().flat_map(|f| f.discrete_keys().to_vec()).collect();
        sorted_unique_keys(&all)
    }

    /// `Σ_i error_i(values)`, i.e. the negative log of the unnormalized posterior.
    pub fn error(&self, values: &HybridValues<T>) -> Result<T> {
        let mut total = T::zero();
        for f in &self.factors {
            total += f.error(values)?;
        }
        Ok(total)
    }

    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(HybridGaussianFactorGraph {
            factors: self.factors.iter().map(|f| f.restrict(fixed).map(Arc::new)).collect::<Result<_>>()?,
        })
    }
}

impl<T: Scalar, F: Into<HybridFactor<T>>> FromIterator<F> for HybridGaussianFactorGraph<T> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut g = HybridGaussianFactorGraph::new();
        for f in iter {
            g.push(f);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::NoiseModel;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn keys_and_error() {
        let x = Key::symbol('x', 0);
        let m = DiscreteKey::binary(Key::symbol('m', 0));
        let mut g = HybridGaussianFactorGraph::<f64>::new();
        g.push(JacobianFactor::new(vec![(x, DMatrix::identity(1, 1))], DVector::zeros(1)).unwrap());
        let model = |mu: f64| {
            (vec![(x, DMatrix::identity(1, 1))], DVector::from_element(1, 1.0 - mu), NoiseModel::unit(1).unwrap())
        };
        g.push(HybridGaussianFactor::from_measurements(&[m], vec![model(0.0), model(4.0)]).unwrap());
        g.push(DiscreteFactor::from_values(&[m], vec![0.5, 0.25]).unwrap());
        assert_eq!(g.continuous_keys().unwrap().into_iter().collect::<Vec<_>>(), vec![(x, 1)]);
        assert_eq!(g.discrete_keys().unwrap(), vec![m]);

        let v = HybridValues::new(
            [(x, DVector::from_element(1, 1.0))].into_iter().collect(),
            [(m.key, 1)].into_iter().collect(),
        );
        let expected = 0.5 + 0.5 * 16.0 + 0.5 * std::f64::consts::TAU.ln() - 0.25f64.ln();
        assert!((g.error(&v).unwrap() - expected).abs() < 1e-12);

        let r = g.restrict(&[(m.key, 1)].into_iter().collect()).unwrap();
        assert!(r.discrete_keys().unwrap().is_empty());
        assert!(matches!(r.factors().nth(1), Some(HybridFactor::Gaussian(_))));
    }
}
