use super::{Residual, Values};
use crate::discrete::{DecisionTree, DiscreteAssignment, DiscreteKey};
use crate::error::{Error, Result};
use crate::gaussian::{JacobianFactor, NoiseModel};
use crate::hybrid::{GaussianComponent, HybridGaussianFactor};
use crate::key::Key;
use crate::scalar::Scalar;
use std::sync::Arc;

/// Residual with a Gaussian noise model: error `½‖e(x)‖²_Σ`.
#[derive(Clone, Debug)]
pub struct NonlinearFactor<T: Scalar> {
    residual: Arc<dyn Residual<T>>,
    noise: NoiseModel<T>,
}

impl<T: Scalar> NonlinearFactor<T> {
    pub fn new(residual: impl Residual<T> + 'static, noise: NoiseModel<T>) -> Result<Self> {
        Self::from_shared(Arc::new(residual), noise)
    }

    pub fn from_shared(residual: Arc<dyn Residual<T>>, noise: NoiseModel<T>) -> Result<Self> {
        if residual.dim() != noise.dim() {
            return Err(Error::DimensionMismatch(format!(
                "residual of dimension {} with noise of dimension {}",
                residual.dim(),
                noise.dim()
            )));
        }
        Ok(NonlinearFactor { residual, noise })
    }

    pub fn keys(&self) -> &[Key] {
        self.residual.keys()
    }

    pub fn residual(&self) -> &dyn Residual<T> {
        self.residual.as_ref()
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }

    pub fn error(&self, values: &Values<T>) -> Result<T> {
        Ok(self.noise.mahalanobis_half(&self.residual.evaluate(values)?))
    }

    /// Whitened first-order model in the update `δ`: `A = W J`, `b = −W e(x₀)`.
    pub fn linearize(&self, values: &Values<T>) -> Result<JacobianFactor<T>> {
        let e = self.residual.evaluate(values)?;
        let jacobians = self.residual.jacobians(values)?;
        if e.iter().chain(jacobians.iter().flat_map(|j| j.iter())).any(|v| !v.is_finite()) {
            return Err(Error::LinearizationFailure(format!(
                "non-finite residual or Jacobian for factor on {:?}",
                self.keys()
            )));
        }
        let blocks = self.keys().iter().zip(jacobians).map(|(k, j)| (*k, self.noise.whiten_matrix(&j))).collect();
        JacobianFactor::new(blocks, -self.noise.whiten_vector(&e))
    }
}

/// Leaf payload; `None` marks a pruned mode.
pub type NonlinearLeaf<T> = Option<Arc<NonlinearFactor<T>>>;

/// Nonlinear factor whose residual and noise are selected by discrete modes.
/// Each mode carries the constant `log√|2πΣ^m|` of its noise model.
#[derive(Clone, Debug)]
pub struct HybridNonlinearFactor<T: Scalar> {
    keys: Vec<Key>,
    dim: usize,
    components: DecisionTree<NonlinearLeaf<T>>,
}

impl<T: Scalar> HybridNonlinearFactor<T> {
    pub fn new(components: DecisionTree<NonlinearLeaf<T>>) -> Result<Self> {
        let mut live = components.leaves().iter().flatten();
        let first = live
            .next()
            .ok_or_else(|| Error::InvalidStructure("hybrid nonlinear factor needs a live component".into()))?;
        let mut keys = first.keys().to_vec();
        keys.sort();
        let dim = first.residual.dim();
        for c in live {
            let mut k = c.keys().to_vec();
            k.sort();
            if k != keys || c.residual.dim() != dim {
                return Err(Error::InvalidStructure(
                    "hybrid nonlinear factor components differ in variables or dimension".into(),
                ));
            }
        }
        Ok(HybridNonlinearFactor { keys, dim, components })
    }

    /// One component per assignment of `discrete_keys`, lexicographic in the order given.
    pub fn from_components(discrete_keys: &[DiscreteKey], components: Vec<NonlinearFactor<T>>) -> Result<Self> {
        let leaves = components.into_iter().map(|c| Some(Arc::new(c))).collect();
        Self::new(DecisionTree::from_leaves(discrete_keys, leaves)?)
    }

    pub fn continuous_keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        self.components.keys()
    }

    pub fn residual_dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &DecisionTree<NonlinearLeaf<T>> {
        &self.components
    }

    /// `½‖e^m(x)‖²_{Σ^m} + log√|2πΣ^m|`; `+inf` for a pruned mode.
    pub fn error(&self, values: &Values<T>, modes: &DiscreteAssignment) -> Result<T> {
        match self.components.get(modes)? {
            Some(c) => Ok(c.error(values)? + c.noise.log_normalizer()),
            None => Ok(T::infinity()),
        }
    }

    pub fn linearize(&self, values: &Values<T>) -> Result<HybridGaussianFactor<T>> {
        let layout = self.keys.iter().map(|k| Ok((*k, values.dim(*k)?))).collect::<Result<Vec<_>>>()?;
        let components = self.components.try_map(|leaf| {
            leaf.as_ref()
                .map(|c| {
                    Ok(Arc::new(GaussianComponent { factor: c.linearize(values)?, constant: c.noise.log_normalizer() }))
                })
                .transpose()
        })?;
        HybridGaussianFactor::new(layout, components)
    }

    /// Fixes the modes in `fixed`.
    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(HybridNonlinearFactor { keys: self.keys.clone(), dim: self.dim, components: self.components.choose(fixed)? })
    }
}
