use super::{check_layouts, HybridValues};
use crate::discrete::{DecisionTree, DiscreteAssignment, DiscreteFactor, DiscreteKey};
use crate::error::{Error, Result};
use crate::gaussian::{JacobianFactor, NoiseModel};
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Measurement model `(H blocks, z, noise)` of one mode.
pub type Measurement<T> = (Vec<(Key, DMatrix<T>)>, DVector<T>, NoiseModel<T>);

/// One mode of a hybrid factor: `½‖A x − b‖² + constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent<T: Scalar> {
    pub factor: JacobianFactor<T>,
    pub constant: T,
}

impl<T: Scalar> GaussianComponent<T> {
    pub fn new(factor: JacobianFactor<T>, constant: T) -> Result<Self> {
        if !constant.is_finite() {
            return Err(Error::InvalidStructure("component constant must be finite".into()));
        }
        Ok(GaussianComponent { factor, constant })
    }
}

/// Leaf payload; `None` marks a pruned mode with potential zero.
pub type ComponentLeaf<T> = Option<Arc<GaussianComponent<T>>>;

/// Decision tree of linear Gaussian components indexed by discrete modes.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridGaussianFactor<T: Scalar> {
    continuous: Vec<(Key, usize)>,
    components: DecisionTree<ComponentLeaf<T>>,
}

impl<T: Scalar> HybridGaussianFactor<T> {
    /// `continuous` lists the variables (and dimensions) every live leaf spans.
    pub fn new(continuous: Vec<(Key, usize)>, components: DecisionTree<ComponentLeaf<T>>) -> Result<Self> {
        check_layouts(
            &continuous,
            components.leaves().iter().flatten().map(|c| c.factor.dims()),
            "hybrid Gaussian factor",
        )?;
        let mut continuous = continuous;
        continuous.sort();
        Ok(HybridGaussianFactor { continuous, components })
    }

    /// Builds from one `(factor, constant)` per assignment, listed
    /// lexicographically over `discrete_keys` in the order given.
    pub fn from_components(discrete_keys: &[DiscreteKey], components: Vec<(JacobianFactor<T>, T)>) -> Result<Self> {
        let continuous = components
            .first()
            .map(|(f, _)| f.dims())
            .ok_or_else(|| Error::InvalidStructure("hybrid factor needs components".into()))?;
        let leaves = components
            .into_iter()
            .map(|(f, c)| GaussianComponent::new(f, c).map(|c| Some(Arc::new(c))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(continuous, DecisionTree::from_leaves(discrete_keys, leaves)?)
    }

    /// Per-mode measurement models `z^m = Σ H^m_i x_i + ε`, `ε ~ N(0, Σ^m)`,
    /// each carrying the constant `log √|2πΣ^m|`.
    pub fn from_measurements(discrete_keys: &[DiscreteKey], models: Vec<Measurement<T>>) -> Result<Self> {
        let components = models
            .into_iter()
            .map(|(blocks, z, noise)| {
                let f = JacobianFactor::from_noise_model(blocks, &z, &noise)?;
                Ok((f, noise.log_normalizer()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_components(discrete_keys, components)
    }

    pub fn continuous_keys(&self) -> &[(Key, usize)] {
        &self.continuous
    }

    pub fn has_continuous(&self, key: Key) -> bool {
        self.continuous.iter().any(|(k, _)| *k == key)
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        self.components.keys()
    }

    pub fn components(&self) -> &DecisionTree<ComponentLeaf<T>> {
        &self.components
    }

    pub fn component(&self, assignment: &DiscreteAssignment) -> Result<Option<&GaussianComponent<T>>> {
        Ok(self.components.get(assignment)?.as_deref())
    }

    /// `½‖A^m x − b^m‖² + c^m` for the mode selected by `values`; `+inf` if pruned.
    pub fn error(&self, values: &HybridValues<T>) -> Result<T> {
        match self.component(&values.discrete)? {
            Some(c) => Ok(c.factor.error(&values.continuous)? + c.constant),
            None => Ok(T::infinity()),
        }
    }

    /// Fixes the modes in `fixed`; other keys are ignored.
    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(HybridGaussianFactor { continuous: self.continuous.clone(), components: self.components.choose(fixed)? })
    }

    /// Number of non-pruned leaves.
    pub fn live_leaves(&self) -> usize {
        self.components.leaves().iter().filter(|l| l.is_some()).count()
    }
}

/// Turns per-mode negative-log values into a discrete factor
/// `exp(−(v − min v))`; infinite values (pruned modes) become zero.
pub fn discrete_factor_from_leaves<T: Scalar>(leaves: &DecisionTree<T>) -> Result<DiscreteFactor<T>> {
    let min = leaves.leaves().iter().copied().filter(|v| v.is_finite()).fold(T::infinity(), |a, b| a.min(b));
    let potentials = leaves.map(|v| if v.is_finite() && min.is_finite() { (min - *v).exp() } else { T::zero() });
    DiscreteFactor::new(potentials)
}
