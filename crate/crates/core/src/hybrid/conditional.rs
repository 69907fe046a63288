use super::factor::{GaussianComponent, HybridGaussianFactor};
use super::{check_layouts, HybridValues};
use crate::discrete::{DecisionTree, DiscreteAssignment, DiscreteKey};
use crate::error::{Error, Result};
use crate::gaussian::GaussianConditional;
use crate::key::Key;
use crate::scalar::Scalar;
use std::sync::Arc;

/// Leaf payload; `None` marks a pruned mode.
pub type ConditionalLeaf<T> = Option<Arc<GaussianConditional<T>>>;

fn layout<T: Scalar>(c: &GaussianConditional<T>) -> Vec<(Key, usize)> {
    let mut l = vec![(c.frontal(), c.dim())];
    l.extend(c.parent_blocks().map(|(k, s)| (k, s.ncols())));
    l
}

/// `p(x | y, m)`: one Gaussian conditional per discrete mode.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridGaussianConditional<T: Scalar> {
    frontal: (Key, usize),
    parents: Vec<(Key, usize)>,
    conditionals: DecisionTree<ConditionalLeaf<T>>,
}

impl<T: Scalar> HybridGaussianConditional<T> {
    pub fn new(
        frontal: (Key, usize),
        parents: Vec<(Key, usize)>,
        conditionals: DecisionTree<ConditionalLeaf<T>>,
    ) -> Result<Self> {
        let mut expected = vec![frontal];
        expected.extend_from_slice(&parents);
        check_layouts(
            &expected,
            conditionals.leaves().iter().flatten().map(|c| layout(c)),
            "hybrid Gaussian conditional",
        )?;
        if let Some(c) = conditionals.leaves().iter().flatten().find(|c| c.frontal() != frontal.0) {
            return Err(Error::InvalidStructure(format!(
                "leaf conditional on {} inside conditional on {}",
                c.frontal(),
                frontal.0
            )));
        }
        let mut parents = parents;
        parents.sort();
        Ok(HybridGaussianConditional { frontal, parents, conditionals })
    }

    /// Builds from one conditional per assignment of `discrete_keys`
    /// (lexicographic in the order given).
    pub fn from_conditionals(discrete_keys: &[DiscreteKey], leaves: Vec<GaussianConditional<T>>) -> Result<Self> {
        let first = leaves.first().ok_or_else(|| Error::InvalidStructure("hybrid conditional needs leaves".into()))?;
        let l = layout(first);
        let tree = DecisionTree::from_leaves(discrete_keys, leaves.into_iter().map(|c| Some(Arc::new(c))).collect())?;
        Self::new(l[0], l[1..].to_vec(), tree)
    }

    pub fn frontal(&self) -> Key {
        self.frontal.0
    }

    pub fn frontal_dim(&self) -> usize {
        self.frontal.1
    }

    pub fn continuous_parents(&self) -> &[(Key, usize)] {
        &self.parents
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        self.conditionals.keys()
    }

    pub fn conditionals(&self) -> &DecisionTree<ConditionalLeaf<T>> {
        &self.conditionals
    }

    pub fn choose(&self, assignment: &DiscreteAssignment) -> Result<Option<&GaussianConditional<T>>> {
        Ok(self.conditionals.get(assignment)?.as_deref())
    }

    /// `log p(x | y, m)`; `−inf` for a pruned mode.
    pub fn log_density(&self, values: &HybridValues<T>) -> Result<T> {
        match self.choose(&values.discrete)? {
            Some(c) => c.log_density(&values.continuous),
            None => Ok(-T::infinity()),
        }
    }

    pub fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        Ok(HybridGaussianConditional {
            frontal: self.frontal,
            parents: self.parents.clone(),
            conditionals: self.conditionals.choose(fixed)?,
        })
    }

    /// Replaces the leaves where `keep` is false by pruned leaves.
    pub fn prune_leaves(&self, mut keep: impl FnMut(&DiscreteAssignment) -> bool) -> Self {
        HybridGaussianConditional {
            frontal: self.frontal,
            parents: self.parents.clone(),
            conditionals: self.conditionals.map_with_assignment(|a, l| if keep(a) { l.clone() } else { None }),
        }
    }

    /// Factor form: each leaf becomes `[R S | d]` with constant
    /// `C^m = log√|2πΣ^m| − min_m̃ log√|2πΣ^m̃|`.
    pub fn to_factor(&self) -> HybridGaussianFactor<T> {
        let min = self
            .conditionals
            .leaves()
            .iter()
            .flatten()
            .map(|c| c.log_normalizer())
            .fold(T::infinity(), |a, b| a.min(b));
        let components = self.conditionals.map(|leaf| {
            leaf.as_ref()
                .map(|c| Arc::new(GaussianComponent { factor: c.to_factor(), constant: c.log_normalizer() - min }))
        });
        let mut continuous = vec![self.frontal];
        continuous.extend_from_slice(&self.parents);
        HybridGaussianFactor::new(continuous, components).expect("leaves share the conditional layout")
    }
}
