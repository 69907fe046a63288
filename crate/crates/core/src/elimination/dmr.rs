use crate::discrete::DiscreteAssignment;
use crate::error::{Error, Result};
use crate::hybrid::{HybridBayesNet, HybridGaussianFactorGraph};
use crate::scalar::{to_f64, Scalar};

/// Graphs whose hybrid factors can be specialized to fixed discrete values.
pub trait Restrict: Sized {
    fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self>;
}

impl<T: Scalar> Restrict for HybridGaussianFactorGraph<T> {
    fn restrict(&self, fixed: &DiscreteAssignment) -> Result<Self> {
        HybridGaussianFactorGraph::restrict(self, fixed)
    }
}

/// Modes whose posterior marginal of some value exceeds `delta`, with that value.
pub fn fix_dead_modes<T: Scalar>(bn: &HybridBayesNet<T>, delta: f64) -> Result<DiscreteAssignment> {
    if !(delta > 0.5 && delta <= 1.0) {
        return Err(Error::AmbiguousThreshold(delta));
    }
    let mut fixed = DiscreteAssignment::new();
    for (key, marginal) in bn.marginals()? {
        if let Some(v) = marginal.iter().position(|p| to_f64(*p) > delta) {
            fixed.insert(key, v);
        }
    }
    Ok(fixed)
}

/// Dead-mode removal: fixes every mode whose marginal exceeds `delta` and
/// restricts `graph` to those values.
pub fn dead_mode_removal<T: Scalar, G: Restrict>(
    bn: &HybridBayesNet<T>,
    graph: &G,
    delta: f64,
) -> Result<(G, DiscreteAssignment)> {
    let fixed = fix_dead_modes(bn, delta)?;
    Ok((graph.restrict(&fixed)?, fixed))
}
