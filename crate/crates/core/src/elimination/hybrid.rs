use crate::discrete::{
    assignment_count, decode_index, sorted_unique_keys, DecisionTree, DiscreteKey, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::gaussian::{eliminate_one, GaussianConditional, JacobianFactor};
use crate::hybrid::{
    discrete_factor_from_leaves, GaussianComponent, HybridConditional, HybridFactor, HybridGaussianConditional,
    HybridGaussianFactor,
};
use crate::key::Key;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::sync::Arc;

/// Which semiring the elimination runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semiring {
    /// Marginalization: integrate the frontal out.
    Sum,
    /// Maximization: keep the peak over the frontal.
    Max,
}

/// Per-mode results below this count are computed sequentially.
const PARALLEL_MODES: usize = 16;

struct ModeResult<T: Scalar> {
    conditional: GaussianConditional<T>,
    separator: JacobianFactor<T>,
    constant: T,
}

/// Eliminates the continuous variable `var` from the product of `factors`.
///
/// For each joint assignment of the discrete keys the factors mention, the
/// selected linear components are stacked and factored with
/// [`eliminate_one`]. Modes where any component is pruned, or where `var`
/// is rank deficient, become pruned leaves of both outputs.
///
/// The separator keeps the accumulated negative-log constant of each mode
/// (minus the conditional's normalizer in the sum semiring). When no
/// continuous variable is left in the separator, the leftover residual
/// `½‖b_τ‖²` and the constants become a discrete factor instead. Without any
/// discrete keys the outputs are plain Gaussian and constants are dropped.
pub fn eliminate_hybrid<T: Scalar>(
    factors: &[&HybridFactor<T>],
    var: Key,
    semiring: Semiring,
) -> Result<(HybridConditional<T>, Option<HybridFactor<T>>)> {
    let mut gaussians: Vec<&JacobianFactor<T>> = Vec::new();
    let mut hybrids: Vec<&HybridGaussianFactor<T>> = Vec::new();
    for f in factors {
        match f {
            HybridFactor::Gaussian(g) => gaussians.push(g),
            HybridFactor::Hybrid(h) => hybrids.push(h),
            HybridFactor::Discrete(_) => {
                return Err(Error::InvalidStructure(format!(
                    "discrete factor passed to continuous elimination of {var}"
                )))
            }
        }
    }
    let all_keys: Vec<DiscreteKey> = hybrids.iter().flat_map(|h| h.discrete_keys().to_vec()).collect();
    let keys = sorted_unique_keys(&all_keys)?;
    let count = assignment_count(&keys, DEFAULT_ENUMERATION_CAP)?;

    let solve = |index: usize| -> Result<Option<ModeResult<T>>> {
        let modes = decode_index(&keys, index);
        let mut stacked = gaussians.clone();
        let mut constant = T::zero();
        for h in &hybrids {
            match h.component(&modes)? {
                Some(c) => {
                    stacked.push(&c.factor);
                    constant += c.constant;
                }
                None => return Ok(None),
            }
        }
        match eliminate_one(&stacked, var) {
            Ok((conditional, separator)) => Ok(Some(ModeResult { conditional, separator, constant })),
            Err(Error::Underconstrained(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let results: Vec<Option<ModeResult<T>>> = if count >= PARALLEL_MODES {
        (0..count).into_par_iter().map(solve).collect::<Result<_>>()?
    } else {
        (0..count).map(solve).collect::<Result<_>>()?
    };

    let first = match results.iter().flatten().next() {
        Some(r) => r,
        None if keys.is_empty() => return Err(Error::Underconstrained(var)),
        None => return Err(Error::UnconstrainedInEveryMode(var)),
    };
    let frontal = (var, first.conditional.dim());
    let parents: Vec<(Key, usize)> = first.conditional.parent_blocks().map(|(k, s)| (k, s.ncols())).collect();
    let separator_layout = first.separator.dims();

    if keys.is_empty() {
        let r = results.into_iter().flatten().next().expect("one live mode");
        let separator = (!separator_layout.is_empty()).then_some(HybridFactor::Gaussian(r.separator));
        return Ok((HybridConditional::Gaussian(r.conditional), separator));
    }

    // Negative-log constant each mode's separator carries.
    let offset = |r: &ModeResult<T>| match semiring {
        Semiring::Sum => r.constant - r.conditional.log_normalizer(),
        Semiring::Max => r.constant,
    };

    let separator = if separator_layout.is_empty() {
        let values = results
            .iter()
            .map(|r| match r {
                Some(r) => r.separator.rhs().norm_squared() / (T::one() + T::one()) + offset(r),
                None => T::infinity(),
            })
            .collect();
        let leaves = DecisionTree::from_leaves(&keys, values)?;
        Some(HybridFactor::Discrete(discrete_factor_from_leaves(&leaves)?))
    } else {
        let min = results.iter().flatten().map(offset).fold(T::infinity(), |a, b| a.min(b));
        let components = results
            .iter()
            .map(|r| {
                r.as_ref()
                    .map(|r| Arc::new(GaussianComponent { factor: r.separator.clone(), constant: offset(r) - min }))
            })
            .collect();
        let tree = DecisionTree::from_leaves(&keys, components)?;
        Some(HybridFactor::Hybrid(HybridGaussianFactor::new(separator_layout, tree)?))
    };

    let conditionals = results.into_iter().map(|r| r.map(|r| Arc::new(r.conditional))).collect();
    let conditional =
        HybridGaussianConditional::new(frontal, parents, DecisionTree::from_leaves(&keys, conditionals)?)?;
    Ok((HybridConditional::Hybrid(conditional), separator))
}

/// [`eliminate_hybrid`] in the sum semiring.
pub fn eliminate_hybrid_sum<T: Scalar>(
    factors: &[&HybridFactor<T>],
    var: Key,
) -> Result<(HybridConditional<T>, Option<HybridFactor<T>>)> {
    eliminate_hybrid(factors, var, Semiring::Sum)
}

/// [`eliminate_hybrid`] in the max semiring. The returned conditional's
/// per-mode means are the argmax lookup `g^m(C) = R⁻¹(d − S C)`.
pub fn eliminate_hybrid_max<T: Scalar>(
    factors: &[&HybridFactor<T>],
    var: Key,
) -> Result<(HybridConditional<T>, Option<HybridFactor<T>>)> {
    eliminate_hybrid(factors, var, Semiring::Max)
}

/// A hybrid factor without continuous variables is a discrete factor with
/// potentials `exp(−(½‖b^m‖² + c^m))`.
pub(crate) fn discretize<T: Scalar>(f: &HybridGaussianFactor<T>) -> Result<crate::discrete::DiscreteFactor<T>> {
    let leaves = f.components().map(|c| match c {
        Some(c) => c.factor.rhs().norm_squared() / (T::one() + T::one()) + c.constant,
        None => T::infinity(),
    });
    discrete_factor_from_leaves(&leaves)
}
