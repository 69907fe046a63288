//! Hybrid variable elimination: strong orderings, sum- and max-product,
//! hypothesis pruning and dead-mode removal.

mod dmr;
mod hybrid;
mod ordering;
mod prune;

pub use dmr::{dead_mode_removal, fix_dead_modes, Restrict};
pub use hybrid::{eliminate_hybrid, eliminate_hybrid_max, eliminate_hybrid_sum, Semiring};
pub use ordering::{strong_ordering, Ordering};
pub use prune::prune_bayes_net;

use crate::discrete::{DecisionTree, DiscreteAssignment, DiscreteConditional, DiscreteFactor, DiscreteLookup};
use crate::error::{Error, Result};
use crate::gaussian::VectorValues;
use crate::hybrid::{HybridBayesNet, HybridConditional, HybridFactor, HybridGaussianFactorGraph, HybridValues};
use crate::scalar::Scalar;
use std::sync::Arc;

/// Result of the continuous phase: conditionals in elimination order and
/// the purely discrete factors left behind.
struct ContinuousPhase<T: Scalar> {
    conditionals: Vec<HybridConditional<T>>,
    discrete: Vec<DiscreteFactor<T>>,
}

fn eliminate_continuous<T: Scalar>(
    graph: &HybridGaussianFactorGraph<T>,
    ordering: &Ordering,
    semiring: Semiring,
) -> Result<ContinuousPhase<T>> {
    ordering.validate(graph)?;
    let mut pool: Vec<Option<Arc<HybridFactor<T>>>> = graph.shared_factors().iter().cloned().map(Some).collect();
    let mut conditionals = Vec::with_capacity(ordering.continuous().len());
    for &var in ordering.continuous() {
        let mut involved = Vec::new();
        for slot in pool.iter_mut() {
            if slot.as_ref().is_some_and(|f| f.involves_continuous(var)) {
                involved.push(slot.take().expect("checked"));
            }
        }
        let refs: Vec<&HybridFactor<T>> = involved.iter().map(|f| f.as_ref()).collect();
        let (conditional, separator) = eliminate_hybrid(&refs, var, semiring)?;
        log::trace!("eliminated {var}: {} factors", refs.len());
        conditionals.push(conditional);
        if let Some(s) = separator {
            pool.push(Some(Arc::new(s)));
        }
    }
    let mut discrete = Vec::new();
    for f in pool.into_iter().flatten() {
        match f.as_ref() {
            HybridFactor::Discrete(d) => discrete.push(d.clone()),
            HybridFactor::Hybrid(h) if h.continuous_keys().is_empty() => discrete.push(hybrid::discretize(h)?),
            HybridFactor::Hybrid(h) if h.discrete_keys().is_empty() => {}
            HybridFactor::Gaussian(g) if g.keys().is_empty() => {}
            _ => return Err(Error::InvalidStructure("continuous factor left after continuous phase".into())),
        }
    }
    Ok(ContinuousPhase { conditionals, discrete })
}

/// Removes and returns the factors mentioning `var`.
fn take_involving<T: Scalar>(pool: &mut Vec<DiscreteFactor<T>>, var: crate::key::Key) -> Vec<DiscreteFactor<T>> {
    let (involved, rest): (Vec<_>, Vec<_>) = std::mem::take(pool).into_iter().partition(|f| f.has_key(var));
    *pool = rest;
    involved
}

/// Sum-product elimination into a hybrid Bayes net representing `P(X, M | Z)`.
pub fn sum_product<T: Scalar>(graph: &HybridGaussianFactorGraph<T>, ordering: &Ordering) -> Result<HybridBayesNet<T>> {
    let phase = eliminate_continuous(graph, ordering, Semiring::Sum)?;
    let keys = graph.discrete_keys()?;
    let mut bn = HybridBayesNet::new();
    for c in phase.conditionals {
        bn.push(c)?;
    }
    let mut pool = phase.discrete;
    for &var in ordering.discrete() {
        let dk = *keys.iter().find(|k| k.key == var).expect("validated ordering");
        let involved = take_involving(&mut pool, var);
        let conditional = if involved.is_empty() {
            let p = T::one() / T::from_usize(dk.cardinality).unwrap();
            DiscreteConditional::prior(dk, vec![p; dk.cardinality])?
        } else {
            let (conditional, tau) = DiscreteFactor::product(&involved)?.eliminate_sum(var)?;
            if !tau.keys().is_empty() {
                pool.push(tau);
            }
            conditional
        };
        bn.push(HybridConditional::Discrete(conditional))?;
    }
    Ok(bn)
}

/// Max-product elimination followed by back-substitution: the joint MAP
/// `(X*, M*)`. Discrete ties resolve to the smallest value.
pub fn max_product<T: Scalar>(graph: &HybridGaussianFactorGraph<T>, ordering: &Ordering) -> Result<HybridValues<T>> {
    let phase = eliminate_continuous(graph, ordering, Semiring::Max)?;
    let keys = graph.discrete_keys()?;
    let mut pool = phase.discrete;
    let mut lookups = Vec::with_capacity(ordering.discrete().len());
    for &var in ordering.discrete() {
        let dk = *keys.iter().find(|k| k.key == var).expect("validated ordering");
        let involved = take_involving(&mut pool, var);
        let lookup = if involved.is_empty() {
            DiscreteLookup::new(dk, DecisionTree::constant(0))?
        } else {
            let (lookup, tau) = DiscreteFactor::product(&involved)?.eliminate_max(var)?;
            if !tau.keys().is_empty() {
                pool.push(tau);
            }
            lookup
        };
        lookups.push(lookup);
    }
    let mut modes = DiscreteAssignment::new();
    for lookup in lookups.iter().rev() {
        let v = lookup.argmax(&modes)?;
        modes.insert(lookup.frontal().key, v);
    }
    let mut continuous = VectorValues::new();
    for c in phase.conditionals.iter().rev() {
        let g = match c {
            HybridConditional::Gaussian(g) => g,
            HybridConditional::Hybrid(h) => h.choose(&modes)?.ok_or_else(|| {
                Error::InvalidStructure(format!("MAP mode {modes} has no conditional on {}", h.frontal()))
            })?,
            HybridConditional::Discrete(_) => unreachable!("continuous phase yields continuous conditionals"),
        };
        let x = g.solve(&continuous)?;
        continuous.insert(g.frontal(), x);
    }
    Ok(HybridValues::new(continuous, modes))
}
