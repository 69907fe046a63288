use crate::discrete::{prune_to_top, DecisionTree, DiscreteFactor, DiscreteKey};
use crate::error::Result;
use crate::hybrid::{HybridBayesNet, HybridConditional};
use crate::key::Key;
use crate::scalar::Scalar;

/// Keeps only the `max_hypotheses` most probable joint discrete hypotheses.
///
/// The pruned, renormalized joint is re-factored into a chain of discrete
/// conditionals (same frontal order as the input net, parents later in the
/// chain) and every hybrid conditional loses the leaves no surviving
/// hypothesis selects. A net with at most `max_hypotheses` live hypotheses
/// is returned unchanged.
pub fn prune_bayes_net<T: Scalar>(bn: &HybridBayesNet<T>, max_hypotheses: usize) -> Result<HybridBayesNet<T>> {
    let joint = bn.discrete_joint()?;
    let live = joint.leaves().iter().filter(|p| **p > T::zero()).count();
    if live <= max_hypotheses {
        return Ok(bn.clone());
    }
    let pruned = prune_to_top(&joint, max_hypotheses.max(1));
    let total = pruned.leaves().iter().fold(T::zero(), |a, b| a + *b);
    let pruned = pruned.map(|p| *p / total);

    let mut order: Vec<Key> = bn.discrete_conditionals().map(|c| c.frontal().key).collect();
    for k in pruned.keys() {
        if !order.contains(&k.key) {
            order.push(k.key);
        }
    }

    let mut out = HybridBayesNet::new();
    for c in bn.conditionals().iter().filter(|c| c.is_continuous()) {
        out.push(match c {
            HybridConditional::Hybrid(h) => {
                let support = marginal_support(&pruned, h.discrete_keys())?;
                HybridConditional::Hybrid(h.prune_leaves(|a| support.get(a).is_ok_and(|p| *p > T::zero())))
            }
            other => other.clone(),
        })?;
    }
    let mut factor = DiscreteFactor::new(pruned)?;
    for k in order {
        let (conditional, tau) = factor.eliminate_sum(k)?;
        out.push(HybridConditional::Discrete(conditional))?;
        factor = tau;
    }
    Ok(out)
}

/// Sums `joint` down to `keys`.
fn marginal_support<T: Scalar>(joint: &DecisionTree<T>, keys: &[DiscreteKey]) -> Result<DecisionTree<T>> {
    let mut t = joint.clone();
    let drop: Vec<Key> = joint.keys().iter().filter(|k| !keys.iter().any(|x| x.key == k.key)).map(|k| k.key).collect();
    for k in drop {
        t = t.reduce(k, |s| s.iter().fold(T::zero(), |a, b| a + **b))?;
    }
    Ok(t)
}
