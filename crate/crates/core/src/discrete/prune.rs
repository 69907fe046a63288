use super::DecisionTree;
use crate::scalar::Scalar;

/// Zeroes every leaf outside the `max_leaves` largest.
///
/// Ties at the cut keep the leaf with the smaller assignment index. Retained
/// values are not renormalized.
pub fn prune_to_top<T: Scalar>(tree: &DecisionTree<T>, max_leaves: usize) -> DecisionTree<T> {
    assert!(max_leaves >= 1, "pruning must retain at least one leaf");
    let nonzero = tree.leaves().iter().filter(|v| **v > T::zero()).count();
    if nonzero <= max_leaves {
        return tree.clone();
    }
    let mut order: Vec<usize> = (0..tree.len()).collect();
    // stable sort: equal values stay in assignment order
    order.sort_by(|&a, &b| tree.leaves()[b].partial_cmp(&tree.leaves()[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut keep = vec![false; tree.len()];
    for &i in order.iter().take(max_leaves) {
        keep[i] = true;
    }
    let mut i = 0;
    tree.map(|v| {
        let out = if keep[i] { *v } else { T::zero() };
        i += 1;
        out
    })
}
