use super::{
    assignment_count, decode_index, sorted_unique_keys, union_keys, DiscreteAssignment, DiscreteKey,
    DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::key::Key;

/// Decision tree indexing one payload per joint assignment of its keys.
///
/// Every root-to-leaf path branches on the keys in ascending id order, so a
/// full assignment resolves to exactly one leaf after `keys().len()` steps.
/// Leaves are materialized densely along each path (no subtree merging):
/// leaf `i` belongs to the `i`-th assignment in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree<L> {
    keys: Vec<DiscreteKey>,
    strides: Vec<usize>,
    leaves: Vec<L>,
}

fn strides_for(keys: &[DiscreteKey]) -> Vec<usize> {
    let mut strides = vec![1usize; keys.len()];
    for i in (0..keys.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * keys[i + 1].cardinality;
    }
    strides
}

/// Stride of every `union` key inside `keys` (0 where absent).
fn projected_strides(keys: &[DiscreteKey], strides: &[usize], union: &[DiscreteKey]) -> Vec<usize> {
    union.iter().map(|u| keys.iter().position(|k| k.key == u.key).map_or(0, |i| strides[i])).collect()
}

/// Walks all digit vectors of `cards` in row-major order, calling `visit`
/// with the offset of the current digits under each stride set.
fn for_each_offset<const N: usize>(cards: &[usize], stride_sets: [&[usize]; N], mut visit: impl FnMut([usize; N])) {
    let total: usize = cards.iter().product();
    let mut digits = vec![0usize; cards.len()];
    let mut offsets = [0usize; N];
    for _ in 0..total {
        visit(offsets);
        for pos in (0..cards.len()).rev() {
            digits[pos] += 1;
            for (o, s) in offsets.iter_mut().zip(stride_sets.iter()) {
                *o += s[pos];
            }
            if digits[pos] < cards[pos] {
                break;
            }
            for (o, s) in offsets.iter_mut().zip(stride_sets.iter()) {
                *o -= s[pos] * cards[pos];
            }
            digits[pos] = 0;
        }
    }
}

impl<L> DecisionTree<L> {
    /// Zero-key tree holding a single leaf.
    pub fn constant(leaf: L) -> Self {
        DecisionTree { keys: Vec::new(), strides: Vec::new(), leaves: vec![leaf] }
    }

    /// Builds a tree from leaves listed lexicographically over `keys` in the
    /// order given (first key most significant).
    pub fn from_leaves(keys: &[DiscreteKey], leaves: Vec<L>) -> Result<Self> {
        let sorted = sorted_unique_keys(keys)?;
        if sorted.len() != keys.len() {
            return Err(Error::InvalidStructure("duplicate key in decision tree".into()));
        }
        let count = assignment_count(&sorted, DEFAULT_ENUMERATION_CAP)?;
        if leaves.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "decision tree over {} assignments given {} leaves",
                count,
                leaves.len()
            )));
        }
        let given_strides = strides_for(keys);
        let sorted_strides = strides_for(&sorted);
        if sorted == keys {
            return Ok(DecisionTree { keys: sorted, strides: sorted_strides, leaves });
        }
        // Leaf `j` of the sorted layout comes from position perm[j] of the input.
        let from_given = projected_strides(keys, &given_strides, &sorted);
        let cards: Vec<usize> = sorted.iter().map(|k| k.cardinality).collect();
        let mut perm = Vec::with_capacity(count);
        for_each_offset(&cards, [&from_given], |[o]| perm.push(o));
        let mut slots: Vec<Option<L>> = leaves.into_iter().map(Some).collect();
        let leaves = perm.into_iter().map(|i| slots[i].take().expect("permutation visits each leaf once")).collect();
        Ok(DecisionTree { keys: sorted, strides: sorted_strides, leaves })
    }

    /// Builds a tree by evaluating `f` on every assignment of `keys`.
    pub fn from_fn(keys: &[DiscreteKey], mut f: impl FnMut(&DiscreteAssignment) -> L) -> Result<Self> {
        let sorted = sorted_unique_keys(keys)?;
        let count = assignment_count(&sorted, DEFAULT_ENUMERATION_CAP)?;
        let leaves = (0..count).map(|i| f(&decode_index(&sorted, i))).collect();
        Ok(DecisionTree { strides: strides_for(&sorted), keys: sorted, leaves })
    }

    /// Like [`DecisionTree::from_fn`] for fallible leaf constructors.
    pub fn try_from_fn<E>(
        keys: &[DiscreteKey],
        mut f: impl FnMut(&DiscreteAssignment) -> std::result::Result<L, E>,
    ) -> std::result::Result<Self, E>
    where
        E: From<Error>,
    {
        let sorted = sorted_unique_keys(keys)?;
        let count = assignment_count(&sorted, DEFAULT_ENUMERATION_CAP)?;
        let mut leaves = Vec::with_capacity(count);
        for i in 0..count {
            leaves.push(f(&decode_index(&sorted, i))?);
        }
        Ok(DecisionTree { strides: strides_for(&sorted), keys: sorted, leaves })
    }

    pub fn keys(&self) -> &[DiscreteKey] {
        &self.keys
    }

    pub fn leaves(&self) -> &[L] {
        &self.leaves
    }

    pub fn into_leaves(self) -> Vec<L> {
        self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.keys.len()
    }

    pub fn has_key(&self, key: Key) -> bool {
        self.keys.iter().any(|k| k.key == key)
    }

    /// Flat leaf index for a (super-)assignment covering every key.
    pub fn index_of(&self, assignment: &DiscreteAssignment) -> Result<usize> {
        let mut index = 0;
        for (dk, stride) in self.keys.iter().zip(&self.strides) {
            let v = assignment
                .get(dk.key)
                .ok_or_else(|| Error::IncompleteValues(format!("no value for discrete key {}", dk.key)))?;
            if v >= dk.cardinality {
                return Err(Error::InvalidAssignment(format!(
                    "{}={} out of range for cardinality {}",
                    dk.key, v, dk.cardinality
                )));
            }
            index += v * stride;
        }
        Ok(index)
    }

    /// Assignment of the leaf at flat `index`.
    pub fn assignment_at(&self, index: usize) -> DiscreteAssignment {
        decode_index(&self.keys, index)
    }

    /// Leaf selected by `assignment`; keys outside the tree are ignored.
    pub fn get(&self, assignment: &DiscreteAssignment) -> Result<&L> {
        Ok(&self.leaves[self.index_of(assignment)?])
    }

    pub fn assignments(&self) -> impl Iterator<Item = DiscreteAssignment> + '_ {
        (0..self.leaves.len()).map(|i| decode_index(&self.keys, i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (DiscreteAssignment, &L)> + '_ {
        self.leaves.iter().enumerate().map(|(i, l)| (decode_index(&self.keys, i), l))
    }

    pub fn map<M>(&self, f: impl FnMut(&L) -> M) -> DecisionTree<M> {
        DecisionTree {
            keys: self.keys.clone(),
            strides: self.strides.clone(),
            leaves: self.leaves.iter().map(f).collect(),
        }
    }

    /// Fallible [`map`](Self::map).
    pub fn try_map<M, E>(
        &self,
        f: impl FnMut(&L) -> std::result::Result<M, E>,
    ) -> std::result::Result<DecisionTree<M>, E> {
        Ok(DecisionTree {
            keys: self.keys.clone(),
            strides: self.strides.clone(),
            leaves: self.leaves.iter().map(f).collect::<std::result::Result<_, E>>()?,
        })
    }

    pub fn map_with_assignment<M>(&self, mut f: impl FnMut(&DiscreteAssignment, &L) -> M) -> DecisionTree<M> {
        DecisionTree {
            keys: self.keys.clone(),
            strides: self.strides.clone(),
            leaves: self.leaves.iter().enumerate().map(|(i, l)| f(&decode_index(&self.keys, i), l)).collect(),
        }
    }

    /// Combines two trees leafwise over the union of their keys.
    pub fn apply<A, B>(a: &DecisionTree<A>, b: &DecisionTree<B>, mut op: impl FnMut(&A, &B) -> L) -> Result<Self> {
        let keys = union_keys(&a.keys, &b.keys)?;
        assignment_count(&keys, DEFAULT_ENUMERATION_CAP)?;
        let sa = projected_strides(&a.keys, &a.strides, &keys);
        let sb = projected_strides(&b.keys, &b.strides, &keys);
        let cards: Vec<usize> = keys.iter().map(|k| k.cardinality).collect();
        let mut leaves = Vec::with_capacity(cards.iter().product());
        for_each_offset(&cards, [&sa, &sb], |[ia, ib]| leaves.push(op(&a.leaves[ia], &b.leaves[ib])));
        Ok(DecisionTree { strides: strides_for(&keys), keys, leaves })
    }

    /// Re-expresses this tree over `keys`, a superset of its own keys.
    pub fn expand(&self, keys: &[DiscreteKey]) -> Result<Self>
    where
        L: Clone,
    {
        let target = sorted_unique_keys(keys)?;
        let keys = union_keys(&target, &self.keys)?;
        if keys.len() != target.len() {
            return Err(Error::InvalidStructure("expansion target must contain every key of the tree".into()));
        }
        DecisionTree::apply(self, &DecisionTree::from_fn(&keys, |_| ())?, |l, _| l.clone())
    }

    /// Restricts the tree to the values in `partial`.
    ///
    /// Keys of `partial` that the tree does not branch on are ignored.
    pub fn choose(&self, partial: &DiscreteAssignment) -> Result<Self>
    where
        L: Clone,
    {
        partial.validate(&self.keys)?;
        let mut base = 0;
        let mut rest_keys = Vec::new();
        let mut rest_strides = Vec::new();
        for (dk, stride) in self.keys.iter().zip(&self.strides) {
            match partial.get(dk.key) {
                Some(v) => base += v * stride,
                None => {
                    rest_keys.push(*dk);
                    rest_strides.push(*stride);
                }
            }
        }
        let cards: Vec<usize> = rest_keys.iter().map(|k| k.cardinality).collect();
        let mut leaves = Vec::with_capacity(cards.iter().product());
        for_each_offset(&cards, [&rest_strides], |[o]| leaves.push(self.leaves[base + o].clone()));
        Ok(DecisionTree { strides: strides_for(&rest_keys), keys: rest_keys, leaves })
    }

    /// Collapses `var`: each result leaf is `f` applied to the slice of
    /// leaves (ordered by `var`'s value) sharing the remaining assignment.
    pub fn reduce<M>(&self, var: Key, mut f: impl FnMut(&[&L]) -> M) -> Result<DecisionTree<M>> {
        let pos = self
            .keys
            .iter()
            .position(|k| k.key == var)
            .ok_or_else(|| Error::InvalidStructure(format!("decision tree does not branch on {var}")))?;
        let card = self.keys[pos].cardinality;
        let stride = self.strides[pos];
        let mut rest_keys = self.keys.clone();
        rest_keys.remove(pos);
        let mut rest_strides = self.strides.clone();
        rest_strides.remove(pos);
        let cards: Vec<usize> = rest_keys.iter().map(|k| k.cardinality).collect();
        let mut leaves = Vec::with_capacity(cards.iter().product());
        let mut slice = Vec::with_capacity(card);
        for_each_offset(&cards, [&rest_strides], |[o]| {
            slice.clear();
            slice.extend((0..card).map(|v| &self.leaves[o + v * stride]));
            leaves.push(f(&slice));
        });
        Ok(DecisionTree { strides: strides_for(&rest_keys), keys: rest_keys, leaves })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(i: u64, card: usize) -> DiscreteKey {
        DiscreteKey::new(Key(i), card).unwrap()
    }

    fn assignment(pairs: &[(u64, usize)]) -> DiscreteAssignment {
        pairs.iter().map(|&(k, v)| (Key(k), v)).collect()
    }

    #[test]
    fn constant_product() {
        let t = DecisionTree::apply(&DecisionTree::constant(2.0), &DecisionTree::constant(3.0), |a, b| a * b).unwrap();
        assert_eq!(t.keys(), &[]);
        assert_eq!(t.leaves(), &[6.0]);
    }

    #[test]
    fn outer_product_over_disjoint_keys() {
        let m = DecisionTree::from_leaves(&[k(1, 2)], vec![1.0, 2.0]).unwrap();
        let n = DecisionTree::from_leaves(&[k(2, 2)], vec![5.0, 7.0]).unwrap();
        let t = DecisionTree::apply(&m, &n, |a, b| a * b).unwrap();
        assert_eq!(t.keys(), &[k(1, 2), k(2, 2)]);
        assert_eq!(t.leaves(), &[5.0, 7.0, 10.0, 14.0]);
    }

    #[test]
    fn identity_product() {
        let t = DecisionTree::from_leaves(&[k(1, 3)], vec![0.5, 1.5, 2.5]).unwrap();
        let r = DecisionTree::apply(&t, &DecisionTree::constant(1.0), |a, b| a * b).unwrap();
        assert_eq!(r, t);
    }

    #[test]
    fn choose_restricts_keys() {
        let t = DecisionTree::from_leaves(&[k(0, 2), k(1, 2)], vec!['a', 'b', 'c', 'd']).unwrap();
        let c = t.choose(&assignment(&[(0, 1)])).unwrap();
        assert_eq!(c.keys(), &[k(1, 2)]);
        assert_eq!(c.leaves(), &['c', 'd']);
        assert_eq!(t.choose(&DiscreteAssignment::new()).unwrap(), t);
        let full = t.choose(&assignment(&[(0, 0), (1, 1)])).unwrap();
        assert_eq!(full.keys(), &[]);
        assert_eq!(full.leaves(), &['b']);
        let err = t.choose(&assignment(&[(1, 2)])).unwrap_err();
        assert!(matches!(err, Error::InvalidAssignment(_)));
    }

    #[test]
    fn unsorted_keys_are_reordered() {
        // Leaves listed with key 2 most significant.
        let t = DecisionTree::from_leaves(&[k(2, 2), k(1, 3)], (0..6).collect()).unwrap();
        assert_eq!(t.keys(), &[k(1, 3), k(2, 2)]);
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(*t.get(&assignment(&[(2, a), (1, b)])).unwrap(), a * 3 + b);
            }
        }
    }

    #[test]
    fn reduce_sums_over_variable() {
        let t = DecisionTree::from_leaves(&[k(0, 2), k(1, 3)], vec![1, 2, 3, 4, 5, 6]).unwrap();
        let s = t.reduce(Key(0), |xs| xs.iter().copied().sum::<i32>()).unwrap();
        assert_eq!(s.leaves(), &[5, 7, 9]);
        let s = t.reduce(Key(1), |xs| xs.iter().copied().sum::<i32>()).unwrap();
        assert_eq!(s.leaves(), &[6, 15]);
        assert!(t.reduce(Key(7), |_| 0).is_err());
    }

    #[test]
    fn lookup_errors() {
        let t = DecisionTree::from_leaves(&[k(0, 2)], vec![1, 2]).unwrap();
        assert!(matches!(t.get(&DiscreteAssignment::new()), Err(Error::IncompleteValues(_))));
        assert!(matches!(t.get(&assignment(&[(0, 5)])), Err(Error::InvalidAssignment(_))));
        assert!(DecisionTree::from_leaves(&[k(0, 2)], vec![1]).is_err());
    }

    #[test]
    fn expand_replicates_leaves() {
        let t = DecisionTree::from_leaves(&[k(1, 2)], vec![1, 2]).unwrap();
        let e = t.expand(&[k(0, 2), k(1, 2)]).unwrap();
        assert_eq!(e.leaves(), &[1, 2, 1, 2]);
        assert!(t.expand(&[k(0, 2)]).is_err());
    }

    fn arb_tree(ids: Vec<u64>) -> impl Strategy<Value = DecisionTree<f64>> {
        let keys: Vec<DiscreteKey> = ids.iter().map(|&i| k(i, 2 + (i as usize % 2))).collect();
        let n: usize = keys.iter().map(|k| k.cardinality).product();
        proptest::collection::vec(-10.0f64..10.0, n)
            .prop_map(move |leaves| DecisionTree::from_leaves(&keys, leaves).unwrap())
    }

    proptest! {
        #[test]
        fn apply_is_leafwise(
            (t1, t2) in (arb_tree(vec![0, 2, 3]), arb_tree(vec![1, 2, 4])),
            picks in proptest::collection::vec(proptest::collection::vec(0usize..3, 5), 50),
        ) {
            let r = DecisionTree::apply(&t1, &t2, |a, b| a * b + a).unwrap();
            for p in picks {
                let a: DiscreteAssignment = [0u64, 1, 2, 3, 4]
                    .iter()
                    .zip(p)
                    .map(|(&key, v)| (Key(key), v % (2 + (key as usize % 2))))
                    .collect();
                let x = *t1.get(&a).unwrap();
                let y = *t2.get(&a).unwrap();
                prop_assert_eq!(*r.get(&a).unwrap(), x * y + x);
            }
        }

        #[test]
        fn choose_matches_lookup(t in arb_tree(vec![0, 1, 2]), v0 in 0usize..2, v2 in 0usize..2) {
            let partial = assignment(&[(0, v0), (2, v2)]);
            let c = t.choose(&partial).unwrap();
            for v1 in 0..3 {
                let full = assignment(&[(0, v0), (1, v1), (2, v2)]);
                prop_assert_eq!(c.get(&full).unwrap(), t.get(&full).unwrap());
            }
        }
    }
}
