use super::{union_keys, DecisionTree, DiscreteAssignment, DiscreteFactor, DiscreteKey};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;
use rand::Rng;

/// `P(frontal | parents)` as a probability table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteConditional<T> {
    frontal: DiscreteKey,
    parents: Vec<DiscreteKey>,
    probabilities: DecisionTree<T>,
}

impl<T: Scalar> DiscreteConditional<T> {
    /// Validates that every parent slice sums to one.
    pub fn new(frontal: DiscreteKey, parents: Vec<DiscreteKey>, probabilities: DecisionTree<T>) -> Result<Self> {
        if parents.iter().any(|p| p.key == frontal.key) {
            return Err(Error::InvalidStructure(format!(
                "discrete conditional on {} lists itself as a parent",
                frontal.key
            )));
        }
        let keys = union_keys(&[frontal], &parents)?;
        if keys.as_slice() != probabilities.keys() {
            return Err(Error::InvalidStructure("probability table keys differ from frontal and parents".into()));
        }
        let tol = T::probability_tolerance() * T::from_usize(frontal.cardinality).unwrap();
        let sums = probabilities.reduce(frontal.key, |slice| slice.iter().fold(T::zero(), |a, b| a + **b))?;
        for (a, s) in sums.iter() {
            if (*s - T::one()).abs() > tol {
                return Err(Error::InvalidStructure(format!("P({} | {a}) sums to {s}, not 1", frontal.key)));
            }
        }
        if probabilities.leaves().iter().any(|p| *p < T::zero() || !p.is_finite()) {
            return Err(Error::InvalidStructure("negative or non-finite probability".into()));
        }
        let mut parents = parents;
        parents.sort_by_key(|p| p.key);
        Ok(DiscreteConditional { frontal, parents, probabilities })
    }

    /// Builds from a table listed lexicographically over `[frontal, parents...]`.
    pub fn from_table(frontal: DiscreteKey, parents: &[DiscreteKey], values: Vec<T>) -> Result<Self> {
        let mut keys = vec![frontal];
        keys.extend_from_slice(parents);
        Self::new(frontal, parents.to_vec(), DecisionTree::from_leaves(&keys, values)?)
    }

    /// Prior `P(frontal)`.
    pub fn prior(frontal: DiscreteKey, values: Vec<T>) -> Result<Self> {
        Self::from_table(frontal, &[], values)
    }

    /// Normalizes an arbitrary nonnegative factor into `P(frontal | rest)`.
    pub fn from_factor(factor: &DiscreteFactor<T>, frontal: Key) -> Result<Self> {
        Ok(factor.eliminate_sum(frontal)?.0)
    }

    pub fn frontal(&self) -> DiscreteKey {
        self.frontal
    }

    pub fn parents(&self) -> &[DiscreteKey] {
        &self.parents
    }

    /// Frontal and parents, sorted by id.
    pub fn keys(&self) -> &[DiscreteKey] {
        self.probabilities.keys()
    }

    pub fn probabilities(&self) -> &DecisionTree<T> {
        &self.probabilities
    }

    pub fn probability(&self, assignment: &DiscreteAssignment) -> Result<T> {
        self.probabilities.get(assignment).copied()
    }

    pub fn to_factor(&self) -> DiscreteFactor<T> {
        DiscreteFactor::new(self.probabilities.clone()).expect("probabilities are valid potentials")
    }

    /// Draws the frontal value given parent values in `parents`.
    pub fn sample(&self, parents: &DiscreteAssignment, rng: &mut impl Rng) -> Result<usize> {
        let u: f64 = rng.random();
        let mut a = parents.clone();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for v in 0..self.frontal.cardinality {
            a.insert(self.frontal.key, v);
            let p = crate::scalar::to_f64(self.probability(&a)?);
            if p > 0.0 {
                last_positive = v;
            }
            acc += p;
            if u < acc {
                return Ok(v);
            }
        }
        Ok(last_positive)
    }
}

/// Argmax table `g(parents)` produced by max-product discrete elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLookup {
    frontal: DiscreteKey,
    table: DecisionTree<usize>,
}

impl DiscreteLookup {
    pub fn new(frontal: DiscreteKey, table: DecisionTree<usize>) -> Result<Self> {
        if table.has_key(frontal.key) {
            return Err(Error::InvalidStructure("lookup table branches on its own frontal".into()));
        }
        if table.leaves().iter().any(|v| *v >= frontal.cardinality) {
            return Err(Error::InvalidStructure("lookup value out of range".into()));
        }
        Ok(DiscreteLookup { frontal, table })
    }

    pub fn frontal(&self) -> DiscreteKey {
        self.frontal
    }

    pub fn parents(&self) -> &[DiscreteKey] {
        self.table.keys()
    }

    pub fn table(&self) -> &DecisionTree<usize> {
        &self.table
    }

    pub fn argmax(&self, parents: &DiscreteAssignment) -> Result<usize> {
        self.table.get(parents).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k(i: u64, card: usize) -> DiscreteKey {
        DiscreteKey::new(Key(i), card).unwrap()
    }

    #[test]
    fn rows_must_sum_to_one() {
        assert!(DiscreteConditional::prior(k(0, 2), vec![0.25, 0.75]).is_ok());
        assert!(DiscreteConditional::prior(k(0, 2), vec![0.25, 0.7]).is_err());
        // P(m0 | m1): rows for m1=0 and m1=1
        let c = DiscreteConditional::from_table(k(0, 2), &[k(1, 2)], vec![0.1, 0.6, 0.9, 0.4]).unwrap();
        let a: DiscreteAssignment = [(Key(0), 1), (Key(1), 0)].into_iter().collect();
        assert_eq!(c.probability(&a).unwrap(), 0.9);
        assert!(DiscreteConditional::from_table(k(0, 2), &[k(1, 2)], vec![0.1, 0.6, 0.8, 0.4]).is_err());
    }

    #[test]
    fn sampling_respects_zero_probabilities() {
        let c = DiscreteConditional::prior(k(0, 3), vec![0.0, 1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(c.sample(&DiscreteAssignment::new(), &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn lookup_validation() {
        let t = DecisionTree::from_leaves(&[k(1, 2)], vec![0, 1]).unwrap();
        assert!(DiscreteLookup::new(k(0, 2), t.clone()).is_ok());
        assert!(DiscreteLookup::new(k(0, 1), t).is_err());
    }
}
