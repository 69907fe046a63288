use super::{HybridFactor, HybridGaussianConditional, HybridGaussianFactorGraph, HybridValues};
use crate::discrete::{sorted_unique_keys, DecisionTree, DiscreteAssignment, DiscreteConditional, DiscreteKey};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianBayesNet, GaussianConditional, VectorValues};
use crate::key::Key;
use crate::scalar::Scalar;
use rand::Rng;
use std::collections::BTreeMap;

/// One conditional of a hybrid Bayes net.
#[derive(Clone, Debug, PartialEq)]
pub enum HybridConditional<T: Scalar> {
    Gaussian(GaussianConditional<T>),
    Hybrid(HybridGaussianConditional<T>),
    Discrete(DiscreteConditional<T>),
}

impl<T: Scalar> HybridConditional<T> {
    pub fn frontal(&self) -> Key {
        match self {
            HybridConditional::Gaussian(c) => c.frontal(),
            HybridConditional::Hybrid(c) => c.frontal(),
            HybridConditional::Discrete(c) => c.frontal().key,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, HybridConditional::Discrete(_))
    }

    pub fn discrete_keys(&self) -> &[DiscreteKey] {
        match self {
            HybridConditional::Gaussian(_) => &[],
            HybridConditional::Hybrid(c) => c.discrete_keys(),
            HybridConditional::Discrete(c) => c.keys(),
        }
    }

    pub fn log_density(&self, values: &HybridValues<T>) -> Result<T> {
        match self {
            HybridConditional::Gaussian(c) => c.log_density(&values.continuous),
            HybridConditional::Hybrid(c) => c.log_density(values),
            HybridConditional::Discrete(c) => Ok(crate::discrete::safe_ln(c.probability(&values.discrete)?)),
        }
    }

    /// Gaussian conditional selected by `modes`; `None` if that mode was pruned.
    fn select(&self, modes: &DiscreteAssignment) -> Result<Option<&GaussianConditional<T>>> {
        match self {
            HybridConditional::Gaussian(c) => Ok(Some(c)),
            HybridConditional::Hybrid(c) => c.choose(modes),
            HybridConditional::Discrete(_) => Ok(None),
        }
    }
}

/// Ordered conditionals representing `P(X, M | Z)`: continuous conditionals
/// (in elimination order) followed by discrete ones. Every parent of a
/// conditional appears later in the list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridBayesNet<T: Scalar> {
    conditionals: Vec<HybridConditional<T>>,
}

impl<T: Scalar> HybridBayesNet<T> {
    pub fn new() -> Self {
        HybridBayesNet { conditionals: Vec::new() }
    }

    pub fn from_conditionals(conditionals: Vec<HybridConditional<T>>) -> Result<Self> {
        let mut bn = HybridBayesNet::new();
        for c in conditionals {
            bn.push(c)?;
        }
        Ok(bn)
    }

    /// Appends a conditional; continuous ones may not follow discrete ones.
    pub fn push(&mut self, conditional: HybridConditional<T>) -> Result<()> {
        if conditional.is_continuous() && self.conditionals.last().is_some_and(|c| !c.is_continuous()) {
            return Err(Error::InvalidStructure(format!(
                "continuous conditional on {} after discrete conditionals",
                conditional.frontal()
            )));
        }
        self.conditionals.push(conditional);
        Ok(())
    }

    pub fn conditionals(&self) -> &[HybridConditional<T>] {
        &self.conditionals
    }

    pub fn len(&self) -> usize {
        self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty()
    }

    pub fn discrete_conditionals(&self) -> impl Iterator<Item = &DiscreteConditional<T>> + '_ {
        self.conditionals.iter().filter_map(|c| match c {
            HybridConditional::Discrete(d) => Some(d),
            _ => None,
        })
    }

    /// Every discrete variable the net mentions, sorted by id.
    pub fn discrete_keys(&self) -> Result<Vec<DiscreteKey>> {
        let all: Vec<DiscreteKey> = self.conditionals.iter().flat_map(|c| c.discrete_keys().to_vec()).collect();
        sorted_unique_keys(&all)
    }

    /// Joint `P(M | Z)` over all discrete keys: the product of the discrete
    /// conditionals, normalized (keys without a discrete conditional are uniform).
    pub fn discrete_joint(&self) -> Result<DecisionTree<T>> {
        let keys = self.discrete_keys()?;
        let mut joint = DecisionTree::from_fn(&keys, |_| T::one())?;
        for c in self.discrete_conditionals() {
            joint = DecisionTree::apply(&joint, c.probabilities(), |a, b| *a * *b)?;
        }
        let total = joint.leaves().iter().fold(T::zero(), |a, b| a + *b);
        if total > T::zero() {
            joint = joint.map(|p| *p / total);
        }
        Ok(joint)
    }

    /// Marginal distribution of every discrete variable.
    pub fn marginals(&self) -> Result<BTreeMap<Key, Vec<T>>> {
        let joint = self.discrete_joint()?;
        let mut out: BTreeMap<Key, Vec<T>> =
            joint.keys().iter().map(|k| (k.key, vec![T::zero(); k.cardinality])).collect();
        for (a, p) in joint.iter() {
            for (k, v) in a.iter() {
                out.get_mut(&k).expect("joint key")[v] += *p;
            }
        }
        Ok(out)
    }

    /// Number of joint discrete hypotheses with nonzero probability.
    pub fn num_hypotheses(&self) -> Result<usize> {
        Ok(self.discrete_joint()?.leaves().iter().filter(|p| **p > T::zero()).count())
    }

    /// `Σ log p` over all conditionals at `values`.
    pub fn log_evaluate(&self, values: &HybridValues<T>) -> Result<T> {
        let mut total = T::zero();
        for c in &self.conditionals {
            total += c.log_density(values)?;
        }
        Ok(total)
    }

    /// Product of all conditional densities at `values`.
    pub fn evaluate(&self, values: &HybridValues<T>) -> Result<T> {
        Ok(self.log_evaluate(values)?.exp())
    }

    /// Continuous part of the net for the fixed `modes`.
    pub fn choose(&self, modes: &DiscreteAssignment) -> Result<GaussianBayesNet<T>> {
        let mut out = Vec::new();
        for c in self.conditionals.iter().filter(|c| c.is_continuous()) {
            match c.select(modes)? {
                Some(g) => out.push(g.clone()),
                None => {
                    return Err(Error::InvalidAssignment(format!(
                        "mode {modes} was pruned from the conditional on {}",
                        c.frontal()
                    )))
                }
            }
        }
        Ok(GaussianBayesNet::new(out))
    }

    /// Continuous MAP given the modes.
    pub fn optimize_given(&self, modes: &DiscreteAssignment) -> Result<VectorValues<T>> {
        self.choose(modes)?.optimize()
    }

    /// Joint MAP `(X*, M*)`: maximizes `P(M) · max_X p(X | M)`, where the
    /// inner peak is `exp(−Σ log√|2πΣ^M|)` of the selected leaves. Ties go to
    /// the smallest assignment.
    pub fn map(&self) -> Result<HybridValues<T>> {
        let joint = self.discrete_joint()?;
        let mut best: Option<(T, DiscreteAssignment)> = None;
        for (a, p) in joint.iter() {
            if !(*p > T::zero()) {
                continue;
            }
            let mut score = p.ln();
            let mut live = true;
            for c in self.conditionals.iter().filter(|c| c.is_continuous()) {
                match c.select(&a)? {
                    Some(g) => score -= g.log_normalizer(),
                    None => {
                        live = false;
                        break;
                    }
                }
            }
            if live && best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, a));
            }
        }
        let (_, modes) = best.ok_or_else(|| Error::InvalidStructure("no discrete hypothesis survives".into()))?;
        let continuous = self.optimize_given(&modes)?;
        Ok(HybridValues::new(continuous, modes))
    }

    /// Ancestral sample: discrete conditionals last-to-first, then the
    /// Gaussian leaves selected by the sampled modes.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<HybridValues<T>> {
        let mut modes = DiscreteAssignment::new();
        for c in self.discrete_conditionals().collect::<Vec<_>>().into_iter().rev() {
            let v = c.sample(&modes, rng)?;
            modes.insert(c.frontal().key, v);
        }
        for k in self.discrete_keys()? {
            if !modes.contains(k.key) {
                modes.insert(k.key, rng.random_range(0..k.cardinality));
            }
        }
        let mut continuous = VectorValues::new();
        for c in self.conditionals.iter().filter(|c| c.is_continuous()).rev() {
            let g =
                c.select(&modes)?.ok_or_else(|| Error::InvalidAssignment(format!("sampled pruned mode {modes}")))?;
            let x = g.sample(&continuous, rng)?;
            continuous.insert(g.frontal(), x);
        }
        Ok(HybridValues::new(continuous, modes))
    }

    /// Converts every conditional back into a factor so the net can be
    /// combined with new measurements and re-eliminated.
    pub fn to_factor_graph(&self) -> HybridGaussianFactorGraph<T> {
        let mut g = HybridGaussianFactorGraph::new();
        for c in &self.conditionals {
            g.push(match c {
                HybridConditional::Gaussian(c) => HybridFactor::Gaussian(c.to_factor()),
                HybridConditional::Hybrid(c) => HybridFactor::Hybrid(c.to_factor()),
                HybridConditional::Discrete(c) => HybridFactor::Discrete(c.to_factor()),
            });
        }
        g
    }
}
