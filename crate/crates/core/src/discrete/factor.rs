use super::{DecisionTree, DiscreteAssignment, DiscreteConditional, DiscreteKey, DiscreteLookup};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;

/// Products of more factors than this are accumulated in the log domain.
pub const LOG_DOMAIN_THRESHOLD: usize = 64;

/// Nonnegative potential over discrete variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFactor<T> {
    potentials: DecisionTree<T>,
}

impl<T: Scalar> DiscreteFactor<T> {
    pub fn new(potentials: DecisionTree<T>) -> Result<Self> {
        if let Some(bad) = potentials.leaves().iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::InvalidStructure(format!("discrete potential {bad} is not a finite nonnegative value")));
        }
        Ok(DiscreteFactor { potentials })
    }

    pub fn from_values(keys: &[DiscreteKey], values: Vec<T>) -> Result<Self> {
        Self::new(DecisionTree::from_leaves(keys, values)?)
    }

    /// Zero-key factor.
    pub fn constant(value: T) -> Result<Self> {
        Self::new(DecisionTree::constant(value))
    }

    pub fn keys(&self) -> &[DiscreteKey] {
        self.potentials.keys()
    }

    pub fn has_key(&self, key: Key) -> bool {
        self.potentials.has_key(key)
    }

    pub fn potentials(&self) -> &DecisionTree<T> {
        &self.potentials
    }

    pub fn value(&self, assignment: &DiscreteAssignment) -> Result<T> {
        self.potentials.get(assignment).copied()
    }

    /// Negative log potential; `+inf` where the potential is zero.
    pub fn error(&self, assignment: &DiscreteAssignment) -> Result<T> {
        let v = self.value(assignment)?;
        Ok(-safe_ln(v))
    }

    /// Log-domain view of the potentials (`-inf` on zeros).
    pub fn log_values(&self) -> DecisionTree<T> {
        self.potentials.map(|v| safe_ln(*v))
    }

    pub fn multiply(&self, other: &DiscreteFactor<T>) -> Result<Self> {
        Ok(DiscreteFactor { potentials: DecisionTree::apply(&self.potentials, &other.potentials, |a, b| *a * *b)? })
    }

    /// Product of all `factors`. Past [`LOG_DOMAIN_THRESHOLD`] factors the
    /// product is formed in log space and rescaled so its largest leaf is 1.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a DiscreteFactor<T>>) -> Result<Self> {
        let factors: Vec<&DiscreteFactor<T>> = factors.into_iter().collect();
        if factors.len() <= LOG_DOMAIN_THRESHOLD {
            let mut acc = DecisionTree::constant(T::one());
            for f in factors {
                acc = DecisionTree::apply(&acc, &f.potentials, |a, b| *a * *b)?;
            }
            return Ok(DiscreteFactor { potentials: acc });
        }
        let mut acc = DecisionTree::constant(T::zero());
        for f in factors {
            acc = DecisionTree::apply(&acc, &f.potentials, |a, b| *a + safe_ln(*b))?;
        }
        Ok(DiscreteFactor { potentials: exp_shifted(&acc) })
    }

    pub fn sum(&self) -> T {
        self.potentials.leaves().iter().fold(T::zero(), |a, b| a + *b)
    }

    /// Copy scaled to sum to one (unchanged if the total is zero).
    pub fn normalized(&self) -> Self {
        let total = self.sum();
        if total > T::zero() {
            DiscreteFactor { potentials: self.potentials.map(|v| *v / total) }
        } else {
            self.clone()
        }
    }

    pub fn choose(&self, partial: &DiscreteAssignment) -> Result<Self> {
        Ok(DiscreteFactor { potentials: self.potentials.choose(partial)? })
    }

    /// Sum-product elimination of `var`: returns `P(var | rest)` and `τ(rest) = Σ_var ψ`.
    ///
    /// Slices where `τ = 0` get a uniform conditional.
    pub fn eliminate_sum(&self, var: Key) -> Result<(DiscreteConditional<T>, DiscreteFactor<T>)> {
        let frontal = self.frontal_key(var)?;
        let tau = self.potentials.reduce(var, |slice| slice.iter().fold(T::zero(), |a, b| a + **b))?;
        let uniform = T::one() / T::from_usize(frontal.cardinality).unwrap();
        let probabilities =
            DecisionTree::apply(&self.potentials, &tau, |psi, t| if *t > T::zero() { *psi / *t } else { uniform })?;
        let parents: Vec<DiscreteKey> = tau.keys().to_vec();
        let conditional = DiscreteConditional::new(frontal, parents, probabilities)?;
        Ok((conditional, DiscreteFactor { potentials: tau }))
    }

    /// Max-product elimination of `var`: returns the argmax lookup `g(rest)`
    /// (ties to the smallest value) and `τ(rest) = max_var ψ`.
    pub fn eliminate_max(&self, var: Key) -> Result<(DiscreteLookup, DiscreteFactor<T>)> {
        let frontal = self.frontal_key(var)?;
        let best = self.potentials.reduce(var, |slice| {
            let mut arg = 0;
            for (i, v) in slice.iter().enumerate() {
                if **v > *slice[arg] {
                    arg = i;
                }
            }
            (arg, *slice[arg])
        })?;
        let lookup = DiscreteLookup::new(frontal, best.map(|(arg, _)| *arg))?;
        let tau = best.map(|(_, v)| *v);
        Ok((lookup, DiscreteFactor { potentials: tau }))
    }

    fn frontal_key(&self, var: Key) -> Result<DiscreteKey> {
        self.keys()
            .iter()
            .copied()
            .find(|k| k.key == var)
            .ok_or_else(|| Error::InvalidStructure(format!("discrete factor does not involve {var}")))
    }
}

pub(crate) fn safe_ln<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v.ln()
    } else {
        -T::infinity()
    }
}

/// `exp(l - max l)` leafwise; all-`-inf` trees map to zeros.
pub(crate) fn exp_shifted<T: Scalar>(logs: &DecisionTree<T>) -> DecisionTree<T> {
    let max = logs.leaves().iter().copied().fold(-T::infinity(), |a, b| a.max(b));
    if !max.is_finite() {
        return logs.map(|_| T::zero());
    }
    logs.map(|l| if l.is_finite() { (*l - max).exp() } else { T::zero() })
}
