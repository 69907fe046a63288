//! Brute-force reference inference by enumerating every discrete mode and
//! solving each mode-fixed Gaussian problem densely. Used to validate the
//! elimination engine; deliberately shares no code with it beyond factor
//! storage.

use crate::discrete::{enumerate_assignments_with_cap, DecisionTree, DiscreteAssignment};
use crate::error::{Error, Result};
use crate::gaussian::VectorValues;
use crate::hybrid::{HybridFactor, HybridGaussianFactorGraph, HybridValues};
use crate::key::Key;
use crate::scalar::{ln_two_pi, Scalar};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Largest number of joint discrete assignments the oracle enumerates.
pub const ORACLE_MODE_CAP: usize = 1 << 12;
/// Largest total continuous dimension the oracle solves densely.
pub const ORACLE_DIMENSION_CAP: usize = 32;

/// Dense solution of one mode-fixed problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution<T: Scalar> {
    pub assignment: DiscreteAssignment,
    /// `log ∫ exp(−E(x, m)) dx`; `−inf` for impossible or singular modes.
    pub log_evidence: T,
    /// `−min_x E(x, m)`; `−inf` for impossible or singular modes.
    pub log_peak: T,
    /// Minimizer of the mode-fixed least-squares problem, if it exists.
    pub optimum: Option<VectorValues<T>>,
}

/// Exact discrete posterior and the per-mode solutions behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior<T: Scalar> {
    pub probabilities: DecisionTree<T>,
    pub modes: Vec<ModeSolution<T>>,
}

/// `P(M | Z)` by enumeration. For each mode the quadratic
/// `E(x) = ½‖Ax − b‖² + Σc` with information `Λ = AᵀA` integrates to
/// `exp(−E(x*)) (2π)^{n/2} |Λ|^{−1/2}`.
pub fn enumerate_posterior<T: Scalar>(graph: &HybridGaussianFactorGraph<T>) -> Result<Posterior<T>> {
    let keys = graph.discrete_keys()?;
    let layout = Layout::new(graph)?;
    let modes = enumerate_assignments_with_cap(&keys, ORACLE_MODE_CAP)?
        .into_iter()
        .map(|a| solve_mode_with(graph, &layout, a))
        .collect::<Result<Vec<_>>>()?;
    let max = modes.iter().map(|m| m.log_evidence).fold(-T::infinity(), |a, b| a.max(b));
    if !max.is_finite() {
        return Err(Error::InvalidStructure("every mode is impossible or singular".into()));
    }
    let weights: Vec<T> = modes.iter().map(|m| (m.log_evidence - max).exp()).collect();
    let total = weights.iter().fold(T::zero(), |a, b| a + *b);
    let probabilities = DecisionTree::from_leaves(&keys, weights.into_iter().map(|w| w / total).collect())?;
    Ok(Posterior { probabilities, modes })
}

/// Joint MAP by enumeration: the mode with the highest peak
/// `exp(−min_x E(x, m))`, ties to the smallest assignment.
pub fn enumerate_map<T: Scalar>(graph: &HybridGaussianFactorGraph<T>) -> Result<HybridValues<T>> {
    let posterior = enumerate_posterior(graph)?;
    let mut best: Option<&ModeSolution<T>> = None;
    for m in &posterior.modes {
        if m.log_peak.is_finite() && best.is_none_or(|b| m.log_peak > b.log_peak) {
            best = Some(m);
        }
    }
    let best = best.expect("posterior has a finite mode");
    Ok(HybridValues::new(best.optimum.clone().expect("finite mode has an optimum"), best.assignment.clone()))
}

/// Solves the problem with all discrete variables fixed to `assignment`.
pub fn solve_mode<T: Scalar>(
    graph: &HybridGaussianFactorGraph<T>,
    assignment: &DiscreteAssignment,
) -> Result<ModeSolution<T>> {
    let layout = Layout::new(graph)?;
    solve_mode_with(graph, &layout, assignment.clone())
}

struct Layout {
    offsets: BTreeMap<Key, (usize, usize)>,
    dim: usize,
}

impl Layout {
    fn new<T: Scalar>(graph: &HybridGaussianFactorGraph<T>) -> Result<Self> {
        let mut offsets = BTreeMap::new();
        let mut dim = 0;
        for (k, d) in graph.continuous_keys()? {
            offsets.insert(k, (dim, d));
            dim += d;
        }
        if dim > ORACLE_DIMENSION_CAP {
            return Err(Error::EnumerationTooLarge { count: dim as u128, cap: ORACLE_DIMENSION_CAP });
        }
        Ok(Layout { offsets, dim })
    }
}

/// Whitened rows `(blocks, rhs)` of the mode-fixed system.
type Row<T> = (Vec<(Key, DMatrix<T>)>, DVector<T>);

fn impossible<T: Scalar>(assignment: DiscreteAssignment) -> ModeSolution<T> {
    ModeSolution { assignment, log_evidence: -T::infinity(), log_peak: -T::infinity(), optimum: None }
}

fn solve_mode_with<T: Scalar>(
    graph: &HybridGaussianFactorGraph<T>,
    layout: &Layout,
    assignment: DiscreteAssignment,
) -> Result<ModeSolution<T>> {
    let n = layout.dim;
    let mut rows: Vec<Row<T>> = Vec::new();
    let mut log_constant = T::zero();
    for f in graph.factors() {
        match f {
            HybridFactor::Gaussian(g) => {
                rows.push((g.blocks().map(|(k, a)| (k, a.clone())).collect(), g.rhs().clone()));
            }
            HybridFactor::Hybrid(h) => match h.component(&assignment)? {
                Some(c) => {
                    rows.push((c.factor.blocks().map(|(k, a)| (k, a.clone())).collect(), c.factor.rhs().clone()));
                    log_constant -= c.constant;
                }
                None => return Ok(impossible(assignment)),
            },
            HybridFactor::Discrete(d) => {
                let v = d.value(&assignment)?;
                if !(v > T::zero()) {
                    return Ok(impossible(assignment));
                }
                log_constant += v.ln();
            }
        }
    }
    let m: usize = rows.iter().map(|(_, b)| b.len()).sum();
    let mut a = DMatrix::<T>::zeros(m, n);
    let mut b = DVector::<T>::zeros(m);
    let mut r0 = 0;
    for (blocks, rhs) in &rows {
        for (k, block) in blocks {
            let (c0, _) = layout.offsets[k];
            a.view_mut((r0, c0), (rhs.len(), block.ncols())).copy_from(block);
        }
        b.rows_mut(r0, rhs.len()).copy_from(rhs);
        r0 += rhs.len();
    }

    let half = T::one() / (T::one() + T::one());
    let (x, log_det) = if n == 0 {
        (DVector::zeros(0), T::zero())
    } else {
        let lambda = a.transpose() * &a;
        let eta = a.transpose() * &b;
        let Some(chol) = lambda.cholesky() else {
            return Ok(impossible(assignment));
        };
        let l = chol.l();
        let mut log_det = T::zero();
        for i in 0..n {
            let lii = l[(i, i)];
            if !(lii > T::zero()) {
                return Ok(impossible(assignment));
            }
            log_det += (lii * lii).ln();
        }
        (chol.solve(&eta), log_det)
    };
    let residual = &a * &x - &b;
    let e_star = residual.norm_squared() * half;
    let n_t = T::from_usize(n).unwrap();
    let log_peak = -e_star + log_constant;
    let log_evidence = log_peak + half * n_t * ln_two_pi::<T>() - half * log_det;

    let mut optimum = VectorValues::new();
    for (k, (c0, d)) in &layout.offsets {
        optimum.insert(*k, x.rows(*c0, *d).into_owned());
    }
    Ok(ModeSolution { assignment, log_evidence, log_peak, optimum: Some(optimum) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::DiscreteKey;
    use crate::gaussian::{JacobianFactor, NoiseModel};
    use crate::hybrid::HybridGaussianFactor;

    /// Prior N(0,1) on x, measurement z = x + μ_m + ε with μ ∈ {0, 4}, σ = 1.
    fn worked_example() -> HybridGaussianFactorGraph<f64> {
        let x = Key::symbol('x', 0);
        let m = DiscreteKey::binary(Key::symbol('m', 0));
        let mut g = HybridGaussianFactorGraph::new();
        g.push(JacobianFactor::new(vec![(x, DMatrix::identity(1, 1))], DVector::zeros(1)).unwrap());
        let model = |mu: f64| {
            (vec![(x, DMatrix::identity(1, 1))], DVector::from_element(1, 1.0 - mu), NoiseModel::unit(1).unwrap())
        };
        g.push(HybridGaussianFactor::from_measurements(&[m], vec![model(0.0), model(4.0)]).unwrap());
        g
    }

    #[test]
    fn closed_form_marginal_likelihood() {
        // z ~ N(μ_m, 1 + 1): the ratio of likelihoods is exp(−(1 − 9)/4) = e².
        let p = enumerate_posterior(&worked_example()).unwrap();
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p.probabilities.leaves()[0] - expected).abs() < 1e-12);
        assert!((p.probabilities.leaves()[0] - 0.880797).abs() < 1e-6);
        let sum: f64 = p.probabilities.leaves().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn map_of_worked_example() {
        let map = enumerate_map(&worked_example()).unwrap();
        assert_eq!(map.discrete.get(Key::symbol('m', 0)), Some(0));
        assert!((map.continuous.at(Key::symbol('x', 0)).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_mode_is_least_squares() {
        let x = Key::symbol('x', 0);
        let mut g = HybridGaussianFactorGraph::<f64>::new();
        g.push(JacobianFactor::new(vec![(x, DMatrix::identity(1, 1))], DVector::zeros(1)).unwrap());
        g.push(JacobianFactor::new(vec![(x, DMatrix::identity(1, 1))], DVector::from_element(1, 2.0)).unwrap());
        let p = enumerate_posterior(&g).unwrap();
        assert_eq!(p.probabilities.leaves(), &[1.0]);
        assert!((p.modes[0].optimum.as_ref().unwrap().at(x).unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn evidence_matches_quadrature() {
        let g = worked_example();
        let p = enumerate_posterior(&g).unwrap();
        let x = Key::symbol('x', 0);
        for mode in &p.modes {
            let (lo, hi, n) = (-8.0 - 2.0, 8.0 + 2.0, 4096);
            let h = (hi - lo) / n as f64;
            let mut integral = 0.0;
            for i in 0..=n {
                let xv = lo + h * i as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let v = HybridValues::new(
                    [(x, DVector::from_element(1, xv))].into_iter().collect(),
                    mode.assignment.clone(),
                );
                integral += w * (-g.error(&v).unwrap()).exp() * h;
            }
            assert!((integral.ln() - mode.log_evidence).abs() < 1e-4);
        }
    }
}
