use super::{HybridNonlinearFactorGraph, Values};
use crate::discrete::DiscreteAssignment;
use crate::elimination::{dead_mode_removal, max_product, prune_bayes_net, strong_ordering, sum_product};
use crate::error::{Error, Result};
use crate::gaussian::JacobianFactor;
use crate::hybrid::{HybridBayesNet, HybridGaussianFactorGraph};
use crate::scalar::{lit, Scalar};
use nalgebra::{DMatrix, DVector};

/// Settings for [`optimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once the largest update component falls below this.
    pub tolerance: f64,
    /// Hypotheses kept by pruning after each elimination (`None` disables it).
    pub prune: Option<usize>,
    /// Dead-mode removal threshold (`None` disables it).
    pub dmr_delta: Option<f64>,
    /// Initial Levenberg–Marquardt damping; `None` runs plain Gauss–Newton.
    pub damping: Option<f64>,
    /// Consecutive error increases tolerated before giving up.
    pub divergence_window: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 20,
            tolerance: 1e-6,
            prune: None,
            dmr_delta: None,
            damping: None,
            divergence_window: 5,
        }
    }
}

/// Hybrid estimate produced by [`optimize`].
#[derive(Clone, Debug)]
pub struct Optimized<T: Scalar> {
    pub values: Values<T>,
    /// MAP modes, including those fixed by dead-mode removal.
    pub modes: DiscreteAssignment,
    /// Posterior from the last linearization.
    pub bayes_net: HybridBayesNet<T>,
    /// The input graph restricted to the fixed modes.
    pub graph: HybridNonlinearFactorGraph<T>,
    pub fixed: DiscreteAssignment,
    /// Updates larger than the tolerance that were applied.
    pub iterations: usize,
    /// Negative log of the unnormalized posterior at `(values, modes)`.
    pub error: T,
    pub converged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum OptimizeError<T: Scalar> {
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("optimization diverged; best error {}", .best.error)]
    Diverged { best: Box<Optimized<T>> },
}

fn damped<T: Scalar>(lin: &HybridGaussianFactorGraph<T>, lambda: f64) -> Result<HybridGaussianFactorGraph<T>> {
    let mut out = lin.clone();
    let s = lit::<T>(lambda.sqrt());
    for (k, d) in lin.continuous_keys()? {
        out.push(JacobianFactor::new(vec![(k, DMatrix::identity(d, d) * s)], DVector::zeros(d))?);
    }
    Ok(out)
}

/// Relinearize–eliminate loop: linearize every factor at the current
/// estimate, eliminate with sum-product (then prune), take the joint MAP
/// update, retract, and optionally remove dead modes.
///
/// Gauss–Newton steps are always taken; with damping enabled, steps that
/// raise the error are rejected and the damping is increased instead.
/// `divergence_window` consecutive increases end the run with
/// [`OptimizeError::Diverged`] carrying the best estimate seen.
pub fn optimize<T: Scalar>(
    graph: &HybridNonlinearFactorGraph<T>,
    init: &Values<T>,
    config: &OptimizerConfig,
) -> std::result::Result<Optimized<T>, OptimizeError<T>> {
    for k in graph.continuous_keys() {
        init.get(k)?;
    }
    let mut graph = graph.clone();
    let mut values = init.clone();
    let mut fixed = DiscreteAssignment::new();
    let mut lambda = config.damping;
    let mut increases = 0;
    let mut iterations = 0;
    let mut best: Option<Optimized<T>> = None;
    let mut last: Option<Optimized<T>> = None;

    for _ in 0..config.max_iterations.max(1) {
        let mut lin = graph.linearize(&values)?;
        if let Some(l) = lambda {
            lin = damped(&lin, l)?;
        }
        let ordering = strong_ordering(&lin)?;
        let mut bn = sum_product(&lin, &ordering)?;
        let map = match config.prune {
            Some(p) => {
                bn = prune_bayes_net(&bn, p)?;
                bn.map()?
            }
            None => max_product(&lin, &ordering)?,
        };
        let mut modes = map.discrete.clone();
        modes.extend(fixed.iter());

        let error = graph.error(&values, &modes)?;
        let state = Optimized {
            values: values.clone(),
            modes: modes.clone(),
            bayes_net: bn.clone(),
            graph: graph.clone(),
            fixed: fixed.clone(),
            iterations,
            error,
            converged: false,
        };
        if best.as_ref().is_none_or(|b| error < b.error) {
            best = Some(state.clone());
        }

        let step = map.continuous.max_abs();
        let candidate = values.retract(&map.continuous)?;
        let new_error = graph.error(&candidate, &modes)?;
        let worse = new_error > error;
        log::debug!("iteration {iterations}: error {error} -> {new_error}, step {step}");
        if worse {
            increases += 1;
            if increases >= config.divergence_window {
                return Err(OptimizeError::Diverged { best: Box::new(best.expect("recorded above")) });
            }
        } else {
            increases = 0;
        }
        if let Some(l) = lambda.as_mut() {
            if worse {
                *l *= 10.0;
                last = Some(state);
                continue;
            }
            *l = (*l / 10.0).max(1e-12);
        }

        values = candidate;
        if step >= lit(config.tolerance) {
            iterations += 1;
        }
        if let Some(delta) = config.dmr_delta {
            let (restricted, newly) = dead_mode_removal(&bn, &graph, delta)?;
            graph = restricted;
            fixed.extend(newly.iter());
        }
        let converged = step < lit(config.tolerance);
        let error = graph.error(&values, &modes)?;
        last = Some(Optimized {
            values: values.clone(),
            modes,
            bayes_net: bn,
            graph: graph.clone(),
            fixed: fixed.clone(),
            iterations,
            error,
            converged,
        });
        if converged {
            break;
        }
    }
    Ok(last.expect("at least one iteration"))
}
