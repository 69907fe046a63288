use std::time::Instant;

use super::dataset::DatasetEntry;
use super::factors::{build_factor, motion_pose};
use super::{pose_key, SlamError};
use crate::discrete::{DiscreteAssignment, DiscreteFactor, DiscreteKey};
use crate::elimination::{dead_mode_removal, prune_bayes_net, strong_ordering, sum_product};
use crate::error::Error;
use crate::gaussian::NoiseModel;
use crate::hybrid::{HybridBayesNet, HybridGaussianFactorGraph};
use crate::key::Key;
use crate::nonlinear::{
    optimize, HybridNonlinearFactorGraph, NonlinearFactor, OptimizeError, OptimizerConfig, Pose2, PriorResidual, Values,
};

/// Standard deviation of the prior pinning the first pose to the origin.
const ANCHOR_SIGMA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Joint hypotheses kept after every elimination.
    pub prune: usize,
    /// Dead-mode removal threshold.
    pub dmr_delta: f64,
    /// Hybrid factors added between eliminations.
    pub elim_every: usize,
    /// Eliminations between relinearized batch passes.
    pub relin_every: usize,
    /// Process only the first `max_steps` dataset entries.
    pub max_steps: Option<usize>,
    /// Settings of the final nonlinear optimization.
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prune: 10,
            dmr_delta: 0.8,
            elim_every: 3,
            relin_every: 10,
            max_steps: None,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SlamError> {
        let bad = |m: &str| Err(SlamError::Config(m.into()));
        if self.prune < 1 {
            return bad("prune must be at least 1");
        }
        if !(self.dmr_delta > 0.5 && self.dmr_delta <= 1.0) {
            return Err(SlamError::Config(Error::AmbiguousThreshold(self.dmr_delta).to_string()));
        }
        if self.elim_every < 1 || self.relin_every < 1 {
            return bad("elim-every and relin-every must be at least 1");
        }
        Ok(())
    }
}

/// One processed dataset entry (or the final optimization).
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateRecord {
    pub step: usize,
    pub num_factors: usize,
    pub num_hypotheses: usize,
    pub millis: f64,
}

/// MAP estimate taken after an elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Dataset entry that triggered the elimination.
    pub step: usize,
    pub relinearized: bool,
    /// Live joint hypotheses straight out of elimination, before pruning.
    pub hypotheses_before_prune: usize,
    pub hypotheses: usize,
    /// Product of the cardinalities of modes added since the previous pass.
    pub new_mode_product: usize,
    pub poses: Vec<(u64, Pose2<f64>)>,
    pub modes: DiscreteAssignment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeEstimate {
    pub key: Key,
    pub value: usize,
    /// Posterior probability of `value`; 1 for dead-removed modes.
    pub marginal: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub values: Values<f64>,
    pub modes: Vec<ModeEstimate>,
    pub fixed: DiscreteAssignment,
    /// Live joint hypotheses in the final posterior.
    pub hypotheses: usize,
    pub timing: Vec<UpdateRecord>,
    pub history: Vec<Checkpoint>,
}

impl RunResult {
    /// Estimated poses ordered by index.
    pub fn poses(&self) -> Vec<(u64, Pose2<f64>)> {
        poses_of(&self.values)
    }
}

/// A failed run together with everything estimated up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct RunError {
    pub error: SlamError,
    pub partial: Box<RunResult>,
}

fn poses_of(values: &Values<f64>) -> Vec<(u64, Pose2<f64>)> {
    values
        .iter()
        .filter(|(k, _)| k.chr() == Some('x'))
        .filter_map(|(k, _)| values.pose(k).ok().map(|p| (k.index(), p)))
        .collect()
}

/// Streaming hybrid smoother.
///
/// Factors are linearized at a fixed point `theta` and queued. Every
/// `elim_every`-th hybrid factor the posterior net is turned back into
/// factors, combined with the queue, eliminated and pruned. Every
/// `relin_every`-th elimination instead removes dead modes, restricts the
/// nonlinear graph, moves `theta` to the current estimate and eliminates the
/// whole graph from scratch; the previous pruning survives as a support mask.
#[derive(Debug)]
pub struct Smoother {
    config: RunConfig,
    graph: HybridNonlinearFactorGraph<f64>,
    theta: Values<f64>,
    estimate: Values<f64>,
    modes: DiscreteAssignment,
    fixed: DiscreteAssignment,
    mode_keys: Vec<DiscreteKey>,
    bn: HybridBayesNet<f64>,
    pending: HybridGaussianFactorGraph<f64>,
    new_mode_product: usize,
    hybrid_seen: usize,
    eliminations: usize,
    hypotheses: usize,
    history: Vec<Checkpoint>,
}

impl Smoother {
    pub fn new(config: RunConfig) -> Result<Self, SlamError> {
        config.validate()?;
        Ok(Smoother {
            config,
            graph: HybridNonlinearFactorGraph::new(),
            theta: Values::new(),
            estimate: Values::new(),
            modes: DiscreteAssignment::new(),
            fixed: DiscreteAssignment::new(),
            mode_keys: Vec::new(),
            bn: HybridBayesNet::new(),
            pending: HybridGaussianFactorGraph::new(),
            new_mode_product: 1,
            hybrid_seen: 0,
            eliminations: 0,
            hypotheses: 1,
            history: Vec::new(),
        })
    }

    pub fn graph(&self) -> &HybridNonlinearFactorGraph<f64> {
        &self.graph
    }

    pub fn bayes_net(&self) -> &HybridBayesNet<f64> {
        &self.bn
    }

    pub fn estimate(&self) -> &Values<f64> {
        &self.estimate
    }

    /// Live joint hypotheses after the latest pruning pass.
    pub fn num_hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn history(&self) -> &[Checkpoint] {
        &self.history
    }

    fn insert_pose(&mut self, index: u64, pose: Pose2<f64>) {
        self.theta.insert_pose(pose_key(index), pose);
        self.estimate.insert_pose(pose_key(index), pose);
    }

    fn initialize(&mut self, index: usize, entry: &DatasetEntry) -> Result<(), SlamError> {
        let (from, to) = (entry.from(), entry.to());
        if self.estimate.is_empty() {
            self.insert_pose(from, Pose2::identity());
            let anchor = NonlinearFactor::new(
                PriorResidual::new(pose_key(from), Pose2::identity()),
                NoiseModel::diagonal(&[ANCHOR_SIGMA; 3])?,
            )?;
            self.pending.push(anchor.linearize(&self.theta)?);
            self.graph.push(anchor);
        }
        let motion = motion_pose(match entry {
            DatasetEntry::Odometry { hypotheses, .. } => &hypotheses[0],
            DatasetEntry::LoopClosure { measured, .. } => measured,
        });
        let known = |k: u64| self.estimate.contains(pose_key(k));
        match (known(from), known(to)) {
            (true, true) => {}
            (true, false) => {
                let p = self.estimate.pose(pose_key(from))?.compose(&motion);
                self.insert_pose(to, p);
            }
            (false, true) => {
                let p = self.estimate.pose(pose_key(to))?.compose(&motion.inverse());
                self.insert_pose(from, p);
            }
            (false, false) => {
                return Err(Error::InvalidStructure(format!(
                    "entry {index} links poses {from} and {to}, neither of which is connected yet"
                ))
                .into())
            }
        }
        Ok(())
    }

    /// Adds dataset entry `index`, eliminating when the schedule says so.
    pub fn add(&mut self, index: usize, entry: &DatasetEntry) -> Result<(), SlamError> {
        self.initialize(index, entry)?;
        let factor = build_factor(entry, index as u64)?;
        self.pending.push(factor.linearize(&self.theta)?);
        for dk in factor.discrete_keys() {
            self.mode_keys.push(*dk);
            self.new_mode_product *= dk.cardinality;
        }
        self.graph.push(factor);
        if entry.is_hybrid() {
            self.hybrid_seen += 1;
            if self.hybrid_seen.is_multiple_of(self.config.elim_every) {
                self.eliminations += 1;
                let relinearize = self.eliminations.is_multiple_of(self.config.relin_every);
                self.eliminate(index, relinearize)?;
            }
        }
        Ok(())
    }

    /// Indicator of the joint hypotheses that survived pruning, restricted
    /// to the modes in `fixed`.
    fn support_mask(&self, fixed: &DiscreteAssignment) -> Result<Option<DiscreteFactor<f64>>, SlamError> {
        if self.bn.discrete_keys()?.is_empty() {
            return Ok(None);
        }
        let joint = self.bn.discrete_joint()?;
        let mask = DiscreteFactor::new(joint.map(|p| if *p > 0.0 { 1.0 } else { 0.0 }))?.choose(fixed)?;
        Ok((!mask.keys().is_empty()).then_some(mask))
    }

    fn eliminate(&mut self, step: usize, relinearize: bool) -> Result<(), SlamError> {
        let graph = if relinearize {
            let mut mask = None;
            if !self.bn.is_empty() {
                let (restricted, newly) = dead_mode_removal(&self.bn, &self.graph, self.config.dmr_delta)?;
                mask = self.support_mask(&newly)?;
                self.graph = restricted;
                self.fixed.extend(newly.iter());
            }
            self.theta = self.estimate.clone();
            let mut lin = self.graph.linearize(&self.theta)?;
            if let Some(m) = mask {
                lin.push(m);
            }
            lin
        } else {
            let mut g = self.bn.to_factor_graph();
            g.extend(&self.pending);
            g
        };
        self.pending = HybridGaussianFactorGraph::new();

        let bn = sum_product(&graph, &strong_ordering(&graph)?)?;
        let before = bn.num_hypotheses()?;
        self.bn = prune_bayes_net(&bn, self.config.prune)?;
        self.hypotheses = self.bn.num_hypotheses()?;
        let map = self.bn.map()?;
        self.estimate = self.theta.retract(&map.continuous)?;
        self.modes = map.discrete;
        self.modes.extend(self.fixed.iter());
        log::debug!(
            "elimination at entry {step}: {} factors, {before} -> {} hypotheses{}",
            graph.len(),
            self.hypotheses,
            if relinearize { " (relinearized)" } else { "" }
        );
        self.history.push(Checkpoint {
            step,
            relinearized: relinearize,
            hypotheses_before_prune: before,
            hypotheses: self.hypotheses,
            new_mode_product: std::mem::replace(&mut self.new_mode_product, 1),
            poses: poses_of(&self.estimate),
            modes: self.modes.clone(),
        });
        Ok(())
    }

    fn mode_estimates(&self, modes: &DiscreteAssignment, bn: &HybridBayesNet<f64>) -> Vec<ModeEstimate> {
        let marginals = bn.marginals().unwrap_or_default();
        self.mode_keys
            .iter()
            .map(|dk| {
                let value = modes.get(dk.key).unwrap_or(0);
                let marginal = if self.fixed.contains(dk.key) {
                    1.0
                } else {
                    marginals.get(&dk.key).map_or(1.0 / dk.cardinality as f64, |m| m[value])
                };
                ModeEstimate { key: dk.key, value, marginal }
            })
            .collect()
    }

    /// Current estimate packaged as a result.
    pub fn snapshot(&self) -> RunResult {
        RunResult {
            values: self.estimate.clone(),
            modes: self.mode_estimates(&self.modes, &self.bn),
            fixed: self.fixed.clone(),
            hypotheses: self.hypotheses,
            timing: Vec::new(),
            history: self.history.clone(),
        }
    }

    fn fail(&self, error: SlamError) -> RunError {
        RunError { error, partial: Box::new(self.snapshot()) }
    }

    /// Eliminates queued factors, removes dead modes and polishes the
    /// estimate with the nonlinear optimizer.
    pub fn finish(mut self) -> Result<RunResult, RunError> {
        if !self.pending.is_empty() {
            let step = self.history.last().map_or(0, |c| c.step);
            if let Err(e) = self.eliminate(step, false) {
                return Err(self.fail(e));
            }
        }
        if self.graph.is_empty() {
            return Ok(self.snapshot());
        }
        match dead_mode_removal(&self.bn, &self.graph, self.config.dmr_delta) {
            Ok((g, newly)) => {
                self.graph = g;
                self.fixed.extend(newly.iter());
            }
            Err(e) => return Err(self.fail(e.into())),
        }
        let config = OptimizerConfig {
            prune: Some(self.config.prune),
            dmr_delta: Some(self.config.dmr_delta),
            ..self.config.optimizer.clone()
        };
        let (out, error) = match optimize(&self.graph, &self.estimate, &config) {
            Ok(out) => (out, None),
            Err(OptimizeError::Diverged { best }) => (*best, Some(SlamError::Diverged)),
            Err(OptimizeError::Solver(e)) => return Err(self.fail(e.into())),
        };
        log::info!("final optimization: {} iterations, error {}", out.iterations, out.error);
        self.fixed.extend(out.fixed.iter());
        let mut modes = out.modes.clone();
        modes.extend(self.fixed.iter());
        let result = RunResult {
            values: out.values,
            modes: self.mode_estimates(&modes, &out.bayes_net),
            fixed: self.fixed.clone(),
            hypotheses: out.bayes_net.num_hypotheses().unwrap_or(1),
            timing: Vec::new(),
            history: self.history.clone(),
        };
        match error {
            None => Ok(result),
            Some(error) => Err(RunError { error, partial: Box::new(result) }),
        }
    }
}

/// Runs the smoother over `entries` and records per-update wall time.
pub fn run(config: &RunConfig, entries: &[DatasetEntry]) -> Result<RunResult, RunError> {
    let mut smoother = Smoother::new(config.clone()).map_err(|error| RunError {
        error,
        partial: Box::new(RunResult {
            values: Values::new(),
            modes: Vec::new(),
            fixed: DiscreteAssignment::new(),
            hypotheses: 0,
            timing: Vec::new(),
            history: Vec::new(),
        }),
    })?;
    let n = config.max_steps.map_or(entries.len(), |s| s.min(entries.len()));
    let mut timing = Vec::with_capacity(n + 1);
    for (i, entry) in entries[..n].iter().enumerate() {
        let start = Instant::now();
        if let Err(e) = smoother.add(i, entry) {
            let mut err = smoother.fail(e);
            err.partial.timing = timing;
            return Err(err);
        }
        timing.push(UpdateRecord {
            step: i,
            num_factors: smoother.graph.len(),
            num_hypotheses: smoother.num_hypotheses(),
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let start = Instant::now();
    let num_factors = smoother.graph.len();
    let finished = smoother.finish();
    let finish = |result: &mut RunResult, mut timing: Vec<UpdateRecord>| {
        timing.push(UpdateRecord {
            step: n,
            num_factors,
            num_hypotheses: result.hypotheses,
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        result.timing = timing;
    };
    match finished {
        Ok(mut result) => {
            finish(&mut result, timing);
            Ok(result)
        }
        Err(mut err) => {
            finish(&mut err.partial, timing);
            Err(err)
        }
    }
}
