//! Hybrid nonlinear factors on SE(2) poses and vector variables, their
//! linearization, and the relinearize–eliminate optimizer.

mod factor;
mod graph;
mod optimizer;
mod pose;
mod residual;
mod values;

pub use factor::{HybridNonlinearFactor, NonlinearFactor, NonlinearLeaf};
pub use graph::{HybridNonlinearFactorGraph, NonlinearGraphFactor};
pub use optimizer::{optimize, OptimizeError, Optimized, OptimizerConfig};
pub use pose::{wrap_angle, Pose2};
pub use residual::{numerical_jacobians, BetweenResidual, LinearResidual, PriorResidual, Residual};
pub use values::{Values, Variable};
