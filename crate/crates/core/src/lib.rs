//! Hybrid factor graphs over continuous and discrete variables with exact
//! conditional-linear-Gaussian variable elimination.
//!
//! ```
//! use hybridfg::discrete::DiscreteKey;
//! use hybridfg::elimination::{max_product, strong_ordering, sum_product};
//! use hybridfg::gaussian::{JacobianFactor, NoiseModel};
//! use hybridfg::hybrid::{HybridGaussianFactor, HybridGaussianFactorGraph};
//! use hybridfg::Key;
//! use nalgebra::{DMatrix, DVector};
//!
//! let x = Key::symbol('x', 0);
//! let m = DiscreteKey::binary(Key::symbol('m', 0));
//! let one = || DMatrix::from_element(1, 1, 1.0);
//!
//! // prior x ~ N(0, 1), measurement z = 1 = x + μ_m + ε with μ ∈ {0, 4}
//! let mut graph = HybridGaussianFactorGraph::new();
//! graph.push(JacobianFactor::new(vec![(x, one())], DVector::zeros(1))?);
//! let model = |mu: f64| (vec![(x, one())], DVector::from_element(1, 1.0 - mu), NoiseModel::unit(1).unwrap());
//! graph.push(HybridGaussianFactor::from_measurements(&[m], vec![model(0.0), model(4.0)])?);
//!
//! let ordering = strong_ordering(&graph)?;
//! let posterior = sum_product(&graph, &ordering)?;
//! let p = posterior.marginals()?[&m.key][0];
//! assert!((p - 0.880797).abs() < 1e-6);
//!
//! let map = max_product(&graph, &ordering)?;
//! assert_eq!(map.discrete.get(m.key), Some(0));
//! assert!((map.continuous.at(x)?[0] - 0.5).abs() < 1e-12);
//! # Ok::<(), hybridfg::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete;
pub mod elimination;
pub mod error;
pub mod gaussian;
pub mod hybrid;
pub mod key;
pub mod nonlinear;
pub mod oracle;
pub mod scalar;
pub mod slam;

pub use error::{Error, Result};
pub use key::Key;
pub use scalar::Scalar;

/// Double-precision instantiations of the generic types.
pub mod f64 {
    pub type DecisionTree = crate::discrete::DecisionTree<f64>;
    pub type DiscreteFactor = crate::discrete::DiscreteFactor<f64>;
    pub type DiscreteConditional = crate::discrete::DiscreteConditional<f64>;
    pub type JacobianFactor = crate::gaussian::JacobianFactor<f64>;
    pub type GaussianConditional = crate::gaussian::GaussianConditional<f64>;
    pub type GaussianBayesNet = crate::gaussian::GaussianBayesNet<f64>;
    pub type GaussianFactorGraph = crate::gaussian::GaussianFactorGraph<f64>;
    pub type NoiseModel = crate::gaussian::NoiseModel<f64>;
    pub type VectorValues = crate::gaussian::VectorValues<f64>;
    pub type HybridGaussianFactor = crate::hybrid::HybridGaussianFactor<f64>;
    pub type HybridGaussianConditional = crate::hybrid::HybridGaussianConditional<f64>;
    pub type HybridFactor = crate::hybrid::HybridFactor<f64>;
    pub type HybridGaussianFactorGraph = crate::hybrid::HybridGaussianFactorGraph<f64>;
    pub type HybridConditional = crate::hybrid::HybridConditional<f64>;
    pub type HybridBayesNet = crate::hybrid::HybridBayesNet<f64>;
    pub type HybridValues = crate::hybrid::HybridValues<f64>;
    pub type Pose2 = crate::nonlinear::Pose2<f64>;
    pub type Values = crate::nonlinear::Values<f64>;
    pub type NonlinearFactor = crate::nonlinear::NonlinearFactor<f64>;
    pub type HybridNonlinearFactor = crate::nonlinear::HybridNonlinearFactor<f64>;
    pub type HybridNonlinearFactorGraph = crate::nonlinear::HybridNonlinearFactorGraph<f64>;
}
