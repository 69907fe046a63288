//! Whitened linear factors, Gaussian conditionals and single-variable
//! elimination by orthogonal factorization.

mod conditional;
mod eliminate;
mod jacobian;
mod noise;
mod values;

pub use conditional::GaussianConditional;
pub use eliminate::{back_substitute, eliminate_one, GaussianBayesNet, GaussianFactorGraph};
pub use jacobian::JacobianFactor;
pub use noise::{whiten, NoiseModel};
pub use values::VectorValues;
