//! Hybrid Gaussian factors and conditionals: decision trees of whitened
//! linear components with per-mode negative-log constants.

mod bayes_net;
mod conditional;
mod factor;
mod graph;
mod values;

pub use bayes_net::{HybridBayesNet, HybridConditional};
pub use conditional::HybridGaussianConditional;
pub use factor::{discrete_factor_from_leaves, GaussianComponent, HybridGaussianFactor, Measurement};
pub use graph::{HybridFactor, HybridGaussianFactorGraph};
pub use values::HybridValues;

use crate::error::{Error, Result};
use crate::key::Key;

/// Checks that two `(key, dim)` layouts describe the same variables.
pub(crate) fn same_layout(a: &[(Key, usize)], b: &[(Key, usize)]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

pub(crate) fn layout_mismatch(what: &str) -> Error {
    Error::InvalidStructure(format!("{what}: components differ in continuous variables or dimensions"))
}

pub(crate) fn check_layouts<'a>(
    expected: &[(Key, usize)],
    layouts: impl Iterator<Item = Vec<(Key, usize)>> + 'a,
    what: &str,
) -> Result<()> {
    for l in layouts {
        if !same_layout(expected, &l) {
            return Err(layout_mismatch(what));
        }
    }
    Ok(())
}
