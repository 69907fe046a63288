use crate::discrete::DiscreteAssignment;
use crate::gaussian::VectorValues;
use crate::scalar::Scalar;

/// Joint instantiation of continuous and discrete variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridValues<T: Scalar> {
    pub continuous: VectorValues<T>,
    pub discrete: DiscreteAssignment,
}

impl<T: Scalar> HybridValues<T> {
    pub fn new(continuous: VectorValues<T>, discrete: DiscreteAssignment) -> Self {
        HybridValues { continuous, discrete }
    }
}
