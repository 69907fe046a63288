use super::{NoiseModel, VectorValues};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};

/// Whitened linear factor `exp(−½‖Σ_i A_i x_i − b‖²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianFactor<T: Scalar> {
    keys: Vec<Key>,
    blocks: Vec<DMatrix<T>>,
    rhs: DVector<T>,
}

impl<T: Scalar> JacobianFactor<T> {
    pub fn new(blocks: Vec<(Key, DMatrix<T>)>, rhs: DVector<T>) -> Result<Self> {
        let rows = rhs.len();
        let mut keys = Vec::with_capacity(blocks.len());
        let mut mats = Vec::with_capacity(blocks.len());
        for (key, a) in blocks {
            if a.nrows() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "block for {key} has {} rows, rhs has {rows}",
                    a.nrows()
                )));
            }
            if keys.contains(&key) {
                return Err(Error::InvalidStructure(format!("duplicate key {key} in factor")));
            }
            keys.push(key);
            mats.push(a);
        }
        if mats.iter().flat_map(|m| m.iter()).chain(rhs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidStructure("non-finite entry in linear factor".into()));
        }
        Ok(JacobianFactor { keys, blocks: mats, rhs })
    }

    /// Factor from an unwhitened model `z = Σ H_i x_i + ε` with noise `noise`.
    pub fn from_noise_model(blocks: Vec<(Key, DMatrix<T>)>, z: &DVector<T>, noise: &NoiseModel<T>) -> Result<Self> {
        if z.len() != noise.dim() {
            return Err(Error::DimensionMismatch(format!(
                "measurement of dimension {} with noise of dimension {}",
                z.len(),
                noise.dim()
            )));
        }
        let whitened = blocks
            .into_iter()
            .map(|(k, h)| {
                if h.nrows() != noise.dim() {
                    return Err(Error::DimensionMismatch(format!("block for {k} has wrong row count")));
                }
                Ok((k, noise.whiten_matrix(&h)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(whitened, noise.whiten_vector(z))
    }

    /// Factor without rows over `keys` (the constant 1).
    pub fn empty(keys: &[(Key, usize)]) -> Self {
        JacobianFactor {
            keys: keys.iter().map(|(k, _)| *k).collect(),
            blocks: keys.iter().map(|(_, d)| DMatrix::zeros(0, *d)).collect(),
            rhs: DVector::zeros(0),
        }
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn has_key(&self, key: Key) -> bool {
        self.keys.contains(&key)
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &DVector<T> {
        &self.rhs
    }

    pub fn block(&self, key: Key) -> Option<&DMatrix<T>> {
        self.keys.iter().position(|k| *k == key).map(|i| &self.blocks[i])
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Key, &DMatrix<T>)> + '_ {
        self.keys.iter().copied().zip(self.blocks.iter())
    }

    /// Column dimension of every variable, in key order.
    pub fn dims(&self) -> Vec<(Key, usize)> {
        self.blocks().map(|(k, a)| (k, a.ncols())).collect()
    }

    /// `Σ A_i x_i − b`.
    pub fn residual(&self, values: &VectorValues<T>) -> Result<DVector<T>> {
        let mut r = -self.rhs.clone();
        for (key, a) in self.blocks() {
            let x = values.at(key)?;
            if x.len() != a.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "value for {key} has dimension {}, factor expects {}",
                    x.len(),
                    a.ncols()
                )));
            }
            r += a * x;
        }
        Ok(r)
    }

    /// `½‖Σ A_i x_i − b‖²`.
    pub fn error(&self, values: &VectorValues<T>) -> Result<T> {
        Ok(self.residual(values)?.norm_squared() / (T::one() + T::one()))
    }
}
