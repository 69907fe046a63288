use super::JacobianFactor;
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::{lit, ln_two_pi, Scalar};
use nalgebra::{DMatrix, DVector};

/// Gaussian noise model stored as an upper-triangular square-root
/// information matrix `W` with `WᵀW = Σ⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel<T: Scalar> {
    sqrt_information: DMatrix<T>,
    log_normalizer: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn from_covariance(sigma: &DMatrix<T>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::InvalidNoiseModel("covariance must be square and nonempty".into()));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNoiseModel("covariance has non-finite entries".into()));
        }
        let tol = lit::<T>(1e-9) * sigma.amax().max(T::one());
        if (sigma - sigma.transpose()).amax() > tol {
            return Err(Error::InvalidNoiseModel("covariance is not symmetric".into()));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidNoiseModel("covariance is not positive definite".into()))?;
        let information = chol.inverse();
        let info_chol = information
            .cholesky()
            .ok_or_else(|| Error::InvalidNoiseModel("information matrix is not positive definite".into()))?;
        Self::from_sqrt_information(info_chol.l().transpose())
    }

    pub fn isotropic(dim: usize, sigma: T) -> Result<Self> {
        Self::diagonal(&vec![sigma; dim])
    }

    /// Independent components with standard deviations `sigmas`.
    pub fn diagonal(sigmas: &[T]) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidNoiseModel("noise model needs at least one component".into()));
        }
        if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > T::zero())) {
            return Err(Error::InvalidNoiseModel(format!("standard deviation {s} must be positive")));
        }
        let inv: Vec<T> = sigmas.iter().map(|s| T::one() / *s).collect();
        Self::from_sqrt_information(DMatrix::from_diagonal(&DVector::from_vec(inv)))
    }

    /// Unit covariance.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::isotropic(dim, T::one())
    }

    pub fn from_sqrt_information(w: DMatrix<T>) -> Result<Self> {
        if !w.is_square() || w.nrows() == 0 {
            return Err(Error::InvalidNoiseModel("square-root information must be square".into()));
        }
        let mut log_det_w = T::zero();
        for i in 0..w.nrows() {
            let d = w[(i, i)].abs();
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidNoiseModel("square-root information is singular".into()));
            }
            log_det_w += d.ln();
        }
        let n = T::from_usize(w.nrows()).unwrap();
        let log_normalizer = n * ln_two_pi::<T>() / (T::one() + T::one()) - log_det_w;
        Ok(NoiseModel { sqrt_information: w, log_normalizer })
    }

    pub fn dim(&self) -> usize {
        self.sqrt_information.nrows()
    }

    pub fn sqrt_information(&self) -> &DMatrix<T> {
        &self.sqrt_information
    }

    pub fn covariance(&self) -> DMatrix<T> {
        let info = self.sqrt_information.transpose() * &self.sqrt_information;
        info.try_inverse().expect("noise model information is invertible")
    }

    /// `log √|2πΣ|`, the per-model negative-log normalization constant.
    pub fn log_normalizer(&self) -> T {
        self.log_normalizer
    }

    pub fn whiten_vector(&self, v: &DVector<T>) -> DVector<T> {
        &self.sqrt_information * v
    }

    pub fn whiten_matrix(&self, m: &DMatrix<T>) -> DMatrix<T> {
        &self.sqrt_information * m
    }

    /// `½‖v‖²_Σ`.
    pub fn mahalanobis_half(&self, v: &DVector<T>) -> T {
        self.whiten_vector(v).norm_squared() / (T::one() + T::one())
    }
}

/// Whitens the measurement model `z = Σ_i H_i x_i + ε`, `ε ~ N(0, Σ)`, into
/// a unit-covariance factor `‖Σ_i A_i x_i − b‖²`.
pub fn whiten<T: Scalar>(
    blocks: Vec<(Key, DMatrix<T>)>,
    z: &DVector<T>,
    sigma: &DMatrix<T>,
) -> Result<JacobianFactor<T>> {
    let noise = NoiseModel::from_covariance(sigma)?;
    JacobianFactor::from_noise_model(blocks, z, &noise)
}
