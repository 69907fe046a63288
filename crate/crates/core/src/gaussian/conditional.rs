use super::{JacobianFactor, VectorValues};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::{ln_two_pi, Scalar};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian density `p(x | parents) ∝ exp(−½‖R x + Σ S_i y_i − d‖²)` with
/// square upper-triangular `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianConditional<T: Scalar> {
    frontal: Key,
    r: DMatrix<T>,
    parents: Vec<Key>,
    s: Vec<DMatrix<T>>,
    d: DVector<T>,
    log_normalizer: T,
}

impl<T: Scalar> GaussianConditional<T> {
    pub fn new(frontal: Key, r: DMatrix<T>, parents: Vec<(Key, DMatrix<T>)>, d: DVector<T>) -> Result<Self> {
        let n = r.nrows();
        if !r.is_square() || n == 0 {
            return Err(Error::InvalidStructure(format!("R for {frontal} must be square and nonempty")));
        }
        if d.len() != n {
            return Err(Error::DimensionMismatch(format!("d for {frontal} has wrong length")));
        }
        for j in 0..n {
            for i in (j + 1)..n {
                if r[(i, j)] != T::zero() {
                    return Err(Error::InvalidStructure(format!("R for {frontal} is not upper triangular")));
                }
            }
        }
        let mut log_det_r = T::zero();
        for i in 0..n {
            let rii = r[(i, i)].abs();
            if rii <= T::rank_tolerance() {
                return Err(Error::InvalidStructure(format!("R for {frontal} is singular")));
            }
            log_det_r += rii.ln();
        }
        let (keys, s): (Vec<Key>, Vec<DMatrix<T>>) = parents.into_iter().unzip();
        if s.iter().any(|m| m.nrows() != n) || keys.contains(&frontal) {
            return Err(Error::InvalidStructure(format!("invalid parent blocks for {frontal}")));
        }
        let log_normalizer = T::from_usize(n).unwrap() * ln_two_pi::<T>() / (T::one() + T::one()) - log_det_r;
        Ok(GaussianConditional { frontal, r, parents: keys, s, d, log_normalizer })
    }

    pub fn frontal(&self) -> Key {
        self.frontal
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }

    pub fn d(&self) -> &DVector<T> {
        &self.d
    }

    pub fn parents(&self) -> &[Key] {
        &self.parents
    }

    pub fn parent_blocks(&self) -> impl Iterator<Item = (Key, &DMatrix<T>)> + '_ {
        self.parents.iter().copied().zip(self.s.iter())
    }

    pub fn s(&self, parent: Key) -> Option<&DMatrix<T>> {
        self.parents.iter().position(|k| *k == parent).map(|i| &self.s[i])
    }

    /// `log √|2πΣ|` with `Σ = (RᵀR)⁻¹`.
    pub fn log_normalizer(&self) -> T {
        self.log_normalizer
    }

    pub fn covariance(&self) -> DMatrix<T> {
        (self.r.transpose() * &self.r).try_inverse().expect("R is nonsingular")
    }

    /// `d − Σ S_i y_i` for the parent values in `values`.
    fn shifted_rhs(&self, values: &VectorValues<T>) -> Result<DVector<T>> {
        let mut rhs = self.d.clone();
        for (key, s) in self.parent_blocks() {
            let y = values.at(key)?;
            if y.len() != s.ncols() {
                return Err(Error::DimensionMismatch(format!("parent {key} has wrong dimension")));
            }
            rhs -= s * y;
        }
        Ok(rhs)
    }

    /// Mean (and mode) of the frontal given parents: `R⁻¹(d − S y)`.
    pub fn solve(&self, parents: &VectorValues<T>) -> Result<DVector<T>> {
        let rhs = self.shifted_rhs(parents)?;
        Ok(self.r.solve_upper_triangular(&rhs).expect("R is nonsingular"))
    }

    /// `½‖R x + S y − d‖²`.
    pub fn error(&self, values: &VectorValues<T>) -> Result<T> {
        let x = values.at(self.frontal)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("value for {} has wrong dimension", self.frontal)));
        }
        let r = &self.r * x - self.shifted_rhs(values)?;
        Ok(r.norm_squared() / (T::one() + T::one()))
    }

    pub fn log_density(&self, values: &VectorValues<T>) -> Result<T> {
        Ok(-self.log_normalizer - self.error(values)?)
    }

    pub fn evaluate(&self, values: &VectorValues<T>) -> Result<T> {
        Ok(self.log_density(values)?.exp())
    }

    /// Draws `x = R⁻¹(d − S y + ε)` with `ε ~ N(0, I)`.
    pub fn sample(&self, parents: &VectorValues<T>, rng: &mut impl Rng) -> Result<DVector<T>> {
        let eps = DVector::from_fn(self.dim(), |_, _| T::from_f64(rng.sample::<f64, _>(StandardNormal)).unwrap());
        let rhs = self.shifted_rhs(parents)? + eps;
        Ok(self.r.solve_upper_triangular(&rhs).expect("R is nonsingular"))
    }

    /// The whitened error part `[R S | d]` as a factor (normalizer dropped).
    pub fn to_factor(&self) -> JacobianFactor<T> {
        let mut blocks = vec![(self.frontal, self.r.clone())];
        blocks.extend(self.parent_blocks().map(|(k, s)| (k, s.clone())));
        JacobianFactor::new(blocks, self.d.clone()).expect("conditional blocks are consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn solve_without_parents() {
        let c = GaussianConditional::new(Key(0), scalar(2.0), vec![], DVector::from_element(1, 6.0)).unwrap();
        assert_eq!(c.solve(&VectorValues::new()).unwrap()[0], 3.0);
    }

    #[test]
    fn solve_with_parent() {
        let c =
            GaussianConditional::new(Key(0), scalar(1.0), vec![(Key(1), scalar(-1.0))], DVector::from_element(1, 1.0))
                .unwrap();
        let parents: VectorValues<f64> = [(Key(1), DVector::from_element(1, 2.0))].into_iter().collect();
        assert_eq!(c.solve(&parents).unwrap()[0], 3.0);
    }

    #[test]
    fn log_normalizer_matches_log_det_formula() {
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 0.25]);
        let c = GaussianConditional::new(Key(0), r.clone(), vec![], DVector::zeros(2)).unwrap();
        let sigma = (r.transpose() * &r).try_inverse().unwrap();
        let expected = 0.5 * (std::f64::consts::TAU.powi(2) * sigma.determinant()).ln();
        assert!((c.log_normalizer() - expected).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_density_integrates_to_one() {
        let c = GaussianConditional::new(Key(0), scalar(0.7), vec![], DVector::from_element(1, 1.3)).unwrap();
        let mean = 1.3 / 0.7;
        let sd = 1.0 / 0.7;
        let n = 4096;
        let (lo, hi) = (mean - 8.0 * sd, mean + 8.0 * sd);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let v: VectorValues<f64> = [(Key(0), DVector::from_element(1, x))].into_iter().collect();
            total += w * c.evaluate(&v).unwrap();
        }
        assert!((total * h - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_singular_or_lower_triangular_r() {
        assert!(GaussianConditional::new(Key(0), scalar(0.0), vec![], DVector::zeros(1)).is_err());
        let lower = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(GaussianConditional::new(Key(0), lower, vec![], DVector::zeros(2)).is_err());
    }
}
