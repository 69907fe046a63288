use super::{Pose2, Values};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use std::fmt::Debug;

/// Unwhitened measurement error `e(x)`, zero when the measurement is met.
///
/// Jacobians are taken in the tangent space of each variable (see
/// [`Variable::retract`](super::Variable::retract)). The default
/// implementation uses central differences.
pub trait Residual<T: Scalar>: Debug + Send + Sync {
    fn keys(&self) -> &[Key];

    fn dim(&self) -> usize;

    fn evaluate(&self, values: &Values<T>) -> Result<DVector<T>>;

    fn jacobians(&self, values: &Values<T>) -> Result<Vec<DMatrix<T>>> {
        numerical_jacobians(self, values)
    }
}

/// Central-difference Jacobians of `residual` at `values`, one per key.
pub fn numerical_jacobians<T: Scalar, R: Residual<T> + ?Sized>(
    residual: &R,
    values: &Values<T>,
) -> Result<Vec<DMatrix<T>>> {
    let h = T::default_epsilon().cbrt();
    let two_h = h + h;
    residual
        .keys()
        .iter()
        .map(|&k| {
            let n = values.dim(k)?;
            let mut j = DMatrix::zeros(residual.dim(), n);
            for c in 0..n {
                let mut d = DVector::zeros(n);
                d[c] = h;
                let plus = residual.evaluate(&values.retract_one(k, &d)?)?;
                let minus = residual.evaluate(&values.retract_one(k, &(-d))?)?;
                j.set_column(c, &((plus - minus) / two_h));
            }
            Ok(j)
        })
        .collect()
}

fn pose_error<T: Scalar>(e: &Pose2<T>) -> DVector<T> {
    DVector::from_vec(vec![e.x(), e.y(), e.theta()])
}

/// `J · t` for the 90° rotation generator `J`, with a sign flip: `(t.y, −t.x)`.
fn cross<T: Scalar>(t: &Vector2<T>) -> Vector2<T> {
    Vector2::new(t[1], -t[0])
}

fn block<T: Scalar>(rot: &Matrix2<T>, col: Option<Vector2<T>>, angle: T) -> DMatrix<T> {
    let mut m = DMatrix::zeros(3, 3);
    m.view_mut((0, 0), (2, 2)).copy_from(rot);
    if let Some(c) = col {
        m[(0, 2)] = c[0];
        m[(1, 2)] = c[1];
    }
    m[(2, 2)] = angle;
    m
}

/// Relative-pose measurement between two poses:
/// `e = coords(μ⁻¹ ∘ (p₁⁻¹ ∘ p₂))`, heading wrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct BetweenResidual<T: Scalar> {
    keys: [Key; 2],
    measured: Pose2<T>,
}

impl<T: Scalar> BetweenResidual<T> {
    pub fn new(from: Key, to: Key, measured: Pose2<T>) -> Self {
        BetweenResidual { keys: [from, to], measured }
    }

    pub fn measured(&self) -> &Pose2<T> {
        &self.measured
    }
}

impl<T: Scalar> Residual<T> for BetweenResidual<T> {
    fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, values: &Values<T>) -> Result<DVector<T>> {
        let h = values.pose(self.keys[0])?.between(&values.pose(self.keys[1])?);
        Ok(pose_error(&self.measured.between(&h)))
    }

    fn jacobians(&self, values: &Values<T>) -> Result<Vec<DMatrix<T>>> {
        let h = values.pose(self.keys[0])?.between(&values.pose(self.keys[1])?);
        let rmt = self.measured.rotation().transpose();
        let h1 = block(&(-rmt), Some(rmt * cross(&h.translation())), -T::one());
        let h2 = block(&(rmt * h.rotation()), None, T::one());
        Ok(vec![h1, h2])
    }
}

/// Absolute pose measurement: `e = coords(μ⁻¹ ∘ p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorResidual<T: Scalar> {
    key: [Key; 1],
    prior: Pose2<T>,
}

impl<T: Scalar> PriorResidual<T> {
    pub fn new(key: Key, prior: Pose2<T>) -> Self {
        PriorResidual { key: [key], prior }
    }
}

impl<T: Scalar> Residual<T> for PriorResidual<T> {
    fn keys(&self) -> &[Key] {
        &self.key
    }

    fn dim(&self) -> usize {
        3
    }

    fn evaluate(&self, values: &Values<T>) -> Result<DVector<T>> {
        Ok(pose_error(&self.prior.between(&values.pose(self.key[0])?)))
    }

    fn jacobians(&self, values: &Values<T>) -> Result<Vec<DMatrix<T>>> {
        let p = values.pose(self.key[0])?;
        Ok(vec![block(&(self.prior.rotation().transpose() * p.rotation()), None, T::one())])
    }
}

/// Linear model on vector variables: `e = Σ H_i x_i − z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearResidual<T: Scalar> {
    keys: Vec<Key>,
    blocks: Vec<DMatrix<T>>,
    z: DVector<T>,
}

impl<T: Scalar> LinearResidual<T> {
    pub fn new(blocks: Vec<(Key, DMatrix<T>)>, z: DVector<T>) -> Result<Self> {
        if blocks.iter().any(|(_, h)| h.nrows() != z.len()) {
            return Err(Error::DimensionMismatch("linear residual blocks must match z".into()));
        }
        let (keys, blocks) = blocks.into_iter().unzip();
        Ok(LinearResidual { keys, blocks, z })
    }
}

impl<T: Scalar> Residual<T> for LinearResidual<T> {
    fn keys(&self) -> &[Key] {
        &self.keys
    }

    fn dim(&self) -> usize {
        self.z.len()
    }

    fn evaluate(&self, values: &Values<T>) -> Result<DVector<T>> {
        let mut e = -self.z.clone();
        for (k, h) in self.keys.iter().zip(&self.blocks) {
            let x = values.vector(*k)?;
            if x.len() != h.ncols() {
                return Err(Error::DimensionMismatch(format!("value for {k} has wrong dimension")));
            }
            e += h * x;
        }
        Ok(e)
    }

    fn jacobians(&self, _values: &Values<T>) -> Result<Vec<DMatrix<T>>> {
        Ok(self.blocks.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut impl Rng) -> Pose2<f64> {
        Pose2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0))
    }

    #[test]
    fn between_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (a, b) = (Key::symbol('x', 0), Key::symbol('x', 1));
            let mut v = Values::new();
            v.insert_pose(a, random_pose(&mut rng));
            v.insert_pose(b, random_pose(&mut rng));
            let r = BetweenResidual::new(a, b, random_pose(&mut rng));
            for (an, num) in r.jacobians(&v).unwrap().iter().zip(numerical_jacobians(&r, &v).unwrap()) {
                assert!((an - &num).amax() < 1e-6, "{an} vs {num}");
            }
        }
    }

    #[test]
    fn prior_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = Key::symbol('x', 0);
            let mut v = Values::new();
            v.insert_pose(a, random_pose(&mut rng));
            let r = PriorResidual::new(a, random_pose(&mut rng));
            let an = &r.jacobians(&v).unwrap()[0];
            let num = &numerical_jacobians(&r, &v).unwrap()[0];
            assert!((an - num).amax() < 1e-6);
        }
    }

    #[test]
    fn satisfied_between_has_zero_error() {
        let p = Pose2::new(1.0, 2.0, 0.5);
        let d = Pose2::new(0.3, -0.2, 0.1);
        let mut v = Values::new();
        v.insert_pose(Key(0), p);
        v.insert_pose(Key(1), p.compose(&d));
        let e = BetweenResidual::new(Key(0), Key(1), d).evaluate(&v).unwrap();
        assert!(e.amax() < 1e-15);
    }
}
