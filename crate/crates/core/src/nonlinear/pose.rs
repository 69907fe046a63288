use crate::scalar::Scalar;
use nalgebra::{Matrix2, Vector2, Vector3};
use std::fmt;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle<T: Scalar>(a: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    let mut r = a - two_pi * ((a + pi) / two_pi).floor();
    if r <= -pi {
        r += two_pi;
    }
    if r > pi {
        r -= two_pi;
    }
    r
}

/// Planar rigid transform: translation `(x, y)` in meters and heading `theta`
/// in radians, always kept in `(−π, π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose2<T: Scalar> {
    x: T,
    y: T,
    theta: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Pose2 { x, y, theta: wrap_angle(theta) }
    }

    pub fn identity() -> Self {
        Pose2::new(T::zero(), T::zero(), T::zero())
    }

    /// Pose with coordinates `(v[0], v[1], v[2])`.
    pub fn from_vector(v: &Vector3<T>) -> Self {
        Pose2::new(v[0], v[1], v[2])
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn y(&self) -> T {
        self.y
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn translation(&self) -> Vector2<T> {
        Vector2::new(self.x, self.y)
    }

    pub fn rotation(&self) -> Matrix2<T> {
        let (s, c) = self.theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    pub fn to_vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.theta)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Pose2<T>) -> Pose2<T> {
        let t = self.translation() + self.rotation() * other.translation();
        Pose2::new(t[0], t[1], self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2<T> {
        let t = -(self.rotation().transpose() * self.translation());
        Pose2::new(t[0], t[1], -self.theta)
    }

    /// `self⁻¹ ∘ other`: `other` expressed in the frame of `self`.
    pub fn between(&self, other: &Pose2<T>) -> Pose2<T> {
        let t = self.rotation().transpose() * (other.translation() - self.translation());
        Pose2::new(t[0], t[1], other.theta - self.theta)
    }

    /// `self ∘ Pose2(delta)`.
    pub fn retract(&self, delta: &Vector3<T>) -> Pose2<T> {
        self.compose(&Pose2::from_vector(delta))
    }

    /// Inverse of [`retract`](Self::retract): coordinates of `self⁻¹ ∘ other`.
    pub fn local(&self, other: &Pose2<T>) -> Vector3<T> {
        self.between(other).to_vector()
    }
}

impl<T: Scalar> Default for Pose2<T> {
    fn default() -> Self {
        Pose2::identity()
    }
}

impl<T: Scalar> fmt::Display for Pose2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.theta)
    }
}
