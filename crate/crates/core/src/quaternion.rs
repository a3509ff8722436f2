//! Quaternion arithmetic and the sphere/slice bookkeeping used everywhere else.
//!
//! A quaternion is stored as `[w, x, y, z]` meaning `w + x i + y j + z k`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::tolerances::{REAL_AXIS_REL, SPHERE_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuaternionError {
    #[error("division by the zero quaternion")]
    ZeroDivision,
    #[error("imaginary unit must be a unit purely imaginary quaternion (got {0})")]
    BadUnit(Quaternion),
}

#[derive(Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Quaternion::new(w, 0.0, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// `a + b u` for a real pair and an imaginary unit `u`.
    pub fn from_slice(a: f64, b: f64, u: Quaternion) -> Self {
        Quaternion::new(a + b * u.w, b * u.x, b * u.y, b * u.z)
    }

    pub fn re(self) -> f64 {
        self.w
    }

    pub fn im(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        // hypot-style scaling keeps |a b| = |a| |b| to a few ulp even for tiny entries
        let m = self.w.abs().max(self.x.abs()).max(self.y.abs()).max(self.z.abs());
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let s = self.scale(1.0 / m);
        m * s.norm_sqr().sqrt()
    }

    pub fn im_norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn inverse(self) -> Result<Self, QuaternionError> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(QuaternionError::ZeroDivision);
        }
        Ok(self.conj().scale(1.0 / n))
    }

    /// Inverse without the zero check; callers must have ruled out zero.
    pub(crate) fn recip(self) -> Self {
        self.conj().scale(1.0 / self.norm_sqr())
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn is_real(self, tol: f64) -> bool {
        self.im_norm() <= tol * self.norm().max(1.0)
    }

    pub fn dot(self, other: Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// `a^{-1} q a`, the rotation by `a / |a|`. Zero `a` leaves `q` alone.
    pub fn conjugate_by(self, a: Quaternion) -> Quaternion {
        if a.norm_sqr() == 0.0 {
            return self;
        }
        a.recip() * self * a
    }

    pub fn dist(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }

    /// Decomposition `q = x + y I` with `y >= 0` and `I` a unit imaginary.
    pub fn decompose(self) -> ImDecomposition {
        im_decompose(self)
    }
}

/// `q = x + y I`. Real quaternions get `y = 0` and `I = i` by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImDecomposition {
    pub x: f64,
    pub y: f64,
    pub unit: Quaternion,
}

pub fn im_decompose(q: Quaternion) -> ImDecomposition {
    let y = q.im_norm();
    if y <= REAL_AXIS_REL * q.norm().max(1.0) {
        return ImDecomposition { x: q.w, y: 0.0, unit: I };
    }
    ImDecomposition { x: q.w, y, unit: q.im().scale(1.0 / y) }
}

/// `x + y S` where `S` is the sphere of imaginary units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySphere {
    pub re: f64,
    #[serde(rename = "imNorm")]
    pub im_norm: f64,
}

impl SimilaritySphere {
    pub fn of(q: Quaternion) -> Self {
        SimilaritySphere { re: q.w, im_norm: q.im_norm() }
    }

    pub fn contains(&self, q: Quaternion, tol: f64) -> bool {
        (q.w - self.re).abs() <= tol && (q.im_norm() - self.im_norm).abs() <= tol
    }

    /// Euclidean distance from `q` to the sphere.
    pub fn distance(&self, q: Quaternion) -> f64 {
        (q.w - self.re).hypot(q.im_norm() - self.im_norm)
    }

    /// The one or two points where the sphere meets the slice through `unit`.
    pub fn slice_points(&self, unit: Quaternion) -> Vec<Quaternion> {
        if self.im_norm == 0.0 {
            vec![Quaternion::real(self.re)]
        } else {
            vec![
                Quaternion::from_slice(self.re, self.im_norm, unit),
                Quaternion::from_slice(self.re, -self.im_norm, unit),
            ]
        }
    }
}

pub fn same_sphere(a: Quaternion, b: Quaternion, tol: f64) -> bool {
    SimilaritySphere::of(a).contains(b, tol)
}

pub fn same_sphere_default(a: Quaternion, b: Quaternion) -> bool {
    same_sphere(a, b, SPHERE_TOL)
}

/// Checks that `u` is a unit purely imaginary quaternion and returns it normalized.
pub fn imaginary_unit(u: Quaternion) -> Result<Quaternion, QuaternionError> {
    let n = u.im_norm();
    if u.w.abs() > 1e-12 || (n - 1.0).abs() > 1e-9 {
        return Err(QuaternionError::BadUnit(u));
    }
    Ok(u.im().scale(1.0 / n))
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        self.scale(1.0 / s)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl MulAssign for Quaternion {
    fn mul_assign(&mut self, o: Quaternion) {
        *self = *self * o;
    }
}

impl From<f64> for Quaternion {
    fn from(w: f64) -> Self {
        Quaternion::real(w)
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<It: Iterator<Item = Quaternion>>(iter: It) -> Quaternion {
        iter.fold(ZERO, |a, b| a + b)
    }
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}, {:e}, {:e}]", self.w, self.x, self.y, self.z)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.w, self.x, self.y, self.z)
    }
}

impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 4]>::deserialize(d)?;
        Ok(Quaternion::from_array(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamilton_table() {
        assert_eq!(I * J, K);
        assert_eq!(J * K, I);
        assert_eq!(K * I, J);
        assert_eq!(J * I, -K);
        assert_eq!(I * I, -ONE);
        assert_eq!(I * J * K, -ONE);
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(ZERO.inverse(), Err(QuaternionError::ZeroDivision));
        let q = Quaternion::new(1.0, 2.0, -3.0, 0.5);
        let p = q * q.inverse().unwrap();
        assert!((p - ONE).norm() < 1e-15);
    }

    #[test]
    fn decompose_real_and_pure() {
        let d = im_decompose(Quaternion::real(0.3));
        assert_eq!(d.y, 0.0);
        assert_eq!(d.unit, I);
        let d = im_decompose(Quaternion::new(0.1, 0.0, 3.0, 4.0));
        assert_eq!(d.x, 0.1);
        assert!((d.y - 5.0).abs() < 1e-15);
        assert!((d.unit - Quaternion::new(0.0, 0.0, 0.6, 0.8)).norm() < 1e-15);
        let tiny = im_decompose(Quaternion::new(0.5, 1e-15, 0.0, 0.0));
        assert_eq!(tiny.y, 0.0);
    }

    #[test]
    fn sphere_membership() {
        assert!(same_sphere_default(Quaternion::new(0.2, 0.3, 0.0, 0.0), Quaternion::new(0.2, 0.0, 0.0, -0.3)));
        assert!(!same_sphere_default(Quaternion::new(0.2, 0.3, 0.0, 0.0), Quaternion::new(0.2, 0.0, 0.0, 0.31)));
        let s = SimilaritySphere::of(Quaternion::new(0.1, 0.0, 0.5, 0.0));
        let pts = s.slice_points(K);
        assert_eq!(pts.len(), 2);
        assert!(s.contains(pts[0], 1e-15) && s.contains(pts[1], 1e-15));
    }

    #[test]
    fn serde_roundtrip() {
        let q = Quaternion::new(0.25, -1.0, 0.0, 3.5);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, "[0.25,-1.0,0.0,3.5]");
        let back: Quaternion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
