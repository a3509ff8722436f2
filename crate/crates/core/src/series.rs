//! Truncated power series `sum_m q^m a_m` with certified error bounds.
//!
//! Each [`TaylorSeries`] carries the stored coefficients `a_0..a_N` and a
//! [`Majorant`] bounding `|true_m - a_m|` (with `a_m = 0` past `N`). For a
//! series read from input the head of the majorant is zero and only the tail
//! `C g^m` is present, which is the usual `(coeffBound, growthRate)` pair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::majorant::Majorant;
use crate::quaternion::{Quaternion, ONE, ZERO};
use crate::tolerances::{DIVISION_TOL, SINGULAR_TOL, SYMMETRIZE_TOL};

const ROUND: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("evaluation at |q| = {radius} is outside the certified radius 1/{rate}")]
    OutsideConvergence { radius: f64, rate: f64 },
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("series is not invertible: |a_0| = {0}")]
    NotInvertibleAtZero(f64),
    #[error("symmetrization left an imaginary residue {0}")]
    SymmetrizationNotReal(f64),
    #[error("spherical derivative requested at a real point")]
    RealPoint,
    #[error("left division residual {0} exceeds tolerance")]
    InconsistentDivision(f64),
    #[error("series has no coefficients")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    coeffs: Vec<Quaternion>,
    err: Majorant,
}

/// A value together with a rigorous bound on its distance to the true value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: Quaternion,
    #[serde(rename = "tailBound")]
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeriesJson {
    coeffs: Vec<Quaternion>,
    #[serde(rename = "coeffBound", default)]
    coeff_bound: f64,
    #[serde(rename = "growthRate", default)]
    growth_rate: f64,
    #[serde(rename = "coeffErr", default, skip_serializing_if = "Option::is_none")]
    coeff_err: Option<Vec<f64>>,
}

impl TaylorSeries {
    /// Coefficients with a tail certificate `|a_m| <= coeff_bound * growth_rate^m` for `m > N`.
    pub fn new(coeffs: Vec<Quaternion>, coeff_bound: f64, growth_rate: f64) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        if !(coeff_bound >= 0.0 && coeff_bound.is_finite()) {
            return Err(SeriesError::InvalidCertificate(format!("coeffBound {coeff_bound}")));
        }
        if !(growth_rate >= 0.0 && growth_rate.is_finite()) {
            return Err(SeriesError::InvalidCertificate(format!("growthRate {growth_rate}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SeriesError::InvalidCertificate("non-finite coefficient".into()));
        }
        let n = coeffs.len() - 1;
        let mut err = Majorant::zero(n);
        if growth_rate > 0.0 {
            err.c = coeff_bound;
            err.g = growth_rate;
        }
        Ok(TaylorSeries { coeffs, err })
    }

    /// A polynomial, exact at every index.
    pub fn polynomial(coeffs: Vec<Quaternion>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![ZERO] } else { coeffs };
        let n = coeffs.len() - 1;
        TaylorSeries { coeffs, err: Majorant::zero(n) }
    }

    pub fn constant(c: Quaternion, n: usize) -> Self {
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[0] = c;
        TaylorSeries::polynomial(coeffs)
    }

    pub fn identity(n: usize) -> Self {
        let mut coeffs = vec![ZERO; n.max(1) + 1];
        coeffs[1] = ONE;
        TaylorSeries::polynomial(coeffs)
    }

    pub fn coeffs(&self) -> &[Quaternion] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff_bound(&self) -> f64 {
        self.err.c
    }

    pub fn growth_rate(&self) -> f64 {
        self.err.g
    }

    pub fn error_majorant(&self) -> &Majorant {
        &self.err
    }

    /// Largest stored coefficient error.
    pub fn max_coeff_error(&self) -> f64 {
        self.err.head.iter().cloned().fold(0.0, f64::max)
    }

    fn magnitude(&self) -> Majorant {
        let mut m = self.err.clone();
        for (h, a) in m.head.iter_mut().zip(&self.coeffs) {
            *h += a.norm();
        }
        m
    }

    /// Horner evaluation with left powers and a rigorous error bound.
    pub fn evaluate(&self, q: Quaternion) -> Result<Evaluation, SeriesError> {
        let r = q.norm();
        if self.err.has_tail() && self.err.g * r >= 1.0 {
            return Err(SeriesError::OutsideConvergence { radius: r, rate: self.err.g });
        }
        let mut acc = *self.coeffs.last().unwrap();
        for a in self.coeffs.iter().rev().skip(1) {
            acc = q * acc + *a;
        }
        let mut size = 0.0;
        for a in self.coeffs.iter().rev() {
            size = size * r + a.norm();
        }
        let bound = self.err.sum_at(r) + ROUND * (self.order() as f64 + 4.0) * size;
        if !bound.is_finite() {
            return Err(SeriesError::OutsideConvergence { radius: r, rate: self.err.g });
        }
        Ok(Evaluation { value: acc, tail_bound: bound })
    }

    pub fn value(&self, q: Quaternion) -> Result<Quaternion, SeriesError> {
        self.evaluate(q).map(|e| e.value)
    }

    /// Total certified error on the closed ball of radius `r`.
    pub fn error_bound_at(&self, r: f64) -> f64 {
        let size: f64 = self.coeffs.iter().rev().fold(0.0, |s, a| s * r + a.norm());
        self.err.sum_at(r) + ROUND * (self.order() as f64 + 4.0) * size
    }

    pub fn truncate(&self, n: usize) -> TaylorSeries {
        if n >= self.order() {
            return self.clone();
        }
        let mut full = self.magnitude();
        // stored head up to n keeps its own error, dropped entries become tail
        full.head[..=n].copy_from_slice(&self.err.head[..=n]);
        let err = full.truncate(n);
        TaylorSeries { coeffs: self.coeffs[..=n].to_vec(), err }
    }

    /// Extends with zero coefficients up to order `n`, moving tail bounds into the head.
    pub fn pad(&self, n: usize) -> TaylorSeries {
        if n <= self.order() {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n + 1, ZERO);
        let mut err = self.err.clone();
        err.head = (0..=n).map(|m| self.err.at(m)).collect();
        TaylorSeries { coeffs, err }
    }

    pub fn conjugate(&self) -> TaylorSeries {
        TaylorSeries { coeffs: self.coeffs.iter().map(|c| c.conj()).collect(), err: self.err.clone() }
    }

    pub fn neg(&self) -> TaylorSeries {
        TaylorSeries { coeffs: self.coeffs.iter().map(|c| -*c).collect(), err: self.err.clone() }
    }

    pub fn add_constant(&self, c: Quaternion) -> TaylorSeries {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// `c * f`, the constant acting on the left of every coefficient.
    pub fn left_scale(&self, c: Quaternion) -> TaylorSeries {
        TaylorSeries { coeffs: self.coeffs.iter().map(|a| c * *a).collect(), err: self.err.scale(c.norm()) }
    }

    /// `f * c`, the constant acting on the right.
    pub fn right_scale(&self, c: Quaternion) -> TaylorSeries {
        TaylorSeries { coeffs: self.coeffs.iter().map(|a| *a * c).collect(), err: self.err.scale(c.norm()) }
    }

    pub fn add(&self, other: &TaylorSeries) -> TaylorSeries {
        let n = self.order().min(other.order());
        let a = self.truncate(n);
        let b = other.truncate(n);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| *x + *y).collect();
        TaylorSeries { coeffs, err: a.err.add(&b.err) }
    }

    pub fn sub(&self, other: &TaylorSeries) -> TaylorSeries {
        self.add(&other.neg())
    }

    /// Adds `extra[m]` to the stored error of coefficient `m`.
    pub fn with_extra_error(mut self, extra: &[f64]) -> TaylorSeries {
        for (h, e) in self.err.head.iter_mut().zip(extra) {
            *h += e;
        }
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let coeff_err = if self.err.head.iter().any(|e| *e > 0.0) { Some(self.err.head.clone()) } else { None };
        serde_json::to_value(SeriesJson {
            coeffs: self.coeffs.clone(),
            coeff_bound: self.err.c,
            growth_rate: self.err.g,
            coeff_err,
        })
        .expect("series serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, SeriesError> {
        let s: SeriesJson =
            serde_json::from_value(v.clone()).map_err(|e| SeriesError::InvalidCertificate(e.to_string()))?;
        let mut out = TaylorSeries::new(s.coeffs, s.coeff_bound, s.growth_rate)?;
        if let Some(e) = s.coeff_err {
            if e.len() != out.coeffs.len() || e.iter().any(|x| !(*x >= 0.0)) {
                return Err(SeriesError::InvalidCertificate("coeffErr".into()));
            }
            out.err.head = e;
        }
        Ok(out)
    }
}

/// Cauchy convolution `sum_l a_{m-l} b_l`, truncated at `min(N_f, N_g)`.
pub fn star_mul(f: &TaylorSeries, g: &TaylorSeries) -> TaylorSeries {
    let n = f.order().min(g.order());
    let mut coeffs = vec![ZERO; n + 1];
    let mut sizes = vec![0.0; n + 1];
    for m in 0..=n {
        let mut acc = ZERO;
        let mut s = 0.0;
        for l in 0..=m {
            acc += f.coeffs[m - l] * g.coeffs[l];
            s += f.coeffs[m - l].norm() * g.coeffs[l].norm();
        }
        coeffs[m] = acc;
        sizes[m] = s;
    }
    let mut err = f.magnitude().mul(&g.magnitude());
    for m in 0..=n {
        // |a| e_b + e_a |b| + e_a e_b, plus rounding
        let mut e = 0.0;
        for l in 0..=m {
            let (ea, eb) = (f.err.head[m - l], g.err.head[l]);
            e += f.coeffs[m - l].norm() * eb + ea * g.coeffs[l].norm() + ea * eb;
        }
        err.head[m] = e + ROUND * (m as f64 + 4.0) * sizes[m];
    }
    TaylorSeries { coeffs, err }
}

pub fn conjugate(f: &TaylorSeries) -> TaylorSeries {
    f.conjugate()
}

/// `f * f^c`, checked to have real coefficients and then forced real.
pub fn symmetrize(f: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
    let mut s = star_mul(f, &f.conjugate());
    let scale = s.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let residue = s.coeffs.iter().map(|c| c.im_norm()).fold(0.0, f64::max);
    if residue > SYMMETRIZE_TOL * scale {
        return Err(SeriesError::SymmetrizationNotReal(residue));
    }
    for (c, e) in s.coeffs.iter_mut().zip(s.err.head.iter_mut()) {
        *e += c.im_norm();
        *c = Quaternion::real(c.w);
    }
    Ok(s)
}

/// Reciprocal of a real series, with a residual-based certificate.
fn inverse_real(s: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
    let n = s.order();
    let a: Vec<f64> = s.coeffs.iter().map(|c| c.w).collect();
    if a[0].abs() <= SINGULAR_TOL * SINGULAR_TOL {
        return Err(SeriesError::NotInvertibleAtZero(a[0].abs().sqrt()));
    }
    let mut t = vec![0.0; n + 1];
    t[0] = 1.0 / a[0];
    let mut rounding = vec![0.0; n + 1];
    rounding[0] = ROUND;
    for m in 1..=n {
        let mut acc = 0.0;
        let mut size = 0.0;
        for l in 1..=m {
            acc += a[l] * t[m - l];
            size += (a[l] * t[m - l]).abs();
        }
        t[m] = -acc / a[0];
        rounding[m] = ROUND * (m as f64 + 4.0) * (size + (a[0] * t[m]).abs());
    }
    let tm = Majorant { head: t.iter().map(|x| x.abs()).collect(), c: 0.0, g: 0.0 };
    // residual r = s_true * t - 1
    let mut r = s.magnitude().mul(&tm);
    let low = s.err.mul(&tm);
    for m in 0..=n {
        r.head[m] = low.head[m] + rounding[m];
    }
    let v = r.geometric_resolvent().ok_or(SeriesError::NotInvertibleAtZero(a[0].abs().sqrt()))?;
    let err = tm.mul(&v);
    Ok(TaylorSeries { coeffs: t.into_iter().map(Quaternion::real).collect(), err })
}

/// `(f^s)^{-1} * f^c`.
pub fn star_inverse(f: &TaylorSeries) -> Result<TaylorSeries, SeriesError> {
    let a0 = f.coeffs[0].norm();
    if a0 <= SINGULAR_TOL {
        return Err(SeriesError::NotInvertibleAtZero(a0));
    }
    let s = symmetrize(f)?;
    let t = inverse_real(&s)?;
    Ok(star_mul(&t, &f.conjugate()))
}

/// Cullen derivative `sum_m q^{m-1} m a_m`.
pub fn cullen_derivative(f: &TaylorSeries) -> TaylorSeries {
    let n = f.order();
    if n == 0 {
        return TaylorSeries::polynomial(vec![ZERO]);
    }
    let coeffs: Vec<Quaternion> = (1..=n).map(|m| f.coeffs[m].scale(m as f64)).collect();
    let head: Vec<f64> = (1..=n).map(|m| f.err.head[m] * m as f64).collect();
    let mut err = Majorant { head, c: 0.0, g: 0.0 };
    if f.err.has_tail() {
        // (m+1) c g^{m+1} <= K gamma^m for m >= n, any gamma > g
        let (c0, g0) = (f.err.c, f.err.g);
        let (c, g) = crate::majorant::fit_tail(n - 1, &[], g0, |lg| {
            let lx = g0.ln() - lg;
            if lx >= 0.0 {
                return f64::INFINITY;
            }
            let mstar = (-1.0 / lx - 1.0).max(n as f64);
            c0.ln() + g0.ln() + (mstar + 1.0).ln() + mstar * lx
        });
        err.c = c;
        err.g = g;
    }
    TaylorSeries { coeffs, err }
}

/// `(2 Im p)^{-1} (f(p) - f(conj p))` at a non-real point.
pub fn spherical_derivative(f: &TaylorSeries, p: Quaternion) -> Result<Evaluation, SeriesError> {
    let im = p.im();
    if im.norm() <= SINGULAR_TOL {
        return Err(SeriesError::RealPoint);
    }
    let a = f.evaluate(p)?;
    let b = f.evaluate(p.conj())?;
    let d = im.scale(2.0).recip();
    Ok(Evaluation { value: d * (a.value - b.value), tail_bound: (a.tail_bound + b.tail_bound) * d.norm() })
}

/// Result of dividing `f - f(p)` on the left by `q - p`.
#[derive(Debug, Clone)]
pub struct LeftDivision {
    pub quotient: TaylorSeries,
    pub value: Quaternion,
    pub residual: f64,
}

/// Finds `g` with `f - f(p) = (q - p) * g` by the backward recurrence
/// `b_{N-1} = a_N`, `b_{m-1} = a_m + p b_m`.
pub fn left_linear_divide(f: &TaylorSeries, p: Quaternion) -> Result<LeftDivision, SeriesError> {
    let n = f.order();
    let rp = p.norm();
    if f.err.has_tail() && f.err.g * rp >= 1.0 {
        return Err(SeriesError::OutsideConvergence { radius: rp, rate: f.err.g });
    }
    let value = f.evaluate(p)?.value;
    if n == 0 {
        let q = TaylorSeries::polynomial(vec![ZERO]);
        return Ok(LeftDivision { quotient: q, value, residual: 0.0 });
    }
    let mut b = vec![ZERO; n];
    b[n - 1] = f.coeffs[n];
    for m in (1..n).rev() {
        b[m - 1] = f.coeffs[m] + p * b[m];
    }
    let residual = (f.coeffs[0] - value + p * b[0]).norm();
    let scale: f64 = f.coeffs.iter().rev().fold(0.0, |s, a| s * rp + a.norm()).max(1.0);
    if residual > DIVISION_TOL * scale {
        return Err(SeriesError::InconsistentDivision(residual));
    }
    let mut e = vec![0.0; n];
    let tail_at_n = if f.err.has_tail() {
        let (c, g) = (f.err.c, f.err.g);
        c * rp * (g.ln() * (n + 1) as f64).exp() / (1.0 - g * rp)
    } else {
        0.0
    };
    let mut mag = vec![0.0; n];
    mag[n - 1] = f.coeffs[n].norm();
    e[n - 1] = f.err.head[n] + tail_at_n;
    for m in (1..n).rev() {
        mag[m - 1] = f.coeffs[m].norm() + rp * mag[m];
        e[m - 1] = f.err.head[m] + rp * e[m];
    }
    for m in 0..n {
        e[m] += ROUND * (n - m + 4) as f64 * mag[m];
    }
    let mut err = Majorant { head: e, c: 0.0, g: 0.0 };
    if f.err.has_tail() {
        err.c = f.err.c * f.err.g / (1.0 - f.err.g * rp);
        err.g = f.err.g;
    }
    Ok(LeftDivision { quotient: TaylorSeries { coeffs: b, err }, value, residual })
}

/// Coefficients of the regular Moebius map `(1 - q conj p)^{-*} * (q - p) * u`.
pub fn moebius_series(p: Quaternion, u: Quaternion, n: usize) -> TaylorSeries {
    let n = n.max(1);
    let rp = p.norm();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[0] = -(p * u);
    let factor = 1.0 - rp * rp;
    let mut pow = ONE;
    for c in coeffs.iter_mut().skip(1) {
        *c = (pow * u).scale(factor);
        pow = pow * p.conj();
    }
    let mut err = Majorant::zero(n);
    if rp > 0.0 {
        err.c = factor * u.norm() / rp;
        err.g = rp;
    }
    TaylorSeries { coeffs, err }
}
