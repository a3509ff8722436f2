//! Regular Moebius expression trees and their exact pointwise evaluation.
//!
//! Values are computed from the product rule
//! `(f * g)(q) = f(q) g(f(q)^{-1} q f(q))` and its consequences for
//! reciprocals and the Moebius action, so no truncation is involved. Each node
//! caches its regular conjugate, built by the rewriting rules in
//! [`Expr::conjugate`].

use std::fmt;
use std::sync::{Arc, OnceLock, Weak};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moebius::{classical_moebius, moebius_regular_eval, MoebiusError, MoebiusMap};
use crate::quaternion::{im_decompose, Quaternion, SimilaritySphere, ONE, ZERO};
use crate::series::{self, SeriesError, TaylorSeries};
use crate::tolerances::{ADAPTIVE_TAIL, DEFAULT_ORDER, RADIUS_CAP, SINGULAR_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("evaluation hit a zero of a symmetrization at {0:?}")]
    SingularPoint(Quaternion),
    #[error("Moebius action is undefined at {0:?}: 1 - p f^c vanishes")]
    PhiVanishes(Quaternion),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("malformed expression: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(Quaternion),
    Identity,
    /// `sum_m q^m a_m`, evaluated exactly.
    Poly(Vec<Quaternion>),
    Moebius(MoebiusMap),
    StarMul(Expr, Expr),
    StarInv(Expr),
    Conj(Expr),
    /// `M_p . f = (1 - f conj p)^{-*} * (f - p)`.
    Bullet(Quaternion, Expr),
}

struct Node {
    kind: ExprKind,
    conj: OnceLock<Expr>,
    back: OnceLock<Weak<Node>>,
}

/// A shared, immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind().fmt(f)
    }
}

impl Expr {
    fn from_kind(kind: ExprKind) -> Expr {
        Expr(Arc::new(Node { kind, conj: OnceLock::new(), back: OnceLock::new() }))
    }

    pub fn constant(c: Quaternion) -> Expr {
        Expr::from_kind(ExprKind::Const(c))
    }

    pub fn identity() -> Expr {
        Expr::from_kind(ExprKind::Identity)
    }

    pub fn poly(coeffs: Vec<Quaternion>) -> Expr {
        Expr::from_kind(ExprKind::Poly(if coeffs.is_empty() { vec![ZERO] } else { coeffs }))
    }

    pub fn moebius(p: Quaternion, u: Quaternion) -> Result<Expr, ExprError> {
        Ok(Expr::from_kind(ExprKind::Moebius(MoebiusMap::new(p, u)?)))
    }

    pub fn moebius_map(m: MoebiusMap) -> Expr {
        Expr::from_kind(ExprKind::Moebius(m))
    }

    pub fn star_mul(f: &Expr, g: &Expr) -> Expr {
        Expr::from_kind(ExprKind::StarMul(f.clone(), g.clone()))
    }

    pub fn star_inv(h: &Expr) -> Expr {
        Expr::from_kind(ExprKind::StarInv(h.clone()))
    }

    pub fn conj(f: &Expr) -> Expr {
        Expr::from_kind(ExprKind::Conj(f.clone()))
    }

    pub fn bullet(p: Quaternion, f: &Expr) -> Result<Expr, ExprError> {
        let r = p.norm();
        if !(r < 1.0) {
            return Err(MoebiusError::NotInBall(r).into());
        }
        Ok(Expr::from_kind(ExprKind::Bullet(p, f.clone())))
    }

    /// `M_{q_1} * ... * M_{q_k} u`.
    pub fn blaschke(zeros: &[Quaternion], u: Quaternion) -> Result<Expr, ExprError> {
        let Some((last, rest)) = zeros.split_last() else {
            let m = MoebiusMap::new(ZERO, u)?;
            return Ok(Expr::constant(m.u));
        };
        let mut e = Expr::moebius(*last, u)?;
        for z in rest.iter().rev() {
            e = Expr::star_mul(&Expr::moebius(*z, ONE)?, &e);
        }
        Ok(e)
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn depth(&self) -> usize {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Identity | ExprKind::Poly(_) | ExprKind::Moebius(_) => 0,
            ExprKind::StarMul(a, b) => 1 + a.depth().max(b.depth()),
            ExprKind::StarInv(a) | ExprKind::Conj(a) | ExprKind::Bullet(_, a) => 1 + a.depth(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Identity | ExprKind::Poly(_) | ExprKind::Moebius(_) => 1,
            ExprKind::StarMul(a, b) => 1 + a.node_count() + b.node_count(),
            ExprKind::StarInv(a) | ExprKind::Conj(a) | ExprKind::Bullet(_, a) => 1 + a.node_count(),
        }
    }

    fn is_self_conjugate(&self) -> bool {
        match self.kind() {
            ExprKind::Identity => true,
            ExprKind::Const(c) => c.im_norm() == 0.0,
            ExprKind::Poly(a) => a.iter().all(|c| c.im_norm() == 0.0),
            ExprKind::Moebius(m) => m.p.im_norm() == 0.0 && m.u.im_norm() == 0.0,
            _ => false,
        }
    }

    /// The regular conjugate `f^c`, computed once per node.
    ///
    /// Rewrites: `(f*g)^c = g^c * f^c`, `(h^{-*})^c = (h^c)^{-*}`,
    /// `(M_p u)^c = conj(u) * M_{conj p}` and `(M_p . f)^c = M_{conj p} . f^c`.
    pub fn conjugate(&self) -> Expr {
        if self.is_self_conjugate() {
            return self.clone();
        }
        if let Some(c) = self.0.conj.get() {
            return c.clone();
        }
        if let Some(b) = self.0.back.get().and_then(Weak::upgrade) {
            return Expr(b);
        }
        let c = match self.kind() {
            ExprKind::Const(c) => Expr::constant(c.conj()),
            ExprKind::Identity => self.clone(),
            ExprKind::Poly(a) => Expr::poly(a.iter().map(|c| c.conj()).collect()),
            ExprKind::Moebius(m) => {
                let base = Expr::moebius_map(MoebiusMap { p: m.p.conj(), u: ONE });
                if (m.u - ONE).norm() == 0.0 {
                    base
                } else {
                    Expr::star_mul(&Expr::constant(m.u.conj()), &base)
                }
            }
            ExprKind::StarMul(f, g) => Expr::star_mul(&g.conjugate(), &f.conjugate()),
            ExprKind::StarInv(h) => Expr::star_inv(&h.conjugate()),
            ExprKind::Conj(f) => f.clone(),
            ExprKind::Bullet(p, f) => Expr::from_kind(ExprKind::Bullet(p.conj(), f.conjugate())),
        };
        // `Conj(f)^c` is the existing node `f`, which must not point back to a `Conj`
        if !matches!(self.kind(), ExprKind::Conj(_)) {
            let _ = c.0.back.set(Arc::downgrade(&self.0));
        }
        let _ = self.0.conj.set(c.clone());
        c
    }

    /// Exact value at `q`.
    pub fn eval(&self, q: Quaternion) -> Result<Quaternion, ExprError> {
        match self.kind() {
            ExprKind::Const(c) => Ok(*c),
            ExprKind::Identity => Ok(q),
            ExprKind::Poly(a) => {
                let mut acc = *a.last().unwrap();
                for c in a.iter().rev().skip(1) {
                    acc = q * acc + *c;
                }
                Ok(acc)
            }
            ExprKind::Moebius(m) => Ok(moebius_regular_eval(m, q)?),
            ExprKind::StarMul(f, g) => {
                let fq = f.eval(q)?;
                if fq.norm_sqr() == 0.0 {
                    return Ok(ZERO);
                }
                Ok(fq * g.eval(q.conjugate_by(fq))?)
            }
            ExprKind::StarInv(h) => {
                let hc = h.conjugate().eval(q)?;
                if hc.norm() <= SINGULAR_TOL {
                    return Err(ExprError::SingularPoint(q));
                }
                let v = h.eval(q.conjugate_by(hc))?;
                if v.norm() <= SINGULAR_TOL {
                    return Err(ExprError::SingularPoint(q));
                }
                Ok(v.recip())
            }
            ExprKind::Conj(f) => f.conjugate().eval(q),
            ExprKind::Bullet(p, f) => {
                if p.norm_sqr() == 0.0 {
                    return f.eval(q);
                }
                let fc = f.conjugate().eval(q.conjugate_by(*p))?;
                let phi = ONE - *p * fc;
                if phi.norm() <= SINGULAR_TOL {
                    return Err(ExprError::PhiVanishes(q));
                }
                let w = f.eval(q.conjugate_by(phi))?;
                Ok(classical_moebius(*p, w)?)
            }
        }
    }

    /// Spheres where some reciprocal node of the tree is known to be singular.
    pub fn singular_spheres(&self) -> Vec<SimilaritySphere> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out
    }

    fn collect_singular(&self, out: &mut Vec<SimilaritySphere>) {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Identity | ExprKind::Poly(_) | ExprKind::Moebius(_) => {}
            ExprKind::StarMul(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
            }
            ExprKind::StarInv(h) => {
                h.collect_singular(out);
                if let Some(z) = h.zero_spheres() {
                    for s in z {
                        if !out.iter().any(|t| t == &s) {
                            out.push(s);
                        }
                    }
                }
            }
            ExprKind::Conj(a) | ExprKind::Bullet(_, a) => a.collect_singular(out),
        }
    }

    /// Zero set of the symmetrization, when it is known in closed form.
    fn zero_spheres(&self) -> Option<Vec<SimilaritySphere>> {
        match self.kind() {
            ExprKind::Const(c) => (c.norm_sqr() > 0.0).then(Vec::new),
            ExprKind::Identity => Some(vec![SimilaritySphere { re: 0.0, im_norm: 0.0 }]),
            ExprKind::Moebius(m) => Some(vec![SimilaritySphere::of(m.p)]),
            ExprKind::StarMul(a, b) => {
                let mut z = a.zero_spheres()?;
                z.extend(b.zero_spheres()?);
                Some(z)
            }
            ExprKind::Conj(a) => a.zero_spheres(),
            _ => None,
        }
    }

    /// Value at `q`, treating singularities on known spheres as removable.
    ///
    /// Near such a sphere the value is the mean of the function over a small
    /// circle around `q` inside its slice, where it is holomorphic.
    pub fn eval_removable(&self, q: Quaternion) -> Result<Quaternion, ExprError> {
        let spheres = self.singular_spheres();
        let gap = spheres.iter().map(|s| s.distance(q)).fold(f64::INFINITY, f64::min);
        if gap > 1e-4 {
            match self.eval(q) {
                Ok(v) => return Ok(v),
                Err(ExprError::SingularPoint(_)) | Err(ExprError::PhiVanishes(_)) => {}
                Err(e) => return Err(e),
            }
        }
        contour_mean(self, q, &spheres)
    }

    pub fn to_series(&self, n: usize) -> Result<TaylorSeries, ExprError> {
        let n = n.max(1);
        Ok(match self.kind() {
            ExprKind::Const(c) => TaylorSeries::constant(*c, n),
            ExprKind::Identity => TaylorSeries::identity(n),
            ExprKind::Poly(a) => TaylorSeries::polynomial(a.clone()).pad(n).truncate(n),
            ExprKind::Moebius(m) => series::moebius_series(m.p, m.u, n),
            ExprKind::StarMul(f, g) => series::star_mul(&f.to_series(n)?, &g.to_series(n)?),
            ExprKind::StarInv(h) => series::star_inverse(&h.to_series(n)?)?,
            ExprKind::Conj(f) => f.to_series(n)?.conjugate(),
            ExprKind::Bullet(p, f) => {
                let s = f.to_series(n)?;
                let num = s.add_constant(-*p);
                let den = s.left_scale(-p.conj()).add_constant(ONE);
                series::star_mul(&num, &series::star_inverse(&den)?)
            }
        })
    }

    /// Doubles the order from the default until the certified error at radius
    /// 0.95 drops below `1e-12`, stopping at order 4096.
    pub fn to_series_adaptive(&self) -> Result<TaylorSeries, ExprError> {
        let mut n = DEFAULT_ORDER;
        loop {
            let s = self.to_series(n)?;
            if s.error_bound_at(RADIUS_CAP) < ADAPTIVE_TAIL || n >= 4096 {
                return Ok(s);
            }
            n *= 2;
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ExprJson::from(self)).expect("expression serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Expr, ExprError> {
        let j: ExprJson = serde_json::from_value(v.clone()).map_err(|e| ExprError::Malformed(e.to_string()))?;
        j.build()
    }
}

fn contour_mean(e: &Expr, q: Quaternion, spheres: &[SimilaritySphere]) -> Result<Quaternion, ExprError> {
    const POINTS: usize = 64;
    let d = im_decompose(q);
    let unit = d.unit;
    let marks: Vec<Quaternion> = spheres.iter().flat_map(|s| s.slice_points(unit)).collect();
    let base = 0.5 * (1.0 - q.norm());
    if !(base > 0.0) {
        return Err(ExprError::SingularPoint(q));
    }
    let mut last = ExprError::SingularPoint(q);
    for f in [1.0, 0.7, 0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05, 0.03] {
        let rho = base * f;
        if marks.iter().any(|m| (m.dist(q) - rho).abs() < 0.25 * rho) {
            continue;
        }
        let mut acc = ZERO;
        let mut ok = true;
        for k in 0..POINTS {
            let t = std::f64::consts::TAU * (k as f64 + 0.5) / POINTS as f64;
            let z = q + Quaternion::from_slice(rho * t.cos(), rho * t.sin(), unit);
            match e.eval(z) {
                Ok(v) => acc += v,
                Err(err) => {
                    last = err;
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(acc.scale(1.0 / POINTS as f64));
        }
    }
    Err(last)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ExprJson {
    Bare(Quaternion),
    Node(NodeJson),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
enum NodeJson {
    Const {
        value: Quaternion,
    },
    Identity,
    Poly {
        coeffs: Vec<Quaternion>,
    },
    Moebius {
        p: Quaternion,
        #[serde(default = "one")]
        u: Quaternion,
    },
    StarMul {
        left: Box<ExprJson>,
        right: Box<ExprJson>,
    },
    StarInv {
        arg: Box<ExprJson>,
    },
    Conj {
        arg: Box<ExprJson>,
    },
    Bullet {
        p: Quaternion,
        arg: Box<ExprJson>,
    },
    /// Input-only shorthand for a product of Moebius factors.
    Blaschke {
        zeros: Vec<Quaternion>,
        #[serde(default = "one")]
        u: Quaternion,
    },
}

fn one() -> Quaternion {
    ONE
}

impl ExprJson {
    fn build(&self) -> Result<Expr, ExprError> {
        let node = match self {
            ExprJson::Bare(c) => return checked(Expr::constant(*c), *c),
            ExprJson::Node(n) => n,
        };
        Ok(match node {
            NodeJson::Const { value } => checked(Expr::constant(*value), *value)?,
            NodeJson::Identity => Expr::identity(),
            NodeJson::Poly { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(ExprError::Malformed("non-finite coefficient".into()));
                }
                Expr::poly(coeffs.clone())
            }
            NodeJson::Moebius { p, u } => Expr::moebius(*p, *u)?,
            NodeJson::StarMul { left, right } => Expr::star_mul(&left.build()?, &right.build()?),
            NodeJson::StarInv { arg } => Expr::star_inv(&arg.build()?),
            NodeJson::Conj { arg } => Expr::conj(&arg.build()?),
            NodeJson::Bullet { p, arg } => Expr::bullet(*p, &arg.build()?)?,
            NodeJson::Blaschke { zeros, u } => Expr::blaschke(zeros, *u)?,
        })
    }
}

fn checked(e: Expr, c: Quaternion) -> Result<Expr, ExprError> {
    if c.is_finite() {
        Ok(e)
    } else {
        Err(ExprError::Malformed("non-finite constant".into()))
    }
}

impl From<&Expr> for ExprJson {
    fn from(e: &Expr) -> ExprJson {
        let b = |x: &Expr| Box::new(ExprJson::from(x));
        ExprJson::Node(match e.kind() {
            ExprKind::Const(c) => NodeJson::Const { value: *c },
            ExprKind::Identity => NodeJson::Identity,
            ExprKind::Poly(a) => NodeJson::Poly { coeffs: a.clone() },
            ExprKind::Moebius(m) => NodeJson::Moebius { p: m.p, u: m.u },
            ExprKind::StarMul(f, g) => NodeJson::StarMul { left: b(f), right: b(g) },
            ExprKind::StarInv(h) => NodeJson::StarInv { arg: b(h) },
            ExprKind::Conj(f) => NodeJson::Conj { arg: b(f) },
            ExprKind::Bullet(p, f) => NodeJson::Bullet { p: *p, arg: b(f) },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::{I, J, K};

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    #[test]
    fn product_rule_on_non_commuting_factors() {
        // (q - i) * (q - j) = q^2 - q (i + j) + k
        let f = Expr::poly(vec![-I, ONE]);
        let g = Expr::poly(vec![-J, ONE]);
        let h = Expr::star_mul(&f, &g);
        let direct = Expr::poly(vec![K, -(I + J), ONE]);
        for x in [q(0.1, 0.2, -0.3, 0.4), q(-0.5, 0.0, 0.1, 0.2), I] {
            assert!((h.eval(x).unwrap() - direct.eval(x).unwrap()).norm() < 1e-14);
        }
        // zero of the first factor is a zero of the product
        assert_eq!(h.eval(I).unwrap(), ZERO);
    }

    #[test]
    fn star_inverse_is_reciprocal() {
        let f = Expr::poly(vec![q(0.8, 0.1, 0.0, 0.2), q(0.0, 0.3, 0.1, 0.0), q(0.1, 0.0, 0.0, 0.2)]);
        let inv = Expr::star_inv(&f);
        let prod = Expr::star_mul(&f, &inv);
        let back = Expr::star_mul(&inv, &f);
        for x in [q(0.1, 0.2, -0.3, 0.4), q(-0.5, 0.0, 0.1, 0.2)] {
            assert!((prod.eval(x).unwrap() - ONE).norm() < 1e-14);
            assert!((back.eval(x).unwrap() - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn conjugate_matches_coefficientwise_conjugate() {
        let f = Expr::poly(vec![q(0.1, 0.2, 0.0, 0.3), q(0.0, 0.5, -0.1, 0.0), q(0.2, 0.0, 0.4, 0.0)]);
        let g = Expr::moebius(q(0.1, -0.3, 0.2, 0.0), q(0.0, 0.0, 0.6, 0.8)).unwrap();
        let h = Expr::bullet(q(0.2, 0.1, 0.0, -0.3), &Expr::star_mul(&f, &g)).unwrap();
        let hc = h.conjugate();
        let s = h.to_series(96).unwrap().conjugate();
        for x in [q(0.1, 0.2, -0.3, 0.4), q(-0.5, 0.0, 0.1, 0.2), q(0.0, 0.0, 0.0, 0.7)] {
            let want = s.evaluate(x).unwrap();
            assert!((hc.eval(x).unwrap() - want.value).norm() < 1e-12 + want.tail_bound);
        }
        assert!(hc.conjugate().ptr_eq(&h));
    }

    #[test]
    fn bullet_sends_point_to_zero() {
        let f = Expr::star_mul(&Expr::identity(), &Expr::moebius(q(0.3, 0.0, 0.2, 0.0), ONE).unwrap());
        let p = q(0.1, 0.4, 0.0, -0.2);
        let fp = f.eval(p).unwrap();
        let g = Expr::bullet(fp, &f).unwrap();
        assert!(g.eval(p).unwrap().norm() < 1e-14);
    }

    #[test]
    fn removable_singularity_of_quotient() {
        // M_p^{-*} * M_p = 1 everywhere, including on the sphere of p
        let p = q(0.2, 0.3, 0.0, 0.1);
        let m = Expr::moebius(p, ONE).unwrap();
        let e = Expr::star_mul(&Expr::star_inv(&m), &m);
        assert_eq!(e.singular_spheres().len(), 1);
        let v = e.eval_removable(p).unwrap();
        assert!((v - ONE).norm() < 1e-13);
        let v = e.eval_removable(p.conj()).unwrap();
        assert!((v - ONE).norm() < 1e-13);
    }

    #[test]
    fn json_roundtrip_and_rejects() {
        let e = Expr::bullet(q(0.1, 0.0, 0.2, 0.0), &Expr::blaschke(&[q(0.2, 0.1, 0.0, 0.0), I.scale(0.5)], J).unwrap())
            .unwrap();
        let v = e.to_json();
        let back = Expr::from_json(&v).unwrap();
        let x = q(0.1, -0.2, 0.3, 0.0);
        assert_eq!(e.eval(x).unwrap(), back.eval(x).unwrap());
        assert!(Expr::from_json(&serde_json::json!({"kind": "moebius", "p": [1.5, 0, 0, 0]})).is_err());
        assert!(Expr::from_json(&serde_json::json!({"kind": "nope"})).is_err());
        let c = Expr::from_json(&serde_json::json!([0.5, 0, 0, 0])).unwrap();
        assert_eq!(c.eval(I).unwrap(), Quaternion::real(0.5));
    }
}
