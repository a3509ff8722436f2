//! Pseudo-hyperbolic geometry of the ball and hyperbolic difference quotients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::moebius::{classical_moebius, MoebiusError};
use crate::quaternion::{Quaternion, ONE, ZERO};
use crate::series::{self, SeriesError, TaylorSeries};
use crate::tolerances::{SINGULAR_TOL, UNIMODULAR_PROBE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicError {
    #[error("function value {0} at the base point is not in the open unit ball")]
    NotSelfMap(f64),
    #[error("point {0:?} is not in the open unit ball")]
    NotInBall(Quaternion),
    #[error("radius {0} is not in (0, 1)")]
    BadRadius(f64),
    #[error("the inequality is degenerate at the origin")]
    DegenerateAtZero,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
}

/// `rho(p, q) = |M_p(q)|`.
pub fn rho(p: Quaternion, q: Quaternion) -> Result<f64, HyperbolicError> {
    Ok(classical_moebius(p, q)?.norm())
}

/// `atanh rho(p, q)`.
pub fn delta(p: Quaternion, q: Quaternion) -> Result<f64, HyperbolicError> {
    Ok(rho(p, q)?.atanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanBall {
    pub center: Quaternion,
    pub radius: f64,
}

impl EuclideanBall {
    pub fn contains(&self, q: Quaternion) -> bool {
        q.dist(self.center) < self.radius
    }
}

/// The pseudo-hyperbolic ball `{rho(q, c0) < r0}` as a Euclidean ball.
pub fn pseudo_ball_to_euclidean(c0: Quaternion, r0: f64) -> Result<EuclideanBall, HyperbolicError> {
    let a = c0.norm_sqr();
    if !(a < 1.0) {
        return Err(HyperbolicError::NotInBall(c0));
    }
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(HyperbolicError::BadRadius(r0));
    }
    let d = 1.0 - a * r0 * r0;
    Ok(EuclideanBall { center: c0.scale((1.0 - r0 * r0) / d), radius: (1.0 - a) / d * r0 })
}

/// `f*_p = M_p^{-*} * (M_{f(p)} . f)`, with its base data.
#[derive(Debug, Clone)]
pub struct HyperbolicQuotient {
    pub base: Expr,
    pub point: Quaternion,
    pub base_value: Quaternion,
    pub expr: Expr,
    /// Set when the quotient is a unimodular constant (the base is a Moebius map).
    pub unimodular: Option<Quaternion>,
}

impl HyperbolicQuotient {
    pub fn eval(&self, q: Quaternion) -> Result<Quaternion, HyperbolicError> {
        match self.unimodular {
            Some(u) => Ok(u),
            None => Ok(self.expr.eval_removable(q)?),
        }
    }

    pub fn is_unimodular_constant(&self) -> bool {
        self.unimodular.is_some()
    }
}

/// Points used to recognise unimodular constants.
pub const PROBES: [Quaternion; 8] = [
    Quaternion::new(0.0, 0.0, 0.0, 0.0),
    Quaternion::new(0.5, 0.0, 0.0, 0.0),
    Quaternion::new(-0.4, 0.2, 0.0, 0.0),
    Quaternion::new(0.0, 0.0, 0.3, 0.0),
    Quaternion::new(0.1, 0.2, 0.0, -0.3),
    Quaternion::new(-0.2, 0.0, 0.1, 0.4),
    Quaternion::new(0.0, 0.6, 0.0, 0.0),
    Quaternion::new(0.25, -0.25, 0.25, -0.25),
];

/// Returns `u` when `f` takes one unimodular value at every probe point.
pub fn detect_unimodular(f: &Expr) -> Option<Quaternion> {
    let mut vals = Vec::with_capacity(PROBES.len());
    for p in PROBES {
        vals.push(f.eval_removable(p).ok()?);
    }
    let v0 = vals[0];
    let ok = vals.iter().all(|v| (*v - v0).norm() <= UNIMODULAR_PROBE && (v.norm() - 1.0).abs() <= UNIMODULAR_PROBE);
    ok.then(|| v0.scale(1.0 / v0.norm()))
}

pub fn hyperbolic_quotient(f: &Expr, p: Quaternion) -> Result<HyperbolicQuotient, HyperbolicError> {
    if !(p.norm() < 1.0) {
        return Err(HyperbolicError::NotInBall(p));
    }
    let fp = f.eval_removable(p)?;
    let r = fp.norm();
    if !(r < 1.0 - 1e-12) {
        return Err(HyperbolicError::NotSelfMap(r));
    }
    let m = Expr::moebius(p, ONE)?;
    let expr = Expr::star_mul(&Expr::star_inv(&m), &Expr::bullet(fp, f)?);
    let unimodular = detect_unimodular(&expr);
    let expr = match unimodular {
        Some(u) => Expr::constant(u),
        None => expr,
    };
    Ok(HyperbolicQuotient { base: f.clone(), point: p, base_value: fp, expr, unimodular })
}

/// `f^h(p) = f*_p(p)`.
pub fn hyperbolic_derivative(f: &Expr, p: Quaternion) -> Result<Quaternion, HyperbolicError> {
    hyperbolic_quotient(f, p)?.eval(p)
}

/// `f^{k}` for the points `p_1, ..., p_k`, stopping early at a unimodular constant.
pub fn iterated_quotient(f: &Expr, points: &[Quaternion]) -> Result<Vec<HyperbolicQuotient>, HyperbolicError> {
    let mut out: Vec<HyperbolicQuotient> = Vec::with_capacity(points.len());
    let mut cur = f.clone();
    for p in points {
        if let Some(last) = out.last() {
            if let Some(u) = last.unimodular {
                out.push(HyperbolicQuotient {
                    base: cur.clone(),
                    point: *p,
                    base_value: u,
                    expr: Expr::constant(u),
                    unimodular: Some(u),
                });
                continue;
            }
        }
        let hq = hyperbolic_quotient(&cur, *p)?;
        cur = hq.expr.clone();
        out.push(hq);
    }
    Ok(out)
}

/// Series form of `f*_p`, built as `(q - p)^{-*} * ((1 - q conj p) * (M_{f(p)} . f))`
/// with the removable factor taken out by left division.
pub fn series_quotient(f: &TaylorSeries, p: Quaternion) -> Result<TaylorSeries, HyperbolicError> {
    let fp = f.evaluate(p)?.value;
    if !(fp.norm() < 1.0) {
        return Err(HyperbolicError::NotSelfMap(fp.norm()));
    }
    let n = f.order();
    let num = f.add_constant(-fp);
    let den = f.left_scale(-fp.conj()).add_constant(ONE);
    let g = series::star_mul(&num, &series::star_inverse(&den)?);
    let lin = TaylorSeries::polynomial(vec![ONE, -p.conj()]).pad(n);
    let h = series::star_mul(&lin, &g);
    Ok(series::left_linear_divide(&h, p)?.quotient)
}

/// Disk of the first Dieudonne inequality: `|f^h(q0) - center| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DieudonneDisk {
    pub center: Quaternion,
    pub radius: f64,
    pub alpha: f64,
}

pub fn dieudonne_rhs(q0: Quaternion, fq0: Quaternion) -> Result<DieudonneDisk, HyperbolicError> {
    let r = q0.norm();
    if r <= SINGULAR_TOL {
        return Err(HyperbolicError::DegenerateAtZero);
    }
    if !(r < 1.0) {
        return Err(HyperbolicError::NotInBall(q0));
    }
    let s2 = fq0.norm_sqr();
    if !(s2 < 1.0) {
        return Err(HyperbolicError::NotSelfMap(s2.sqrt()));
    }
    let alpha = (1.0 - s2) / (1.0 - r * r);
    let center = q0.recip().scale(1.0 / alpha) * fq0;
    let radius = (r * r - s2) / (r * (1.0 - s2));
    Ok(DieudonneDisk { center, radius, alpha })
}

/// Bound of the second Dieudonne inequality on `|f^h(q0)|`.
pub fn dieudonne2_bound(r: f64, s: f64) -> f64 {
    let alpha = (1.0 - s * s) / (1.0 - r * r);
    if r <= std::f64::consts::SQRT_2 - 1.0 {
        1.0 / alpha
    } else {
        (1.0 + r * r).powi(2) / (4.0 * r * (1.0 - r * r)) / alpha
    }
}

/// Goluzin bound on `|f^h(q0)|` given `d = |f'(0)|` and `r = |q0|`.
pub fn goluzin_rhs(d: f64, r: f64) -> f64 {
    let t = 2.0 * r / (1.0 + r * r);
    (d + t) / (1.0 + d * t)
}

/// Lower bound on `Re f^h(q)` and upper bound on `|f^h(q)|` for `f(0) = 0`, `f'(0) = alpha`.
pub fn balpha_bounds(alpha: f64, r: f64) -> (f64, f64) {
    let lo = (alpha * r * r - 2.0 * r + alpha) / (r * r - 2.0 * alpha * r + 1.0);
    let hi = (alpha * r * r + 2.0 * r + alpha) / (r * r + 2.0 * alpha * r + 1.0);
    (lo, hi)
}

/// Value of the quotient at its own base point, where it is a removable singularity.
pub fn quotient_at_base(hq: &HyperbolicQuotient) -> Result<Quaternion, HyperbolicError> {
    hq.eval(hq.point)
}

/// `f(0)`, used by the suites that need `f(0) = 0`.
pub fn value_at_origin(f: &Expr) -> Result<Quaternion, HyperbolicError> {
    Ok(f.eval_removable(ZERO)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quaternion::I;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    fn square() -> Expr {
        Expr::poly(vec![ZERO, ZERO, ONE])
    }

    #[test]
    fn square_at_real_points() {
        for r in [0.1, 0.3, 0.5, 0.8] {
            let fh = hyperbolic_derivative(&square(), Quaternion::real(r)).unwrap();
            let want = 2.0 * r / (1.0 + r * r);
            assert!((fh - Quaternion::real(want)).norm() < 1e-12, "r={r} got {fh:?}");
        }
    }

    #[test]
    fn moebius_quotient_is_unimodular() {
        let f = Expr::moebius(q(0.2, 0.1, -0.3, 0.0), q(0.0, 0.0, 0.6, 0.8)).unwrap();
        let hq = hyperbolic_quotient(&f, q(0.1, 0.0, 0.2, 0.3)).unwrap();
        assert!(hq.is_unimodular_constant());
    }

    #[test]
    fn series_and_tree_quotients_agree() {
        let f = Expr::star_mul(&Expr::identity(), &Expr::moebius(q(0.3, 0.2, 0.0, -0.1), ONE).unwrap());
        let p = q(0.2, -0.1, 0.3, 0.0);
        let hq = hyperbolic_quotient(&f, p).unwrap();
        let s = series_quotient(&f.to_series(128).unwrap(), p).unwrap();
        for x in [p, q(0.0, 0.1, 0.0, 0.2), q(-0.4, 0.0, 0.3, 0.1)] {
            let want = s.evaluate(x).unwrap();
            let got = hq.eval(x).unwrap();
            assert!((got - want.value).norm() < 1e-10 + want.tail_bound, "{x:?}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn ball_lemma_simple() {
        let b = pseudo_ball_to_euclidean(Quaternion::real(0.5), 0.5).unwrap();
        // real diameter endpoints M_{-c}(+-r)
        let a = classical_moebius(Quaternion::real(-0.5), Quaternion::real(0.5)).unwrap().w;
        let c = classical_moebius(Quaternion::real(-0.5), Quaternion::real(-0.5)).unwrap().w;
        assert!((b.center.w - 0.5 * (a + c)).abs() < 1e-15);
        assert!((b.radius - 0.5 * (a - c)).abs() < 1e-15);
    }

    #[test]
    fn dieudonne_equality_for_square() {
        for r in [0.2, 0.5, 0.9] {
            let q0 = Quaternion::real(r);
            let d = dieudonne_rhs(q0, q0 * q0).unwrap();
            let fh = hyperbolic_derivative(&square(), q0).unwrap();
            assert!(((fh - d.center).norm() - d.radius).abs() < 1e-12);
        }
        assert_eq!(dieudonne_rhs(ZERO, ZERO), Err(HyperbolicError::DegenerateAtZero));
    }

    #[test]
    fn goluzin_equality_for_square() {
        let r = 0.4;
        let fh = hyperbolic_derivative(&square(), I.scale(r)).unwrap();
        assert!((fh.norm() - goluzin_rhs(0.0, r)).abs() < 1e-12);
    }
}
