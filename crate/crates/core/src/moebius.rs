//! Classical and regular Moebius maps of the unit ball.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quaternion::{Quaternion, ONE};
use crate::tolerances::SINGULAR_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoebiusError {
    #[error("denominator vanishes (|1 - q conj p| = {0})")]
    SingularDenominator(f64),
    #[error("Moebius parameter must lie in the open unit ball (|p| = {0})")]
    NotInBall(f64),
    #[error("rotation factor must be unimodular (|u| = {0})")]
    NotUnimodular(f64),
    #[error("matrix does not describe a regular Moebius map: {0}")]
    NotMoebius(String),
}

/// The regular Moebius map `q -> (1 - q conj p)^{-*} * (q - p) * u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMap {
    pub p: Quaternion,
    pub u: Quaternion,
}

impl MoebiusMap {
    pub fn new(p: Quaternion, u: Quaternion) -> Result<Self, MoebiusError> {
        let rp = p.norm();
        if !(rp < 1.0) {
            return Err(MoebiusError::NotInBall(rp));
        }
        let ru = u.norm();
        if !((ru - 1.0).abs() <= 1e-9) {
            return Err(MoebiusError::NotUnimodular(ru));
        }
        Ok(MoebiusMap { p, u: u.scale(1.0 / ru) })
    }

    pub fn centered(p: Quaternion) -> Result<Self, MoebiusError> {
        MoebiusMap::new(p, ONE)
    }

    pub fn eval(&self, q: Quaternion) -> Result<Quaternion, MoebiusError> {
        moebius_regular_eval(self, q)
    }

    pub fn inverse_eval(&self, w: Quaternion) -> Result<Quaternion, MoebiusError> {
        moebius_regular_inverse(self, w)
    }

    /// `(a, b, c, d)` with the map written as `(q c + d)^{-*} * (q a + b)`, normalized to unit determinant.
    pub fn matrix(&self) -> (Quaternion, Quaternion, Quaternion, Quaternion) {
        let k = 1.0 / (1.0 - self.p.norm_sqr()).sqrt();
        (self.u.scale(k), -(self.p * self.u).scale(k), -self.p.conj().scale(k), Quaternion::real(k))
    }

    /// Recovers `(p, u)` from a matrix, checking it against the canonical form.
    pub fn from_matrix(a: Quaternion, b: Quaternion, c: Quaternion, d: Quaternion) -> Result<Self, MoebiusError> {
        let det = dieudonne_det(a, b, c, d);
        if !(det > SINGULAR_TOL) {
            return Err(MoebiusError::NotMoebius(format!("determinant {det}")));
        }
        let s = 1.0 / det.sqrt();
        let (a, b, c, d) = (a.scale(s), b.scale(s), c.scale(s), d.scale(s));
        let dn = d.norm();
        if !(dn > SINGULAR_TOL) {
            return Err(MoebiusError::NotMoebius("d vanishes".into()));
        }
        // a common unit on the left of every entry leaves the map unchanged
        let v = d.conj().scale(1.0 / dn);
        let (a, b, c) = (v * a, v * b, v * c);
        let p = -(c.conj()).scale(1.0 / dn);
        let m = MoebiusMap::new(p, a.scale(1.0 / a.norm().max(f64::MIN_POSITIVE)))
            .map_err(|e| MoebiusError::NotMoebius(e.to_string()))?;
        let (ea, eb, ec, _) = m.matrix();
        let tol = 1e-10 * (1.0 + ea.norm() + eb.norm() + ec.norm());
        if (ea - a).norm() > tol || (eb - b).norm() > tol || (ec - c).norm() > tol {
            return Err(MoebiusError::NotMoebius("entries do not match the canonical form".into()));
        }
        Ok(m)
    }
}

/// `M_p(q) = (1 - q conj p)^{-1} (q - p)`.
pub fn classical_moebius(p: Quaternion, q: Quaternion) -> Result<Quaternion, MoebiusError> {
    let den = ONE - q * p.conj();
    let n = den.norm();
    if n <= SINGULAR_TOL {
        return Err(MoebiusError::SingularDenominator(n));
    }
    Ok(den.recip() * (q - p))
}

/// `M_p^{-1} = M_{-p}`.
pub fn classical_moebius_inverse(p: Quaternion, w: Quaternion) -> Result<Quaternion, MoebiusError> {
    classical_moebius(-p, w)
}

/// `T_p(q) = (1 - q p)^{-1} q (1 - q p)`.
pub fn t_map(p: Quaternion, q: Quaternion) -> Quaternion {
    q.conjugate_by(ONE - q * p)
}

/// `T_p^{-1} = T_{conj p}`.
pub fn t_map_inverse(p: Quaternion, q: Quaternion) -> Quaternion {
    t_map(p.conj(), q)
}

/// `M_p(T_p(q)) u`.
pub fn moebius_regular_eval(m: &MoebiusMap, q: Quaternion) -> Result<Quaternion, MoebiusError> {
    Ok(classical_moebius(m.p, t_map(m.p, q))? * m.u)
}

pub fn moebius_regular_inverse(m: &MoebiusMap, w: Quaternion) -> Result<Quaternion, MoebiusError> {
    let v = classical_moebius_inverse(m.p, w * m.u.conj())?;
    Ok(t_map_inverse(m.p, v))
}

/// Dieudonne determinant of `[[a, c], [b, d]]`.
pub fn dieudonne_det(a: Quaternion, b: Quaternion, c: Quaternion, d: Quaternion) -> f64 {
    let v = a.norm_sqr() * d.norm_sqr() + b.norm_sqr() * c.norm_sqr() - 2.0 * (b * a.conj() * c * d.conj()).re();
    v.max(0.0).sqrt()
}
