//! Extending holomorphic self-maps of one complex slice to slice regular functions.

use num_complex::Complex64;

use super::InterpolationError;
use crate::quaternion::{imaginary_unit, Quaternion};
use crate::series::TaylorSeries;
use crate::tolerances::RADIUS_CAP;

fn embed(z: Complex64, unit: Quaternion) -> Quaternion {
    Quaternion::from_slice(z.re, z.im, unit)
}

/// Series `sum (a_n + b_n I) q^n` from complex coefficients `a_n + i b_n`.
///
/// `coeff_bound` and `growth_rate` certify the dropped tail. The function is
/// sampled on the slice and rejected if it visibly leaves the unit disk.
pub fn slice_extend(
    coeffs: &[Complex64],
    unit: Quaternion,
    coeff_bound: f64,
    growth_rate: f64,
) -> Result<TaylorSeries, InterpolationError> {
    let unit = imaginary_unit(unit).map_err(|e| InterpolationError::Validation(e.to_string()))?;
    let qs: Vec<Quaternion> = coeffs.iter().map(|z| embed(*z, unit)).collect();
    let f = TaylorSeries::new(qs, coeff_bound, growth_rate)
        .map_err(|e| InterpolationError::Validation(e.to_string()))?;
    let mut worst: f64 = 0.0;
    for i in 1..=24 {
        let r = RADIUS_CAP * i as f64 / 24.0;
        if r * growth_rate >= 1.0 {
            break;
        }
        for j in 0..96 {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / 96.0);
            let e = f.evaluate(embed(z, unit)).map_err(|e| InterpolationError::Validation(e.to_string()))?;
            worst = worst.max(e.value.norm() - e.tail_bound);
        }
    }
    if worst >= 1.0 {
        return Err(InterpolationError::NotSelfMap(worst));
    }
    Ok(f)
}

/// `f(x + yJ)` from the values of `f_0` on `C_I`:
/// `((f0(z) + f0(conj z)) + J I (f0(conj z) - f0(z))) / 2` with `z = x + yI`.
pub fn representation_formula<F>(f0: F, unit: Quaternion, q: Quaternion) -> Quaternion
where
    F: Fn(Complex64) -> Complex64,
{
    let d = q.decompose();
    let z = Complex64::new(d.x, d.y);
    let a = embed(f0(z), unit);
    let b = embed(f0(z.conj()), unit);
    ((a + b) + d.unit * unit * (b - a)).scale(0.5)
}

/// Taylor coefficients of `v prod (z - a_k) / (1 - conj(a_k) z)` with a Cauchy-estimate tail certificate.
pub fn complex_blaschke(zeros: &[Complex64], v: Complex64, n: usize) -> (Vec<Complex64>, f64, f64) {
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[0] = v;
    for a in zeros {
        let mut factor = vec![Complex64::new(0.0, 0.0); n + 1];
        factor[0] = -a;
        let mut pw = Complex64::new(1.0 - a.norm_sqr(), 0.0);
        for f in factor.iter_mut().skip(1) {
            *f = pw;
            pw *= a.conj();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for (i, x) in c.iter().enumerate() {
            for (j, y) in factor.iter().enumerate().take(n + 1 - i) {
                out[i + j] += x * y;
            }
        }
        c = out;
    }
    // on |z| = R every factor is at most (R + |a|) / (1 - R |a|)
    let rho = zeros.iter().fold(0.0f64, |m, a| m.max(a.norm()));
    let r = if rho > 1e-6 { 1.0 / rho.sqrt() } else { 1e3 };
    let k: f64 = zeros.iter().map(|a| (r + a.norm()) / (1.0 - r * a.norm())).product::<f64>() * v.norm();
    (c, k, 1.0 / r)
}
