//! Pick matrices and a positivity test through the complex embedding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::InterpolationError;
use crate::quaternion::{Quaternion, ONE, ZERO};
use crate::tolerances::SYMMETRIZE_TOL;

/// Dense square quaternionic matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuatMatrix {
    pub n: usize,
    pub data: Vec<Quaternion>,
}

impl QuatMatrix {
    pub fn zeros(n: usize) -> Self {
        QuatMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Quaternion) {
        self.data[i * self.n + j] = v;
    }

    /// Largest `|A_ij - conj A_ji|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, q| m.max(q.norm()))
    }
}

/// `P_ml = (1 - s_m conj s_l) / (1 - r_m r_l)` for real nodes.
pub fn pick_matrix_real(nodes: &[f64], values: &[Quaternion]) -> QuatMatrix {
    let n = nodes.len();
    let mut p = QuatMatrix::zeros(n);
    for m in 0..n {
        for l in 0..n {
            let num = ONE - values[m] * values[l].conj();
            p.set(m, l, num.scale(1.0 / (1.0 - nodes[m] * nodes[l])));
        }
    }
    p
}

/// `P_ml = sum_{k <= K} p_m^k (1 - s_m conj s_l) conj(p_l)^k`, with the entrywise bound
/// `2 (|p_m| |p_l|)^{K+1} / (1 - |p_m| |p_l|)` on what is left out.
pub fn pick_matrix(nodes: &[Quaternion], values: &[Quaternion], k: usize) -> (QuatMatrix, f64) {
    let n = nodes.len();
    let mut p = QuatMatrix::zeros(n);
    let mut tail: f64 = 0.0;
    for m in 0..n {
        for l in 0..n {
            let c = ONE - values[m] * values[l].conj();
            let (mut a, mut b) = (ONE, ONE);
            let mut acc = ZERO;
            for _ in 0..=k {
                acc += a * c * b;
                a = a * nodes[m];
                b = b * nodes[l].conj();
            }
            p.set(m, l, acc);
            let t = nodes[m].norm() * nodes[l].norm();
            tail = tail.max(2.0 * t.powi(k as i32 + 1) / (1.0 - t));
        }
    }
    (p, tail)
}

/// Smallest `K` whose tail bound is below `tol`.
pub fn pick_terms(nodes: &[Quaternion], tol: f64) -> usize {
    let t = nodes.iter().fold(0.0f64, |m, p| m.max(p.norm_sqr()));
    if t == 0.0 {
        return 0;
    }
    let mut k = 0;
    while 2.0 * t.powi(k as i32 + 1) / (1.0 - t) >= tol {
        k += 1;
    }
    k
}

/// `q = a + b j` maps to `[[a, b], [-conj b, conj a]]` with `a, b` complex.
pub fn complex_embedding(p: &QuatMatrix) -> Vec<Vec<Complex64>> {
    let n = p.n;
    let mut h = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let q = p.get(i, j);
            let a = Complex64::new(q.w, q.x);
            let b = Complex64::new(q.y, q.z);
            h[2 * i][2 * j] = a;
            h[2 * i][2 * j + 1] = b;
            h[2 * i + 1][2 * j] = -b.conj();
            h[2 * i + 1][2 * j + 1] = a.conj();
        }
    }
    h
}

/// Eigenvalues of a complex Hermitian matrix by cyclic Jacobi rotations, ascending.
pub fn hermitian_eigenvalues(mut a: Vec<Vec<Complex64>>) -> Vec<f64> {
    let n = a.len();
    let frob: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = 1e-15 * frob.max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[p][q];
                let nb = b.norm();
                if nb <= 1e-300 {
                    continue;
                }
                let phase = b / nb;
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * nb);
                let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U = diag(1, conj phase) R, A <- U^H A U
                let ep = phase.conj();
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * c - y * ep * s;
                    row[q] = x * s + y * ep * c;
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = x * c - y * phase * s;
                    a[q][k] = x * s + y * phase * c;
                }
                a[p][q] = Complex64::new(0.0, 0.0);
                a[q][p] = Complex64::new(0.0, 0.0);
                a[p][p].im = 0.0;
                a[q][q].im = 0.0;
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eig: f64,
    pub max_abs_eig: f64,
    /// Each quaternionic eigenvalue appears twice in the embedding; one copy of each.
    pub eigenvalues: Vec<f64>,
}

/// Positive semidefinite when `lambda_min >= -tol * ||P||`.
pub fn psd_check(p: &QuatMatrix, tol: f64) -> Result<PsdReport, InterpolationError> {
    let defect = p.hermitian_defect();
    if defect > SYMMETRIZE_TOL * (1.0 + p.max_abs()) {
        return Err(InterpolationError::NotHermitian(defect));
    }
    let ev = hermitian_eigenvalues(complex_embedding(p));
    let min_eig = ev.first().copied().unwrap_or(0.0);
    let max_abs_eig = ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(PsdReport {
        is_psd: min_eig >= -tol * max_abs_eig,
        min_eig,
        max_abs_eig,
        eigenvalues: ev.iter().step_by(2).copied().collect(),
    })
}
