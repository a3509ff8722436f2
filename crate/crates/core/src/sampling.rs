//! Deterministic random inputs: points, self-maps, expression trees and problems.
//!
//! Every sample index gets its own ChaCha stream, so results do not depend
//! on how the work is split across threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::interpolation::{build_q_table, classify, InterpolationProblem, SolutionKind};
use crate::quaternion::{Quaternion, ZERO};
use crate::tolerances::RADIUS_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distribution {
    UniformBall,
    SliceGrid,
}

impl std::str::FromStr for Distribution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform-ball" => Ok(Distribution::UniformBall),
            "slice-grid" => Ok(Distribution::SliceGrid),
            _ => Err(format!("unknown distribution {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplerConfig {
    pub seed: u64,
    pub count: usize,
    pub radius_cap: f64,
    pub distribution: Distribution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 0, count: 1000, radius_cap: RADIUS_CAP, distribution: Distribution::UniformBall }
    }
}

impl SamplerConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        SamplerConfig { seed, count, ..Default::default() }
    }

    /// Stream for sample `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Evaluation point of sample `index`: uniform in the ball, or a node of a polar grid on one of eight slices.
    pub fn point(&self, index: usize, rng: &mut ChaCha8Rng) -> Quaternion {
        match self.distribution {
            Distribution::UniformBall => uniform_ball(rng, self.radius_cap),
            Distribution::SliceGrid => {
                let per_slice = self.count.div_ceil(SLICES.len()).max(1);
                let side = (per_slice as f64).sqrt().ceil() as usize;
                let unit = slice_unit(index % SLICES.len());
                let k = index / SLICES.len();
                let (i, j) = (k / side, k % side);
                let r = self.radius_cap * (i as f64 + 0.5) / side as f64;
                let t = std::f64::consts::TAU * j as f64 / side as f64;
                Quaternion::from_slice(r * t.cos(), r * t.sin(), unit)
            }
        }
    }
}

const SLICES: [[f64; 3]; 8] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [1.0, -2.0, 0.5],
    [-0.3, 0.4, 1.2],
    [2.0, 0.1, -1.0],
    [0.0, -1.0, 3.0],
];

/// One of eight fixed imaginary units.
pub fn slice_unit(k: usize) -> Quaternion {
    let [x, y, z] = SLICES[k % SLICES.len()];
    let n = (x * x + y * y + z * z).sqrt();
    Quaternion::new(0.0, x / n, y / n, z / n)
}

fn gaussian4<R: Rng>(rng: &mut R) -> [f64; 4] {
    // Box-Muller, two pairs
    let mut out = [0.0; 4];
    for pair in out.chunks_mut(2) {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        pair[0] = r * (std::f64::consts::TAU * u2).cos();
        pair[1] = r * (std::f64::consts::TAU * u2).sin();
    }
    out
}

pub fn unit_quaternion<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let q = Quaternion::from_array(gaussian4(rng));
        let n = q.norm();
        if n > 1e-6 {
            return q.scale(1.0 / n);
        }
    }
}

pub fn imaginary_unit<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let g = gaussian4(rng);
        let q = Quaternion::new(0.0, g[0], g[1], g[2]);
        let n = q.norm();
        if n > 1e-6 {
            return q.scale(1.0 / n);
        }
    }
}

/// Uniform in the ball of radius `cap` in R^4.
pub fn uniform_ball<R: Rng>(rng: &mut R, cap: f64) -> Quaternion {
    unit_quaternion(rng).scale(cap * rng.gen::<f64>().powf(0.25))
}

/// Regular Blaschke product with zeros uniform in the ball of radius `cap`.
pub fn random_blaschke<R: Rng>(rng: &mut R, degree: usize, cap: f64) -> Expr {
    let zeros: Vec<Quaternion> = (0..degree).map(|_| uniform_ball(rng, cap)).collect();
    Expr::blaschke(&zeros, unit_quaternion(rng)).expect("zeros are inside the ball")
}

/// Polynomial with `sum |a_m| < 1`, hence a self-map; `a_0 = 0` when `fix_origin`.
pub fn random_polynomial_self_map<R: Rng>(rng: &mut R, degree: usize, fix_origin: bool) -> Expr {
    let mut coeffs: Vec<Quaternion> = (0..=degree).map(|_| uniform_ball(rng, 1.0)).collect();
    if fix_origin {
        coeffs[0] = ZERO;
    }
    let total: f64 = coeffs.iter().map(|c| c.norm()).sum();
    let target = 0.2 + 0.75 * rng.gen::<f64>();
    let s = if total > 0.0 { target / total } else { 0.0 };
    Expr::poly(coeffs.into_iter().map(|c| c.scale(s)).collect())
}

/// `q * (M_{-alpha} . (q * g))` for a random self-map `g`, so `f(0) = 0` and `f'(0) = alpha`.
pub fn random_balpha<R: Rng>(rng: &mut R, alpha: f64) -> Expr {
    let g = if rng.gen_bool(0.5) {
        let d = rng.gen_range(0..=2);
        random_blaschke(rng, d, 0.8)
    } else {
        let d = rng.gen_range(0..=4);
        random_polynomial_self_map(rng, d, false)
    };
    let inner = Expr::star_mul(&Expr::identity(), &g);
    let outer = Expr::bullet(Quaternion::real(-alpha), &inner).expect("alpha < 1");
    Expr::star_mul(&Expr::identity(), &outer)
}

/// Random self-map of the ball built from Moebius maps, constants and polynomials
/// with products, Moebius actions and regular conjugation, of depth at most `depth`.
pub fn random_self_map_tree<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => Expr::identity(),
            1 => Expr::constant(uniform_ball(rng, 0.9)),
            2 => Expr::moebius(uniform_ball(rng, 0.7), unit_quaternion(rng)).expect("in ball"),
            _ => {
                let d = rng.gen_range(1..=3);
                random_polynomial_self_map(rng, d, false)
            }
        };
    }
    match rng.gen_range(0..3) {
        0 => {
            let a = random_self_map_tree(rng, depth - 1);
            let b = random_self_map_tree(rng, depth - 1);
            Expr::star_mul(&a, &b)
        }
        1 => Expr::bullet(uniform_ball(rng, 0.7), &random_self_map_tree(rng, depth - 1)).expect("in ball"),
        _ => Expr::conj(&random_self_map_tree(rng, depth - 1)),
    }
}

/// Random tree of depth at most `depth` that need not be a self-map; it may contain
/// `*`-inverses `(1 + q c)^{-*}` with `|c| < 0.7`.
pub fn random_tree<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    if depth <= 1 || rng.gen_bool(0.2) {
        return random_self_map_tree(rng, 1);
    }
    match rng.gen_range(0..5) {
        0 | 1 => Expr::star_mul(&random_tree(rng, depth - 1), &random_tree(rng, depth - 1)),
        2 => Expr::star_inv(&Expr::poly(vec![crate::quaternion::ONE, uniform_ball(rng, 0.7)])),
        3 => Expr::conj(&random_tree(rng, depth - 1)),
        _ => Expr::bullet(uniform_ball(rng, 0.7), &random_self_map_tree(rng, depth - 1)).expect("in ball"),
    }
}

/// `n` real nodes in `(-0.9, 0.9)` at mutual distance at least `0.05`.
pub fn random_nodes<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let nodes: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let ok = (0..n).all(|i| (i + 1..n).all(|j| (nodes[i] - nodes[j]).abs() >= 0.05));
        if ok {
            return nodes;
        }
    }
}

/// Problem whose values come from a random self-map (solvable) or are random (usually not).
pub fn random_problem<R: Rng>(rng: &mut R, n: usize) -> InterpolationProblem {
    let nodes = random_nodes(rng, n);
    let f = match rng.gen_range(0..4) {
        0 => None,
        1 => {
            let d = rng.gen_range(1..n.max(2));
            Some(random_blaschke(rng, d, 0.8))
        }
        2 => {
            let d = n + rng.gen_range(0..2);
            Some(random_blaschke(rng, d, 0.8))
        }
        _ => Some(random_self_map_tree(rng, 3)),
    };
    let values = nodes
        .iter()
        .map(|r| match &f {
            Some(f) => f.eval(Quaternion::real(*r)).expect("self-map is regular on the ball"),
            None => uniform_ball(rng, 0.95),
        })
        .collect();
    InterpolationProblem::new(nodes, values).expect("valid by construction")
}

/// Like [`random_problem`], but resampled until every cell that is not unimodular stays
/// at least `margin` away from the unit sphere and classification is unambiguous.
pub fn random_separated_problem<R: Rng>(rng: &mut R, n: usize, margin: f64) -> (InterpolationProblem, SolutionKind) {
    loop {
        let p = random_problem(rng, n);
        if p.values.iter().any(|s| s.norm() > 1.0 - margin) {
            continue;
        }
        let t = build_q_table(&p);
        let Ok(kind) = classify(&t) else { continue };
        let ok = t.cells().all(|(_, _, c)| match c {
            crate::interpolation::QCell::Ball(q) | crate::interpolation::QCell::Outside(q) => {
                (q.norm() - 1.0).abs() >= margin
            }
            _ => true,
        });
        if ok {
            return (p, kind);
        }
    }
}
