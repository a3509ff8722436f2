//! Sampling suites for the Schwarz-Pick type inequalities and the distortion estimates,
//! backend agreement, and grid output.
//!
//! A sample's violation is `lhs - rhs` of the inequality it checks; a suite
//! passes when the largest violation is within the tolerance.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::hyperbolic::{
    balpha_bounds, dieudonne2_bound, dieudonne_rhs, goluzin_rhs, hyperbolic_quotient, iterated_quotient,
    HyperbolicError,
};
use crate::moebius::{moebius_regular_eval, MoebiusMap};
use crate::quaternion::{Quaternion, ZERO};
use crate::sampling::{uniform_ball, SamplerConfig};
use crate::series::SeriesError;
use crate::tolerances::{self, VERIFY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("not a self-map of the ball: |f({at:?})| = {modulus}")]
    NotSelfMap { at: Quaternion, modulus: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("resolution {0} is out of range 1..=2048")]
    BadResolution(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Spl,
    Spl3,
    Multi,
    Dieudonne,
    Goluzin,
    Balpha,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::Spl, Suite::Spl3, Suite::Multi, Suite::Dieudonne, Suite::Goluzin, Suite::Balpha];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Spl => "spl",
            Suite::Spl3 => "spl3",
            Suite::Multi => "multi",
            Suite::Dieudonne => "dieudonne",
            Suite::Goluzin => "goluzin",
            Suite::Balpha => "balpha",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self, VerifyError> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub suite: String,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_violation: f64,
    pub worst_input: Vec<Quaternion>,
    /// Smallest `rhs - lhs` over samples away from the equality point.
    pub min_slack: f64,
    /// Largest `|lhs - rhs|`; zero on equality cases.
    pub equality_gap: f64,
    /// Samples not applicable to the suite, e.g. a quotient that is already constant.
    pub skipped: usize,
    pub pass: bool,
}

struct Sample {
    violation: f64,
    slack: Option<f64>,
    gap: f64,
    input: Vec<Quaternion>,
}

fn run<F>(name: &str, cfg: &SamplerConfig, tol: f64, body: F) -> Result<VerificationReport, VerifyError>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Option<Sample>, VerifyError> + Sync,
{
    let results: Vec<Result<Option<Sample>, VerifyError>> =
        (0..cfg.count).into_par_iter().map(|i| body(i, &mut cfg.rng(i))).collect();
    let mut report = VerificationReport {
        suite: name.to_string(),
        samples: cfg.count,
        seed: cfg.seed,
        tolerance: tol,
        max_violation: f64::NEG_INFINITY,
        worst_input: Vec::new(),
        min_slack: f64::INFINITY,
        equality_gap: 0.0,
        skipped: 0,
        pass: false,
    };
    for r in results {
        let Some(s) = r? else {
            report.skipped += 1;
            continue;
        };
        if !(s.violation <= report.max_violation) {
            report.max_violation = s.violation;
            report.worst_input = s.input;
        }
        if let Some(sl) = s.slack {
            report.min_slack = report.min_slack.min(sl);
        }
        report.equality_gap = report.equality_gap.max(s.gap);
    }
    report.pass = report.max_violation <= tol || report.skipped == report.samples;
    Ok(report)
}

fn suite_tolerance() -> f64 {
    tolerances::env_override().unwrap_or(VERIFY_TOL)
}

/// Samples `f` on the ball of radius `cap` and fails if it leaves the closed unit ball.
pub fn check_self_map(f: &Expr, cap: f64, count: usize, seed: u64) -> Result<f64, VerifyError> {
    let cfg = SamplerConfig { seed, count, radius_cap: cap, ..Default::default() };
    let worst = (0..count)
        .into_par_iter()
        .map(|i| {
            let q = uniform_ball(&mut cfg.rng(i), cap);
            Ok((f.eval_removable(q)?.norm(), q))
        })
        .collect::<Result<Vec<_>, VerifyError>>()?
        .into_iter()
        .fold((0.0f64, ZERO), |a, b| if b.0 > a.0 { b } else { a });
    if worst.0 > 1.0 + 1e-9 {
        return Err(VerifyError::NotSelfMap { at: worst.1, modulus: worst.0 });
    }
    Ok(worst.0)
}

fn regular_moebius_abs(p: Quaternion, q: Quaternion) -> Result<f64, VerifyError> {
    let m = MoebiusMap::centered(p).map_err(ExprError::from)?;
    Ok(moebius_regular_eval(&m, q).map_err(ExprError::from)?.norm())
}

/// `|(M_{g(p)} . g)(q)|`.
fn bullet_abs(g: &Expr, p: Quaternion, q: Quaternion) -> Result<f64, VerifyError> {
    let gp = g.eval_removable(p)?;
    if !(gp.norm() < 1.0) {
        return Err(VerifyError::NotSelfMap { at: p, modulus: gp.norm() });
    }
    Ok(Expr::bullet(gp, g)?.eval_removable(q)?.norm())
}

fn spl_sample(g: &Expr, p: Quaternion, q: Quaternion) -> Result<Sample, VerifyError> {
    let lhs = bullet_abs(g, p, q)?;
    let rhs = regular_moebius_abs(p, q)?;
    Ok(Sample {
        violation: lhs - rhs,
        slack: ((q - p).norm() > 1e-6).then_some(rhs - lhs),
        gap: (lhs - rhs).abs(),
        input: vec![p, q],
    })
}

fn origin_fixed(f: &Expr) -> Result<(), VerifyError> {
    let f0 = f.eval_removable(ZERO)?;
    if f0.norm() > 1e-12 {
        return Err(VerifyError::Precondition(format!("f(0) = {f0} is not 0")));
    }
    Ok(())
}

/// `f'(0)` read off the Taylor coefficients.
pub fn derivative_at_origin(f: &Expr) -> Result<Quaternion, VerifyError> {
    Ok(f.to_series(8)?.coeffs()[1])
}

pub fn run_suite(suite: Suite, f: &Expr, cfg: &SamplerConfig) -> Result<VerificationReport, VerifyError> {
    run_suite_with_tolerance(suite, f, cfg, suite_tolerance())
}

pub fn run_suite_with_tolerance(
    suite: Suite,
    f: &Expr,
    cfg: &SamplerConfig,
    tol: f64,
) -> Result<VerificationReport, VerifyError> {
    check_self_map(f, cfg.radius_cap, 256, cfg.seed ^ 0x5eed)?;
    let cap = cfg.radius_cap;
    match suite {
        Suite::Spl => run(suite.name(), cfg, tol, |i, rng| {
            let p = uniform_ball(rng, cap);
            let q = cfg.point(i, rng);
            spl_sample(f, p, q).map(Some)
        }),
        Suite::Spl3 => run(suite.name(), cfg, tol, |i, rng| {
            let p = uniform_ball(rng, cap);
            let s = uniform_ball(rng, cap);
            let q = cfg.point(i, rng);
            let g = hyperbolic_quotient(f, p)?;
            if g.is_unimodular_constant() {
                return Ok(None);
            }
            let mut smp = spl_sample(&g.expr, s, q)?;
            smp.input = vec![p, s, q];
            Ok(Some(smp))
        }),
        Suite::Multi => run(suite.name(), cfg, tol, |i, rng| {
            let n = 1 + i % 3;
            let pts: Vec<Quaternion> = (0..n).map(|_| uniform_ball(rng, cap)).collect();
            let p = uniform_ball(rng, cap);
            let q = cfg.point(i, rng);
            let chain = iterated_quotient(f, &pts)?;
            let g = chain.last().expect("nonempty");
            let mut input = pts.clone();
            input.extend([p, q]);
            if let Some(u) = g.unimodular {
                let v = u.norm() - 1.0;
                return Ok(Some(Sample { violation: v, slack: None, gap: 0.0, input }));
            }
            let bound = g.eval(q)?.norm() - 1.0;
            let mut smp = spl_sample(&g.expr, p, q)?;
            smp.violation = smp.violation.max(bound);
            smp.input = input;
            Ok(Some(smp))
        }),
        Suite::Dieudonne => {
            origin_fixed(f)?;
            run(suite.name(), cfg, tol, |i, rng| {
                let q0 = cfg.point(i, rng);
                let r = q0.norm();
                if r < 1e-6 {
                    return Ok(None);
                }
                let fq0 = f.eval_removable(q0)?;
                let fh = hyperbolic_quotient(f, q0)?.eval(q0)?;
                let disk = dieudonne_rhs(q0, fq0)?;
                let lhs = (fh.scale(disk.alpha) - q0.inverse().expect("nonzero") * fq0).norm();
                let rhs = disk.radius * disk.alpha;
                let d2 = fh.norm() - dieudonne2_bound(r, fq0.norm());
                Ok(Some(Sample {
                    violation: (lhs - rhs).max(d2),
                    slack: Some(rhs - lhs),
                    gap: (lhs - rhs).abs(),
                    input: vec![q0],
                }))
            })
        }
        Suite::Goluzin => {
            origin_fixed(f)?;
            let d = derivative_at_origin(f)?.norm();
            run(suite.name(), cfg, tol, |i, rng| {
                let q0 = cfg.point(i, rng);
                let fh = hyperbolic_quotient(f, q0)?.eval(q0)?;
                let lhs = fh.norm();
                let rhs = goluzin_rhs(d, q0.norm());
                Ok(Some(Sample { violation: lhs - rhs, slack: Some(rhs - lhs), gap: (lhs - rhs).abs(), input: vec![q0] }))
            })
        }
        Suite::Balpha => {
            origin_fixed(f)?;
            let a1 = derivative_at_origin(f)?;
            let alpha = a1.re();
            if a1.im_norm() > 1e-9 || !(-1e-12..1.0).contains(&alpha) {
                return Err(VerifyError::Precondition(format!("f'(0) = {a1} is not in [0, 1)")));
            }
            let alpha = alpha.max(0.0);
            run(suite.name(), cfg, tol, |i, rng| {
                let q = cfg.point(i, rng);
                let hq = hyperbolic_quotient(f, q)?;
                let (lo, hi) = balpha_bounds(alpha, q.norm());
                let mut worst = f64::NEG_INFINITY;
                let mut slack = f64::INFINITY;
                for v in [hq.eval(q)?, hq.eval(q.conj())?] {
                    let lo_gap = lo - v.re();
                    let hi_gap = v.norm() - hi;
                    worst = worst.max(lo_gap).max(hi_gap);
                    slack = slack.min(-lo_gap).min(-hi_gap);
                }
                Ok(Some(Sample { violation: worst, slack: Some(slack), gap: 0.0, input: vec![q] }))
            })
        }
    }
}

/// Exact evaluation against the series of order `order`; violation is the difference minus `tail + 1e-9`.
pub fn crosscheck(f: &Expr, cfg: &SamplerConfig, order: usize) -> Result<VerificationReport, VerifyError> {
    let series = f.to_series(order)?;
    run("crosscheck", cfg, 0.0, |i, rng| {
        let q = cfg.point(i, rng);
        let exact = f.eval_removable(q)?;
        let e = series.evaluate(q)?;
        let diff = (exact - e.value).norm();
        let bound = e.tail_bound + 1e-9;
        Ok(Some(Sample { violation: diff - bound, slack: Some(bound - diff), gap: diff, input: vec![q] }))
    })
}

/// One row of a slice grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub modulus: f64,
    pub re: f64,
    /// Argument of `f` measured in the slice: `atan2(<Im f, I>, Re f)`.
    pub arg: f64,
}

/// Polar grid `res x res` over the disk of radius 0.95 in the slice `C_I`.
pub fn grid(f: &Expr, unit: Quaternion, res: usize) -> Result<Vec<GridRow>, VerifyError> {
    if res == 0 || res > 2048 {
        return Err(VerifyError::BadResolution(res));
    }
    let unit = crate::quaternion::imaginary_unit(unit)
        .map_err(|e| VerifyError::Precondition(format!("slice unit: {e}")))?;
    (0..res * res)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / res, k % res);
            let r = tolerances::RADIUS_CAP * (i + 1) as f64 / res as f64;
            let t = std::f64::consts::TAU * j as f64 / res as f64;
            let (x, y) = (r * t.cos(), r * t.sin());
            let v = f.eval_removable(Quaternion::from_slice(x, y, unit))?;
            Ok(GridRow { x, y, modulus: v.norm(), re: v.re(), arg: v.im().dot(unit).atan2(v.re()) })
        })
        .collect()
}

pub fn grid_csv(rows: &[GridRow]) -> String {
    let mut s = String::from("x,y,abs,re,arg\n");
    for r in rows {
        s.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", r.x, r.y, r.modulus, r.re, r.arg));
    }
    s
}
