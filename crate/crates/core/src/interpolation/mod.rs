//! Nevanlinna-Pick interpolation with real nodes.
//!
//! The solver runs a Schur-type recursion on the table of values `Q_k^l`
//! and builds solutions as nested Moebius actions, so every solution is an
//! exact [`Expr`]. [`pick`] holds the independent positivity criterion and
//! [`slice`] the extension of slice functions from one complex slice.

pub mod pick;
pub mod slice;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::moebius::classical_moebius;
use crate::quaternion::Quaternion;
use crate::tolerances::{BOUNDARY_BAND, UNIMODULAR_EQ, UNIMODULAR_SNAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpolationError {
    #[error("invalid problem: {0}")]
    Validation(String),
    #[error("|Q_{row}^{col}| = {modulus} is too close to 1 to decide solvability")]
    AmbiguousBoundary { row: usize, col: usize, modulus: f64 },
    #[error("solution kind mismatch: {0}")]
    KindMismatch(String),
    #[error("matrix is not Hermitian (defect {0})")]
    NotHermitian(f64),
    #[error("slice function is not a self-map of the disk (|f| = {0})")]
    NotSelfMap(f64),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Data `f(r_m) = s_m` with distinct real nodes in `(-1, 1)` and values in the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationProblem {
    pub nodes: Vec<f64>,
    pub values: Vec<Quaternion>,
}

impl InterpolationProblem {
    pub fn new(nodes: Vec<f64>, values: Vec<Quaternion>) -> Result<Self, InterpolationError> {
        let v = |s: String| Err(InterpolationError::Validation(s));
        if nodes.is_empty() {
            return v("at least one node is required".into());
        }
        if nodes.len() != values.len() {
            return v(format!("{} nodes but {} values", nodes.len(), values.len()));
        }
        for (m, r) in nodes.iter().enumerate() {
            if !(r.abs() < 1.0) {
                return v(format!("node {m} = {r} is not in (-1, 1)"));
            }
            for (l, t) in nodes.iter().enumerate().skip(m + 1) {
                if (r - t).abs() <= 1e-12 {
                    return v(format!("nodes {m} and {l} coincide"));
                }
            }
        }
        for (m, s) in values.iter().enumerate() {
            if !s.is_finite() || !(s.norm() < 1.0) {
                return v(format!("value {m} is not in the open unit ball"));
            }
        }
        Ok(InterpolationProblem { nodes, values })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, InterpolationError> {
        let nodes: Vec<f64> = serde_json::from_value(v.get("nodes").cloned().unwrap_or_default())
            .map_err(|e| InterpolationError::Validation(format!("nodes: {e}")))?;
        let values: Vec<Quaternion> = serde_json::from_value(v.get("values").cloned().unwrap_or_default())
            .map_err(|e| InterpolationError::Validation(format!("values: {e}")))?;
        InterpolationProblem::new(nodes, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "q", rename_all = "camelCase")]
pub enum QCell {
    /// `|Q| < 1`.
    Ball(Quaternion),
    /// `|Q| = 1` to working precision.
    Unimodular(Quaternion),
    /// `|Q| > 1`; no solution passes through this cell.
    Outside(Quaternion),
    Infinity,
}

impl QCell {
    pub fn value(&self) -> Option<Quaternion> {
        match self {
            QCell::Ball(q) | QCell::Unimodular(q) | QCell::Outside(q) => Some(*q),
            QCell::Infinity => None,
        }
    }

    pub fn modulus(&self) -> f64 {
        self.value().map_or(f64::INFINITY, |q| q.norm())
    }

    fn classify(q: Quaternion) -> QCell {
        let m = q.norm();
        if !m.is_finite() {
            QCell::Infinity
        } else if m < 1.0 - UNIMODULAR_SNAP {
            QCell::Ball(q)
        } else if m <= 1.0 + UNIMODULAR_SNAP {
            QCell::Unimodular(q.scale(1.0 / m))
        } else {
            QCell::Outside(q)
        }
    }
}

/// Cells `Q_k^l` for `0 <= k < n`, `k < l <= n` (indices as in the recursion, `l` one-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub nodes: Vec<f64>,
    pub rows: Vec<Vec<QCell>>,
}

impl QTable {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// `Q_k^l` with `l` one-based.
    pub fn get(&self, k: usize, l: usize) -> QCell {
        self.rows[k][l - k - 1]
    }

    pub fn last(&self) -> QCell {
        self.rows[self.n() - 1][0]
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, QCell)> + '_ {
        self.rows.iter().enumerate().flat_map(|(k, row)| row.iter().enumerate().map(move |(j, c)| (k, k + 1 + j, *c)))
    }
}

pub fn build_q_table(problem: &InterpolationProblem) -> QTable {
    let n = problem.len();
    let r = &problem.nodes;
    let mut rows: Vec<Vec<QCell>> = Vec::with_capacity(n);
    rows.push(problem.values.iter().map(|s| QCell::Ball(*s)).collect());
    for k in 1..n {
        let prev = &rows[k - 1];
        let head = prev[0];
        let rk = r[k - 1];
        let row = (k + 1..=n)
            .map(|l| {
                let cell = prev[l - k];
                match (head, cell) {
                    (QCell::Ball(a), QCell::Ball(b)) => {
                        let rl = r[l - 1];
                        let d = (rl - rk) / (1.0 - rl * rk);
                        match classical_moebius(a, b) {
                            Ok(m) => QCell::classify(m.scale(1.0 / d)),
                            Err(_) => QCell::Infinity,
                        }
                    }
                    (QCell::Unimodular(a), QCell::Unimodular(b)) if (a - b).norm() <= UNIMODULAR_EQ => {
                        QCell::Unimodular(a)
                    }
                    _ => QCell::Infinity,
                }
            })
            .collect();
        rows.push(row);
    }
    QTable { nodes: r.clone(), rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum SolutionKind {
    /// Infinitely many solutions.
    NonSingular,
    /// A unique solution, a Blaschke product of the given degree.
    Singular { degree: usize },
    NoSolution,
}

pub fn classify(table: &QTable) -> Result<SolutionKind, InterpolationError> {
    for (k, l, c) in table.cells() {
        let m = c.modulus();
        if m.is_finite() && (m - 1.0).abs() > UNIMODULAR_SNAP && (m - 1.0).abs() <= BOUNDARY_BAND {
            return Err(InterpolationError::AmbiguousBoundary { row: k, col: l, modulus: m });
        }
    }
    Ok(match table.last() {
        QCell::Ball(_) => SolutionKind::NonSingular,
        QCell::Unimodular(_) => {
            let degree = (1..table.n())
                .find(|&k| table.rows[k].iter().all(|c| matches!(c, QCell::Unimodular(_))))
                .expect("a unimodular last cell comes from an all-unimodular row");
            SolutionKind::Singular { degree }
        }
        QCell::Outside(_) | QCell::Infinity => SolutionKind::NoSolution,
    })
}

/// Free parameter of a non-singular problem.
#[derive(Debug, Clone)]
pub enum HParam {
    Function(Expr),
    Unimodular(Quaternion),
}

impl HParam {
    fn expr(&self) -> Result<Expr, InterpolationError> {
        match self {
            HParam::Function(e) => Ok(e.clone()),
            HParam::Unimodular(u) => {
                let m = u.norm();
                if (m - 1.0).abs() > 1e-9 {
                    return Err(InterpolationError::Validation(format!("unimodular parameter has modulus {m}")));
                }
                Ok(Expr::constant(u.scale(1.0 / m)))
            }
        }
    }
}

/// Nested solution `M_{-s_1} . (M_{r_1} * (M_{-Q_1^2} . (M_{r_2} * ( ... ))))`.
pub fn build_solution(table: &QTable, kind: SolutionKind, h: Option<HParam>) -> Result<Expr, InterpolationError> {
    let actual = classify(table)?;
    if actual != kind {
        return Err(InterpolationError::KindMismatch(format!("table is {actual:?}, requested {kind:?}")));
    }
    let (depth, mut g) = match kind {
        SolutionKind::NonSingular => {
            let g = match h {
                Some(h) => h.expr()?,
                None => Expr::constant(Quaternion::real(0.0)),
            };
            (table.n(), g)
        }
        SolutionKind::Singular { degree } => {
            if h.is_some() {
                return Err(InterpolationError::KindMismatch("the unique solution takes no parameter".into()));
            }
            let u = table.get(degree, degree + 1).value().expect("unimodular cell");
            (degree, Expr::constant(u))
        }
        SolutionKind::NoSolution => {
            return Err(InterpolationError::KindMismatch("problem has no solution".into()));
        }
    };
    for k in (1..=depth).rev() {
        let a = table.get(k - 1, k).value().expect("ball cell");
        let m = Expr::moebius(Quaternion::real(table.nodes[k - 1]), crate::quaternion::ONE)?;
        g = Expr::bullet(-a, &Expr::star_mul(&m, &g))?;
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSolution {
    pub kind: SolutionKind,
    pub q: Quaternion,
}

/// `f(r) = s`, `f(p) = q`: `Q = M_r(p)^{-1} M_s(q)` and the resulting kind.
pub fn two_point_solve(r: f64, p: f64, s: Quaternion, q: Quaternion) -> Result<TwoPointSolution, InterpolationError> {
    let problem = InterpolationProblem::new(vec![r, p], vec![s, q])?;
    let table = build_q_table(&problem);
    let kind = classify(&table)?;
    let q = table.last().value().expect("second row of a two point table is finite");
    Ok(TwoPointSolution { kind, q })
}

/// Everything the solver reports for one problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterpolationReport {
    pub kind: SolutionKind,
    pub table: QTable,
    pub solution: Option<serde_json::Value>,
    pub residuals: Vec<f64>,
    pub pick_min_eig: f64,
    pub pick_psd: bool,
}

/// Classifies, builds the solution if any and checks it against the data and the Pick matrix.
pub fn solve(
    problem: &InterpolationProblem,
    h: Option<HParam>,
    psd_tol: f64,
) -> Result<(InterpolationReport, Option<Expr>), InterpolationError> {
    let table = build_q_table(problem);
    let kind = classify(&table)?;
    let h = if matches!(kind, SolutionKind::NonSingular) { h } else { None };
    let solution = match kind {
        SolutionKind::NoSolution => None,
        _ => Some(build_solution(&table, kind, h)?),
    };
    let residuals = match &solution {
        Some(f) => problem
            .nodes
            .iter()
            .zip(&problem.values)
            .map(|(r, s)| f.eval(Quaternion::real(*r)).map(|v| (v - *s).norm()))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let pm = pick::pick_matrix_real(&problem.nodes, &problem.values);
    let psd = pick::psd_check(&pm, psd_tol)?;
    let report = InterpolationReport {
        kind,
        table,
        solution: solution.as_ref().map(|f| f.to_json()),
        residuals,
        pick_min_eig: psd.min_eig,
        pick_psd: psd.is_psd,
    };
    Ok((report, solution))
}
