use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use slicereg::interpolation::{self, HParam, InterpolationError, InterpolationProblem, SolutionKind};
use slicereg::sampling::{Distribution, SamplerConfig};
use slicereg::tolerances::{self, PSD_TOL, RADIUS_CAP};
use slicereg::verify::{self, Suite};
use slicereg::{Expr, Quaternion};

const EXIT_NO_SOLUTION: u8 = 2;
const EXIT_AMBIGUOUS: u8 = 3;
const EXIT_FAILED: u8 = 4;

/// Slice regular functions on the quaternionic unit ball: interpolation and inequality checks.
#[derive(Parser)]
#[command(name = "slicereg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an interpolation problem with real nodes and print the report.
    Interpolate {
        problem: String,
        /// Free parameter: expression file, inline JSON, or a constant `[w,x,y,z]`.
        #[arg(long)]
        h: Option<String>,
    },
    /// Run one inequality suite on a self-map.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = RADIUS_CAP)]
        cap: f64,
        #[arg(long, default_value = "uniform-ball")]
        dist: String,
    },
    /// Compare exact evaluation with the truncated series.
    Crosscheck {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 64)]
        order: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
    },
    /// Print `x,y,abs,re,arg` over a polar grid on one slice.
    Grid {
        #[arg(long)]
        f: String,
        #[arg(long, default_value = "i")]
        slice: String,
        #[arg(long, default_value_t = 64)]
        res: usize,
    },
}

/// Inline JSON when the argument looks like JSON, a file path otherwise.
fn load_json(arg: &str) -> Result<Value> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).with_context(|| format!("reading {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("parsing {arg}"))
}

fn load_expr(arg: &str) -> Result<Expr> {
    Expr::from_json(&load_json(arg)?).map_err(|e| anyhow!("expression: {e}"))
}

fn h_param(v: &Value) -> Result<HParam> {
    let e = Expr::from_json(v).map_err(|e| anyhow!("h: {e}"))?;
    if let slicereg::ExprKind::Const(c) = e.kind() {
        if (c.norm() - 1.0).abs() <= 1e-9 {
            return Ok(HParam::Unimodular(*c));
        }
    }
    Ok(HParam::Function(e))
}

fn parse_slice(s: &str) -> Result<Quaternion> {
    Ok(match s {
        "i" => slicereg::quaternion::I,
        "j" => slicereg::quaternion::J,
        "k" => slicereg::quaternion::K,
        _ => {
            let v: [f64; 3] = serde_json::from_str(s).with_context(|| format!("slice {s:?}"))?;
            Quaternion::new(0.0, v[0], v[1], v[2])
        }
    })
}

fn print(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn interpolate(problem: &str, h: Option<&str>) -> Result<u8> {
    let raw = load_json(problem)?;
    let prob = InterpolationProblem::from_json(&raw)?;
    let h = match (h, raw.get("h")) {
        (Some(arg), _) => Some(h_param(&load_json(arg)?)?),
        (None, Some(v)) => Some(h_param(v)?),
        (None, None) => None,
    };
    let tol = tolerances::env_override().unwrap_or(PSD_TOL);
    match interpolation::solve(&prob, h, tol) {
        Ok((report, _)) => {
            print(&report)?;
            Ok(match report.kind {
                SolutionKind::NoSolution => EXIT_NO_SOLUTION,
                _ => 0,
            })
        }
        Err(InterpolationError::AmbiguousBoundary { row, col, modulus }) => {
            print(&json!({ "error": "ambiguousBoundary", "row": row, "col": col, "modulus": modulus }))?;
            Ok(EXIT_AMBIGUOUS)
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Interpolate { problem, h } => interpolate(&problem, h.as_deref()),
        Cmd::Verify { suite, f, seed, count, cap, dist } => {
            if !(cap > 0.0 && cap < 1.0) {
                bail!("--cap must be in (0, 1)");
            }
            let suite: Suite = suite.parse()?;
            let distribution: Distribution = dist.parse().map_err(|e: String| anyhow!(e))?;
            let cfg = SamplerConfig { seed, count, radius_cap: cap, distribution };
            let report = verify::run_suite(suite, &load_expr(&f)?, &cfg)?;
            print(&report)?;
            Ok(if report.pass { 0 } else { EXIT_FAILED })
        }
        Cmd::Crosscheck { f, order, seed, count } => {
            let report = verify::crosscheck(&load_expr(&f)?, &SamplerConfig::new(seed, count), order)?;
            print(&report)?;
            Ok(if report.pass { 0 } else { EXIT_FAILED })
        }
        Cmd::Grid { f, slice, res } => {
            let rows = verify::grid(&load_expr(&f)?, parse_slice(&slice)?, res)?;
            print!("{}", verify::grid_csv(&rows));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
