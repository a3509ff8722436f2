//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use slicereg::hyperbolic::{dieudonne_rhs, goluzin_rhs, hyperbolic_quotient, iterated_quotient, pseudo_ball_to_euclidean, rho};
use slicereg::interpolation::pick::{pick_matrix_real, psd_check};
use slicereg::interpolation::slice::{complex_blaschke, representation_formula, slice_extend};
use slicereg::interpolation::{
    build_q_table, build_solution, HParam, InterpolationProblem, QCell, QTable, SolutionKind,
};
use slicereg::quaternion::{I, J, K, ONE, ZERO};
use slicereg::sampling::{
    random_balpha, random_blaschke, random_polynomial_self_map, random_separated_problem, random_self_map_tree,
    random_tree, slice_unit, uniform_ball, unit_quaternion, SamplerConfig,
};
use slicereg::verify::{crosscheck, run_suite_with_tolerance, Suite};
use slicereg::{Expr, Quaternion};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn grid(n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect()
}

fn q_of(table: &QTable, k: usize, l: usize) -> Quaternion {
    table.get(k, l).value().expect("finite cell")
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) < 0 < f(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn two_point_q(l: f64, m: f64) -> Quaternion {
    let p = InterpolationProblem::new(vec![-0.5, 0.5], vec![I * l, J * m]).unwrap();
    q_of(&build_q_table(&p), 1, 2)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let g = grid(50, 0.98);
    let mut worst: f64 = 0.0;
    for &l in &g {
        for &m in &g {
            let want = 25.0 / 16.0 * (l * l + m * m) / (1.0 + l * l * m * m);
            worst = worst.max((two_point_q(l, m).norm_sqr() - want).abs());
        }
    }
    let mut worst_b: f64 = 0.0;
    for &l in &grid(50, 0.79) {
        let want = ((4.0 + 5.0 * l) * (4.0 - 5.0 * l) / ((5.0 + 4.0 * l) * (5.0 - 4.0 * l))).sqrt();
        let got = bisect(0.0, 0.999_999, |m| two_point_q(l, m).norm() - 1.0);
        worst_b = worst_b.max((got - want).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && worst_b <= 1e-10 && secs < 1.0,
        format!("max ||Q|^2 err| {worst:.2e}, boundary err {worst_b:.2e}, {secs:.3}s"),
    )
}

fn three_point_table(l: f64, m: f64) -> QTable {
    let p = InterpolationProblem::new(vec![0.0, -0.5, 0.5], vec![ZERO, I * l, J * m]).unwrap();
    build_q_table(&p)
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let g = grid(50, 0.49);
    let mut worst: f64 = 0.0;
    for &l in &g {
        for &m in &g {
            let t = three_point_table(l, m);
            let q23 = (ONE + K * (4.0 * l * m)).inverse().unwrap() * (I * l + J * m) * 2.5;
            worst = worst
                .max((q_of(&t, 1, 2) - I * (-2.0 * l)).norm())
                .max((q_of(&t, 1, 3) - J * (2.0 * m)).norm())
                .max((q_of(&t, 2, 3) - q23).norm());
        }
    }
    let mu = bisect(0.0, 0.49, |m| q_of(&three_point_table(0.25, m), 2, 3).norm() - 1.0);
    let err = (mu - (13.0f64 / 112.0).sqrt()).abs();
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && err <= 1e-10 && secs < 1.0,
        format!("max cell err {worst:.2e}, threshold err {err:.2e}, {secs:.3}s"),
    )
}

struct Solved {
    problem: InterpolationProblem,
    table: QTable,
    kind: SolutionKind,
    solution: Option<Expr>,
}

fn problems() -> Vec<Solved> {
    (0..300)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            let n = 2 + i % 4;
            let (problem, kind) = random_separated_problem(&mut rng, n, 1e-3);
            let table = build_q_table(&problem);
            let h = match i % 3 {
                0 => None,
                1 => Some(HParam::Unimodular(unit_quaternion(&mut rng))),
                _ => Some(HParam::Function(random_self_map_tree(&mut rng, 3))),
            };
            let h = if matches!(kind, SolutionKind::NonSingular) { h } else { None };
            let solution = match kind {
                SolutionKind::NoSolution => None,
                _ => Some(build_solution(&table, kind, h).expect("solvable")),
            };
            Solved { problem, table, kind, solution }
        })
        .collect()
}

fn criterion_3(set: &[Solved], build_secs: f64) -> Outcome {
    let t0 = Instant::now();
    let stats: Vec<(f64, f64)> = set
        .par_iter()
        .enumerate()
        .filter_map(|(i, s)| s.solution.as_ref().map(|f| (i, s, f)))
        .map(|(i, s, f)| {
            let res = s
                .problem
                .nodes
                .iter()
                .zip(&s.problem.values)
                .map(|(r, v)| (f.eval(Quaternion::real(*r)).unwrap() - *v).norm())
                .fold(0.0, f64::max);
            let mut rng = ChaCha8Rng::seed_from_u64(77 + i as u64);
            let modulus = (0..2000)
                .map(|_| f.eval_removable(uniform_ball(&mut rng, 0.95)).unwrap().norm())
                .fold(0.0, f64::max);
            (res, modulus)
        })
        .collect();
    let res = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let modulus = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let count = |k: fn(&SolutionKind) -> bool| set.iter().filter(|s| k(&s.kind)).count();
    let ns = count(|k| matches!(k, SolutionKind::NonSingular));
    let sg = count(|k| matches!(k, SolutionKind::Singular { .. }));
    let no = count(|k| matches!(k, SolutionKind::NoSolution));
    let secs = build_secs + t0.elapsed().as_secs_f64();
    outcome(
        res <= 1e-9 && modulus <= 1.0 + 1e-9 && secs < 60.0 && ns > 0 && sg > 0,
        format!(
            "{ns} non-singular, {sg} singular, {no} unsolvable; max residual {res:.2e}, max |f| {modulus:.12}, {secs:.1}s"
        ),
    )
}

fn criterion_4(set: &[Solved]) -> Outcome {
    let mut disagree = 0;
    let mut first = String::new();
    for (i, s) in set.iter().enumerate() {
        let p = pick_matrix_real(&s.problem.nodes, &s.problem.values);
        let psd = psd_check(&p, 1e-9).expect("Hermitian");
        let solvable = !matches!(s.kind, SolutionKind::NoSolution);
        if solvable != psd.is_psd {
            disagree += 1;
            if first.is_empty() {
                first = format!(" (first: problem {i}, {:?}, min eig {:.3e}, |P| {:.3e})", s.kind, psd.min_eig, psd.max_abs_eig);
            }
        }
    }
    outcome(disagree == 0, format!("{} / {} agree{first}", set.len() - disagree, set.len()))
}

fn run_many(suite: Suite, fs: &[Expr], per: usize, seed: u64) -> (f64, f64, usize) {
    let mut worst = f64::NEG_INFINITY;
    let mut gap: f64 = 0.0;
    let mut samples = 0;
    for (k, f) in fs.iter().enumerate() {
        let cfg = SamplerConfig::new(seed + k as u64, per);
        let r = run_suite_with_tolerance(suite, f, &cfg, TOL).unwrap_or_else(|e| panic!("{suite:?} on {f:?}: {e}"));
        worst = worst.max(r.max_violation);
        gap = gap.max(r.equality_gap);
        samples += r.samples - r.skipped;
    }
    (worst, gap, samples)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fs: Vec<Expr> = (2..=5).map(|d| random_blaschke(&mut rng, d, 0.8)).collect();
    fs.extend((0..4).map(|k| random_polynomial_self_map(&mut rng, 2 + 2 * k, false)));
    let per = 10_000 / fs.len();
    let mut detail = Vec::new();
    let mut pass = true;
    for suite in [Suite::Spl, Suite::Spl3, Suite::Multi] {
        let (worst, _, n) = run_many(suite, &fs, per, 50);
        pass &= worst <= TOL;
        detail.push(format!("{} max viol {worst:.2e} ({n} samples)", suite.name()));
    }
    let moebius: Vec<Expr> =
        (0..4).map(|_| Expr::moebius(uniform_ball(&mut rng, 0.8), unit_quaternion(&mut rng)).unwrap()).collect();
    let (_, gap, _) = run_many(Suite::Spl, &moebius, 1000, 90);
    pass &= gap <= 1e-10;
    detail.push(format!("Moebius equality gap {gap:.2e}"));
    outcome(pass, detail.join(", "))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fixed: Vec<Expr> = (1..=4)
        .map(|d| {
            let mut zeros = vec![ZERO];
            zeros.extend((1..d).map(|_| uniform_ball(&mut rng, 0.8)));
            Expr::blaschke(&zeros, unit_quaternion(&mut rng)).unwrap()
        })
        .collect();
    fixed.extend((0..4).map(|k| random_polynomial_self_map(&mut rng, 2 + k, true)));
    let per = 10_000 / fixed.len();
    let mut detail = Vec::new();
    let mut pass = true;
    for suite in [Suite::Dieudonne, Suite::Goluzin] {
        let (worst, _, n) = run_many(suite, &fixed, per, 60);
        pass &= worst <= TOL;
        detail.push(format!("{} max viol {worst:.2e} ({n})", suite.name()));
    }
    let balpha: Vec<Expr> = (0..8).map(|k| random_balpha(&mut rng, 0.1 * k as f64 + 0.05)).collect();
    let (worst, _, n) = run_many(Suite::Balpha, &balpha, 10_000 / balpha.len(), 70);
    pass &= worst <= TOL;
    detail.push(format!("balpha max viol {worst:.2e} ({n})"));

    let sq = Expr::poly(vec![ZERO, ZERO, ONE]);
    let mut eq: f64 = 0.0;
    for k in 0..100 {
        let r = -0.95 + 1.9 * (k as f64 + 0.5) / 100.0;
        let q0 = Quaternion::real(r);
        let fh = hyperbolic_quotient(&sq, q0).unwrap().eval(q0).unwrap();
        let fq0 = sq.eval(q0).unwrap();
        let disk = dieudonne_rhs(q0, fq0).unwrap();
        let d1 = (fh * disk.alpha - q0.inverse().unwrap() * fq0).norm() - disk.radius * disk.alpha;
        let go = fh.norm() - goluzin_rhs(0.0, r.abs());
        eq = eq.max(d1.abs()).max(go.abs());
    }
    pass &= eq <= 1e-10;
    detail.push(format!("q^2 equality gap {eq:.2e}"));
    outcome(pass, detail.join(", "))
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let results: Vec<Result<f64, String>> = (0..500)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(7000 + i as u64);
            let depth = rng.gen_range(1..=4);
            let f = random_tree(&mut rng, depth);
            let r = crosscheck(&f, &SamplerConfig::new(i as u64, 500), 128).map_err(|e| format!("{e} on {f:?}"))?;
            Ok(r.max_violation)
        })
        .collect();
    let errors: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    let worst = results.iter().filter_map(|r| r.as_ref().ok()).fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let secs = t0.elapsed().as_secs_f64();
    let first = errors.first().map(|e| format!(", first error: {}", &e[..e.len().min(200)])).unwrap_or_default();
    outcome(
        errors.is_empty() && worst <= 0.0,
        format!("500 trees x 500 points, max (diff - tail - 1e-9) {worst:.2e}, {} errors, {secs:.1}s{first}", errors.len()),
    )
}

fn criterion_8(set: &[Solved]) -> Outcome {
    let worst: Vec<f64> = set
        .par_iter()
        .filter_map(|s| s.solution.as_ref().map(|f| (s, f)))
        .map(|(s, f)| {
            let n = s.problem.len();
            let nodes: Vec<Quaternion> = s.problem.nodes.iter().map(|r| Quaternion::real(*r)).collect();
            let chain = iterated_quotient(f, &nodes[..n - 1]).unwrap();
            let mut worst: f64 = 0.0;
            for k in 1..n {
                for l in k + 1..=n {
                    let want = match s.table.get(k, l) {
                        QCell::Ball(q) | QCell::Unimodular(q) => q,
                        c => panic!("solvable table has cell {c:?}"),
                    };
                    let got = chain[k - 1].eval(nodes[l - 1]).unwrap();
                    worst = worst.max((got - want).norm());
                }
            }
            worst
        })
        .collect();
    let w = worst.iter().copied().fold(0.0, f64::max);
    outcome(w <= 1e-8, format!("{} solutions, max cell err {w:.2e}", worst.len()))
}

fn criterion_9() -> Outcome {
    let bad: usize = (0..100_000usize)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            rng.set_stream(i as u64);
            let c0 = uniform_ball(&mut rng, 0.99);
            let r0 = rng.gen_range(1e-3..0.999);
            let q = uniform_ball(&mut rng, 0.999);
            let b = pseudo_ball_to_euclidean(c0, r0).unwrap();
            let rq = rho(q, c0).unwrap();
            let dq = q.dist(b.center);
            if (rq - r0).abs() < 1e-10 || (dq - b.radius).abs() < 1e-10 {
                return 0;
            }
            usize::from((rq < r0) != (dq < b.radius))
        })
        .sum();
    outcome(bad == 0, format!("{bad} misclassified of 100000"))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut worst_formula: f64 = 0.0;
    for k in 0..8 {
        let unit = slice_unit(k);
        let degree = 1 + k % 4;
        let zeros: Vec<Complex64> =
            (0..degree).map(|_| Complex64::from_polar(0.7 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..6.3))).collect();
        let v = Complex64::from_polar(1.0, rng.gen_range(0.0..6.3));
        let (coeffs, c, g) = complex_blaschke(&zeros, v, 400);
        let f = slice_extend(&coeffs, unit, c, g).unwrap();
        let qz: Vec<Quaternion> = zeros.iter().map(|z| Quaternion::from_slice(z.re, z.im, unit)).collect();
        let b = Expr::blaschke(&qz, Quaternion::from_slice(v.re, v.im, unit)).unwrap();
        let f0 = |z: Complex64| zeros.iter().fold(v, |acc, a| acc * (z - a) / (1.0 - a.conj() * z));
        for _ in 0..125 {
            let q = uniform_ball(&mut rng, 0.95);
            let s = f.evaluate(q).unwrap();
            worst = worst.max((s.value - b.eval(q).unwrap()).norm());
            worst_formula = worst_formula.max((representation_formula(f0, unit, q) - b.eval(q).unwrap()).norm());
        }
    }
    outcome(
        worst <= 1e-10 && worst_formula <= 1e-10,
        format!("1000 samples on 8 slices, series err {worst:.2e}, formula err {worst_formula:.2e}"),
    )
}

fn main() {
    let t0 = Instant::now();
    let set = problems();
    let build_secs = t0.elapsed().as_secs_f64();
    let runs: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("two-point example", Box::new(criterion_1)),
        ("three-point example", Box::new(criterion_2)),
        ("solver correctness", Box::new(|| criterion_3(&set, build_secs))),
        ("Pick criterion agreement", Box::new(|| criterion_4(&set))),
        ("Schwarz-Pick suites", Box::new(criterion_5)),
        ("estimate suites", Box::new(criterion_6)),
        ("backend agreement", Box::new(criterion_7)),
        ("Q-table recovery", Box::new(|| criterion_8(&set))),
        ("ball lemma", Box::new(criterion_9)),
        ("slice extension", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in runs.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {:<26} {}  {}", k + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", runs.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
