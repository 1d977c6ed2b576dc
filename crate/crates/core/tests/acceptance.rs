//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line with
//! the measured quantities, then asserts.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use coconvex::harness::{
    example_2_8, ratio_experiment, spline_jackson_check, Example28Mode, ExperimentConfig, NRange, FIXTURE_FAMILY,
};
use coconvex::korovkin::{
    fejer_apply, ordinary_limit_verdict, st_a_limit, SummabilityMatrix, Verdict,
};
use coconvex::shape::is_coconvex;
use coconvex::smoothness::{
    classical_modulus, dt_modulus, dt_modulus_convergence, symmetric_difference, weighted_dt_modulus, MeshPartition,
    ModulusSpec, StepMode,
};
use coconvex::solvers::{best_approximation, ApproxProblem, ShapeConstraint, SolveStatus, DEFAULT_SOLVER_TOL};
use coconvex::stieltjes::{ls_integral, ls_sums, CellPartition, IntegralOptions, Integrator};
use coconvex::weighted_spaces::weighted_lp_norm;
use coconvex::{Continuity, Func, InflectionPartition, JacobiWeight, WeightedNormParams};

fn report(n: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {n} ({name}): {} | {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn fixture_func(expr: &str) -> Func {
    coconvex::expr::parse_func(expr).unwrap()
}

#[test]
fn criterion_01_minimax_classics() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (expr, n, expected) in [("x^3", 3usize, 0.25), ("x^2", 1, 0.5)] {
        let f = fixture_func(expr);
        let t = Instant::now();
        let sol = best_approximation(&ApproxProblem::new(f.clone(), n, WeightedNormParams::unweighted(f64::INFINITY).unwrap()))
            .unwrap();
        let solve_time = t.elapsed().as_secs_f64();
        let oracle = common::box_minimax(&|x| f.eval(x), n, 1.0, 1e-3);
        let this = (sol.error - expected).abs() <= 1e-3 && (sol.error - oracle).abs() <= 1e-3 && solve_time < 10.0;
        ok &= this;
        detail.push(format!("{expr} n={n}: E={:.9} oracle={oracle:.9} time={solve_time:.3}s", sol.error));
    }
    report(1, "minimax classics", ok, detail.join("; "));
}

#[test]
fn criterion_02_feasible_set_nesting() {
    let t = Instant::now();
    let (mut cells, mut violations, mut uncertified) = (0, 0, 0);
    for fx in FIXTURE_FAMILY {
        let f = fixture_func(fx.expr);
        let y = InflectionPartition::new(fx.inflections.to_vec()).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let norm = WeightedNormParams::unweighted(p).unwrap();
            for n in 1..=16 {
                let prob = ApproxProblem::new(f.clone(), n, norm);
                let free = best_approximation(&prob).unwrap();
                let shaped = best_approximation(&prob.with_constraint(ShapeConstraint::Coconvex(y.clone()))).unwrap();
                cells += 1;
                if free.error > shaped.error + 2.0 * DEFAULT_SOLVER_TOL {
                    violations += 1;
                }
                if shaped.status == SolveStatus::Uncertified || !is_coconvex(&shaped.polynomial, &y, 1e-8) {
                    uncertified += 1;
                }
            }
        }
    }
    report(
        2,
        "feasible-set nesting",
        violations == 0 && uncertified == 0,
        format!(
            "{cells} cells, {violations} nesting violations, {uncertified} uncertified, {:.1}s",
            t.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_modulus_identities() {
    let sq = |x: f64| x * x;
    let mut worst_identity = 0.0f64;
    for delta in [0.1, 0.25, 0.5] {
        let w = classical_modulus(sq, 2, delta, f64::INFINITY).unwrap();
        worst_identity = worst_identity.max((w - 2.0 * delta * delta).abs());
    }
    let mut worst_annihilation = 0.0f64;
    let mesh = MeshPartition::chebyshev(8).unwrap();
    for (k, f) in [
        (1usize, Func::new(|_| 3.0)),
        (2, Func::new(|x| 1.0 - 2.0 * x)),
        (3, Func::new(|x| 0.5 + x - 3.0 * x * x)),
        (4, Func::new(|x| x * x * x - x)),
    ] {
        for p in [1.0, 2.0, f64::INFINITY] {
            let spec = ModulusSpec::new(k, p);
            let vals = [
                classical_modulus(f.as_fn(), k, 0.2, p).unwrap(),
                dt_modulus(f.as_fn(), &spec, 0.2).unwrap(),
                weighted_dt_modulus(f.as_fn(), &spec.with_weight(JacobiWeight::unit()), &mesh).unwrap(),
                dt_modulus_convergence(f.as_fn(), &spec, 0.2).unwrap().1,
            ];
            for v in vals {
                worst_annihilation = worst_annihilation.max(v);
            }
        }
    }
    let outside = [
        symmetric_difference(|x: f64| x.exp(), 0.99, 0.1, 2, StepMode::Constant),
        symmetric_difference(|x: f64| x.exp(), -0.95, 0.2, 1, StepMode::Constant),
        symmetric_difference(|x: f64| x.sin(), 0.5, 0.4, 3, StepMode::Constant),
    ];
    let boundary_zero = outside.iter().all(|&v| v == 0.0);
    report(
        3,
        "modulus identities",
        worst_identity <= 1e-10 && worst_annihilation < 1e-12 && boundary_zero,
        format!(
            "max |w2(x^2,d) - 2d^2| = {worst_identity:.2e}, max annihilated = {worst_annihilation:.2e}, boundary zero = {boundary_zero}"
        ),
    );
}

#[test]
fn criterion_04_weighted_norms() {
    let one = |_: f64| 1.0;
    let closed = [
        (0.0, 0.0, 1.0, 2.0),
        (1.0, 1.0, 1.0, 4.0 / 3.0),
        (0.0, 0.0, 2.0, 2f64.sqrt()),
    ];
    let mut worst_closed = 0.0f64;
    for (a, b, p, expected) in closed {
        let v = weighted_lp_norm(one, &WeightedNormParams::new(a, b, p).unwrap()).unwrap();
        worst_closed = worst_closed.max((v - expected).abs());
    }
    let fixtures: [(&str, f64, f64, f64); 10] = [
        ("x", -0.25, -0.25, 2.0),
        ("1", -0.5, -0.5, 1.0),
        ("exp(x)", -0.3, 0.7, 1.0),
        ("cos(3*x)", 0.2, -0.4, 2.0),
        ("x^2", -0.45, -0.1, 2.0),
        ("1 + x", -0.9, 0.0, 1.0),
        ("sin(x) + 2", -0.2, -0.6, 1.5),
        ("x^3 - x", -0.3, -0.3, 3.0),
        ("1/(2 + x)", 0.5, -0.25, 2.0),
        ("exp(-x^2)", -0.7, -0.7, 1.0),
    ];
    let mut worst_oracle = 0.0f64;
    for (expr, a, b, p) in fixtures {
        let f = fixture_func(expr);
        let v = weighted_lp_norm(f.as_fn(), &WeightedNormParams::new(a, b, p).unwrap()).unwrap();
        let o = common::weighted_norm_oracle(&|x| f.eval(x), a, b, p, 1e-12);
        worst_oracle = worst_oracle.max((v - o).abs() / o.abs().max(1.0));
    }
    report(
        4,
        "weighted-norm correctness",
        worst_closed <= 1e-10 && worst_oracle <= 1e-8,
        format!("closed forms max err {worst_closed:.2e}; 10 singular-weight fixtures max rel err {worst_oracle:.2e}"),
    );
}

#[test]
fn criterion_05_shape_preserving_ratio() {
    let t = Instant::now();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for fx in FIXTURE_FAMILY {
        for sigma in [1.0, 2.0, 3.0] {
            let cfg = ExperimentConfig {
                function: fx.name.into(),
                sigma,
                n_range: NRange { m: 1, n: 16 },
                ..Default::default()
            };
            let r = ratio_experiment(&cfg).unwrap();
            let finite = r.c_emp.is_some_and(f64::is_finite);
            let var = r.last_quartile_variation.unwrap_or(f64::INFINITY);
            worst = worst.max(var);
            if !(finite && var < 0.25) {
                ok = false;
                lines.push(format!("{} sigma={sigma}: c={:?} var={var}", fx.name, r.c_emp));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    report(
        5,
        "shape-preserving ratio",
        ok,
        format!("18 runs, worst last-quartile variation {worst:.3e}, {secs:.1}s {}", lines.join(" ")),
    );
}

#[test]
fn criterion_06_spline_jackson() {
    let mut ok = true;
    let mut parts = Vec::new();
    for continuity in [Continuity::C0, Continuity::C1] {
        for p in [2.0, f64::INFINITY] {
            let cfg = ExperimentConfig {
                function: "x4".into(),
                p,
                k: 3,
                continuity,
                n_range: NRange { m: 4, n: 16 },
                ..Default::default()
            };
            let r = spline_jackson_check(&cfg).unwrap();
            let spread = r.spread.unwrap_or(f64::INFINITY);
            ok &= r.bounded && spread < 10.0 && r.rows.len() == 13;
            parts.push(format!("{continuity:?} p={p}: max/min={spread:.3}"));
        }
    }
    report(6, "spline Jackson ratio", ok, parts.join("; "));
}

#[test]
fn criterion_07_stieltjes_linearity() {
    let tol = 1e-4;
    let opts = IntegralOptions::new(tol);
    let id = [Integrator::identity()];
    let exprs = [
        "x", "x^2", "sin(3*x)", "exp(x)", "1 - x", "abs(x - 0.3)", "cos(x)", "x^3", "sqrt(x + 1)", "1/(1 + x)",
    ];
    let funcs: Vec<Func> = exprs.iter().map(|e| fixture_func(e)).collect();
    let integral = |f: &dyn Fn(f64) -> f64| ls_integral(f, (0.0, 1.0), &id, opts).unwrap().value().unwrap();
    let mut worst_h = 0.0f64;
    for f in &funcs {
        let base = integral(&|x| f.eval(x));
        for v in [0.5, 2.0, 7.0] {
            let scaled = integral(&|x| v * f.eval(x));
            worst_h = worst_h.max((scaled - v * base).abs() / tol);
        }
    }
    let mut worst_a = 0.0f64;
    for i in 0..funcs.len() {
        let (f, g) = (&funcs[i], &funcs[(i + 3) % funcs.len()]);
        let sum = integral(&|x| f.eval(x) + g.eval(x));
        let parts = integral(&|x| f.eval(x)) + integral(&|x| g.eval(x));
        worst_a = worst_a.max((sum - parts).abs() / tol);
    }
    let mut runner = TestRunner::deterministic();
    let mut violations = 0;
    for trial in 0..1000 {
        let cells = (1usize..40).new_tree(&mut runner).unwrap().current();
        let mut breaks: Vec<f64> = (0..cells - 1)
            .map(|_| (0.0f64..1.0).new_tree(&mut runner).unwrap().current())
            .collect();
        breaks.push(0.0);
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let part = CellPartition::new(breaks).unwrap();
        let f = &funcs[trial % funcs.len()];
        let s = ls_sums(f.as_fn(), &part, &id).unwrap();
        if s.lower > s.upper {
            violations += 1;
        }
    }
    report(
        7,
        "Stieltjes linearity",
        worst_h <= 2.0 && worst_a <= 3.0 && violations == 0,
        format!(
            "homogeneity max dev {worst_h:.3} tol, additivity max dev {worst_a:.3} tol, lower>upper on {violations}/1000 partitions"
        ),
    );
}

#[test]
fn criterion_08_korovkin() {
    let grid: Vec<f64> = (0..256).map(|j| -PI + 2.0 * PI * j as f64 / 256.0).collect();
    let errs: Vec<f64> = [32usize, 64, 128, 256, 512]
        .iter()
        .map(|&n| {
            grid.iter()
                .map(|&x| (fejer_apply(f64::sin, n, x).unwrap() - x.sin()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let width = 1usize << 21;
    let squares: Vec<f64> = (1..=width)
        .map(|n| {
            let r = (n as f64).sqrt().round() as usize;
            if r * r == n {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let cesaro = SummabilityMatrix::cesaro(width);
    let accept0 = st_a_limit(&squares, &cesaro, 0.0, 0.5).unwrap().verdict;
    let reject1 = st_a_limit(&squares, &cesaro, 1.0, 0.5).unwrap().verdict;
    let fixtures = identity_fixtures();
    let mut agree = 0;
    for (seq, limit) in &fixtures {
        let id = SummabilityMatrix::identity(seq.len());
        if st_a_limit(seq, &id, *limit, 1e-3).unwrap().verdict == ordinary_limit_verdict(seq, *limit, 1e-3) {
            agree += 1;
        }
    }
    report(
        8,
        "Korovkin operators",
        errs[4] < 0.01 && decreasing && accept0 == Verdict::Accept && reject1 == Verdict::Reject && agree == 20,
        format!(
            "Fejer sup errors {:?}, squares L=0 {accept0:?}, L=1 {reject1:?}, identity agreement {agree}/20",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    );
}

fn identity_fixtures() -> Vec<(Vec<f64>, f64)> {
    let n = 4096;
    let seq = |f: &dyn Fn(usize) -> f64| (1..=n).map(f).collect::<Vec<f64>>();
    vec![
        (seq(&|k| 1.0 / k as f64), 0.0),
        (seq(&|k| 1.0 / (k as f64).sqrt()), 0.0),
        (seq(&|_| 2.0), 2.0),
        (seq(&|_| 2.0), 0.0),
        (seq(&|k| if k % 2 == 0 { 1.0 } else { -1.0 }), 0.0),
        (seq(&|k| 1.0 + (-0.5f64).powi(k as i32)), 1.0),
        (seq(&|k| (k as f64).sin() / k as f64), 0.0),
        (seq(&|k| if k == 4000 { 1.0 } else { 0.0 }), 0.0),
        (seq(&|k| if k == 100 { 1.0 } else { 0.0 }), 0.0),
        (seq(&|k| if ((k as f64).sqrt() as usize).pow(2) == k { 1.0 } else { 0.0 }), 0.0),
        (seq(&|k| (k as f64).ln() / k as f64), 0.0),
        (seq(&|k| 3.0 - 1.0 / (k as f64).powi(2)), 3.0),
        (seq(&|k| k as f64), 0.0),
        (seq(&|k| (-1.0f64).powi(k as i32) / k as f64), 0.0),
        (seq(&|k| 0.5 + 1e-4 * (k as f64).cos()), 0.5),
        (seq(&|k| 0.5 + 1e-2 * (k as f64).cos()), 0.5),
        (seq(&|k| (0.999f64).powi(k as i32)), 0.0),
        (seq(&|k| (0.9999f64).powi(k as i32)), 0.0),
        (seq(&|k| if k % 1000 == 0 { 5.0 } else { 0.0 }), 0.0),
        (seq(&|k| 1.0 / (1.0 + (k as f64 - 3900.0).abs())), 0.0),
    ]
}

#[test]
fn criterion_09_worked_example() {
    let corrected = example_2_8(Example28Mode::Corrected).unwrap();
    let literal = example_2_8(Example28Mode::PaperLiteral).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p) in [
        ("x^4-e^3", common::example_power as fn(f64) -> f64),
        ("piecewise_quartic", common::example_piecewise),
    ] {
        let v = corrected.value(name, "weighted_l1_distance").unwrap();
        let oracle = common::example_distance_oracle(p, 1e-8);
        ok &= v >= 0.0 && (v - oracle).abs() <= 1e-6;
        parts.push(format!("{name}: corrected {v:.9} oracle {oracle:.9}"));
    }
    let split = literal.value("piecewise_quartic", "split_difference").unwrap();
    ok &= split < 0.0;
    parts.push(format!("literal split for piecewise quartic {split:.6}"));
    let csv = corrected.to_csv();
    ok &= csv.starts_with("mode,subject,quantity,value,printed,flag\n") && csv.lines().count() == 3;
    report(9, "worked example", ok, parts.join("; "));
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_coconvex");
    let cases = [
        ("table", r#"{"fn": "neg_sin_pi", "p": "inf", "n_range": "1:10", "sigma": 2}"#),
        ("ratio", r#"{"fn": "cube", "p": 2, "n_range": "1:8", "sigma": 2}"#),
        ("thm212", r#"{"fn": "neg_sin_pi", "p": 1, "n_range": "2:8", "eta": 2}"#),
        ("jackson", r#"{"fn": "x4", "p": 2, "n_range": "4:8", "k": 3, "continuity": "C1"}"#),
        ("example28", r#"{"mode": "paper-literal"}"#),
    ];
    let mut identical = 0;
    for (which, cfg) in cases {
        let cfg_path = dir.path().join(format!("{which}.json"));
        std::fs::write(&cfg_path, cfg).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{which}_{run}.csv"));
            let status = std::process::Command::new(bin)
                .args(["experiment", which, "--config"])
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success(), "{which} failed");
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs[0] == outputs[1] && !outputs[0].is_empty() {
            identical += 1;
        }
    }
    report(10, "determinism", identical == cases.len(), format!("{identical}/{} experiments byte-identical", cases.len()));
}
