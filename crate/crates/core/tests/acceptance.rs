//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own pass/fail line; exits nonzero on any failure.

use std::f64::consts::{FRAC_PI_4, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use carleson::embedding::{default_strip_partition, embedding_lower_bound, laplace_lq_norm, sufficient_strip_check, EmbeddingProblem};
use carleson::kernels::{double_sum_condition, prop_operator_norm, KernelSpec};
use carleson::laplace::{gamma, integrate_halfline, laplace_at, ExpPowerFunction, Signal};
use carleson::maximal::{verify_estimate, Partition};
use carleson::measures::{PlaneMeasure, RadialMeasure};
use carleson::systems::{
    admissibility_verdict, builtin_system, embedding_problem, infinite_time_map, Classification, DiagonalSystem,
};
use carleson::weights::Weight;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `max_k sum_{r_j <= r_k} |b_j|^q / r_k^beta`, quadratic time.
fn brute_force_constant(sys: &DiagonalSystem, beta: f64) -> f64 {
    let q = sys.state_exponent();
    let r: Vec<f64> = sys.eigenvalues().iter().map(|l| -l.re).collect();
    let m: Vec<f64> = sys.coefficients().iter().map(|b| b.norm().powf(q)).collect();
    r.iter()
        .map(|&rk| r.iter().zip(&m).filter(|(rj, _)| **rj <= rk).map(|(_, mj)| mj).sum::<f64>() / rk.powf(beta))
        .fold(0.0, f64::max)
}

fn heat_threshold() -> String {
    let start = Instant::now();
    let heat = builtin_system("heat-neumann", 10_000).unwrap();
    let mut checked = 0;
    for i in 0..6 {
        let alpha = -0.5 + 0.25 * i as f64;
        let mut ps: Vec<(f64, bool)> = (0..19).map(|k| ((110 + 5 * k) as f64 / 100.0, false)).collect();
        ps.push((4.0 / 3.0 * (alpha + 1.0), true));
        for (p, exact) in ps {
            if alpha >= p - 1.0 || !(1.1..=2.0).contains(&p) {
                continue;
            }
            let gap = p - 4.0 / 3.0 * (alpha + 1.0);
            let expected = if exact || gap >= 0.02 {
                Classification::Admissible
            } else if gap <= -0.02 {
                Classification::NotAdmissible
            } else {
                continue;
            };
            let v = admissibility_verdict(&heat, p, alpha).unwrap();
            assert_eq!(v.classification, expected, "p = {p}, alpha = {alpha}");
            checked += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 60.0, "took {elapsed} s");
    format!("{checked} cells, {elapsed:.2} s")
}

fn parabolic_threshold() -> String {
    let start = Instant::now();
    let sys = builtin_system("parabolic-2n", 60).unwrap();
    for alpha in [-2.0, -1.5, -1.0] {
        assert_eq!(admissibility_verdict(&sys, 2.0, alpha).unwrap().classification, Classification::Admissible);
    }
    for alpha in [-0.75, -0.5, 0.0] {
        assert_eq!(admissibility_verdict(&sys, 2.0, alpha).unwrap().classification, Classification::NotAdmissible);
    }
    let slope = admissibility_verdict(&sys, 2.0, -0.5).unwrap().slope.unwrap();
    assert!((slope - 0.5).abs() <= 0.1, "slope {slope}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed <= 5.0, "took {elapsed} s");
    format!("slope {slope:.4}, {elapsed:.2} s")
}

fn criterion_constants() -> String {
    let heat = builtin_system("heat-neumann", 10_000).unwrap();
    let h = admissibility_verdict(&heat, 2.0, 0.0).unwrap();
    assert!(rel(h.criterion_constant, 1.0 / (PI * PI)) <= 1e-10);
    assert!(rel(h.criterion_constant, brute_force_constant(&heat, 1.0)) <= 1e-10);
    let para = builtin_system("parabolic-2n", 60).unwrap();
    let c = admissibility_verdict(&para, 2.0, -1.0).unwrap();
    assert!(rel(c.criterion_constant, 1.0) <= 1e-10);
    assert!(rel(c.criterion_constant, brute_force_constant(&para, 2.0)) <= 1e-10);
    format!("heat {:.12}, parabolic {:.12}", h.criterion_constant, c.criterion_constant)
}

fn laplace_closed_forms() -> String {
    // Gamma(beta + 1) for beta in {-0.5, 0, 1}.
    let gammas = [(-0.5, PI.sqrt()), (0.0, 1.0), (1.0, 1.0)];
    let mut worst: f64 = 0.0;
    for (beta, g) in gammas {
        for a in [0.0, 1.0] {
            for x in [0.5f64, 1.0, 8.0] {
                let closed = g / (x + a).powf(beta + 1.0);
                let quad = laplace_at(&|t: f64| t.powf(beta) * (-a * t).exp(), Complex64::new(x, 0.0), 1e-12).unwrap();
                worst = worst.max((quad - closed).norm() / closed);
            }
        }
    }
    assert!(worst <= 1e-8, "worst {worst}");
    let g = gamma(0.5).unwrap();
    assert!((g * g - PI).abs() <= 1e-12);
    format!("worst rel. err {worst:.2e}")
}

fn zen_weights() -> String {
    // Gamma(alpha + 1) for alpha in {0, 1, 2.5}.
    let bergman = [(0.0, 1.0), (1.0, 1.0), (2.5, 15.0 * PI.sqrt() / 8.0)];
    let hardy = Weight::zen(vec![RadialMeasure::hardy()]).unwrap();
    let dirichlet = Weight::zen(vec![RadialMeasure::hardy(), RadialMeasure::dirichlet_derivative()]).unwrap();
    let mut worst: f64 = 0.0;
    for j in -6..=6 {
        let t = 2f64.powi(j);
        worst = worst.max(rel(hardy.eval(t).unwrap(), 1.0));
        worst = worst.max(rel(dirichlet.eval(t).unwrap(), 1.0 + t));
        for (alpha, g) in bergman {
            let closed = 2.0 * PI * g / (2.0 * t).powf(alpha + 1.0);
            let w = Weight::zen(vec![RadialMeasure::density(alpha, 1.0).unwrap()]).unwrap().eval(t).unwrap();
            let quad = 2.0 * PI * integrate_halfline(|r| r.powf(alpha) * (-2.0 * r * t).exp(), 1e-12).unwrap().value;
            worst = worst.max(rel(w, closed)).max(rel(quad, closed));
        }
    }
    assert!(worst <= 1e-8, "worst {worst}");
    format!("worst rel. err {worst:.2e}")
}

fn infinite_time_identity() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut systems = vec![builtin_system("heat-neumann", 6).unwrap(), builtin_system("parabolic-2n", 6).unwrap()];
    for q in [1.5, 2.0, 3.0] {
        let n = rng.random_range(2..=6);
        let lambdas = (0..n).map(|_| Complex64::new(-rng.random_range(0.2..8.0), rng.random_range(-4.0..4.0))).collect();
        let bs = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        systems.push(DiagonalSystem::new(lambdas, bs, q, None).unwrap());
    }
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (beta, a) = (rng.random_range(-0.4..2.0), rng.random_range(0.0..2.0));
        let f = ExpPowerFunction::new(beta, a).unwrap();
        let g = gamma(beta + 1.0).unwrap();
        for sys in &systems {
            let (_, state) = infinite_time_map(sys, &Signal::ExpPower(f)).unwrap();
            // Closed-form L^q(mu) norm of the transform.
            let q = sys.state_exponent();
            let direct: f64 = sys
                .eigenvalues()
                .iter()
                .zip(sys.coefficients())
                .map(|(l, b)| b.norm().powf(q) * (g / (-l + a).powf(beta + 1.0)).norm().powf(q))
                .sum::<f64>()
                .powf(1.0 / q);
            let quad = laplace_lq_norm(&sys.measure().unwrap(), &Signal::function(move |t| f.eval(t)), q, 1e-12).unwrap();
            worst = worst.max(rel(state, direct)).max(rel(state, quad));
        }
    }
    assert!(worst <= 1e-9, "worst {worst}");
    format!("worst rel. err {worst:.2e}")
}

fn sandwich() -> String {
    let bounds = |prob: &EmbeddingProblem| {
        let lower = embedding_lower_bound(prob, FRAC_PI_4, None).unwrap().value;
        let upper = sufficient_strip_check(prob, &default_strip_partition(prob.measure()).unwrap()).unwrap().norm_bound;
        (lower, upper)
    };
    let mut problems = vec![
        embedding_problem(&builtin_system("heat-neumann", 500).unwrap(), 2.0, 0.0).unwrap(),
        embedding_problem(&builtin_system("heat-neumann", 500).unwrap(), 1.8, 0.25).unwrap(),
        embedding_problem(&builtin_system("parabolic-2n", 40).unwrap(), 2.0, -1.0).unwrap(),
        embedding_problem(&builtin_system("parabolic-2n", 40).unwrap(), 2.0, -2.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let pairs: Vec<(Complex64, f64)> = (0..rng.random_range(1..=10))
            .map(|_| {
                let re = 2f64.powf(rng.random_range(-5.0..5.0));
                (Complex64::new(re, re * rng.random_range(-0.95..0.95)), rng.random_range(0.01..5.0))
            })
            .collect();
        let p = [1.5, 2.0, 4.0][rng.random_range(0..3)];
        let q = [1.0, 2.0, 3.0][rng.random_range(0..3)];
        let alpha = rng.random_range(-1.0..0.9 * (p - 1.0));
        problems.push(EmbeddingProblem::new(p, q, Weight::power(alpha), PlaneMeasure::from_pairs(&pairs).unwrap()).unwrap());
    }
    let mut tightest = f64::INFINITY;
    for prob in &problems {
        let (lower, upper) = bounds(prob);
        assert!(lower <= upper * (1.0 + 1e-9), "lower {lower} > upper {upper}");
        tightest = tightest.min(upper / lower);
    }
    format!("{} cases, tightest upper/lower {tightest:.4}", problems.len())
}

fn lemma_estimate() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let partition = Partition::default_geometric();
    let mut refined = 0;
    for case in 0..30 {
        let f = ExpPowerFunction::new(rng.random_range(-0.5..2.0), rng.random_range(0.1..4.0)).unwrap();
        let alpha = rng.random_range(-1.0..=0.0);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let x = 2f64.powi(rng.random_range(-4..=4));
        let c = verify_estimate(&|t| f.eval(t), &Weight::power(alpha), p, x, &partition).unwrap();
        assert!(c.holds, "case {case}: lhs {} > rhs {}", c.lhs, c.rhs);
        // The left side independently.
        let lhs = integrate_halfline(|t| (-t / x).exp() * f.eval(t), 1e-12).unwrap().value;
        assert!(rel(c.lhs, lhs) < 1e-8);
        refined += c.refinements;
    }
    format!("30 cases, zero violations, {refined} refinement round(s)")
}

fn kernel_tests() -> String {
    let heat = builtin_system("heat-neumann", 32).unwrap();
    let norm = prop_operator_norm(&heat, &KernelSpec::Hardy, Some(32)).unwrap().norm;
    let m = DMatrix::from_fn(32, 32, |i, j| {
        let (k, l) = ((i + 1) as f64, (j + 1) as f64);
        1.0 / (2.0 * PI * PI * PI * (k * k + l * l))
    });
    let oracle = SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let norm_err = rel(norm, oracle);
    assert!(norm_err <= 1e-6, "operator norm {norm} vs {oracle}");
    let heat = builtin_system("heat-neumann", 256).unwrap();
    let sums = double_sum_condition(&heat, &KernelSpec::Hardy, None).unwrap();
    let mut worst: f64 = 0.0;
    for &(n, partial) in &sums.partial_sums {
        let mut direct = 0.0;
        for k in 1..=n {
            for l in 1..=n {
                let e = 1.0 / (2.0 * PI * PI * PI * (k * k + l * l) as f64);
                direct += e * e;
            }
        }
        worst = worst.max(rel(partial, direct));
    }
    assert!(worst <= 1e-10, "double sum rel. err {worst}");
    format!("norm rel. err {norm_err:.2e}, double-sum rel. err {worst:.2e}")
}

fn determinism() -> String {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 3000}}},
            "exponents": {"p": 1.5, "alpha": 0.1},
            "operations": ["admissibility", "sectorial", "interval", "strip", "lower_bound", "empirical", "double_sum", "subsets", "operator_norm"],
            "kernel": {"name": "hardy", "truncation": 100}
        }"#,
    )
    .unwrap();
    let run = |tag: &str, threads: &str| -> Value {
        let out = dir.path().join(tag);
        let args = ["carleson", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads, "analyze"];
        assert_eq!(carleson::cli::run(args), 0);
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert!(v.as_object_mut().unwrap().remove("timing").is_some());
        v
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "8");
    let bytes = |v: &Value| serde_json::to_string(v).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(bytes(&a), bytes(&c));
    // The echoed config re-runs to the same results.
    let echoed = dir.path().join("echoed.json");
    std::fs::write(&echoed, serde_json::to_string(&a["config"]).unwrap()).unwrap();
    let out = dir.path().join("d");
    let args = ["carleson", "--config", echoed.to_str().unwrap(), "--out", out.to_str().unwrap(), "analyze"];
    assert_eq!(carleson::cli::run(args), 0);
    let mut d: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    d.as_object_mut().unwrap().remove("timing");
    assert_eq!(bytes(&a), bytes(&d));
    "repeat, 1 vs 8 threads and echoed config all identical".into()
}

type Criterion = (&'static str, fn() -> String);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("heat threshold p >= 4/3 (alpha + 1)", heat_threshold),
        ("parabolic threshold alpha <= -1", parabolic_threshold),
        ("criterion constants", criterion_constants),
        ("laplace closed forms", laplace_closed_forms),
        ("zen weights", zen_weights),
        ("infinite-time map identity", infinite_time_identity),
        ("lower bound below strip bound", sandwich),
        ("maximal-function estimate", lemma_estimate),
        ("kernel tests", kernel_tests),
        ("determinism and schema", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(e) => {
                failures += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {:>2} {name}: FAIL ({msg})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
