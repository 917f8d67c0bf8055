//! The reproduction suite: the two worked systems plus the oracle and
//! property checks, one pass/fail line per criterion.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{embedding_lower_bound, laplace_lq_norm, sufficient_strip_check, default_strip_partition, EmbeddingProblem};
use crate::error::Result;
use crate::kernels::{double_sum_condition, prop_operator_norm, KernelSpec};
use crate::laplace::{gamma, integrate_halfline, laplace_at, ExpPowerFunction, Signal};
use crate::maximal::{verify_estimate, Partition};
use crate::measures::{PlaneMeasure, RadialMeasure};
use crate::systems::{
    build_builtin, embedding_problem, infinite_time_map, BuiltinSystem, Classification, DiagonalSystem, ExponentRule,
    PreparedSystem, VerdictOptions,
};
use crate::weights::Weight;

use super::analyze::{run_analysis, ToolInfo};
use super::config::AnalysisConfig;

#[derive(Debug, Clone, Copy)]
pub struct ReproduceOptions {
    pub heat_modes: usize,
    pub parabolic_modes: usize,
    pub seed: u64,
    /// Test hook: replaces the criterion exponent in every verdict.
    pub exponent: Option<ExponentRule>,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            heat_modes: 10_000,
            parabolic_modes: 60,
            seed: 0,
            exponent: None,
        }
    }
}

impl ReproduceOptions {
    fn verdict_options(&self) -> VerdictOptions {
        let mut o = VerdictOptions::default();
        if let Some(e) = self.exponent {
            o.exponent = e;
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}]: {} ({}; {:.2} s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub tool: ToolInfo,
    pub heat_modes: usize,
    pub parabolic_modes: usize,
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
    pub all_passed: bool,
}

type Check = (bool, String);

fn timed(id: u32, name: &str, limit: Option<f64>, f: impl FnOnce() -> Result<Check>) -> CriterionOutcome {
    let start = Instant::now();
    let outcome = f();
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match outcome {
        Ok(c) => c,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if seconds > limit {
            passed = false;
            detail = format!("{detail}; exceeded the {limit} s budget");
        }
    }
    CriterionOutcome {
        id,
        name: name.into(),
        passed,
        detail,
        seconds,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Heat grid: `p in {1.10, ..., 2.00}`, `alpha in {-0.5, ..., 0.75}`, `alpha < p - 1`,
/// plus the exact boundary points `p = 4/3 (alpha + 1)`.
pub fn heat_threshold(opts: &ReproduceOptions) -> Result<Check> {
    let sys = build_builtin(BuiltinSystem::HeatNeumann, opts.heat_modes)?;
    let prepared = PreparedSystem::new(&sys)?;
    let options = opts.verdict_options();
    let alphas: Vec<f64> = (0..6).map(|i| -0.5 + 0.25 * i as f64).collect();
    let mut cells: Vec<(f64, f64, bool)> = Vec::new();
    for &alpha in &alphas {
        for k in 0..19 {
            let p = (110 + 5 * k) as f64 / 100.0;
            if alpha < p - 1.0 {
                cells.push((p, alpha, false));
            }
        }
        let p = 4.0 / 3.0 * (alpha + 1.0);
        if alpha < p - 1.0 && (1.1..=2.0).contains(&p) {
            cells.push((p, alpha, true));
        }
    }
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for &(p, alpha, on_boundary) in &cells {
        let gap = p - 4.0 / 3.0 * (alpha + 1.0);
        let expected = if on_boundary || gap >= 0.02 {
            Classification::Admissible
        } else if gap <= -0.02 {
            Classification::NotAdmissible
        } else {
            continue;
        };
        checked += 1;
        let got = prepared.verdict(p, alpha, &options)?.classification;
        if got != expected {
            mismatches.push(format!("(p = {p}, alpha = {alpha}): {} vs {}", got.as_str(), expected.as_str()));
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{checked} cells match p >= 4/3 (alpha + 1)")
    } else {
        format!("{} of {checked} cells mismatch, first {}", mismatches.len(), mismatches[0])
    };
    Ok((mismatches.is_empty(), detail))
}

pub fn parabolic_threshold(opts: &ReproduceOptions) -> Result<Check> {
    let sys = build_builtin(BuiltinSystem::Parabolic2n, opts.parabolic_modes)?;
    let prepared = PreparedSystem::new(&sys)?;
    let options = opts.verdict_options();
    let mut failures = Vec::new();
    for (alpha, expected) in [
        (-2.0, Classification::Admissible),
        (-1.5, Classification::Admissible),
        (-1.0, Classification::Admissible),
        (-0.75, Classification::NotAdmissible),
        (-0.5, Classification::NotAdmissible),
        (0.0, Classification::NotAdmissible),
    ] {
        let got = prepared.verdict(2.0, alpha, &options)?.classification;
        if got != expected {
            failures.push(format!("alpha = {alpha}: {}", got.as_str()));
        }
    }
    let slope = prepared.verdict(2.0, -0.5, &options)?.slope;
    let slope_ok = slope.is_some_and(|s| (s - 0.5).abs() <= 0.1);
    if !slope_ok {
        failures.push(format!(
            "divergence slope at alpha = -0.5 is {} (inconclusive against 0.5 +- 0.1)",
            slope.map_or("undefined".into(), |s| format!("{s:.4}"))
        ));
    }
    let detail = if failures.is_empty() {
        format!("verdicts flip at alpha = -1; slope {:.4}", slope.unwrap_or(f64::NAN))
    } else {
        failures.join("; ")
    };
    Ok((failures.is_empty(), detail))
}

/// Brute force `max_k sum_{r_j <= r_k} |b_j|^q / r_k^beta`.
fn brute_force_constant(sys: &DiagonalSystem, beta: f64) -> f64 {
    let q = sys.state_exponent();
    let radii: Vec<f64> = sys.eigenvalues().iter().map(|l| -l.re).collect();
    let masses: Vec<f64> = sys.coefficients().iter().map(|b| b.norm().powf(q)).collect();
    let mut best: f64 = 0.0;
    for &r in &radii {
        let s: f64 = radii.iter().zip(&masses).filter(|(rj, _)| **rj <= r).map(|(_, m)| m).sum();
        best = best.max(s / r.powf(beta));
    }
    best
}

pub fn criterion_constants(opts: &ReproduceOptions) -> Result<Check> {
    let options = opts.verdict_options();
    let heat = build_builtin(BuiltinSystem::HeatNeumann, opts.heat_modes)?;
    let h = PreparedSystem::new(&heat)?.verdict(2.0, 0.0, &options)?;
    let para = build_builtin(BuiltinSystem::Parabolic2n, opts.parabolic_modes)?;
    let c = PreparedSystem::new(&para)?.verdict(2.0, -1.0, &options)?;
    let errors = [
        rel(h.criterion_constant, 1.0 / (PI * PI)),
        rel(h.criterion_constant, brute_force_constant(&heat, h.beta)),
        rel(c.criterion_constant, 1.0),
        rel(c.criterion_constant, brute_force_constant(&para, c.beta)),
    ];
    let worst = errors.iter().copied().fold(0.0, f64::max);
    Ok((worst <= 1e-10, format!("heat {:.12}, parabolic {:.12}, worst rel. err {worst:.2e}", h.criterion_constant, c.criterion_constant)))
}

pub fn laplace_closed_forms() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for beta in [-0.5, 0.0, 1.0] {
        for a in [0.0, 1.0] {
            let f = ExpPowerFunction::new(beta, a)?;
            for x in [0.5, 1.0, 8.0] {
                let z = Complex64::new(x, 0.0);
                let closed = gamma(beta + 1.0)? / (z + a).powf(beta + 1.0);
                let quad = laplace_at(&|t| f.eval(t), z, 1e-12)?;
                worst = worst.max((quad - closed).norm() / closed.norm());
            }
        }
    }
    let g = gamma(0.5)?;
    let dup = (g * g - PI).abs();
    Ok((worst <= 1e-8 && dup <= 1e-12, format!("worst rel. err {worst:.2e} on 18 points; |gamma(1/2)^2 - pi| = {dup:.1e}")))
}

pub fn zen_weights() -> Result<Check> {
    let hardy = Weight::zen(vec![RadialMeasure::hardy()])?;
    let dirichlet = Weight::zen(vec![RadialMeasure::hardy(), RadialMeasure::dirichlet_derivative()])?;
    let mut worst: f64 = 0.0;
    for j in -6..=6 {
        let t = 2f64.powi(j);
        worst = worst.max(rel(hardy.eval(t)?, 1.0));
        let lebesgue = integrate_halfline(|r| (-2.0 * r * t).exp() / PI, 1e-12)?.value;
        let d = dirichlet.eval(t)?;
        worst = worst.max(rel(d, 1.0 + t)).max(rel(d, 1.0 + t * t * 2.0 * PI * lebesgue));
        for alpha in [0.0, 1.0, 2.5] {
            let w = Weight::zen(vec![RadialMeasure::density(alpha, 1.0)?])?.eval(t)?;
            let closed = 2.0 * PI * gamma(alpha + 1.0)? / (2.0 * t).powf(alpha + 1.0);
            let quad = 2.0 * PI * integrate_halfline(|r| r.powf(alpha) * (-2.0 * r * t).exp(), 1e-12)?.value;
            worst = worst.max(rel(w, closed)).max(rel(quad, closed));
        }
    }
    Ok((worst <= 1e-8, format!("worst rel. err {worst:.2e} over t = 2^-6..2^6")))
}

fn random_system(rng: &mut ChaCha8Rng, q: f64) -> Result<DiagonalSystem> {
    let n = rng.random_range(3..=8);
    let eigenvalues = (0..n)
        .map(|_| Complex64::new(-rng.random_range(0.1..10.0), rng.random_range(-5.0..5.0)))
        .collect();
    let coefficients = (0..n)
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    DiagonalSystem::new(eigenvalues, coefficients, q, None)
}

pub fn infinite_time_identity(opts: &ReproduceOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x6);
    let mut systems = vec![
        build_builtin(BuiltinSystem::HeatNeumann, 8)?,
        build_builtin(BuiltinSystem::Parabolic2n, 8)?,
    ];
    for q in [1.5, 2.0, 3.0] {
        systems.push(random_system(&mut rng, q)?);
    }
    let inputs: Vec<ExpPowerFunction> = (0..50)
        .map(|_| ExpPowerFunction::new(rng.random_range(-0.4..2.0), rng.random_range(0.0..2.0)))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for sys in &systems {
        let mu = sys.measure()?;
        for f in &inputs {
            let (_, state) = infinite_time_map(sys, &Signal::ExpPower(*f))?;
            let g = *f;
            let embedded = laplace_lq_norm(&mu, &Signal::function(move |t| g.eval(t)), sys.state_exponent(), 1e-12)?;
            worst = worst.max(rel(state, embedded));
        }
    }
    Ok((worst <= 1e-9, format!("worst rel. err {worst:.2e} over 50 inputs x 5 systems")))
}

fn sandwich(prob: &EmbeddingProblem, theta: f64) -> Result<(f64, f64)> {
    let lower = embedding_lower_bound(prob, theta, None)?.value;
    let upper = sufficient_strip_check(prob, &default_strip_partition(prob.measure())?)?.norm_bound;
    Ok((lower, upper))
}

pub fn sandwich_property(opts: &ReproduceOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7);
    let mut cases = vec![
        (embedding_problem(&build_builtin(BuiltinSystem::HeatNeumann, 200)?, 2.0, 0.0)?, FRAC_PI_4),
        (embedding_problem(&build_builtin(BuiltinSystem::HeatNeumann, 200)?, 1.5, 0.25)?, FRAC_PI_4),
        (embedding_problem(&build_builtin(BuiltinSystem::Parabolic2n, opts.parabolic_modes.min(30))?, 2.0, -1.0)?, FRAC_PI_4),
    ];
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let pairs: Vec<(Complex64, f64)> = (0..n)
            .map(|_| {
                let re: f64 = 2f64.powf(rng.random_range(-4.0..6.0));
                let im = re * rng.random_range(-0.9..0.9);
                (Complex64::new(re, im), rng.random_range(0.01..3.0))
            })
            .collect();
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let q = [1.0, 2.0, 4.0][rng.random_range(0..3)];
        let alpha = rng.random_range(-1.0..(p - 1.0) * 0.9);
        let prob = EmbeddingProblem::new(p, q, Weight::power(alpha), PlaneMeasure::from_pairs(&pairs)?)?;
        cases.push((prob, FRAC_PI_4));
    }
    let mut violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for (prob, theta) in &cases {
        let (lower, upper) = sandwich(prob, *theta)?;
        worst_gap = worst_gap.max(lower / upper - 1.0);
        if lower > upper * (1.0 + 1e-9) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violation(s) in {} cases; max lower/upper - 1 = {worst_gap:.3e}", cases.len())))
}

pub fn lemma_estimate(opts: &ReproduceOptions) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x8);
    let partition = Partition::default_geometric();
    let mut violations = Vec::new();
    for case in 0..30 {
        let f = ExpPowerFunction::new(rng.random_range(-0.5..2.0), rng.random_range(0.1..4.0))?;
        let alpha = rng.random_range(-1.0..0.0);
        let p = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let x = 2f64.powi(rng.random_range(-4..=4));
        let check = verify_estimate(&|t| f.eval(t), &Weight::power(alpha), p, x, &partition)?;
        if !check.holds {
            violations.push(format!("case {case}: lhs {} > rhs {}", check.lhs, check.rhs));
        }
    }
    let detail = match violations.first() {
        None => "30 randomized cases hold".to_string(),
        Some(v) => format!("{} violation(s), first {v}", violations.len()),
    };
    Ok((violations.is_empty(), detail))
}

pub fn kernel_tests() -> Result<Check> {
    let heat = build_builtin(BuiltinSystem::HeatNeumann, 200)?;
    let norm = prop_operator_norm(&heat, &KernelSpec::Hardy, Some(32))?.norm;
    let m = DMatrix::from_fn(32, 32, |i, j| {
        let (k, l) = ((i + 1) as f64, (j + 1) as f64);
        1.0 / (2.0 * PI * (k * k + l * l) * PI * PI)
    });
    let oracle = SymmetricEigen::new(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let norm_err = rel(norm, oracle);
    let sums = double_sum_condition(&heat, &KernelSpec::Hardy, None)?;
    let mut worst: f64 = 0.0;
    for &(n, partial) in &sums.partial_sums {
        let mut direct = 0.0;
        for k in 1..=n {
            for l in 1..=n {
                let v = 1.0 / (2.0 * PI * ((k * k + l * l) as f64) * PI * PI);
                direct += v * v;
            }
        }
        worst = worst.max(rel(partial, direct));
    }
    Ok((
        norm_err <= 1e-6 && worst <= 1e-10,
        format!("operator norm rel. err {norm_err:.2e}; double-sum rel. err {worst:.2e}"),
    ))
}

/// Config used by the determinism check.
pub fn determinism_config() -> AnalysisConfig {
    AnalysisConfig::from_json(
        r#"{
            "problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 2000}}},
            "exponents": {"p": 2.0, "alpha": 0.0},
            "operations": ["admissibility", "sectorial", "strip", "lower_bound", "double_sum", "operator_norm"],
            "kernel": {"name": "hardy", "truncation": 64}
        }"#,
    )
    .expect("built-in config parses")
}

pub fn determinism() -> Result<Check> {
    let config = determinism_config();
    let run = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::InvalidInput(format!("thread pool: {e}")))?;
        let report = pool.install(|| run_analysis(&config)).map_err(|f| f.error)?;
        Ok(serde_json::to_string(&report.without_timing()).expect("serializable"))
    };
    let a = run(1)?;
    let b = run(1)?;
    let c = run(8)?;
    let reparsed: AnalysisConfig = serde_json::from_str(
        &serde_json::to_string(&config).expect("serializable"),
    )
    .map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
    let round_trip = reparsed == config;
    Ok((
        a == b && a == c && round_trip,
        format!("repeat identical: {}, 1 vs 8 threads identical: {}, config round-trip: {round_trip}", a == b, a == c),
    ))
}

pub fn run_reproduce(opts: &ReproduceOptions) -> ReproduceReport {
    let criteria = vec![
        timed(1, "heat threshold", Some(60.0), || heat_threshold(opts)),
        timed(2, "parabolic threshold", Some(5.0), || parabolic_threshold(opts)),
        timed(3, "criterion constants", None, || criterion_constants(opts)),
        timed(4, "laplace closed forms", None, laplace_closed_forms),
        timed(5, "zen weights", None, zen_weights),
        timed(6, "infinite-time identity", None, || infinite_time_identity(opts)),
        timed(7, "sandwich", None, || sandwich_property(opts)),
        timed(8, "maximal estimate", None, || lemma_estimate(opts)),
        timed(9, "kernel tests", None, kernel_tests),
        timed(10, "determinism", None, determinism),
    ];
    let all_passed = criteria.iter().all(|c| c.passed);
    ReproduceReport {
        tool: ToolInfo::current(),
        heat_modes: opts.heat_modes,
        parabolic_modes: opts.parabolic_modes,
        seed: opts.seed,
        criteria,
        all_passed,
    }
}
