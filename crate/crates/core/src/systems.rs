//! Diagonal semigroup systems `x_k' = lambda_k x_k + b_k u`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    classify_trend, dyadic_levels, EmbeddingProblem, LevelRow, SectorialResult, ThresholdProfile, TrendClass,
    TrendThresholds,
};
use crate::error::{Error, Result};
use crate::laplace::{integrate_interval, ExpPowerFunction, Signal, DEFAULT_TOL};
use crate::measures::{system_measure, PlaneMeasure};
use crate::weights::{exp_power_lpw_norm, lpw_norm, Weight};

/// Closed-form rule for the eigenvalues beyond the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    /// `lambda_n = -scale n^2`.
    Quadratic { scale: f64 },
    /// `lambda_n = -ratio^n`.
    Geometric { ratio: f64 },
}

/// `b_n = scale ratio^n / n^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRule {
    pub scale: f64,
    pub ratio: f64,
    pub exponent: f64,
}

/// Symbolic description of the modes `n > N` of a truncated system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailDescriptor {
    pub lambda_rule: LambdaRule,
    pub b_rule: CoefficientRule,
}

impl TailDescriptor {
    pub fn validate(&self) -> Result<()> {
        let ok = match self.lambda_rule {
            LambdaRule::Quadratic { scale } => scale > 0.0 && scale.is_finite(),
            LambdaRule::Geometric { ratio } => ratio > 1.0 && ratio.is_finite(),
        };
        let b = self.b_rule;
        if !ok || !(b.scale > 0.0) || !(b.ratio > 0.0) || !b.exponent.is_finite() || !b.ratio.is_finite() {
            return Err(Error::InvalidInput(format!("malformed tail descriptor {self:?}")));
        }
        Ok(())
    }

    pub fn eigenvalue(&self, n: u32) -> f64 {
        match self.lambda_rule {
            LambdaRule::Quadratic { scale } => -scale * (n as f64).powi(2),
            LambdaRule::Geometric { ratio } => -ratio.powi(n as i32),
        }
    }

    pub fn coefficient(&self, n: u32) -> f64 {
        let b = self.b_rule;
        b.scale * b.ratio.powi(n as i32) / (n as f64).powf(b.exponent)
    }

    /// Whether `sup_r S(r) / r^beta` stays finite over the full infinite system,
    /// where `S(r)` sums `|b_n|^q` over `Re(-lambda_n) <= r`.
    pub fn bounded(&self, q: f64, beta: f64) -> bool {
        const TIE: f64 = 1e-9;
        let b = self.b_rule;
        let qs = q * b.exponent;
        match self.lambda_rule {
            // r = c n^2 and S(r) grows like a (weighted) power series in n.
            LambdaRule::Quadratic { .. } => {
                if b.ratio > 1.0 {
                    false
                } else if b.ratio < 1.0 || qs >= 1.0 {
                    true
                } else {
                    1.0 - qs <= 2.0 * beta + TIE
                }
            }
            // r = rho^n, S(r) ~ g^n n^{-qs} with g = ratio^q.
            LambdaRule::Geometric { ratio } => {
                let g = b.ratio.powf(q);
                if g <= 1.0 {
                    return true;
                }
                let growth = g.ln() - beta * ratio.ln();
                growth < -TIE || (growth.abs() <= TIE && qs >= 0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuiltinSystem {
    #[serde(rename = "heat-neumann")]
    HeatNeumann,
    #[serde(rename = "parabolic-2n")]
    Parabolic2n,
}

impl BuiltinSystem {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinSystem::HeatNeumann => "heat-neumann",
            BuiltinSystem::Parabolic2n => "parabolic-2n",
        }
    }

    pub fn tail(&self) -> TailDescriptor {
        match self {
            BuiltinSystem::HeatNeumann => TailDescriptor {
                lambda_rule: LambdaRule::Quadratic { scale: PI * PI },
                b_rule: CoefficientRule {
                    scale: 1.0,
                    ratio: 1.0,
                    exponent: 0.0,
                },
            },
            BuiltinSystem::Parabolic2n => TailDescriptor {
                lambda_rule: LambdaRule::Geometric { ratio: 2.0 },
                b_rule: CoefficientRule {
                    scale: 1.0,
                    ratio: 2.0,
                    exponent: 1.0,
                },
            },
        }
    }
}

impl FromStr for BuiltinSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat-neumann" => Ok(BuiltinSystem::HeatNeumann),
            "parabolic-2n" => Ok(BuiltinSystem::Parabolic2n),
            other => Err(Error::InvalidInput(format!("unknown built-in system '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSystem {
    eigenvalues: Vec<Complex64>,
    coefficients: Vec<Complex64>,
    state_exponent: f64,
    #[serde(default)]
    tail: Option<TailDescriptor>,
}

impl DiagonalSystem {
    pub fn new(
        eigenvalues: Vec<Complex64>,
        coefficients: Vec<Complex64>,
        state_exponent: f64,
        tail: Option<TailDescriptor>,
    ) -> Result<Self> {
        let sys = Self {
            eigenvalues,
            coefficients,
            state_exponent,
            tail,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eigenvalues.len() != self.coefficients.len() {
            return Err(Error::InvalidInput(format!(
                "{} eigenvalues but {} coefficients",
                self.eigenvalues.len(),
                self.coefficients.len()
            )));
        }
        if let Some(l) = self.eigenvalues.iter().find(|l| !(l.re < 0.0) || !l.im.is_finite()) {
            return Err(Error::InvalidInput(format!("eigenvalue {l} is not in the open left half-plane")));
        }
        if let Some(b) = self.coefficients.iter().find(|b| !b.re.is_finite() || !b.im.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient {b} is not finite")));
        }
        if !(self.state_exponent >= 1.0) || !self.state_exponent.is_finite() {
            return Err(Error::InvalidInput(format!("state exponent must lie in [1, inf), got {}", self.state_exponent)));
        }
        if let Some(t) = &self.tail {
            t.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn state_exponent(&self) -> f64 {
        self.state_exponent
    }

    pub fn tail(&self) -> Option<&TailDescriptor> {
        self.tail.as_ref()
    }

    pub fn without_tail(mut self) -> Self {
        self.tail = None;
        self
    }

    /// `sup_k |Im(-lambda_k)| / Re(-lambda_k)`.
    pub fn sector_tangent(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.im.abs() / -l.re).fold(0.0, f64::max)
    }

    /// An angle `theta < pi/2` whose open sector strictly contains every `-lambda_k`.
    pub fn sector_angle(&self) -> f64 {
        let t = self.sector_tangent();
        if t == 0.0 {
            FRAC_PI_4
        } else {
            0.5 * (t.atan() + FRAC_PI_2)
        }
    }

    pub fn measure(&self) -> Result<PlaneMeasure> {
        system_measure(self)
    }
}

pub fn builtin_system(name: &str, n: usize) -> Result<DiagonalSystem> {
    build_builtin(name.parse()?, n)
}

pub fn build_builtin(which: BuiltinSystem, n: usize) -> Result<DiagonalSystem> {
    if n == 0 {
        return Err(Error::InvalidInput("truncation level must be at least 1".into()));
    }
    let tail = which.tail();
    let (eigenvalues, coefficients) = (1..=n as u32)
        .map(|k| match which {
            // Exact integer arithmetic for the heat modes.
            BuiltinSystem::HeatNeumann => (Complex64::new(-((k as f64) * (k as f64)) * PI * PI, 0.0), Complex64::new(1.0, 0.0)),
            BuiltinSystem::Parabolic2n => {
                (Complex64::new(tail.eigenvalue(k), 0.0), Complex64::new(tail.coefficient(k), 0.0))
            }
        })
        .unzip();
    DiagonalSystem::new(eigenvalues, coefficients, 2.0, Some(tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Admissible,
    NotAdmissible,
    Inconclusive,
    NotApplicable,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Admissible => "admissible",
            Classification::NotAdmissible => "not_admissible",
            Classification::Inconclusive => "inconclusive",
            Classification::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictMethod {
    AnalyticTail,
    Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub classification: Classification,
    pub method: VerdictMethod,
    pub beta: f64,
    /// `sup S(r) / r^beta` over the thresholds of the truncated system.
    pub criterion_constant: f64,
    pub attained_at: Option<f64>,
    pub slope: Option<f64>,
    pub last_slope: Option<f64>,
    pub theta: f64,
    pub evidence: Vec<LevelRow>,
    pub warnings: Vec<String>,
}

/// `beta` as a function of `(p, q, alpha)`.
pub type ExponentRule = fn(f64, f64, f64) -> f64;

fn standard_exponent(p: f64, q: f64, alpha: f64) -> f64 {
    crate::embedding::CriterionExponent::new(p, q, alpha).beta
}

#[derive(Debug, Clone, Copy)]
pub struct VerdictOptions {
    pub thresholds: TrendThresholds,
    /// Ignore tail descriptors and classify from the truncated data alone.
    pub trend_only: bool,
    pub exponent: ExponentRule,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            thresholds: TrendThresholds::default(),
            trend_only: false,
            exponent: standard_exponent,
        }
    }
}

/// Threshold data of a system, reusable across `(p, alpha)` cells.
#[derive(Debug, Clone)]
pub struct PreparedSystem {
    profile: ThresholdProfile,
    q: f64,
    theta: f64,
    tail: Option<TailDescriptor>,
}

impl PreparedSystem {
    pub fn new(sys: &DiagonalSystem) -> Result<Self> {
        let measure = sys.measure()?;
        let atoms = measure.atoms().unwrap_or_default();
        Ok(Self {
            profile: ThresholdProfile::from_atoms(atoms),
            q: sys.state_exponent(),
            theta: sys.sector_angle(),
            tail: sys.tail,
        })
    }

    pub fn verdict(&self, p: f64, alpha: f64, options: &VerdictOptions) -> Result<Verdict> {
        crate::embedding::check_sectorial_exponents(p, self.q, alpha)?;
        let beta = (options.exponent)(p, self.q, alpha);
        let levels = dyadic_levels(self.profile.radii().iter().copied());
        let SectorialResult {
            sup,
            attained_at,
            slope,
            last_slope,
            rows,
            ..
        } = crate::embedding::sectorial::evaluate_profile(&self.profile, beta, self.theta, levels);
        let (classification, method, mut warnings) = match self.tail.filter(|_| !options.trend_only) {
            Some(tail) => {
                let c = if tail.bounded(self.q, beta) {
                    Classification::Admissible
                } else {
                    Classification::NotAdmissible
                };
                (c, VerdictMethod::AnalyticTail, Vec::new())
            }
            None => {
                let c = match classify_trend(sup, slope, last_slope, &options.thresholds) {
                    TrendClass::Bounded => Classification::Admissible,
                    TrendClass::Unbounded => Classification::NotAdmissible,
                    TrendClass::Inconclusive => Classification::Inconclusive,
                };
                (c, VerdictMethod::Trend, Vec::new())
            }
        };
        if classification == Classification::Inconclusive {
            warnings.push(format!(
                "slope {} over the top levels is between the bounded and unbounded thresholds",
                slope.map_or("n/a".to_string(), |s| s.to_string())
            ));
        }
        Ok(Verdict {
            classification,
            method,
            beta,
            criterion_constant: sup,
            attained_at,
            slope,
            last_slope,
            theta: self.theta,
            evidence: rows,
            warnings,
        })
    }
}

/// Weighted `L^p_{t^alpha}` admissibility of the control operator.
pub fn admissibility_verdict(sys: &DiagonalSystem, p: f64, alpha: f64) -> Result<Verdict> {
    admissibility_verdict_with(sys, p, alpha, &VerdictOptions::default())
}

pub fn admissibility_verdict_with(sys: &DiagonalSystem, p: f64, alpha: f64, options: &VerdictOptions) -> Result<Verdict> {
    PreparedSystem::new(sys)?.verdict(p, alpha, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCell {
    pub p: f64,
    pub alpha: f64,
    pub classification: Classification,
    pub verdict: Option<Verdict>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub alpha: f64,
    /// Smallest admissible `p` on the grid.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    /// Row-major: all `p` for the first `alpha`, then the next `alpha`.
    pub cells: Vec<ThresholdCell>,
    pub boundary: Vec<BoundaryPoint>,
}

pub fn threshold_curve(sys: &DiagonalSystem, p_grid: &[f64], alpha_grid: &[f64]) -> Result<ThresholdCurve> {
    threshold_curve_with(sys, p_grid, alpha_grid, &VerdictOptions::default())
}

pub fn threshold_curve_with(
    sys: &DiagonalSystem,
    p_grid: &[f64],
    alpha_grid: &[f64],
    options: &VerdictOptions,
) -> Result<ThresholdCurve> {
    let prepared = PreparedSystem::new(sys)?;
    let pairs: Vec<(f64, f64)> = alpha_grid.iter().flat_map(|&a| p_grid.iter().map(move |&p| (p, a))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(p, alpha)| match prepared.verdict(p, alpha, options) {
            Ok(v) => Ok(ThresholdCell {
                p,
                alpha,
                classification: v.classification,
                verdict: Some(v),
                note: None,
            }),
            Err(Error::Precondition(msg)) => Ok(ThresholdCell {
                p,
                alpha,
                classification: Classification::NotApplicable,
                verdict: None,
                note: Some(msg),
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary = alpha_grid
        .iter()
        .map(|&alpha| BoundaryPoint {
            alpha,
            p: cells
                .iter()
                .filter(|c| c.alpha == alpha && c.classification == Classification::Admissible)
                .map(|c| c.p)
                .min_by(f64::total_cmp),
        })
        .collect();
    Ok(ThresholdCurve { cells, boundary })
}

/// `x(tau) = T_tau x0 + int_0^tau T_{tau - t} B u(t) dt`, componentwise.
pub fn mild_state(sys: &DiagonalSystem, u: &(dyn Fn(f64) -> f64 + Sync), tau: f64, x0: &[Complex64]) -> Result<Vec<Complex64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("final time must be positive, got {tau}")));
    }
    if x0.len() != sys.len() {
        return Err(Error::InvalidInput(format!("initial state has {} components, system has {}", x0.len(), sys.len())));
    }
    sys.eigenvalues
        .par_iter()
        .zip(sys.coefficients.par_iter())
        .zip(x0.par_iter())
        .map(|((&lambda, &b), &x)| {
            let kernel = |t: f64| (lambda * (tau - t)).exp();
            let re = integrate_interval(|t| kernel(t).re * u(t), 0.0, tau, DEFAULT_TOL)?;
            let im = if lambda.im == 0.0 {
                0.0
            } else {
                integrate_interval(|t| kernel(t).im * u(t), 0.0, tau, DEFAULT_TOL)?.value
            };
            Ok((lambda * tau).exp() * x + b * Complex64::new(re.value, im))
        })
        .collect()
}

/// `int_0^inf T_t B u(t) dt = (b_k L u(-lambda_k))_k` and its `l^q` norm.
pub fn infinite_time_map(sys: &DiagonalSystem, u: &Signal) -> Result<(Vec<Complex64>, f64)> {
    infinite_time_map_with_tol(sys, u, DEFAULT_TOL)
}

pub fn infinite_time_map_with_tol(sys: &DiagonalSystem, u: &Signal, tol: f64) -> Result<(Vec<Complex64>, f64)> {
    let state = sys
        .eigenvalues
        .par_iter()
        .zip(sys.coefficients.par_iter())
        .map(|(&lambda, &b)| {
            if b == Complex64::new(0.0, 0.0) {
                return Ok(b);
            }
            Ok(b * u.laplace(-lambda, tol)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let q = sys.state_exponent;
    let norm = state.iter().map(|x| x.norm().powf(q)).sum::<f64>().powf(1.0 / q);
    Ok((state, norm))
}

/// `||u||_{L^p(t^alpha)}`, in closed form for exponential-power inputs.
pub fn input_norm(u: &Signal, p: f64, alpha: f64) -> Result<f64> {
    match u {
        Signal::ExpPower(f) => exp_power_lpw_norm(f, p, alpha),
        _ => Ok(lpw_norm(&|t| u.eval(t), p, &Weight::power(alpha))?.value),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRow {
    pub index: usize,
    pub state_norm: f64,
    pub input_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBound {
    pub value: f64,
    pub rows: Vec<EmpiricalRow>,
    /// Inputs that were skipped, with the reason.
    pub skipped: Vec<(usize, String)>,
}

/// Inputs `t^{-alpha/(p-1)} e^{-a t}` with `a = 2^j` across the eigenvalue scale.
pub fn default_input_family(sys: &DiagonalSystem, p: f64, alpha: f64) -> Result<Vec<Signal>> {
    let levels = dyadic_levels(sys.eigenvalues.iter().map(|l| -l.re));
    levels
        .map(|j| Ok(Signal::ExpPower(ExpPowerFunction::new(-alpha / (p - 1.0), 2f64.powi(j))?)))
        .collect()
}

/// `sup_u ||int T_t B u||_{l^q} / ||u||_{L^p_{t^alpha}}` over an input family.
pub fn empirical_admissibility(
    sys: &DiagonalSystem,
    p: f64,
    alpha: f64,
    family: Option<&[Signal]>,
) -> Result<EmpiricalBound> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("p must lie in (1, inf), got {p}")));
    }
    let default;
    let family = match family {
        Some(f) => f,
        None => {
            default = default_input_family(sys, p, alpha)?;
            &default
        }
    };
    let outcomes: Vec<Result<EmpiricalRow>> = family
        .par_iter()
        .enumerate()
        .map(|(index, u)| {
            let input_norm = input_norm(u, p, alpha)?;
            let (_, state_norm) = infinite_time_map(sys, u)?;
            Ok(EmpiricalRow {
                index,
                state_norm,
                input_norm,
                ratio: if input_norm > 0.0 { state_norm / input_norm } else { 0.0 },
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => skipped.push((index, e.to_string())),
        }
    }
    let value = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(EmpiricalBound { value, rows, skipped })
}

/// The embedding problem `L^p_{t^alpha} -> L^q(mu_sys)` of a system.
pub fn embedding_problem(sys: &DiagonalSystem, p: f64, alpha: f64) -> Result<EmbeddingProblem> {
    EmbeddingProblem::new(p, sys.state_exponent(), Weight::power(alpha), sys.measure()?)
}
