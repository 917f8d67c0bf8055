//! Interpreter-free layer under the Python bindings. Results come back as
//! JSON values so the wrappers only convert them to dicts.

use std::fmt;

use carleson::cli::{run_analysis, run_reproduce, AnalysisConfig, ReproduceOptions};
use carleson::embedding::{sectorial_criterion, EmbeddingProblem};
use carleson::kernels::{double_sum_condition, prop_operator_norm, KernelSpec};
use carleson::laplace::{self, ExpPowerFunction, Signal};
use carleson::measures::PlaneMeasure;
use carleson::systems::{self, builtin_system, DiagonalSystem};
use carleson::weights::{exp_power_lpw_norm, Weight};
use carleson::Error;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum ApiError {
    /// Bad arguments or config; `ValueError` on the Python side.
    Input(String),
    /// Quadrature, power iteration or divergence; `ArithmeticError`.
    Numerical(String),
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApiError::Input(m) | ApiError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            ApiError::Numerical(e.to_string())
        } else {
            ApiError::Input(e.to_string())
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

fn json<T: Serialize>(v: &T) -> ApiResult<Value> {
    serde_json::to_value(v).map_err(|e| ApiError::Input(e.to_string()))
}

pub fn system(eigenvalues: Vec<Complex64>, coefficients: Vec<Complex64>, state_exponent: f64) -> ApiResult<DiagonalSystem> {
    Ok(DiagonalSystem::new(eigenvalues, coefficients, state_exponent, None)?)
}

pub fn builtin(name: &str, modes: usize) -> ApiResult<DiagonalSystem> {
    Ok(builtin_system(name, modes)?)
}

pub fn verdict(sys: &DiagonalSystem, p: f64, alpha: f64) -> ApiResult<Value> {
    json(&systems::admissibility_verdict(sys, p, alpha)?)
}

pub fn threshold_curve(sys: &DiagonalSystem, p_grid: &[f64], alpha_grid: &[f64]) -> ApiResult<Value> {
    json(&systems::threshold_curve(sys, p_grid, alpha_grid)?)
}

pub fn empirical(sys: &DiagonalSystem, p: f64, alpha: f64) -> ApiResult<Value> {
    json(&systems::empirical_admissibility(sys, p, alpha, None)?)
}

/// Sectorial criterion for the measure induced by the system.
pub fn system_sectorial(sys: &DiagonalSystem, p: f64, alpha: f64) -> ApiResult<Value> {
    let prob = systems::embedding_problem(sys, p, alpha)?;
    json(&sectorial_criterion(&prob, sys.sector_angle(), None)?)
}

/// Components of `x = int_0^inf T_t B u dt` for `u(t) = t^beta e^{-rate t}`, and its norm.
pub fn infinite_time_map(sys: &DiagonalSystem, beta: f64, rate: f64) -> ApiResult<(Vec<Complex64>, f64)> {
    let u = Signal::ExpPower(ExpPowerFunction::new(beta, rate)?);
    Ok(systems::infinite_time_map(sys, &u)?)
}

pub fn kernel(name: &str) -> ApiResult<KernelSpec> {
    Ok(name.parse()?)
}

pub fn double_sum(sys: &DiagonalSystem, kernel_name: &str, truncation: Option<usize>) -> ApiResult<Value> {
    json(&double_sum_condition(sys, &kernel(kernel_name)?, truncation)?)
}

pub fn operator_norm(sys: &DiagonalSystem, kernel_name: &str, truncation: Option<usize>) -> ApiResult<Value> {
    json(&prop_operator_norm(sys, &kernel(kernel_name)?, truncation)?)
}

pub fn gamma(x: f64) -> ApiResult<f64> {
    Ok(laplace::gamma(x)?)
}

/// Closed-form Laplace transform of `t^beta e^{-rate t}` at `z`.
pub fn laplace_exp_power(beta: f64, rate: f64, z: Complex64) -> ApiResult<Complex64> {
    Ok(ExpPowerFunction::new(beta, rate)?.transform(z)?)
}

/// `||t^beta e^{-rate t}||` in `L^p(t^alpha dt)`.
pub fn exp_power_norm(beta: f64, rate: f64, p: f64, alpha: f64) -> ApiResult<f64> {
    Ok(exp_power_lpw_norm(&ExpPowerFunction::new(beta, rate)?, p, alpha)?)
}

/// Sectorial criterion for an atomic measure `sum m_k delta_{z_k}` and the power weight `t^alpha`.
pub fn sectorial(atoms: &[(Complex64, f64)], p: f64, q: f64, alpha: f64, theta: f64) -> ApiResult<Value> {
    let prob = EmbeddingProblem::new(p, q, Weight::power(alpha), PlaneMeasure::from_pairs(atoms)?)?;
    json(&sectorial_criterion(&prob, theta, None)?)
}

/// Runs an analysis config given as JSON text and returns the report.
pub fn analyze(config_json: &str) -> ApiResult<Value> {
    let config = AnalysisConfig::from_json(config_json)?;
    match run_analysis(&config) {
        Ok(report) => json(&report),
        Err(failure) if failure.exit_code() == carleson::cli::EXIT_NUMERICAL => Err(ApiError::Numerical(failure.to_string())),
        Err(failure) => Err(ApiError::Input(failure.to_string())),
    }
}

pub fn reproduce(heat_modes: usize, parabolic_modes: usize, seed: u64) -> ApiResult<Value> {
    if heat_modes == 0 || parabolic_modes == 0 {
        return Err(ApiError::Input("mode counts must be positive".into()));
    }
    let opts = ReproduceOptions {
        heat_modes,
        parabolic_modes,
        seed,
        ..ReproduceOptions::default()
    };
    json(&run_reproduce(&opts))
}
