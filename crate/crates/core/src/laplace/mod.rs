//! Gamma function, half-line quadrature and Laplace transforms.

mod quadrature;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use quadrature::{
    integrate_adaptive, integrate_from_zero, integrate_halfline, integrate_interval, integrate_to_infinity,
    Quadrature, QuadratureError, DEFAULT_TOL, OVERFLOW_GUARD,
};

/// Euler's gamma function for positive arguments.
///
/// Integer arguments up to 171 are evaluated as exact factorial products.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("gamma requires a positive finite argument, got {x}")));
    }
    if x.fract() == 0.0 && x <= 171.0 {
        let n = x as u32;
        return Ok((2..n).fold(1.0, |acc, k| acc * k as f64));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `f(t) = t^beta e^{-rate t}` on `(0, infinity)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpPowerFunction {
    pub beta: f64,
    pub rate: f64,
}

impl ExpPowerFunction {
    pub fn new(beta: f64, rate: f64) -> Result<Self> {
        if !(beta > -1.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("power exponent must exceed -1, got {beta}")));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidInput(format!("decay rate must be nonnegative, got {rate}")));
        }
        Ok(Self { beta, rate })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        t.powf(self.beta) * (-self.rate * t).exp()
    }

    /// Closed form `Gamma(beta + 1) / (z + rate)^(beta + 1)`, principal branch.
    pub fn transform(&self, z: Complex64) -> Result<Complex64> {
        let shifted = z + self.rate;
        if !(shifted.re > 0.0) {
            return Err(Error::Precondition(format!(
                "Laplace transform of t^{} e^(-{} t) needs Re z > -{}, got {z}",
                self.beta, self.rate, self.rate
            )));
        }
        Ok(gamma(self.beta + 1.0)? * shifted.powf(-(self.beta + 1.0)))
    }

    /// Derivative of the transform: `-Gamma(beta + 2) / (z + rate)^(beta + 2)`.
    pub fn transform_derivative(&self, z: Complex64) -> Result<Complex64> {
        let shifted = z + self.rate;
        if !(shifted.re > 0.0) {
            return Err(Error::Precondition(format!("derivative needs Re z > -{}, got {z}", self.rate)));
        }
        Ok(-gamma(self.beta + 2.0)? * shifted.powf(-(self.beta + 2.0)))
    }
}

/// An input signal on `(0, infinity)`.
///
/// Exponential-power signals and finite combinations of them have closed-form
/// Laplace transforms; arbitrary functions go through quadrature.
#[derive(Clone)]
pub enum Signal {
    ExpPower(ExpPowerFunction),
    Combination(Vec<(f64, ExpPowerFunction)>),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::ExpPower(g) => f.debug_tuple("ExpPower").field(g).finish(),
            Signal::Combination(terms) => f.debug_tuple("Combination").field(terms).finish(),
            Signal::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Signal {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Signal::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::ExpPower(g) => g.eval(t),
            Signal::Combination(terms) => terms.iter().map(|(c, g)| c * g.eval(t)).sum(),
            Signal::Function(f) => f(t),
        }
    }

    /// Laplace transform at `z`, closed form where available.
    pub fn laplace(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        match self {
            Signal::ExpPower(g) => g.transform(z),
            Signal::Combination(terms) => terms
                .iter()
                .try_fold(Complex64::new(0.0, 0.0), |acc, (c, g)| Ok(acc + *c * g.transform(z)?)),
            Signal::Function(f) => laplace_at(f.as_ref(), z, tol),
        }
    }
}

/// Laplace transform of `f` at `z` (`Re z > 0`) by half-line quadrature of the
/// real and imaginary parts.
pub fn laplace_at(f: &dyn Fn(f64) -> f64, z: Complex64, tol: f64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::Precondition(format!("Laplace transform evaluated off the half-plane at {z}")));
    }
    let re = integrate_halfline(|t| f(t) * (-z.re * t).exp() * (z.im * t).cos(), tol)?;
    let im = if z.im == 0.0 {
        0.0
    } else {
        -integrate_halfline(|t| f(t) * (-z.re * t).exp() * (z.im * t).sin(), tol)?.value
    };
    Ok(Complex64::new(re.value, im))
}
