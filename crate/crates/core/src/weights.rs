//! Weights on `(0, infinity)` and weighted `L^p` norms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{self, gamma, ExpPowerFunction, DEFAULT_TOL};
use crate::measures::{PowerDensity, RadialMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Weight {
    /// `t^alpha`.
    Power { alpha: f64 },
    /// `2 pi sum_n t^{2n} int e^{-2rt} d nu_n(r)`.
    Zen { components: Vec<RadialMeasure> },
    /// Tabulated values, interpolated linearly in `(log t, log w)` and held
    /// constant beyond the end knots.
    Table { knots: Vec<f64>, values: Vec<f64> },
    /// `base(t)^exponent`.
    Powered { base: Box<Weight>, exponent: f64 },
}

impl Weight {
    pub fn power(alpha: f64) -> Self {
        Weight::Power { alpha }
    }

    pub fn unweighted() -> Self {
        Weight::Power { alpha: 0.0 }
    }

    pub fn zen(components: Vec<RadialMeasure>) -> Result<Self> {
        let w = Weight::Zen { components };
        w.validate()?;
        Ok(w)
    }

    pub fn table(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let w = Weight::Table { knots, values };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Weight::Power { alpha } if !alpha.is_finite() => {
                Err(Error::InvalidInput(format!("power weight exponent must be finite, got {alpha}")))
            }
            Weight::Power { .. } => Ok(()),
            Weight::Zen { components } => {
                if components.iter().all(RadialMeasure::is_zero) {
                    return Err(Error::InvalidInput("Zen weight needs at least one nonzero component".into()));
                }
                components.iter().try_for_each(RadialMeasure::validate)
            }
            Weight::Table { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::InvalidInput("table weight needs matching, nonempty knots and values".into()));
                }
                if knots[0] <= 0.0 || knots.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidInput("table knots must be positive and strictly increasing".into()));
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidInput("table weight values must be positive".into()));
                }
                Ok(())
            }
            Weight::Powered { base, exponent } => {
                if !exponent.is_finite() {
                    return Err(Error::InvalidInput(format!("weight exponent must be finite, got {exponent}")));
                }
                base.validate()
            }
        }
    }

    /// The exponent of a pure power weight.
    pub fn power_alpha(&self) -> Option<f64> {
        match self {
            Weight::Power { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("weights are evaluated at t > 0, got {t}")));
        }
        let v = match self {
            Weight::Power { alpha } => t.powf(*alpha),
            Weight::Zen { components } => {
                let mut total = 0.0;
                for (n, nu) in components.iter().enumerate() {
                    if nu.is_zero() {
                        continue;
                    }
                    total += t.powi(2 * n as i32) * zen_integral(nu, t)?;
                }
                2.0 * PI * total
            }
            Weight::Table { knots, values } => interpolate_log_log(knots, values, t),
            Weight::Powered { base, exponent } => base.eval(t)?.powf(*exponent),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Divergent(format!("weight is not a positive finite number at t = {t}: {v}")));
        }
        Ok(v)
    }
}

/// `int e^{-2rt} d nu(r)`: closed forms for atoms and full-line densities,
/// quadrature for clipped densities.
pub fn zen_integral(nu: &RadialMeasure, t: f64) -> Result<f64> {
    let mut total: f64 = nu.atoms.iter().map(|a| a.mass * (-2.0 * a.radius * t).exp()).sum();
    for d in &nu.densities {
        total += density_laplace(d, 2.0 * t)?;
    }
    Ok(total)
}

fn density_laplace(d: &PowerDensity, s: f64) -> Result<f64> {
    if d.is_full_line() {
        let e = d.exponent + 1.0;
        return Ok(d.coefficient * gamma(e)? / s.powf(e));
    }
    let f = |r: f64| d.coefficient * r.powf(d.exponent) * (-s * r).exp();
    let q = match d.upper {
        Some(hi) if d.lower == 0.0 => laplace::integrate_from_zero(f, hi, 1e-12)?,
        Some(hi) => laplace::integrate_interval(f, d.lower, hi, 1e-12)?,
        None => laplace::integrate_to_infinity(f, d.lower, 1e-12)?,
    };
    Ok(q.value)
}

fn interpolate_log_log(knots: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= knots[0] {
        return values[0];
    }
    let last = knots.len() - 1;
    if t >= knots[last] {
        return values[last];
    }
    let i = knots.partition_point(|&k| k <= t) - 1;
    let s = (t.ln() - knots[i].ln()) / (knots[i + 1].ln() - knots[i].ln());
    (values[i].ln() * (1.0 - s) + values[i + 1].ln() * s).exp()
}

pub fn eval_weight(w: &Weight, t: f64) -> Result<f64> {
    w.eval(t)
}

/// A norm value with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub value: f64,
    pub error: f64,
}

/// `(int_0^inf |f|^p w)^{1/p}` by half-line quadrature.
pub fn lpw_norm(f: &dyn Fn(f64) -> f64, p: f64, w: &Weight) -> Result<Norm> {
    lpw_norm_with_tol(f, p, w, DEFAULT_TOL)
}

pub fn lpw_norm_with_tol(f: &dyn Fn(f64) -> f64, p: f64, w: &Weight, tol: f64) -> Result<Norm> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("norm exponent must lie in [1, inf), got {p}")));
    }
    w.validate()?;
    let integrand = |t: f64| {
        let v = f(t).abs();
        if v == 0.0 {
            return 0.0;
        }
        v.powf(p) * w.eval(t).unwrap_or(f64::NAN)
    };
    let q = laplace::integrate_halfline(integrand, tol)?;
    let value = q.value.max(0.0).powf(1.0 / p);
    let error = if value > 0.0 {
        q.error / (p * value.powf(p - 1.0))
    } else {
        q.error.powf(1.0 / p)
    };
    Ok(Norm { value, error })
}

/// `||t^beta e^{-a t}||_{L^p(t^alpha dt)}` in closed form.
pub fn exp_power_lpw_norm(f: &ExpPowerFunction, p: f64, alpha: f64) -> Result<f64> {
    let e = p * f.beta + alpha + 1.0;
    if !(e > 0.0) || !(f.rate > 0.0) {
        return Err(Error::Divergent(format!(
            "t^{} e^(-{} t) is not in L^{p} with weight t^{alpha}",
            f.beta, f.rate
        )));
    }
    Ok((gamma(e)? / (p * f.rate).powf(e)).powf(1.0 / p))
}

/// Data of the dual embedding: conjugate exponents and the weight `w^{-p'/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualProblem {
    pub p: f64,
    pub q: f64,
    pub weight: Weight,
}

pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

pub fn dual_problem(p: f64, q: f64, w: &Weight) -> Result<DualProblem> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 1.0) || !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must lie in (1, inf), got {v}")));
        }
    }
    w.validate()?;
    // -p'/p = -1/(p-1)
    let factor = -1.0 / (p - 1.0);
    let weight = match w {
        Weight::Power { alpha } => Weight::Power {
            alpha: if *alpha == 0.0 { 0.0 } else { alpha * factor },
        },
        Weight::Powered { base, exponent } => Weight::Powered {
            base: base.clone(),
            exponent: exponent * factor,
        },
        other => Weight::Powered {
            base: Box::new(other.clone()),
            exponent: factor,
        },
    };
    Ok(DualProblem {
        p: conjugate(p),
        q: conjugate(q),
        weight,
    })
}
