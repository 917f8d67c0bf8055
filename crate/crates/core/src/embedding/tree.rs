use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{CarlesonSquare, Region};
use crate::laplace::{gamma, integrate_from_zero, integrate_interval, ExpPowerFunction};
use crate::measures::{plane_mass, PlaneMeasure};
use crate::weights::conjugate;

/// A positive weight `rho` on the half-plane.
#[derive(Clone)]
pub struct BesovWeight {
    rho: Arc<dyn Fn(Complex64) -> f64 + Send + Sync>,
    constant: Option<f64>,
    sup: Option<f64>,
}

impl fmt::Debug for BesovWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BesovWeight")
            .field("constant", &self.constant)
            .field("sup", &self.sup)
            .finish_non_exhaustive()
    }
}

impl BesovWeight {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidInput(format!("weight must be positive, got {value}")));
        }
        Ok(Self {
            rho: Arc::new(move |_| value),
            constant: Some(value),
            sup: Some(value),
        })
    }

    /// A general weight; `sup` bounds it from above and enables tail bounds.
    pub fn new<F: Fn(Complex64) -> f64 + Send + Sync + 'static>(rho: F, sup: Option<f64>) -> Self {
        Self {
            rho: Arc::new(rho),
            constant: None,
            sup,
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        (self.rho)(z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeRow {
    pub center: Complex64,
    pub mass: f64,
    pub lhs: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeCheck {
    pub rows: Vec<TreeRow>,
    pub sup_ratio: f64,
    pub skipped: Vec<Complex64>,
}

struct LocalAtom {
    re: f64,
    im: f64,
    mass: f64,
}

/// `int_{Q(a)} mu(Q(a) n Q(z))^{p'} (Re z)^{-2} rho(z)^{1-p'} dA(z)`.
///
/// For fixed `Re z = x` the mass is piecewise constant in `Im z` with jumps at
/// `Im zeta_j +- x`; the outer integral is split wherever that ordering changes.
fn tree_integral(atoms: &[LocalAtom], square: &CarlesonSquare, pc: f64, rho: &BesovWeight, tol: f64) -> Result<f64> {
    let a = square.center();
    let (ylo, yhi) = (a.im - a.re, a.im + a.re);
    let xmax = 2.0 * a.re;
    let xmin = atoms.iter().map(|t| 0.5 * t.re).fold(f64::INFINITY, f64::min);
    if !xmin.is_finite() {
        return Ok(0.0);
    }
    if xmin <= 0.0 {
        return Err(Error::Divergent(
            "an atom on the imaginary axis makes the tree integral diverge".into(),
        ));
    }
    let mut breaks = vec![xmin, xmax];
    for (i, s) in atoms.iter().enumerate() {
        breaks.extend([0.5 * s.re, s.im - ylo, yhi - s.im]);
        for t in &atoms[i + 1..] {
            breaks.push(0.5 * (s.im - t.im).abs());
        }
    }
    breaks.retain(|x| (xmin..=xmax).contains(x));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let exponent = 1.0 - pc;
    let inner = |x: f64| -> f64 {
        let active: Vec<&LocalAtom> = atoms.iter().filter(|s| s.re < 2.0 * x).collect();
        let mut ys = vec![ylo, yhi];
        for s in &active {
            ys.extend([(s.im - x).clamp(ylo, yhi), (s.im + x).clamp(ylo, yhi)]);
        }
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let mut total = 0.0;
        for w in ys.windows(2) {
            let (y0, y1) = (w[0], w[1]);
            let mid = 0.5 * (y0 + y1);
            let mass: f64 = active.iter().filter(|s| (s.im - mid).abs() <= x).fold(0.0, |acc, s| acc + s.mass);
            if mass == 0.0 {
                continue;
            }
            let weight = match rho.constant {
                Some(c) => c.powf(exponent) * (y1 - y0),
                None => integrate_interval(|y| rho.eval(Complex64::new(x, y)).powf(exponent), y0, y1, tol)
                    .map_or(f64::NAN, |q| q.value),
            };
            total += mass.powf(pc) * weight;
        }
        total / (x * x)
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate_interval(inner, w[0], w[1], tol)?.value;
    }
    Ok(total)
}

/// Evaluates `(int_{Q(a)} mu(Q(a) n Q(z))^{p'} (Re z)^{-2} rho^{1-p'} dA)^{q'/p'}`
/// against `mu(Q(a))` at each centre.
pub fn tree_sufficient_check(
    mu: &PlaneMeasure,
    p: f64,
    q: f64,
    rho: &BesovWeight,
    centers: &[Complex64],
    tol: f64,
) -> Result<TreeCheck> {
    if !(p > 1.0 && p <= q) || !q.is_finite() {
        return Err(Error::Precondition(format!("the tree condition needs 1 < p <= q < inf, got p = {p}, q = {q}")));
    }
    let atoms = mu.require_atoms("the tree condition")?;
    let pc = conjugate(p);
    let qc = conjugate(q);
    let rows = centers
        .par_iter()
        .map(|&center| {
            let square = CarlesonSquare::new(center)?;
            let mass = plane_mass(mu, &Region::from(square))?;
            let local: Vec<LocalAtom> = atoms
                .iter()
                .filter(|s| square.contains(s.location))
                .map(|s| LocalAtom {
                    re: s.location.re,
                    im: s.location.im,
                    mass: s.mass,
                })
                .collect();
            let lhs = if local.is_empty() {
                0.0
            } else {
                tree_integral(&local, &square, pc, rho, tol)?.powf(qc / pc)
            };
            Ok(TreeRow {
                center,
                mass,
                lhs,
                ratio: (mass > 0.0).then(|| lhs / mass),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let skipped = rows.iter().filter(|r| r.ratio.is_none()).map(|r| r.center).collect();
    Ok(TreeCheck {
        rows,
        sup_ratio,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovEnergy {
    pub value: f64,
    /// Half-width of the box `(0, R] x [-R, R]` that was integrated.
    pub radius: f64,
    /// Bound on the neglected part outside the box, when `rho` has a known bound.
    pub tail_bound: Option<f64>,
    pub warnings: Vec<String>,
}

fn derivative(terms: &[(f64, ExpPowerFunction)], z: Complex64) -> Result<Complex64> {
    terms
        .iter()
        .try_fold(Complex64::new(0.0, 0.0), |acc, (c, f)| Ok(acc + *c * f.transform_derivative(z)?))
}

/// `int_{(0,R] x [-R,R]} |F'(z)|^p (Re z)^{p-2} rho(z) dA` for `F` the Laplace
/// transform of `sum c_i f_i`.
pub fn besov_energy_in_box(
    terms: &[(f64, ExpPowerFunction)],
    p: f64,
    rho: &BesovWeight,
    radius: f64,
    tol: f64,
) -> Result<f64> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("energy exponent must lie in (1, inf), got {p}")));
    }
    if terms.iter().all(|(c, _)| *c == 0.0) {
        return Ok(0.0);
    }
    let inner_tol = tol * 1e-2;
    let density = |z: Complex64| derivative(terms, z).map_or(f64::NAN, |d| d.norm().powf(p) * rho.eval(z));
    let column = |x: f64| -> f64 {
        let up = integrate_from_zero(|y| density(Complex64::new(x, y)), radius, inner_tol);
        let down = integrate_from_zero(|y| density(Complex64::new(x, -y)), radius, inner_tol);
        match (up, down) {
            (Ok(u), Ok(d)) => x.powf(p - 2.0) * (u.value + d.value),
            _ => f64::NAN,
        }
    };
    Ok(integrate_from_zero(column, radius, tol)?.value)
}

/// Energy over the whole half-plane: the box radius doubles until the
/// analytic tail bound `K^p sup(rho) B R^{p - p gamma} / (p gamma - p)` drops
/// below half the tolerance, where `|F'(z)| <= K |z|^{-gamma}` for `|z| >= 1`.
pub fn besov_energy(terms: &[(f64, ExpPowerFunction)], p: f64, rho: &BesovWeight, tol: f64) -> Result<BesovEnergy> {
    if terms.iter().all(|(c, _)| *c == 0.0) {
        return Ok(BesovEnergy {
            value: 0.0,
            radius: 0.0,
            tail_bound: Some(0.0),
            warnings: Vec::new(),
        });
    }
    let mut warnings = Vec::new();
    let k: f64 = terms
        .iter()
        .map(|(c, f)| Ok(c.abs() * gamma(f.beta + 2.0)?))
        .sum::<Result<f64>>()?;
    let g = terms.iter().filter(|(c, _)| *c != 0.0).map(|(_, f)| f.beta + 2.0).fold(f64::INFINITY, f64::min);
    let angular = PI.sqrt() * gamma((p - 1.0) / 2.0)? / gamma(p / 2.0)?;
    let tail = |r: f64| rho.sup.map(|s| k.powf(p) * s * angular * r.powf(p - p * g) / (p * g - p));
    let mut radius = 1.0;
    let tail_bound = match tail(radius) {
        Some(_) => {
            while tail(radius).is_some_and(|t| t > 0.5 * tol) && radius < 2f64.powi(40) {
                radius *= 2.0;
            }
            tail(radius)
        }
        None => {
            radius = 1024.0;
            warnings.push("no bound on rho: the truncation tail is not controlled".into());
            None
        }
    };
    let value = besov_energy_in_box(terms, p, rho, radius, 0.5 * tol)?;
    Ok(BesovEnergy {
        value,
        radius,
        tail_bound,
        warnings,
    })
}
