//! Laplace-Carleson embedding criteria.
//!
//! Every checker works on an [`EmbeddingProblem`]: the embedding of
//! `L^p_w(0, inf)` into `L^q(C_+, mu)` induced by the Laplace transform.

pub(crate) mod sectorial;
mod squares;
mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{self, gamma, ExpPowerFunction, Signal};
use crate::measures::{PlaneAtom, PlaneMeasure};
use crate::weights::{conjugate, exp_power_lpw_norm, Weight};

pub use sectorial::{
    classify_trend, dyadic_levels, sectorial_criterion, LevelRow, SectorialResult, ThresholdProfile, TrendClass,
    TrendThresholds,
};
pub use squares::{a2m_sectorial_check, square_necessary_check, A2mRow, ApSpaceSpec, SquareCheck, SquareRow};
pub use tree::{
    besov_energy, besov_energy_in_box, tree_sufficient_check, BesovEnergy, BesovWeight, TreeCheck, TreeRow,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProblem {
    p: f64,
    q: f64,
    weight: Weight,
    measure: PlaneMeasure,
}

impl EmbeddingProblem {
    pub fn new(p: f64, q: f64, weight: Weight, measure: PlaneMeasure) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("p must lie in (1, inf), got {p}")));
        }
        if !(q >= 1.0) || !q.is_finite() {
            return Err(Error::InvalidInput(format!("q must lie in [1, inf), got {q}")));
        }
        weight.validate()?;
        measure.validate()?;
        Ok(Self {
            p,
            q,
            weight,
            measure,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `p' = p / (p - 1)`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn measure(&self) -> &PlaneMeasure {
        &self.measure
    }

    /// Checks the hypotheses of the sectorial criterion and returns `alpha`.
    pub fn sectorial_alpha(&self) -> Result<f64> {
        let alpha = self
            .weight
            .power_alpha()
            .ok_or_else(|| Error::Unsupported("the sectorial criterion needs a power weight t^alpha".into()))?;
        check_sectorial_exponents(self.p, self.q, alpha)?;
        Ok(alpha)
    }

    /// `int_0^inf e^{-s t} w(t)^{-1/(p-1)} dt`, `None` if it diverges.
    pub fn dual_weight_integral(&self, s: f64) -> Result<Option<f64>> {
        dual_weight_integral(&self.weight, self.p, s)
    }
}

pub(crate) fn check_sectorial_exponents(p: f64, q: f64, alpha: f64) -> Result<()> {
    if !(p > 1.0) || !(q >= p) || !q.is_finite() {
        return Err(Error::Precondition(format!("the sectorial criterion needs 1 < p <= q < inf, got p = {p}, q = {q}")));
    }
    if !(alpha < p - 1.0) {
        return Err(Error::Precondition(format!("the weight t^alpha needs alpha < p - 1, got alpha = {alpha}, p = {p}")));
    }
    Ok(())
}

/// `beta = (q / p') (1 - alpha / (p - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionExponent {
    pub beta: f64,
}

impl CriterionExponent {
    pub fn new(p: f64, q: f64, alpha: f64) -> Self {
        Self {
            beta: q * (p - 1.0) / p * (1.0 - alpha / (p - 1.0)),
        }
    }

    pub fn for_problem(prob: &EmbeddingProblem) -> Result<Self> {
        let alpha = prob.sectorial_alpha()?;
        Ok(Self::new(prob.p, prob.q, alpha))
    }
}

/// `int_0^inf e^{-s t} w(t)^{-1/(p-1)} dt`; closed form for power weights.
pub fn dual_weight_integral(w: &Weight, p: f64, s: f64) -> Result<Option<f64>> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("decay rate must be positive, got {s}")));
    }
    let e = -1.0 / (p - 1.0);
    if let Some(alpha) = w.power_alpha() {
        let k = 1.0 - alpha / (p - 1.0);
        if !(k > 0.0) {
            return Ok(None);
        }
        return Ok(Some(gamma(k)? * s.powf(-k)));
    }
    let f = |t: f64| (-s * t).exp() * w.eval(t).map_or(f64::NAN, |v| v.powf(e));
    match laplace::integrate_halfline(f, 1e-10) {
        Ok(q) => Ok(Some(q.value)),
        Err(laplace::QuadratureError::Divergent { .. }) => Ok(None),
        Err(err) => Err(err.into()),
    }
}

fn real_axis_atoms<'a>(mu: &'a PlaneMeasure, operation: &str) -> Result<&'a [PlaneAtom]> {
    let atoms = mu.require_atoms(operation)?;
    if let Some(a) = atoms.iter().find(|a| a.location.im != 0.0 || !(a.location.re > 0.0)) {
        return Err(Error::Precondition(format!(
            "{operation} needs a measure on (0, inf); atom at {} is off the axis",
            a.location
        )));
    }
    Ok(atoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub length: f64,
    pub mass: f64,
    /// `None` when the dual-weight integral diverges at this length.
    pub bound: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub rows: Vec<IntervalRow>,
    pub sup_ratio: f64,
    pub divergent_lengths: Vec<f64>,
}

/// Compares `mu((0, |I|])` with `(int e^{-|I| p' t} w^{-1/(p-1)})^{-q/p'}`.
pub fn necessary_interval_check(prob: &EmbeddingProblem, lengths: &[f64]) -> Result<IntervalCheck> {
    let atoms = real_axis_atoms(&prob.measure, "the interval condition")?;
    if let Some(l) = lengths.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidInput(format!("interval lengths must be positive, got {l}")));
    }
    let pc = prob.p_conj();
    let rows = lengths
        .par_iter()
        .map(|&length| {
            let mass: f64 = atoms.iter().filter(|a| a.location.re <= length).fold(0.0, |s, a| s + a.mass);
            let integral = prob.dual_weight_integral(length * pc)?;
            let bound = integral.map(|i| i.powf(-prob.q / pc));
            let ratio = bound.map(|b| mass / b);
            Ok(IntervalRow {
                length,
                mass,
                bound,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_ratio = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let divergent_lengths = rows.iter().filter(|r| r.bound.is_none()).map(|r| r.length).collect();
    Ok(IntervalCheck {
        rows,
        sup_ratio,
        divergent_lengths,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRow {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub integral: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripCheck {
    pub rows: Vec<StripRow>,
    pub sum: f64,
    /// `sum^{1/q}`, an upper bound for the embedding norm when nothing is uncovered.
    pub norm_bound: f64,
    pub uncovered_mass: f64,
    pub warnings: Vec<String>,
}

/// Dyadic points `2^j` whose strips cover every atom.
pub fn default_strip_partition(mu: &PlaneMeasure) -> Result<Vec<f64>> {
    let atoms = mu.require_atoms("the strip condition")?;
    let res: Vec<f64> = atoms.iter().map(|a| a.location.re).filter(|r| *r > 0.0).collect();
    if res.is_empty() {
        return Ok(vec![0.5, 1.0]);
    }
    let lo = res.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = res.iter().copied().fold(0.0, f64::max);
    let mut j0 = lo.log2().floor() as i32;
    while 2f64.powi(j0) >= lo {
        j0 -= 1;
    }
    let mut j1 = hi.log2().ceil() as i32;
    while 2f64.powi(j1) < hi {
        j1 += 1;
    }
    Ok((j0..=j1.max(j0 + 1)).map(|j| 2f64.powi(j)).collect())
}

/// `c_n = mu(S_(x_n, x_{n+1}]) (int e^{-p' t x_n} w^{-1/(p-1)})^{q/p'}` and their sum.
pub fn sufficient_strip_check(prob: &EmbeddingProblem, partition: &[f64]) -> Result<StripCheck> {
    let atoms = prob.measure.require_atoms("the strip condition")?;
    if partition.len() < 2 {
        return Err(Error::InvalidInput("a strip partition needs at least two points".into()));
    }
    if !(partition[0] > 0.0) || partition.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("strip partition must be positive and strictly increasing".into()));
    }
    let pc = prob.p_conj();
    let rows = partition
        .par_windows(2)
        .map(|w| {
            let (lower, upper) = (w[0], w[1]);
            let mass: f64 = atoms
                .iter()
                .filter(|a| lower < a.location.re && a.location.re <= upper)
                .fold(0.0, |s, a| s + a.mass);
            let integral = prob
                .dual_weight_integral(pc * lower)?
                .ok_or_else(|| Error::Divergent(format!("dual-weight integral diverges on the strip ({lower}, {upper}]")))?;
            let c = if mass == 0.0 { 0.0 } else { mass * integral.powf(prob.q / pc) };
            Ok(StripRow {
                lower,
                upper,
                mass,
                integral,
                c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = rows.iter().map(|r| r.c).sum();
    let covered = rows.iter().fold(0.0, |s, r| s + r.mass);
    let uncovered_mass = (prob.measure.total_mass() - covered).max(0.0);
    let mut warnings = Vec::new();
    if uncovered_mass > 0.0 {
        warnings.push(format!("mass {uncovered_mass} lies outside the strips; the norm bound does not cover it"));
    }
    Ok(StripCheck {
        norm_bound: sum.powf(1.0 / prob.q),
        rows,
        sum,
        uncovered_mass,
        warnings,
    })
}

/// `(sum_k m_k |F(z_k)|^q)^{1/q}` for `F` the Laplace transform of `signal`.
pub fn laplace_lq_norm(mu: &PlaneMeasure, signal: &Signal, q: f64, tol: f64) -> Result<f64> {
    let atoms = mu.require_atoms("the L^q(mu) norm")?;
    let terms = atoms
        .par_iter()
        .map(|a| Ok(a.mass * signal.laplace(a.location, tol)?.norm().powf(q)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum::<f64>().powf(1.0 / q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub rate: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub best_rate: Option<f64>,
    pub rows: Vec<LowerBoundRow>,
}

/// Test rates `2^j sec(theta)` over the dyadic levels spanned by the atoms.
pub fn default_test_rates(mu: &PlaneMeasure, theta: f64) -> Result<Vec<f64>> {
    let atoms = mu.require_atoms("the embedding lower bound")?;
    let levels = dyadic_levels(atoms.iter().map(|a| a.location.re));
    let sec = 1.0 / theta.cos();
    Ok(levels.map(|j| 2f64.powi(j) * sec).collect())
}

/// `sup_a ||L f_a||_{L^q(mu)} / ||f_a||_{L^p_w}` with `f_a = t^{-alpha/(p-1)} e^{-a t}`.
pub fn embedding_lower_bound(prob: &EmbeddingProblem, theta: f64, test_rates: Option<&[f64]>) -> Result<LowerBound> {
    let alpha = prob
        .weight
        .power_alpha()
        .ok_or_else(|| Error::Unsupported("the test-function lower bound needs a power weight".into()))?;
    if !(alpha < prob.p - 1.0) {
        return Err(Error::Precondition(format!("test functions need alpha < p - 1, got alpha = {alpha}")));
    }
    let atoms = prob.measure.require_atoms("the embedding lower bound")?;
    let rates = match test_rates {
        Some(r) => r.to_vec(),
        None => default_test_rates(&prob.measure, theta)?,
    };
    let exponent = -alpha / (prob.p - 1.0);
    let rows = rates
        .par_iter()
        .map(|&rate| {
            let f = ExpPowerFunction::new(exponent, rate)?;
            let denominator = exp_power_lpw_norm(&f, prob.p, alpha)?;
            let mut acc = 0.0;
            for a in atoms {
                acc += a.mass * f.transform(a.location)?.norm().powf(prob.q);
            }
            let numerator = acc.powf(1.0 / prob.q);
            Ok(LowerBoundRow {
                rate,
                numerator,
                denominator,
                ratio: numerator / denominator,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio));
    Ok(LowerBound {
        value: best.map_or(0.0, |r| r.ratio),
        best_rate: best.map(|r| r.rate),
        rows,
    })
}
