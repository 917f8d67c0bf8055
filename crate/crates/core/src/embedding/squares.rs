use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{CarlesonSquare, Region};
use crate::measures::{default_delta2_grid, delta2_ratio, plane_mass, Delta2Estimate, PlaneMeasure, RadialMeasure};

use super::sectorial::sector_atoms;

/// The space `A^p(C_+, (nu_n))` given by its radial measures `nu_0, ..., nu_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApSpaceSpec {
    pub p: f64,
    pub components: Vec<RadialMeasure>,
}

impl ApSpaceSpec {
    pub fn new(p: f64, components: Vec<RadialMeasure>) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("space exponent must lie in [1, inf), got {p}")));
        }
        if components.is_empty() {
            return Err(Error::InvalidInput("a space needs at least one radial measure".into()));
        }
        components.iter().try_for_each(RadialMeasure::validate)?;
        Ok(Self { p, components })
    }

    pub fn hardy(p: f64) -> Result<Self> {
        Self::new(p, vec![RadialMeasure::hardy()])
    }

    pub fn dirichlet(p: f64) -> Result<Self> {
        Self::new(p, vec![RadialMeasure::hardy(), RadialMeasure::dirichlet_derivative()])
    }

    /// Doubling diagnostics for every nonzero component on the default grid.
    pub fn delta2(&self) -> Vec<Option<Delta2Estimate>> {
        let grid = default_delta2_grid();
        self.components.iter().map(|nu| delta2_ratio(nu, &grid).ok()).collect()
    }

    /// `nu_n(closure of Q(a)) = nu_n[0, 2 Re a] * 2 Re a`.
    fn closed_square_masses(&self, half_side: f64) -> Vec<f64> {
        let side = 2.0 * half_side;
        self.components.iter().map(|nu| nu.mass_through(side) * side).collect()
    }

    /// `nu_n(Q(a)) = nu_n[0, 2 Re a) * 2 Re a`.
    fn open_square_masses(&self, half_side: f64) -> Vec<f64> {
        let side = 2.0 * half_side;
        self.components.iter().map(|nu| nu.mass_below(side) * side).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareRow {
    pub center: Complex64,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareCheck {
    pub rows: Vec<SquareRow>,
    pub sup_ratio: f64,
    /// Centres where the right side vanished.
    pub skipped: Vec<Complex64>,
}

fn summarize(rows: Vec<SquareRow>) -> SquareCheck {
    let sup_ratio = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let skipped = rows.iter().filter(|r| r.rhs.is_none()).map(|r| r.center).collect();
    SquareCheck {
        rows,
        sup_ratio,
        skipped,
    }
}

/// `mu(Q(a))` against `[sum_n nu_n(closure Q(a)) / (Re a)^{np}]^{q/p}`.
pub fn square_necessary_check(
    space: &ApSpaceSpec,
    q: f64,
    mu: &PlaneMeasure,
    centers: &[Complex64],
) -> Result<SquareCheck> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidInput(format!("q must lie in [1, inf), got {q}")));
    }
    let rows = centers
        .par_iter()
        .map(|&center| {
            let square = CarlesonSquare::new(center)?;
            let lhs = plane_mass(mu, &Region::from(square))?;
            let h = square.half_side();
            let sum: f64 = space
                .closed_square_masses(h)
                .iter()
                .enumerate()
                .map(|(n, m)| m / h.powf(n as f64 * space.p))
                .sum();
            let rhs = (sum > 0.0).then(|| sum.powf(q / space.p));
            Ok(SquareRow {
                center,
                lhs,
                rhs,
                ratio: rhs.map(|r| lhs / r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2mRow {
    pub k: i32,
    pub length: f64,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
}

/// `mu(Q(2^k |I|))` against
/// `[nu_0(Q)^{-1/2} + (sum_n nu_n(Q) / (2^k |I|)^{2n})^{-1/2}]^{-2}`,
/// with `Q(l)` the Carleson square centred at the real point `l`.
pub fn a2m_sectorial_check(
    space: &ApSpaceSpec,
    mu: &PlaneMeasure,
    theta: f64,
    base_length: f64,
    k_range: RangeInclusive<i32>,
) -> Result<(Vec<A2mRow>, f64)> {
    if space.p != 2.0 {
        return Err(Error::Precondition(format!("the A^2_(m) condition needs p = 2, got {}", space.p)));
    }
    if !(theta > 0.0) {
        return Err(Error::Precondition("the A^2_(m) condition needs a sector angle in (0, pi/2)".into()));
    }
    if !(base_length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {base_length}")));
    }
    let atoms = mu.require_atoms("the A^2_(m) condition")?;
    let (_, on_edge) = sector_atoms(atoms, theta)?;
    if on_edge > 0 {
        return Err(Error::Precondition(format!("{on_edge} atom(s) lie on the sector boundary")));
    }
    let rows = k_range
        .map(|k| {
            let length = 2f64.powi(k) * base_length;
            let square = CarlesonSquare::on_real_axis(length)?;
            let lhs = plane_mass(mu, &Region::from(square))?;
            let masses = space.open_square_masses(length);
            let sum: f64 = masses
                .iter()
                .enumerate()
                .map(|(n, m)| m / length.powi(2 * n as i32))
                .sum();
            let rhs = (masses[0] > 0.0 && sum > 0.0).then(|| (masses[0].powf(-0.5) + sum.powf(-0.5)).powi(-2));
            Ok(A2mRow {
                k,
                length,
                lhs,
                rhs,
                ratio: rhs.map(|r| lhs / r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sup = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    Ok((rows, sup))
}
