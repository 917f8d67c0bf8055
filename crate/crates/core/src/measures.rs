//! Radial measures on `[0, infinity)`, measures on the closed half-plane and
//! the doubling diagnostic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::Region;
use crate::systems::DiagonalSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialAtom {
    pub radius: f64,
    pub mass: f64,
}

/// `coefficient * r^exponent dr` on `[lower, upper)`; `upper = None` means
/// the piece extends to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerDensity {
    pub exponent: f64,
    pub coefficient: f64,
    #[serde(default)]
    pub lower: f64,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl PowerDensity {
    pub fn new(exponent: f64, coefficient: f64, lower: f64, upper: Option<f64>) -> Result<Self> {
        let d = Self {
            exponent,
            coefficient,
            lower,
            upper,
        };
        d.validate()?;
        Ok(d)
    }

    /// `coefficient * r^exponent` on the whole half-line.
    pub fn full(exponent: f64, coefficient: f64) -> Result<Self> {
        Self::new(exponent, coefficient, 0.0, None)
    }

    fn validate(&self) -> Result<()> {
        if !(self.exponent > -1.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidInput(format!("density exponent must exceed -1, got {}", self.exponent)));
        }
        if !(self.coefficient > 0.0) || !self.coefficient.is_finite() {
            return Err(Error::InvalidInput(format!(
                "density coefficient must be positive, got {}",
                self.coefficient
            )));
        }
        if !(self.lower >= 0.0) || !self.lower.is_finite() {
            return Err(Error::InvalidInput(format!("density support must start at r >= 0, got {}", self.lower)));
        }
        if let Some(hi) = self.upper {
            if !(hi > self.lower) || !hi.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "density support [{}, {hi}) is empty or unbounded",
                    self.lower
                )));
            }
        }
        Ok(())
    }

    pub fn is_full_line(&self) -> bool {
        self.lower == 0.0 && self.upper.is_none()
    }

    fn antiderivative(&self, r: f64) -> f64 {
        let e = self.exponent + 1.0;
        self.coefficient * r.powf(e) / e
    }

    /// Mass of `[lower, min(r, upper))`.
    pub fn mass_below(&self, r: f64) -> f64 {
        let hi = self.upper.map_or(r, |u| u.min(r));
        if hi <= self.lower {
            return 0.0;
        }
        self.antiderivative(hi) - self.antiderivative(self.lower)
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.lower || self.upper.is_some_and(|u| r >= u) {
            return 0.0;
        }
        self.coefficient * r.powf(self.exponent)
    }
}

/// A positive measure on `[0, infinity)` made of atoms and power densities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialMeasure {
    #[serde(default)]
    pub atoms: Vec<RadialAtom>,
    #[serde(default)]
    pub densities: Vec<PowerDensity>,
}

impl RadialMeasure {
    pub fn new(atoms: Vec<RadialAtom>, densities: Vec<PowerDensity>) -> Result<Self> {
        let m = Self { atoms, densities };
        m.validate()?;
        Ok(m)
    }

    pub fn atom(radius: f64, mass: f64) -> Result<Self> {
        Self::new(vec![RadialAtom { radius, mass }], Vec::new())
    }

    pub fn density(exponent: f64, coefficient: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![PowerDensity::full(exponent, coefficient)?])
    }

    /// `(1/2pi) delta_0`, the Hardy space measure.
    pub fn hardy() -> Self {
        Self::atom(0.0, 1.0 / (2.0 * std::f64::consts::PI)).expect("valid atom")
    }

    /// Lebesgue measure scaled by `1/pi`, the derivative part of the Dirichlet space.
    pub fn dirichlet_derivative() -> Self {
        Self::density(0.0, 1.0 / std::f64::consts::PI).expect("valid density")
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(a.radius >= 0.0) || !a.radius.is_finite() {
                return Err(Error::InvalidInput(format!("radial atom at r = {} is not in [0, inf)", a.radius)));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(Error::InvalidInput(format!("radial atom mass must be positive, got {}", a.mass)));
            }
        }
        self.densities.iter().try_for_each(PowerDensity::validate)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.densities.is_empty()
    }

    /// `nu[0, r)`.
    pub fn mass_below(&self, r: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.radius < r).fold(0.0, |s, a| s + a.mass);
        atoms + self.densities.iter().map(|d| d.mass_below(r)).sum::<f64>()
    }

    /// `nu[0, r]`, atoms at radius `r` included.
    pub fn mass_through(&self, r: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.radius <= r).fold(0.0, |s, a| s + a.mass);
        atoms + self.densities.iter().map(|d| d.mass_below(r)).sum::<f64>()
    }
}

/// `nu[0, r)` for `r > 0`.
pub fn radial_mass(nu: &RadialMeasure, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radial mass needs r > 0, got {r}")));
    }
    Ok(nu.mass_below(r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Row {
    pub r: f64,
    pub mass: f64,
    pub doubled_mass: f64,
    pub ratio: Option<f64>,
}

/// Grid estimate of `sup_r nu[0, 2r) / nu[0, r)`; a lower bound for the true supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Estimate {
    pub ratio: f64,
    pub attained_at: f64,
    pub table: Vec<Delta2Row>,
    pub skipped: Vec<f64>,
}

pub fn default_delta2_grid() -> Vec<f64> {
    (-20..=20).map(|k| 2f64.powi(k)).collect()
}

pub fn delta2_ratio(nu: &RadialMeasure, grid: &[f64]) -> Result<Delta2Estimate> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("doubling check needs a nonempty grid".into()));
    }
    let mut table = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &r in grid {
        let mass = radial_mass(nu, r)?;
        let doubled_mass = nu.mass_below(2.0 * r);
        let ratio = (mass > 0.0).then(|| doubled_mass / mass);
        match ratio {
            Some(v) if best.is_none_or(|(b, _)| v > b) => best = Some((v, r)),
            Some(_) => {}
            None => skipped.push(r),
        }
        table.push(Delta2Row {
            r,
            mass,
            doubled_mass,
            ratio,
        });
    }
    let (ratio, attained_at) =
        best.ok_or_else(|| Error::Precondition("radial measure has no mass on any grid point".into()))?;
    Ok(Delta2Estimate {
        ratio,
        attained_at,
        table,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneAtom {
    pub location: Complex64,
    pub mass: f64,
}

/// A positive measure on the closed right half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneMeasure {
    Atomic { atoms: Vec<PlaneAtom> },
    /// `radial` tensored with Lebesgue measure in the imaginary direction.
    Product { radial: RadialMeasure },
}

impl PlaneMeasure {
    pub fn atomic(atoms: Vec<PlaneAtom>) -> Result<Self> {
        for a in &atoms {
            if !(a.location.re >= 0.0) || !a.location.re.is_finite() || !a.location.im.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom at {} lies outside the closed half-plane",
                    a.location
                )));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(Error::InvalidInput(format!("atom mass must be positive, got {}", a.mass)));
            }
        }
        Ok(PlaneMeasure::Atomic { atoms })
    }

    pub fn from_pairs(pairs: &[(Complex64, f64)]) -> Result<Self> {
        Self::atomic(pairs.iter().map(|&(location, mass)| PlaneAtom { location, mass }).collect())
    }

    pub fn empty() -> Self {
        PlaneMeasure::Atomic { atoms: Vec::new() }
    }

    pub fn product(radial: RadialMeasure) -> Result<Self> {
        radial.validate()?;
        Ok(PlaneMeasure::Product { radial })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PlaneMeasure::Atomic { atoms } => Self::atomic(atoms.clone()).map(|_| ()),
            PlaneMeasure::Product { radial } => radial.validate(),
        }
    }

    pub fn atoms(&self) -> Option<&[PlaneAtom]> {
        match self {
            PlaneMeasure::Atomic { atoms } => Some(atoms),
            PlaneMeasure::Product { .. } => None,
        }
    }

    pub(crate) fn require_atoms(&self, operation: &str) -> Result<&[PlaneAtom]> {
        self.atoms()
            .ok_or_else(|| Error::Unsupported(format!("{operation} needs an atomic measure")))
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            PlaneMeasure::Atomic { atoms } => atoms.iter().fold(0.0, |s, a| s + a.mass),
            PlaneMeasure::Product { radial } if radial.is_zero() => 0.0,
            PlaneMeasure::Product { .. } => f64::INFINITY,
        }
    }

    /// Atoms sitting exactly on an edge of `region`.
    pub fn boundary_atoms(&self, region: &Region) -> Vec<PlaneAtom> {
        match self {
            PlaneMeasure::Atomic { atoms } => atoms.iter().filter(|a| region.on_boundary(a.location)).copied().collect(),
            PlaneMeasure::Product { .. } => Vec::new(),
        }
    }
}

/// `mu(region)`.
///
/// Product measures are only supported on Carleson squares, the one region
/// family of finite Lebesgue height.
pub fn plane_mass(mu: &PlaneMeasure, region: &Region) -> Result<f64> {
    match mu {
        PlaneMeasure::Atomic { atoms } => {
            Ok(atoms.iter().filter(|a| region.contains(a.location)).fold(0.0, |s, a| s + a.mass))
        }
        PlaneMeasure::Product { radial } => match region {
            Region::Square(q) => {
                let side = 2.0 * q.half_side();
                Ok(radial.mass_below(side) * side)
            }
            _ if radial.is_zero() => Ok(0.0),
            _ => Err(Error::Unsupported(
                "product measures have infinite mass on regions of unbounded height".into(),
            )),
        },
    }
}

/// Atomic measure `sum |b_k|^q delta_{-lambda_k}`; zero coefficients are dropped.
pub fn system_measure(sys: &DiagonalSystem) -> Result<PlaneMeasure> {
    let q = sys.state_exponent();
    let mut atoms = Vec::with_capacity(sys.len());
    for (lambda, b) in sys.eigenvalues().iter().zip(sys.coefficients()) {
        if !(lambda.re < 0.0) {
            return Err(Error::InvalidInput(format!("eigenvalue {lambda} is not in the open left half-plane")));
        }
        let mass = b.norm().powf(q);
        if mass > 0.0 {
            atoms.push(PlaneAtom { location: -lambda, mass });
        }
    }
    PlaneMeasure::atomic(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfplane::{CarlesonSquare, SectorTruncation, Strip};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn radial_mass_examples() {
        assert_eq!(radial_mass(&RadialMeasure::hardy(), 5.0).unwrap(), 1.0 / (2.0 * PI));
        assert_eq!(radial_mass(&RadialMeasure::density(0.0, 1.0).unwrap(), 3.0).unwrap(), 3.0);
        assert_eq!(radial_mass(&RadialMeasure::density(1.0, 1.0).unwrap(), 2.0).unwrap(), 2.0);
        assert!(radial_mass(&RadialMeasure::hardy(), 0.0).is_err());
    }

    #[test]
    fn atoms_at_the_radius_are_excluded() {
        let nu = RadialMeasure::atom(1.0, 2.0).unwrap();
        assert_eq!(nu.mass_below(1.0), 0.0);
        assert_eq!(nu.mass_through(1.0), 2.0);
    }

    #[test]
    fn clipped_density() {
        let d = PowerDensity::new(0.0, 2.0, 1.0, Some(3.0)).unwrap();
        let nu = RadialMeasure::new(vec![], vec![d]).unwrap();
        assert_eq!(nu.mass_below(0.5), 0.0);
        assert_eq!(nu.mass_below(2.0), 2.0);
        assert_eq!(nu.mass_below(10.0), 4.0);
        assert!(PowerDensity::new(-1.0, 1.0, 0.0, None).is_err());
        assert!(PowerDensity::new(0.0, 1.0, 2.0, Some(1.0)).is_err());
    }

    #[test]
    fn delta2_examples() {
        let grid = default_delta2_grid();
        let lebesgue = delta2_ratio(&RadialMeasure::density(0.0, 1.0).unwrap(), &grid).unwrap();
        assert!((lebesgue.ratio - 2.0).abs() < 1e-12);
        let hardy = delta2_ratio(&RadialMeasure::hardy(), &grid).unwrap();
        assert_eq!(hardy.ratio, 1.0);
        let quadratic = delta2_ratio(&RadialMeasure::density(1.0, 1.0).unwrap(), &grid).unwrap();
        assert!((quadratic.ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn delta2_skips_empty_points() {
        let nu = RadialMeasure::atom(1.0, 1.0).unwrap();
        let est = delta2_ratio(&nu, &[0.25, 0.5, 2.0]).unwrap();
        assert_eq!(est.skipped, vec![0.25, 0.5]);
        assert_eq!(est.ratio, 1.0);
        assert!(delta2_ratio(&nu, &[0.25]).is_err());
        assert!(delta2_ratio(&nu, &[]).is_err());
    }

    #[test]
    fn plane_mass_examples() {
        let mu = PlaneMeasure::from_pairs(&[(c(1.0, 0.0), 3.0)]).unwrap();
        let q = Region::from(CarlesonSquare::on_real_axis(1.0).unwrap());
        assert_eq!(plane_mass(&mu, &q).unwrap(), 3.0);

        let heat = PlaneMeasure::from_pairs(&[(c(PI * PI, 0.0), 1.0), (c(4.0 * PI * PI, 0.0), 1.0), (c(9.0 * PI * PI, 0.0), 1.0)])
            .unwrap();
        let delta = Region::from(SectorTruncation::new(FRAC_PI_4, 50.0).unwrap());
        assert_eq!(plane_mass(&heat, &delta).unwrap(), 2.0);

        let product = PlaneMeasure::product(RadialMeasure::density(0.0, 1.0).unwrap()).unwrap();
        let q = Region::from(CarlesonSquare::new(c(1.0, 5.0)).unwrap());
        assert_eq!(plane_mass(&product, &q).unwrap(), 4.0);
        let strip = Region::from(Strip::new(1.0, 2.0).unwrap());
        assert!(plane_mass(&product, &strip).is_err());
    }

    #[test]
    fn boundary_atoms_are_reported() {
        let mu = PlaneMeasure::from_pairs(&[(c(2.0, 0.0), 1.0), (c(1.0, 0.0), 1.0)]).unwrap();
        let q = Region::from(CarlesonSquare::on_real_axis(1.0).unwrap());
        let edge = mu.boundary_atoms(&q);
        assert_eq!(edge.len(), 1);
        assert_eq!(edge[0].location, c(2.0, 0.0));
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(PlaneMeasure::from_pairs(&[(c(-1.0, 0.0), 1.0)]).is_err());
        assert!(PlaneMeasure::from_pairs(&[(c(1.0, 0.0), 0.0)]).is_err());
        assert!(RadialMeasure::atom(-1.0, 1.0).is_err());
    }

    #[test]
    fn product_square_mass_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let radial = RadialMeasure::new(
            vec![],
            vec![PowerDensity::full(0.5, 1.5).unwrap(), PowerDensity::new(1.0, 2.0, 0.5, Some(1.5)).unwrap()],
        )
        .unwrap();
        let mu = PlaneMeasure::product(radial.clone()).unwrap();
        for center in [c(0.75, 0.0), c(1.0, -3.0), c(0.4, 2.0)] {
            let square = CarlesonSquare::new(center).unwrap();
            let exact = plane_mass(&mu, &Region::from(square)).unwrap();
            let side = 2.0 * center.re;
            let n = 200_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let r = rng.random::<f64>() * side;
                acc += radial.densities.iter().map(|d| d.eval(r)).sum::<f64>();
            }
            let estimate = acc / n as f64 * side * side;
            assert!((estimate - exact).abs() / exact < 0.01, "{estimate} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn strip_additivity(points in prop::collection::vec((0.01f64..20.0, -10.0f64..10.0, 0.1f64..5.0), 0..30),
                            a in 0.01f64..5.0, gap1 in 0.0f64..5.0, gap2 in 0.0f64..5.0) {
            let pairs: Vec<_> = points.iter().map(|&(x, y, m)| (c(x, y), m)).collect();
            let mu = PlaneMeasure::from_pairs(&pairs).unwrap();
            let b = a + gap1;
            let cc = b + gap2;
            let left = plane_mass(&mu, &Strip::new(a, b).unwrap().into()).unwrap();
            let right = plane_mass(&mu, &Strip::new(b, cc).unwrap().into()).unwrap();
            let whole = plane_mass(&mu, &Strip::new(a, cc).unwrap().into()).unwrap();
            prop_assert!((left + right - whole).abs() <= 1e-12 * whole.max(1.0));
        }

        #[test]
        fn radial_mass_is_monotone(r in 0.001f64..100.0, dr in 0.0f64..10.0) {
            let nu = RadialMeasure::new(
                vec![RadialAtom { radius: 1.0, mass: 0.5 }, RadialAtom { radius: 0.0, mass: 0.1 }],
                vec![PowerDensity::full(-0.5, 2.0).unwrap()],
            ).unwrap();
            prop_assert!(nu.mass_below(r) <= nu.mass_below(r + dr));
        }

        #[test]
        fn nested_truncations_are_monotone(points in prop::collection::vec((0.01f64..20.0, -5.0f64..5.0, 0.1f64..5.0), 0..30),
                                           len in 0.1f64..20.0, extra in 0.0f64..10.0) {
            let pairs: Vec<_> = points.iter().map(|&(x, y, m)| (c(x, y), m)).collect();
            let mu = PlaneMeasure::from_pairs(&pairs).unwrap();
            let small = plane_mass(&mu, &SectorTruncation::new(0.5, len).unwrap().into()).unwrap();
            let large = plane_mass(&mu, &SectorTruncation::new(1.0, len + extra).unwrap().into()).unwrap();
            prop_assert!(small <= large);
        }
    }
}
