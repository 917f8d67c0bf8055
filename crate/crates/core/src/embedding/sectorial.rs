use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfplane::{Region, Sector};
use crate::measures::PlaneAtom;

use super::{CriterionExponent, EmbeddingProblem};

const FALLBACK_LEVELS: RangeInclusive<i32> = -20..=40;
const LAST_LEVELS: usize = 10;

/// Dyadic levels `j` with `2^j` spanning the given real parts.
pub fn dyadic_levels(real_parts: impl Iterator<Item = f64>) -> RangeInclusive<i32> {
    let (lo, hi) = real_parts
        .filter(|r| *r > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    if !lo.is_finite() {
        return FALLBACK_LEVELS;
    }
    let mut j0 = lo.log2().floor() as i32;
    while 2f64.powi(j0) > lo {
        j0 -= 1;
    }
    let mut j1 = hi.log2().ceil() as i32;
    while 2f64.powi(j1) < hi {
        j1 += 1;
    }
    j0..=j1
}

/// Sorted distinct real parts with the cumulative mass up to and including each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdProfile {
    radii: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ThresholdProfile {
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut radii: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut cumulative: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut total = 0.0;
        for (r, m) in pairs {
            total += m;
            if radii.last() == Some(&r) {
                *cumulative.last_mut().expect("nonempty") = total;
            } else {
                radii.push(r);
                cumulative.push(total);
            }
        }
        Self { radii, cumulative }
    }

    pub fn from_atoms(atoms: &[PlaneAtom]) -> Self {
        Self::from_pairs(atoms.iter().map(|a| (a.location.re, a.mass)).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Mass of atoms with real part `<= r`.
    pub fn mass_through(&self, r: f64) -> f64 {
        match self.radii.partition_point(|&x| x <= r) {
            0 => 0.0,
            i => self.cumulative[i - 1],
        }
    }

    /// `max_r S(r) / r^beta` over every threshold, with the maximizing threshold.
    pub fn sup_ratio(&self, beta: f64) -> (f64, Option<f64>) {
        self.radii
            .iter()
            .zip(&self.cumulative)
            .map(|(&r, &s)| (s / r.powf(beta), Some(r)))
            .fold((0.0, None), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    pub fn levels(&self, beta: f64, levels: RangeInclusive<i32>) -> Vec<LevelRow> {
        levels
            .map(|level| {
                let length = 2f64.powi(level);
                let mass = self.mass_through(length);
                let ratio = mass / length.powf(beta);
                let lo = self.radii.partition_point(|&x| x <= 0.5 * length);
                let hi = self.radii.partition_point(|&x| x <= length);
                let (mut level_sup, mut level_argmax) = (ratio, (mass > 0.0).then_some(length));
                for i in lo..hi {
                    let v = self.cumulative[i] / self.radii[i].powf(beta);
                    if v > level_sup {
                        level_sup = v;
                        level_argmax = Some(self.radii[i]);
                    }
                }
                LevelRow {
                    level,
                    length,
                    mass,
                    ratio,
                    level_sup,
                    level_argmax,
                }
            })
            .collect()
    }
}

/// One dyadic level `|I| = 2^j` of the sectorial criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: i32,
    pub length: f64,
    /// `mu(Delta_I)`.
    pub mass: f64,
    /// `mu(Delta_I) / |I|^beta`.
    pub ratio: f64,
    /// Supremum of the ratio over `|I|` in `(2^{j-1}, 2^j]`.
    pub level_sup: f64,
    pub level_argmax: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorialResult {
    pub beta: f64,
    pub theta: f64,
    pub sup: f64,
    pub attained_at: Option<f64>,
    pub attaining_level: Option<i32>,
    /// Least-squares slope of `log2 ratio` against `j` over the top half of the levels.
    pub slope: Option<f64>,
    /// The same slope over the last ten levels.
    pub last_slope: Option<f64>,
    pub rows: Vec<LevelRow>,
    pub excluded_boundary_atoms: usize,
    pub warnings: Vec<String>,
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn log_points(rows: &[LevelRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.ratio > 0.0)
        .map(|r| (r.level as f64, r.ratio.log2()))
        .collect()
}

/// Slopes over the top half of the rows and over the last ten nonzero rows.
pub(crate) fn trend_slopes(rows: &[LevelRow]) -> (Option<f64>, Option<f64>) {
    let top = log_points(&rows[rows.len() / 2..]);
    let all = log_points(rows);
    let last = &all[all.len().saturating_sub(LAST_LEVELS)..];
    (least_squares_slope(&top), least_squares_slope(last))
}

/// Evaluates the criterion for a threshold profile at exponent `beta`.
pub(crate) fn evaluate_profile(
    profile: &ThresholdProfile,
    beta: f64,
    theta: f64,
    levels: RangeInclusive<i32>,
) -> SectorialResult {
    let rows = profile.levels(beta, levels);
    let best = rows
        .iter()
        .fold(None::<&LevelRow>, |best, r| match best {
            Some(b) if b.level_sup >= r.level_sup => Some(b),
            _ => Some(r),
        })
        .filter(|r| r.level_sup > 0.0);
    let (slope, last_slope) = trend_slopes(&rows);
    SectorialResult {
        beta,
        theta,
        sup: best.map_or(0.0, |r| r.level_sup),
        attained_at: best.and_then(|r| r.level_argmax),
        attaining_level: best.map(|r| r.level),
        slope,
        last_slope,
        rows,
        excluded_boundary_atoms: 0,
        warnings: Vec::new(),
    }
}

/// Splits atoms into those strictly inside `S(theta)` and those on its edge;
/// any other atom is an error.
pub(crate) fn sector_atoms(atoms: &[PlaneAtom], theta: f64) -> Result<(Vec<PlaneAtom>, usize)> {
    let sector = Sector::new(theta)?;
    let region = Region::from(sector);
    let mut inside = Vec::with_capacity(atoms.len());
    let mut on_edge = 0;
    for a in atoms {
        if sector.contains(a.location) {
            inside.push(*a);
        } else if region.on_boundary(a.location) {
            on_edge += 1;
        } else {
            return Err(Error::Precondition(format!(
                "atom at {} lies outside the sector |arg z| < {theta}",
                a.location
            )));
        }
    }
    Ok((inside, on_edge))
}

/// Sectorial criterion `mu(Delta_I) <= C |I|^beta` over dyadic `|I| = 2^j`.
pub fn sectorial_criterion(
    prob: &EmbeddingProblem,
    theta: f64,
    levels: Option<RangeInclusive<i32>>,
) -> Result<SectorialResult> {
    let beta = CriterionExponent::for_problem(prob)?.beta;
    let atoms = prob.measure().require_atoms("the sectorial criterion")?;
    let (inside, on_edge) = sector_atoms(atoms, theta)?;
    let profile = ThresholdProfile::from_atoms(&inside);
    let levels = levels.unwrap_or_else(|| dyadic_levels(profile.radii().iter().copied()));
    let mut result = evaluate_profile(&profile, beta, theta, levels);
    result.excluded_boundary_atoms = on_edge;
    if on_edge > 0 {
        result
            .warnings
            .push(format!("{on_edge} atom(s) on the sector boundary were excluded"));
    }
    Ok(result)
}

/// Slope thresholds separating bounded from unbounded trends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendThresholds {
    pub bounded_slope: f64,
    pub unbounded_slope: f64,
}

impl Default for TrendThresholds {
    fn default() -> Self {
        Self {
            bounded_slope: 0.01,
            unbounded_slope: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendClass {
    Bounded,
    Unbounded,
    Inconclusive,
}

pub fn classify_trend(
    sup: f64,
    slope: Option<f64>,
    last_slope: Option<f64>,
    thresholds: &TrendThresholds,
) -> TrendClass {
    if sup == 0.0 {
        return TrendClass::Bounded;
    }
    match (slope, last_slope) {
        (Some(s), _) if sup.is_finite() && s <= thresholds.bounded_slope => TrendClass::Bounded,
        (Some(s), Some(l)) if s >= thresholds.unbounded_slope && l >= thresholds.unbounded_slope => {
            TrendClass::Unbounded
        }
        _ => TrendClass::Inconclusive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::PlaneMeasure;
    use crate::weights::Weight;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn measure(pairs: &[(f64, f64)]) -> PlaneMeasure {
        let pairs: Vec<_> = pairs.iter().map(|&(r, m)| (Complex64::new(r, 0.0), m)).collect();
        PlaneMeasure::from_pairs(&pairs).unwrap()
    }

    fn heat(n: usize) -> PlaneMeasure {
        measure(&(1..=n).map(|k| ((k * k) as f64 * PI * PI, 1.0)).collect::<Vec<_>>())
    }

    fn parabolic(n: i32) -> PlaneMeasure {
        measure(&(1..=n).map(|k| (2f64.powi(k), (2f64.powi(k) / k as f64).powi(2))).collect::<Vec<_>>())
    }

    fn problem(mu: PlaneMeasure, alpha: f64) -> EmbeddingProblem {
        EmbeddingProblem::new(2.0, 2.0, Weight::power(alpha), mu).unwrap()
    }

    #[test]
    fn heat_constant() {
        let r = sectorial_criterion(&problem(heat(10_000), 0.0), FRAC_PI_4, None).unwrap();
        assert!((r.sup - 1.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(r.attained_at, Some(PI * PI));
        assert_eq!(r.attaining_level, Some(4));
        assert!(r.slope.unwrap() < 0.01);
    }

    #[test]
    fn parabolic_bounded_and_unbounded() {
        let r = sectorial_criterion(&problem(parabolic(60), -1.0), FRAC_PI_4, None).unwrap();
        assert_eq!(r.beta, 2.0);
        assert_eq!(r.sup, 1.0);
        assert_eq!(r.attained_at, Some(2.0));
        assert!(r.slope.unwrap() <= 0.0);

        let r = sectorial_criterion(&problem(parabolic(60), -0.5), FRAC_PI_4, None).unwrap();
        assert_eq!(r.beta, 1.5);
        assert!((r.slope.unwrap() - 0.5).abs() < 0.1);
    }

    #[test]
    fn ties_are_merged() {
        let p = ThresholdProfile::from_pairs(vec![(2.0, 1.0), (1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(p.radii(), &[1.0, 2.0]);
        assert_eq!(p.mass_through(2.0), 5.0);
        assert_eq!(p.mass_through(1.999), 1.0);
        assert_eq!(p.mass_through(0.5), 0.0);
    }

    #[test]
    fn sector_violations() {
        let mu = PlaneMeasure::from_pairs(&[(Complex64::new(1.0, 2.0), 1.0)]).unwrap();
        assert!(sectorial_criterion(&problem(mu, 0.0), FRAC_PI_4, None).is_err());
        let mu = PlaneMeasure::from_pairs(&[(Complex64::new(1.0, 1.0), 1.0), (Complex64::new(1.0, 0.0), 1.0)]).unwrap();
        let r = sectorial_criterion(&problem(mu, 0.0), FRAC_PI_4, None).unwrap();
        assert_eq!(r.excluded_boundary_atoms, 1);
        assert_eq!(r.sup, 1.0);
    }

    #[test]
    fn preconditions() {
        assert!(sectorial_criterion(&problem(heat(3), 1.0), FRAC_PI_4, None).is_err());
        let prob = EmbeddingProblem::new(3.0, 2.0, Weight::unweighted(), heat(3)).unwrap();
        assert!(sectorial_criterion(&prob, FRAC_PI_4, None).is_err());
    }

    #[test]
    fn empty_measure_is_bounded() {
        let r = sectorial_criterion(&problem(PlaneMeasure::empty(), 0.0), FRAC_PI_4, None).unwrap();
        assert_eq!(r.sup, 0.0);
        assert_eq!(r.rows.len(), 61);
        assert_eq!(classify_trend(r.sup, r.slope, r.last_slope, &TrendThresholds::default()), TrendClass::Bounded);
    }

    #[test]
    fn classification_thresholds() {
        let t = TrendThresholds::default();
        assert_eq!(classify_trend(1.0, Some(0.0), Some(0.0), &t), TrendClass::Bounded);
        assert_eq!(classify_trend(1.0, Some(0.1), Some(0.1), &t), TrendClass::Unbounded);
        assert_eq!(classify_trend(1.0, Some(0.1), Some(0.02), &t), TrendClass::Inconclusive);
        assert_eq!(classify_trend(1.0, Some(0.03), Some(0.03), &t), TrendClass::Inconclusive);
        assert_eq!(classify_trend(1.0, None, None, &t), TrendClass::Inconclusive);
    }

    #[test]
    fn levels_span_the_atoms() {
        assert_eq!(dyadic_levels([3.0, 100.0].into_iter()), 1..=7);
        assert_eq!(dyadic_levels([4.0].into_iter()), 2..=2);
        assert_eq!(dyadic_levels(std::iter::empty()), -20..=40);
    }
}
