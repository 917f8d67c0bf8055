//! The Hardy-Littlewood maximal function and the `Theta(P, w, x)` bound
//! `int_0^inf e^{-t/x} |f(t)| dt <= Theta(P, w, x) x Mg(x)`, `g = w^{1/p} f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{integrate_from_zero, integrate_halfline, integrate_interval, DEFAULT_TOL};
use crate::weights::Weight;

const GOLDEN_TOL: f64 = 1e-10;
const REFINEMENT_ROUNDS: usize = 4;

/// A finite truncation of a partition `... <= t_{-1} <= t_0 = 1 <= t_1 <= ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Partition {
    /// `t_{-1} > t_{-2} > ... > t_{-K} > 0`.
    pub negative_knots: Vec<f64>,
    /// `1 = t_0 <= t_1 <= ... <= t_M`.
    pub positive_knots: Vec<f64>,
}

impl Partition {
    pub fn new(negative_knots: Vec<f64>, positive_knots: Vec<f64>) -> Result<Self> {
        let p = Self {
            negative_knots,
            positive_knots,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positive_knots.first() != Some(&1.0) {
            return Err(Error::InvalidInput("positive knots must start at t_0 = 1".into()));
        }
        if self.positive_knots.windows(2).any(|w| !(w[0] <= w[1])) || !self.positive_knots.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidInput("positive knots must be finite and nondecreasing".into()));
        }
        let mut previous = 1.0;
        for &t in &self.negative_knots {
            if !(t > 0.0 && t < previous) {
                return Err(Error::InvalidInput(
                    "negative knots must decrease strictly from below 1 and stay positive".into(),
                ));
            }
            previous = t;
        }
        Ok(())
    }

    /// `t_{-k} = 2^{-k}` for `k <= 20` and `t_k = 1 + k/2` for `k <= 58`.
    pub fn default_geometric() -> Self {
        Self {
            negative_knots: (1..=20).map(|k| 0.5f64.powi(k)).collect(),
            positive_knots: (0..=58).map(|k| 1.0 + 0.5 * k as f64).collect(),
        }
    }

    /// Intervals `[t_k, t_{k+1}]` with their multipliers `1 - t_k` (`k < 0`)
    /// or `t_{k+1} - 1` (`k >= 0`), ordered by `k`.
    fn intervals(&self) -> Vec<(i64, f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.negative_knots.len() + self.positive_knots.len());
        for (i, &t) in self.negative_knots.iter().enumerate().rev() {
            let next = if i == 0 { 1.0 } else { self.negative_knots[i - 1] };
            out.push((-(i as i64) - 1, t, next, 1.0 - t));
        }
        for (k, w) in self.positive_knots.windows(2).enumerate() {
            out.push((k as i64, w[0], w[1], w[1] - 1.0));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarPoint {
    pub k: i64,
    pub lower: f64,
    pub upper: f64,
    pub t_star: f64,
    /// `h(t*) = e^{-t*} w(t* x)^{-1/p}`.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaResult {
    pub value: f64,
    pub star_points: Vec<StarPoint>,
    /// Set when the outermost terms on either side were not yet decreasing.
    pub truncation_tail: bool,
}

/// Maximizes a unimodal-looking `h` on `[lo, hi]`: coarse sampling, then
/// golden-section search around the best sample.
fn golden_max(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    if hi <= lo {
        return (lo, h(lo));
    }
    const SAMPLES: usize = 16;
    let step = (hi - lo) / SAMPLES as f64;
    let (mut best_t, mut best) = (lo, h(lo));
    for i in 1..=SAMPLES {
        let t = if i == SAMPLES { hi } else { lo + step * i as f64 };
        let v = h(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut a, mut b) = ((best_t - step).max(lo), (best_t + step).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (h(c), h(d));
    while (b - a) > GOLDEN_TOL * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = h(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = h(t);
    if v > best {
        (t, v)
    } else {
        (best_t, best)
    }
}

/// `Theta(P, w, x)` over the finite partition.
pub fn theta(partition: &Partition, w: &Weight, p: f64, x: f64) -> Result<ThetaResult> {
    partition.validate()?;
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("p must lie in [1, inf), got {p}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput(format!("x must be positive, got {x}")));
    }
    w.validate()?;
    let h = |t: f64| (-t).exp() * w.eval(t * x).map_or(f64::NAN, |v| v.powf(-1.0 / p));
    let mut star_points = Vec::new();
    let mut value = 0.0;
    for (k, lower, upper, multiplier) in partition.intervals() {
        let (t_star, hv) = match w.power_alpha() {
            Some(alpha) if alpha < 0.0 => {
                let t = (-alpha / p).clamp(lower, upper);
                (t, h(t))
            }
            Some(_) => (lower, h(lower)),
            None => golden_max(&h, lower, upper),
        };
        if !hv.is_finite() {
            return Err(Error::Divergent(format!("h has no finite supremum on [{lower}, {upper}]")));
        }
        value += hv * multiplier;
        star_points.push(StarPoint {
            k,
            lower,
            upper,
            t_star,
            h: hv,
        });
    }
    let terms: Vec<f64> = star_points
        .iter()
        .zip(partition.intervals())
        .map(|(s, (.., m))| s.h * m)
        .collect();
    let negatives = partition.negative_knots.len();
    // Outermost negative terms come first, outermost positive terms last.
    let growing_left = negatives >= 2 && terms[0] >= terms[1];
    let n = terms.len();
    let growing_right = n - negatives >= 2 && terms[n - 1] >= terms[n - 2] && terms[n - 1] > 0.0;
    Ok(ThetaResult {
        value: 2.0 * value,
        star_points,
        truncation_tail: growing_left || growing_right,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub value: f64,
    pub radius: Option<f64>,
}

/// Radii `scale * 2^{j/4}`, `j in [-40, 40]`, with `scale = max(|x|, 1)`.
pub fn default_radii(x: f64) -> Vec<f64> {
    let scale = x.abs().max(1.0);
    (-40..=40).map(|j| scale * 2f64.powf(j as f64 / 4.0)).collect()
}

fn window_average(g: &dyn Fn(f64) -> f64, x: f64, r: f64, support_from_zero: bool) -> Result<f64> {
    let (lo, hi) = (x - r, x + r);
    let integral = if support_from_zero && lo <= 0.0 {
        integrate_from_zero(|t| g(t).abs(), hi, DEFAULT_TOL)?.value
    } else if support_from_zero && hi <= 0.0 {
        0.0
    } else {
        integrate_interval(|t| g(t).abs(), lo, hi, DEFAULT_TOL)?.value
    };
    Ok(integral / (2.0 * r))
}

fn maximal_over(g: &dyn Fn(f64) -> f64, x: f64, radii: &[f64], support_from_zero: bool) -> Result<MaximalValue> {
    let mut best = MaximalValue {
        value: 0.0,
        radius: None,
    };
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radii must be positive, got {r}")));
        }
        let v = window_average(g, x, r, support_from_zero)?;
        if v > best.value {
            best = MaximalValue {
                value: v,
                radius: Some(r),
            };
        }
    }
    Ok(best)
}

/// `max_r (1/2r) int_{|y| <= r} |g(x - y)| dy` over the given radii, a lower
/// bound for `Mg(x)`.
pub fn maximal_function(g: &dyn Fn(f64) -> f64, x: f64, radii: &[f64]) -> Result<MaximalValue> {
    maximal_over(g, x, radii, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub theta: ThetaResult,
    pub maximal: MaximalValue,
    pub holds: bool,
    pub refinements: usize,
}

/// Checks `int_0^inf e^{-t/x} |f| <= Theta(P, w, x) x Mg(x)`, refining the
/// radius grid before reporting a violation.
pub fn verify_estimate(
    f: &dyn Fn(f64) -> f64,
    w: &Weight,
    p: f64,
    x: f64,
    partition: &Partition,
) -> Result<EstimateCheck> {
    let theta = theta(partition, w, p, x)?;
    let lhs = integrate_halfline(|t| (-t / x).exp() * f(t).abs(), DEFAULT_TOL)?.value;
    // g = w^{1/p} f on (0, inf), zero elsewhere.
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let v = f(t);
        if v == 0.0 {
            0.0
        } else {
            w.eval(t).map_or(f64::NAN, |wt| wt.powf(1.0 / p)) * v
        }
    };
    let mut radii = default_radii(x);
    let mut maximal = maximal_over(&g, x, &radii, true)?;
    let mut rhs = theta.value * x * maximal.value;
    let mut refinements = 0;
    let holds = |lhs: f64, rhs: f64| lhs <= rhs * (1.0 + 1e-9);
    while !holds(lhs, rhs) && refinements < REFINEMENT_ROUNDS {
        refinements += 1;
        let mut finer = Vec::with_capacity(2 * radii.len() + 16);
        let lo = radii[0];
        let hi = radii[radii.len() - 1];
        finer.extend((1..=8).rev().map(|k| lo * 2f64.powi(-k)));
        for w in radii.windows(2) {
            finer.push(w[0]);
            finer.push((w[0] * w[1]).sqrt());
        }
        finer.push(hi);
        finer.extend((1..=8).map(|k| hi * 2f64.powi(k)));
        radii = finer;
        maximal = maximal_over(&g, x, &radii, true)?;
        rhs = theta.value * x * maximal.value;
    }
    Ok(EstimateCheck {
        lhs,
        rhs,
        holds: holds(lhs, rhs),
        theta,
        maximal,
        refinements,
    })
}
