//! Adaptive Gauss-Kronrod quadrature on finite intervals and on the half-line.
//!
//! Finite intervals use a globally adaptive G7/K15 scheme: the segment with the
//! largest error estimate is bisected until the total estimate meets the
//! tolerance. Half-line and endpoint-singular integrals are split into dyadic
//! blocks (uniform blocks in `log t`), each integrated adaptively; the block
//! sequence is summed until it either vanishes or settles into a geometric
//! regime, at which point the remaining tail is extrapolated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Default relative tolerance for every quadrature in the crate.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Partial sums beyond this magnitude are reported as divergent.
pub const OVERFLOW_GUARD: f64 = 1e300;

const MAX_SUBDIVISIONS: usize = 2000;
const MAX_BLOCKS: usize = 1000;

// Kronrod abscissae; odd indices are the 7-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of a successful quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub evaluations: usize,
}

impl Quadrature {
    const ZERO: Quadrature = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };

    fn add(self, other: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {value:e} with error {error:e}")]
    NonConvergence { value: f64, error: f64 },
    #[error("integral appears to diverge (partial sum {partial:e})")]
    Divergent { partial: f64 },
    #[error("integrand is not finite at t = {at:e}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn checked<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64, QuadratureError> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { at: t })
    }
}

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = checked(f, center - dx)? + checked(f, center + dx)?;
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Ok(Segment { a, b, value, error })
}

/// Globally adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Stops when the summed error estimate is at most `max(epsabs, epsrel * |I|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    epsabs: f64,
    epsrel: f64,
) -> Result<Quadrature, QuadratureError> {
    if a == b {
        return Ok(Quadrature::ZERO);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let first = gauss_kronrod_15(f, lo, hi)?;
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    // Segments too narrow to bisect further; their error stays in the total.
    let mut frozen: Vec<Segment> = Vec::new();
    let mut splits = 0;

    while error > epsabs.max(epsrel * value.abs()) {
        if splits >= MAX_SUBDIVISIONS {
            return Err(QuadratureError::NonConvergence {
                value: sign * value,
                error,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) <= 1e-14 * worst.a.abs().max(worst.b.abs()) {
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gauss_kronrod_15(f, worst.a, mid)?;
        let right = gauss_kronrod_15(f, mid, worst.b)?;
        evaluations += 30;
        splits += 1;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of incremental updates.
    let value: f64 = heap.iter().chain(frozen.iter()).map(|s| s.value).sum();
    let err: f64 = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
    if !value.is_finite() || value.abs() > OVERFLOW_GUARD {
        return Err(QuadratureError::Divergent { partial: value });
    }
    Ok(Quadrature {
        value: sign * value,
        error: err,
        evaluations,
    })
}

/// Integrates `f` over the finite interval `[a, b]` to relative tolerance `tol`.
pub fn integrate_interval<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Quadrature, QuadratureError> {
    integrate_adaptive(&f, a, b, 0.0, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    TowardZero,
    TowardInfinity,
}

struct TailEstimate {
    value: f64,
    uncertainty: f64,
}

fn tail_estimate(blocks: &[f64], total: f64, tol: f64, allow_zero_stop: bool) -> Option<TailEstimate> {
    let n = blocks.len();
    if n < 3 {
        return None;
    }
    let (b0, b1, b2) = (blocks[n - 3], blocks[n - 2], blocks[n - 1]);
    if b1 == 0.0 && b2 == 0.0 {
        return allow_zero_stop.then_some(TailEstimate {
            value: 0.0,
            uncertainty: 0.0,
        });
    }
    let target = tol * total.abs();
    if b0 != 0.0 && b1 != 0.0 {
        let r1 = b1 / b0;
        let r2 = b2 / b1;
        if (0.0..1.0).contains(&r1) && (0.0..1.0).contains(&r2) {
            let value = b2 * r2 / (1.0 - r2);
            let uncertainty = b2.abs() * (r2 - r1).abs() / ((1.0 - r2) * (1.0 - r2));
            if uncertainty <= 0.25 * tol * (total + value).abs() {
                return Some(TailEstimate { value, uncertainty });
            }
            return None;
        }
        if r1.abs() < 1.0 && r2.abs() < 1.0 && b1.abs() + b2.abs() <= 1e-6 * target {
            return Some(TailEstimate {
                value: 0.0,
                uncertainty: b1.abs() + b2.abs(),
            });
        }
    }
    None
}

fn integrate_blocks<F: Fn(f64) -> f64>(
    f: &F,
    anchor: f64,
    direction: Direction,
    tol: f64,
) -> Result<Quadrature, QuadratureError> {
    let mut total = Quadrature::ZERO;
    let mut blocks = Vec::new();
    let mut seen_nonzero = false;
    for k in 0..MAX_BLOCKS {
        let (lo, hi) = match direction {
            Direction::TowardZero => (anchor * 0.5f64.powi(k as i32 + 1), anchor * 0.5f64.powi(k as i32)),
            Direction::TowardInfinity => (anchor * 2f64.powi(k as i32), anchor * 2f64.powi(k as i32 + 1)),
        };
        if lo <= 0.0 || !hi.is_finite() {
            break;
        }
        let epsabs = 1e-3 * tol * total.value.abs();
        let q = integrate_adaptive(f, lo, hi, epsabs, 0.25 * tol)?;
        total = total.add(q);
        if !total.value.is_finite() || total.value.abs() > OVERFLOW_GUARD {
            return Err(QuadratureError::Divergent {
                partial: total.value,
            });
        }
        seen_nonzero |= q.value != 0.0;
        blocks.push(q.value);
        let allow_zero_stop = direction == Direction::TowardInfinity || seen_nonzero;
        if let Some(tail) = tail_estimate(&blocks, total.value, tol, allow_zero_stop) {
            return Ok(Quadrature {
                value: total.value + tail.value,
                error: total.error + tail.uncertainty,
                evaluations: total.evaluations,
            });
        }
    }
    if !seen_nonzero {
        return Ok(total);
    }
    let n = blocks.len();
    let last_ratio = if n >= 2 && blocks[n - 2] != 0.0 {
        (blocks[n - 1] / blocks[n - 2]).abs()
    } else {
        f64::INFINITY
    };
    if last_ratio >= 0.999 {
        Err(QuadratureError::Divergent {
            partial: total.value,
        })
    } else {
        Err(QuadratureError::NonConvergence {
            value: total.value,
            error: total.error,
        })
    }
}

/// Integrates `f` over `(0, b]`, grading the mesh geometrically toward zero so
/// that integrable endpoint singularities such as `t^beta`, `beta > -1`, are
/// resolved.
pub fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, b: f64, tol: f64) -> Result<Quadrature, QuadratureError> {
    if b <= 0.0 {
        return Ok(Quadrature::ZERO);
    }
    integrate_blocks(&f, b, Direction::TowardZero, tol)
}

/// Integrates `f` over `[a, infinity)` for `a > 0`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<Quadrature, QuadratureError> {
    assert!(a > 0.0, "lower limit must be positive");
    integrate_blocks(&f, a, Direction::TowardInfinity, tol)
}

/// Integrates `f` over the half-line `(0, infinity)`.
///
/// The range is split at `t = 1`: `(0, 1]` is covered by blocks shrinking
/// geometrically toward the origin and `[1, infinity)` by blocks growing
/// geometrically, i.e. unit-width blocks after a logarithmic change of
/// variables. Non-convergence and divergence are reported as errors.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<Quadrature, QuadratureError> {
    let left = integrate_blocks(&f, 1.0, Direction::TowardZero, tol)?;
    let right = integrate_blocks(&f, 1.0, Direction::TowardInfinity, tol)?;
    Ok(left.add(right))
}
