//! Regions of the right half-plane used by the embedding criteria.
//!
//! Edge conventions matter for atomic measures, so every region documents
//! which of its edges are closed.

use std::f64::consts::FRAC_PI_2;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Carleson square `Q(a) = {0 <= Re z < 2 Re a, |Im z - Im a| <= Re a}`.
///
/// Left-closed and right-open in the real direction, closed in the imaginary one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonSquare {
    center: Complex64,
}

impl CarlesonSquare {
    pub fn new(center: Complex64) -> Result<Self> {
        if !(center.re > 0.0) || !center.im.is_finite() || !center.re.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Carleson square needs a centre in the open right half-plane, got {center}"
            )));
        }
        Ok(Self { center })
    }

    /// Square centred at the positive real point `side`.
    pub fn on_real_axis(side: f64) -> Result<Self> {
        Self::new(Complex64::new(side, 0.0))
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Half the side length, `Re a`.
    pub fn half_side(&self) -> f64 {
        self.center.re
    }

    pub fn area(&self) -> f64 {
        4.0 * self.center.re * self.center.re
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let h = self.center.re;
        0.0 <= z.re && z.re < 2.0 * h && (z.im - self.center.im).abs() <= h
    }

    /// Membership in the closure `0 <= Re z <= 2 Re a, |Im z - Im a| <= Re a`.
    pub fn closure_contains(&self, z: Complex64) -> bool {
        let h = self.center.re;
        0.0 <= z.re && z.re <= 2.0 * h && (z.im - self.center.im).abs() <= h
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        let h = self.center.re;
        self.closure_contains(z) && (z.re == 0.0 || z.re == 2.0 * h || (z.im - self.center.im).abs() == h)
    }
}

/// Open sector `S(theta) = {Re z > 0, |arg z| < theta}`; `S(0)` is the open
/// positive real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    theta: f64,
}

impl Sector {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..FRAC_PI_2).contains(&theta) {
            return Err(Error::InvalidInput(format!("sector angle must lie in [0, pi/2), got {theta}")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn contains(&self, z: Complex64) -> bool {
        if !(z.re > 0.0) {
            return false;
        }
        if self.theta == 0.0 {
            return z.im == 0.0;
        }
        z.im.atan2(z.re).abs() < self.theta
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        z.re > 0.0 && self.theta > 0.0 && z.im.atan2(z.re).abs() == self.theta
    }
}

/// `Delta_I = {z in S(theta) : Re z <= |I|}`, closed on the right edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorTruncation {
    sector: Sector,
    length: f64,
}

impl SectorTruncation {
    pub fn new(theta: f64, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidInput(format!("interval length must be positive, got {length}")));
        }
        Ok(Self {
            sector: Sector::new(theta)?,
            length,
        })
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.sector.contains(z) && z.re <= self.length
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        (self.sector.contains(z) && z.re == self.length) || (self.sector.on_boundary(z) && z.re <= self.length)
    }
}

/// Vertical strip `S_(a, b] = {a < Re z <= b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    lower: f64,
    upper: f64,
}

impl Strip {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper) || !upper.is_finite() {
            return Err(Error::InvalidInput(format!("strip needs 0 < a <= b < inf, got ({lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.lower < z.re && z.re <= self.upper
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        z.re == self.lower || z.re == self.upper
    }
}

/// Dyadic rectangle `R_(k,l)(anchor)`:
/// `2^(k-1) < Re z / Re anchor <= 2^k` and
/// `2^k l <= (Im z - Im anchor) / Re anchor < 2^k (l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeRectangle {
    anchor: Complex64,
    k: i32,
    l: i64,
}

impl TreeRectangle {
    pub fn new(anchor: Complex64, k: i32, l: i64) -> Result<Self> {
        if !(anchor.re > 0.0) {
            return Err(Error::InvalidInput(format!("tree anchor must lie in the right half-plane, got {anchor}")));
        }
        Ok(Self { anchor, k, l })
    }

    /// The rectangle of the family anchored at `anchor` that contains `z`.
    pub fn locate(anchor: Complex64, z: Complex64) -> Result<Self> {
        if !(z.re > 0.0) {
            return Err(Error::InvalidInput(format!("point {z} is not in the open half-plane")));
        }
        let ratio = z.re / anchor.re;
        let mut k = ratio.log2().ceil() as i32;
        // Correct for rounding in log2 near powers of two.
        while ratio > 2f64.powi(k) {
            k += 1;
        }
        while ratio <= 2f64.powi(k - 1) {
            k -= 1;
        }
        let scaled = (z.im - anchor.im) / anchor.re / 2f64.powi(k);
        let mut l = scaled.floor() as i64;
        let width = 2f64.powi(k);
        while width * (l as f64) > (z.im - anchor.im) / anchor.re {
            l -= 1;
        }
        while (z.im - anchor.im) / anchor.re >= width * (l as f64 + 1.0) {
            l += 1;
        }
        Self::new(anchor, k, l)
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn l(&self) -> i64 {
        self.l
    }

    /// `(re_lo, re_hi, im_lo, im_hi)`: open/closed/closed/open edges.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let r = self.anchor.re;
        let w = 2f64.powi(self.k);
        (
            0.5 * w * r,
            w * r,
            self.anchor.im + w * (self.l as f64) * r,
            self.anchor.im + w * (self.l as f64 + 1.0) * r,
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = self.anchor.re;
        let w = 2f64.powi(self.k);
        let x = z.re / r;
        let y = (z.im - self.anchor.im) / r;
        0.5 * w < x && x <= w && w * (self.l as f64) <= y && y < w * (self.l as f64 + 1.0)
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        let r = self.anchor.re;
        let w = 2f64.powi(self.k);
        let x = z.re / r;
        let y = (z.im - self.anchor.im) / r;
        let in_closure = 0.5 * w <= x && x <= w && w * (self.l as f64) <= y && y <= w * (self.l as f64 + 1.0);
        in_closure && (x == 0.5 * w || x == w || y == w * (self.l as f64) || y == w * (self.l as f64 + 1.0))
    }
}

/// The region families used by the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Square(CarlesonSquare),
    Sector(Sector),
    Truncation(SectorTruncation),
    Strip(Strip),
    Rectangle(TreeRectangle),
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        match self {
            Region::Square(q) => q.contains(z),
            Region::Sector(s) => s.contains(z),
            Region::Truncation(d) => d.contains(z),
            Region::Strip(s) => s.contains(z),
            Region::Rectangle(r) => r.contains(z),
        }
    }

    /// True if `z` lies on an edge of the region (in or out of it).
    pub fn on_boundary(&self, z: Complex64) -> bool {
        match self {
            Region::Square(q) => q.on_boundary(z),
            Region::Sector(s) => s.on_boundary(z),
            Region::Truncation(d) => d.on_boundary(z),
            Region::Strip(s) => s.on_boundary(z),
            Region::Rectangle(r) => r.on_boundary(z),
        }
    }
}

impl From<CarlesonSquare> for Region {
    fn from(q: CarlesonSquare) -> Self {
        Region::Square(q)
    }
}

impl From<Sector> for Region {
    fn from(s: Sector) -> Self {
        Region::Sector(s)
    }
}

impl From<SectorTruncation> for Region {
    fn from(d: SectorTruncation) -> Self {
        Region::Truncation(d)
    }
}

impl From<Strip> for Region {
    fn from(s: Strip) -> Self {
        Region::Strip(s)
    }
}

impl From<TreeRectangle> for Region {
    fn from(r: TreeRectangle) -> Self {
        Region::Rectangle(r)
    }
}

pub fn square_contains(square: &CarlesonSquare, z: Complex64) -> bool {
    square.contains(z)
}

pub fn region_membership(region: &Region, z: Complex64) -> bool {
    region.contains(z)
}

/// All rectangles `R_(k,l)(anchor)` for `k` and `l` in the given ranges.
pub fn tree_cover(
    anchor: Complex64,
    k_range: RangeInclusive<i32>,
    l_range: RangeInclusive<i64>,
) -> Result<Vec<TreeRectangle>> {
    let mut out = Vec::new();
    for k in k_range {
        for l in l_range.clone() {
            out.push(TreeRectangle::new(anchor, k, l)?);
        }
    }
    Ok(out)
}
