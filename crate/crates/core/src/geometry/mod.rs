//! Sup-norm geometry on finite subsets of scaled integer lattices.
//!
//! Every coordinate is an exact rational. A [`PointSet`] stores integer
//! numerators over one shared denominator, so membership, distances and
//! separations are decided in integer arithmetic.

mod delone;
mod pointset;
mod separated;

pub use delone::{delone_constants, DeloneConstants};
pub use pointset::{ball_query, PointSet};
pub use separated::{
    max_separated_subset, SeparatedSet, SeparationMode, EXACT_SEPARATION_CAP,
};
pub(crate) use separated::{exact_separated_indices, greedy_separated_indices};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::rational::{int, Rational};

/// Serialized form of a [`ScaledPoint`]: `["p/q", "p/q"]`.
#[derive(Clone, Serialize, Deserialize)]
struct RationalPair(#[serde(with = "crate::rational::serde_rational_pair")] (Rational, Rational));

impl From<ScaledPoint> for RationalPair {
    fn from(p: ScaledPoint) -> Self {
        RationalPair(p.coords())
    }
}

impl From<RationalPair> for ScaledPoint {
    fn from(p: RationalPair) -> Self {
        ScaledPoint::from_rationals(p.0 .0, p.0 .1)
    }
}

/// A point of Z².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    /// Chebyshev distance between numerators.
    pub fn sup_dist(&self, other: &LatticePoint) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn scaled(self, denom: i64) -> ScaledPoint {
        ScaledPoint::new(self.x, self.y, denom)
    }
}

/// A point of (1/denom)·Z².
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "RationalPair", from = "RationalPair")]
pub struct ScaledPoint {
    pub num_x: i64,
    pub num_y: i64,
    pub denom: i64,
}

impl ScaledPoint {
    pub fn new(num_x: i64, num_y: i64, denom: i64) -> Self {
        assert!(denom > 0, "denominator must be positive");
        Self { num_x, num_y, denom }
    }

    pub fn lattice(x: i64, y: i64) -> Self {
        Self::new(x, y, 1)
    }

    pub fn from_rationals(x: Rational, y: Rational) -> Self {
        let d = x.denom().lcm(y.denom());
        Self::new(x.numer() * (d / x.denom()), y.numer() * (d / y.denom()), d)
    }

    pub fn x(&self) -> Rational {
        Rational::new(self.num_x, self.denom)
    }

    pub fn y(&self) -> Rational {
        Rational::new(self.num_y, self.denom)
    }

    pub fn coords(&self) -> (Rational, Rational) {
        (self.x(), self.y())
    }

    /// Numerators over `denom`, if the point lies on that grid.
    pub fn numerators_over(&self, denom: i64) -> Option<LatticePoint> {
        let (nx, ny) = (self.num_x as i128 * denom as i128, self.num_y as i128 * denom as i128);
        let d = self.denom as i128;
        if nx % d != 0 || ny % d != 0 {
            return None;
        }
        Some(LatticePoint::new((nx / d) as i64, (ny / d) as i64))
    }

    /// Lowest-terms representative.
    pub fn reduced(&self) -> ScaledPoint {
        let g = self.num_x.gcd(&self.num_y).gcd(&self.denom);
        if g <= 1 {
            *self
        } else {
            ScaledPoint::new(self.num_x / g, self.num_y / g, self.denom / g)
        }
    }

    pub fn norm(&self) -> Rational {
        Rational::new(self.num_x.abs().max(self.num_y.abs()), self.denom)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            self.num_x as f64 / self.denom as f64,
            self.num_y as f64 / self.denom as f64,
        )
    }
}

impl PartialEq for ScaledPoint {
    fn eq(&self, other: &Self) -> bool {
        self.num_x as i128 * other.denom as i128 == other.num_x as i128 * self.denom as i128
            && self.num_y as i128 * other.denom as i128 == other.num_y as i128 * self.denom as i128
    }
}

impl Eq for ScaledPoint {}

impl std::hash::Hash for ScaledPoint {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        let r = self.reduced();
        (r.num_x, r.num_y, r.denom).hash(state);
    }
}

impl PartialOrd for ScaledPoint {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScaledPoint {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.x()
            .cmp(&other.x())
            .then_with(|| self.y().cmp(&other.y()))
    }
}

impl std::fmt::Display for ScaledPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.denom == 1 {
            write!(f, "({}, {})", self.num_x, self.num_y)
        } else {
            write!(f, "({}/{}, {}/{})", self.num_x, self.denom, self.num_y, self.denom)
        }
    }
}

/// Exact sup-norm distance.
pub fn sup_dist(p: &ScaledPoint, q: &ScaledPoint) -> Rational {
    let l = p.denom.lcm(&q.denom);
    let (sp, sq) = (l / p.denom, l / q.denom);
    let dx = (p.num_x * sp - q.num_x * sq).abs();
    let dy = (p.num_y * sp - q.num_y * sq).abs();
    Rational::new(dx.max(dy), l)
}

/// Integer range `[lo, hi]` of numerators `k` over `denom` with `k/denom`
/// inside the interval described by the bounds.
fn numerator_range(
    lo: Rational,
    lo_inclusive: bool,
    hi: Rational,
    hi_inclusive: bool,
    denom: i64,
) -> Option<(i64, i64)> {
    let d = int(denom);
    let (lo, hi) = (lo * d, hi * d);
    let a = if lo_inclusive {
        lo.ceil().to_integer()
    } else {
        lo.floor().to_integer() + 1
    };
    let b = if hi_inclusive {
        hi.floor().to_integer()
    } else {
        hi.ceil().to_integer() - 1
    };
    (a <= b).then_some((a, b))
}

/// Sup-norm ball `B(center, radius)`, i.e. an axis-parallel square.
/// `closed` selects between `||y - c|| <= r` and `||y - c|| < r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(with = "crate::rational::serde_rational_pair")]
    pub center: (Rational, Rational),
    #[serde(with = "crate::rational::serde_rational")]
    pub radius: Rational,
    #[serde(default = "default_closed")]
    pub closed: bool,
}

fn default_closed() -> bool {
    true
}

impl Ball {
    pub fn closed(center: (Rational, Rational), radius: Rational) -> Self {
        assert!(radius >= int(0), "radius must be nonnegative");
        Self {
            center,
            radius,
            closed: true,
        }
    }

    pub fn open(center: (Rational, Rational), radius: Rational) -> Self {
        assert!(radius >= int(0), "radius must be nonnegative");
        Self {
            center,
            radius,
            closed: false,
        }
    }

    pub fn around(p: &ScaledPoint, radius: Rational, closed: bool) -> Self {
        Self {
            center: p.coords(),
            radius,
            closed,
        }
    }

    pub fn center_point(&self) -> ScaledPoint {
        ScaledPoint::from_rationals(self.center.0, self.center.1)
    }

    pub fn contains(&self, p: &ScaledPoint) -> bool {
        let d = sup_dist(p, &self.center_point());
        if self.closed {
            d <= self.radius
        } else {
            d < self.radius
        }
    }

    /// Sup-norm distance from an interior point to the boundary square.
    pub fn depth(&self, p: &ScaledPoint) -> Rational {
        self.radius - sup_dist(p, &self.center_point())
    }

    pub fn as_rect(&self) -> Rect {
        Rect {
            x0: self.center.0 - self.radius,
            x1: self.center.0 + self.radius,
            y0: self.center.1 - self.radius,
            y1: self.center.1 + self.radius,
            half_open: false,
        }
    }

    fn numerator_bounds(&self, denom: i64) -> Option<[i64; 4]> {
        let c = self.closed;
        let (cx, cy) = self.center;
        let r = self.radius;
        let (x0, x1) = numerator_range(cx - r, c, cx + r, c, denom)?;
        let (y0, y1) = numerator_range(cy - r, c, cy + r, c, denom)?;
        Some([x0, x1, y0, y1])
    }
}

/// Axis-aligned rectangle. Closed `[x0,x1]×[y0,y1]`, or half-open
/// `[x0,x1)×[y0,y1)` so that grid partitions count every point once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    #[serde(with = "crate::rational::serde_rational")]
    pub x0: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub x1: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub y0: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub y1: Rational,
    pub half_open: bool,
}

impl Rect {
    pub fn closed(x0: Rational, x1: Rational, y0: Rational, y1: Rational) -> Self {
        assert!(x0 <= x1 && y0 <= y1, "inverted rectangle");
        Self {
            x0,
            x1,
            y0,
            y1,
            half_open: false,
        }
    }

    pub fn half_open(x0: Rational, x1: Rational, y0: Rational, y1: Rational) -> Self {
        assert!(x0 <= x1 && y0 <= y1, "inverted rectangle");
        Self {
            x0,
            x1,
            y0,
            y1,
            half_open: true,
        }
    }

    /// The unit square I² = [-1/2, 1/2]².
    pub fn unit_square() -> Self {
        let h = Rational::new(1, 2);
        Self::closed(-h, h, -h, h)
    }

    pub fn area(&self) -> Rational {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.x0 == self.x1 || self.y0 == self.y1
    }

    pub fn within(&self, other: &Rect) -> bool {
        self.x0 >= other.x0 && self.x1 <= other.x1 && self.y0 >= other.y0 && self.y1 <= other.y1
    }

    pub fn contains(&self, p: &ScaledPoint) -> bool {
        let (x, y) = p.coords();
        if self.half_open {
            self.x0 <= x && x < self.x1 && self.y0 <= y && y < self.y1
        } else {
            self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
        }
    }

    fn numerator_bounds(&self, denom: i64) -> Option<[i64; 4]> {
        let hi = !self.half_open;
        let (x0, x1) = numerator_range(self.x0, true, self.x1, hi, denom)?;
        let (y0, y1) = numerator_range(self.y0, true, self.y1, hi, denom)?;
        Some([x0, x1, y0, y1])
    }
}

/// `Ann(c, inner, outer) = { y : inner < ||y - c|| <= outer }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annulus {
    pub center: (Rational, Rational),
    pub inner: Rational,
    pub outer: Rational,
}

impl Annulus {
    pub fn new(center: (Rational, Rational), inner: Rational, outer: Rational) -> Self {
        assert!(int(0) <= inner && inner <= outer, "annulus radii out of order");
        Self {
            center,
            inner,
            outer,
        }
    }

    pub fn contains(&self, p: &ScaledPoint) -> bool {
        let c = ScaledPoint::from_rationals(self.center.0, self.center.1);
        let d = sup_dist(p, &c);
        self.inner < d && d <= self.outer
    }
}

/// An axis-aligned query region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Ball(Ball),
    Rect(Rect),
}

impl Region {
    pub fn contains(&self, p: &ScaledPoint) -> bool {
        match self {
            Region::Ball(b) => b.contains(p),
            Region::Rect(r) => r.contains(p),
        }
    }

    /// Inclusive numerator bounds `[x0, x1, y0, y1]` over `denom`;
    /// `None` when the region holds no grid point.
    pub fn numerator_bounds(&self, denom: i64) -> Option<[i64; 4]> {
        match self {
            Region::Ball(b) => b.numerator_bounds(denom),
            Region::Rect(r) => r.numerator_bounds(denom),
        }
    }

    /// Number of points of (1/denom)·Z² inside the region.
    pub fn lattice_count(&self, denom: i64) -> u64 {
        match self.numerator_bounds(denom) {
            Some([x0, x1, y0, y1]) => ((x1 - x0 + 1) as u64) * ((y1 - y0 + 1) as u64),
            None => 0,
        }
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

impl From<Rect> for Region {
    fn from(r: Rect) -> Self {
        Region::Rect(r)
    }
}
