//! Finite-scale measurements of maps between point sets: Lipschitz and
//! bi-Lipschitz constants, co-uniformity moduli, regularity constants,
//! counting lower bounds and the boundary-escape diagnostic.

use std::cmp::Ordering;

use num_integer::{Integer, Roots};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    exact_separated_indices, greedy_separated_indices, Ball, LatticePoint, PointSet, Region,
    ScaledPoint,
};
use crate::rational::{int, to_f64, Rational};

/// A finite injective map, stored as index tables between its source and
/// its image. Source and target carry their own denominators.
#[derive(Clone, Debug, PartialEq)]
pub struct BijectionTable {
    source: PointSet,
    target: PointSet,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl BijectionTable {
    /// Builds the table from numerator pairs `(x, f(x))`.
    pub fn new(
        src_denom: i64,
        tgt_denom: i64,
        pairs: Vec<(LatticePoint, LatticePoint)>,
    ) -> Result<Self> {
        let source = PointSet::new(src_denom, pairs.iter().map(|p| p.0).collect())?;
        let target = PointSet::new(tgt_denom, pairs.iter().map(|p| p.1).collect())
            .map_err(|e| Error::Shape(format!("map is not injective: {e}")))?;
        let mut forward = vec![0; pairs.len()];
        let mut inverse = vec![0; pairs.len()];
        for (x, u) in &pairs {
            let i = source.index_of(x).expect("source point present");
            let j = target.index_of(u).expect("target point present");
            forward[i] = j;
            inverse[j] = i;
        }
        Ok(Self {
            source,
            target,
            forward,
            inverse,
        })
    }

    pub fn identity(set: &PointSet) -> Self {
        let n = set.len();
        Self {
            source: set.clone(),
            target: set.clone(),
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_fn(
        source: &PointSet,
        tgt_denom: i64,
        f: impl Fn(LatticePoint) -> LatticePoint,
    ) -> Result<Self> {
        let pairs = source.numerators().iter().map(|&p| (p, f(p))).collect();
        Self::new(source.denom(), tgt_denom, pairs)
    }

    pub fn source(&self) -> &PointSet {
        &self.source
    }

    pub fn target(&self) -> &PointSet {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Target index of source index `i`.
    pub fn image_index(&self, i: usize) -> usize {
        self.forward[i]
    }

    /// Source index of target index `j`.
    pub fn preimage_index(&self, j: usize) -> usize {
        self.inverse[j]
    }

    pub fn apply(&self, p: &ScaledPoint) -> Option<ScaledPoint> {
        self.source
            .locate(p)
            .map(|i| self.target.point(self.forward[i]))
    }

    pub fn preimage(&self, u: &ScaledPoint) -> Option<ScaledPoint> {
        self.target
            .locate(u)
            .map(|j| self.source.point(self.inverse[j]))
    }

    /// Source indices whose image lies in `region`, sorted.
    pub fn preimage_of(&self, region: &Region) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .target
            .query(region)
            .into_iter()
            .map(|j| self.inverse[j])
            .collect();
        v.sort_unstable();
        v
    }

    pub fn invert(&self) -> Self {
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Numerator pairs `(x, f(x))` in source order.
    pub fn pairs(&self) -> impl Iterator<Item = (LatticePoint, LatticePoint)> + '_ {
        self.source
            .numerators()
            .iter()
            .zip(&self.forward)
            .map(|(&x, &j)| (x, self.target.numerators()[j]))
    }

    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let pairs = indices
            .iter()
            .map(|&i| {
                (
                    self.source.numerators()[i],
                    self.target.numerators()[self.forward[i]],
                )
            })
            .collect();
        Self::new(self.source.denom(), self.target.denom(), pairs)
    }
}

/// Positive fraction compared by cross multiplication.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    pub fn new(num: i128, den: i128) -> Self {
        debug_assert!(den > 0);
        Self { num, den }
    }

    pub fn cmp(&self, o: &Frac) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }

    pub fn to_rational(self) -> Rational {
        let g = self.num.gcd(&self.den).max(1);
        Rational::new((self.num / g) as i64, (self.den / g) as i64)
    }
}

/// Ratio `d_T / d_S` of a pair given numerator distances.
fn pair_ratio(ds: i64, dt: i64, den_s: i64, den_t: i64) -> Frac {
    Frac::new(dt as i128 * den_s as i128, ds as i128 * den_t as i128)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Full,
    Pruned,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionReport {
    #[serde(rename = "L", with = "crate::rational::serde_rational")]
    pub lipschitz: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub b: Rational,
    /// Source pair attaining `L`.
    pub witness_l: [ScaledPoint; 2],
    /// Source pair attaining `b`.
    pub witness_b: [ScaledPoint; 2],
}

#[derive(Clone, Copy)]
struct Extremes {
    max: (Frac, usize, usize),
    min: (Frac, usize, usize),
}

impl Extremes {
    fn merge(self, o: Extremes) -> Extremes {
        // ties keep the earlier pair so the result does not depend on threads
        let max = if o.max.0.cmp(&self.max.0) == Ordering::Greater
            || (o.max.0.cmp(&self.max.0) == Ordering::Equal && (o.max.1, o.max.2) < (self.max.1, self.max.2))
        {
            o.max
        } else {
            self.max
        };
        let min = if o.min.0.cmp(&self.min.0) == Ordering::Less
            || (o.min.0.cmp(&self.min.0) == Ordering::Equal && (o.min.1, o.min.2) < (self.min.1, self.min.2))
        {
            o.min
        } else {
            self.min
        };
        Extremes { max, min }
    }
}

fn scan_pairs(f: &BijectionTable, i: usize, js: impl Iterator<Item = usize>) -> Option<Extremes> {
    let src = f.source.numerators();
    let tgt = f.target.numerators();
    let (den_s, den_t) = (f.source.denom(), f.target.denom());
    let mut acc: Option<Extremes> = None;
    for j in js {
        let ds = src[i].sup_dist(&src[j]);
        let dt = tgt[f.forward[i]].sup_dist(&tgt[f.forward[j]]);
        let r = pair_ratio(ds, dt, den_s, den_t);
        let (a, b) = (i.min(j), i.max(j));
        let e = Extremes {
            max: (r, a, b),
            min: (r, a, b),
        };
        acc = Some(match acc {
            None => e,
            Some(x) => x.merge(e),
        });
    }
    acc
}

fn full_scan(f: &BijectionTable) -> Extremes {
    let n = f.len();
    (0..n)
        .into_par_iter()
        .filter_map(|i| scan_pairs(f, i, i + 1..n))
        .reduce_with(Extremes::merge)
        .expect("at least one pair")
}

/// Largest ratio, visiting pairs by growing source distance and stopping
/// once no remaining pair can beat the best ratio found.
fn pruned_max(f: &BijectionTable) -> (Frac, usize, usize) {
    let src = &f.source;
    let [sx0, sx1, sy0, sy1] = src.bounding_box().expect("nonempty");
    let [tx0, tx1, ty0, ty1] = f.target.bounding_box().expect("nonempty");
    let diam_s = (sx1 - sx0).max(sy1 - sy0);
    let diam_t = (tx1 - tx0).max(ty1 - ty0);
    let mut reach = src.cell_size().max(1);
    loop {
        let best = (0..src.len())
            .into_par_iter()
            .filter_map(|i| {
                let p = src.numerators()[i];
                let near = src.query_numerators(p.x - reach, p.x + reach, p.y - reach, p.y + reach);
                scan_pairs(f, i, near.into_iter().filter(|&j| j > i))
            })
            .reduce_with(Extremes::merge);
        if reach >= diam_s {
            return best.expect("at least one pair").max;
        }
        if let Some(b) = best {
            // every unvisited pair has source distance > reach
            let bound = pair_ratio(reach + 1, diam_t, src.denom(), f.target.denom());
            if b.max.0.cmp(&bound) == Ordering::Greater {
                return b.max;
            }
        }
        reach = (reach * 2).min(diam_s);
    }
}

pub fn lipschitz_constants(f: &BijectionTable) -> Result<DistortionReport> {
    lipschitz_constants_with(f, ScanMode::Full)
}

/// `L = max d_T(f x, f y)/d_S(x, y)` and `b = min` of the same ratio over all
/// pairs. The pruned mode computes `b` as `1/L(f⁻¹)` and agrees with the full
/// scan on both values.
pub fn lipschitz_constants_with(f: &BijectionTable, mode: ScanMode) -> Result<DistortionReport> {
    if f.len() < 2 {
        return Err(Error::Degenerate(
            "Lipschitz constants need at least two source points".into(),
        ));
    }
    let pair = |a: usize, b: usize| [f.source.point(a), f.source.point(b)];
    match mode {
        ScanMode::Full => {
            let e = full_scan(f);
            Ok(DistortionReport {
                lipschitz: e.max.0.to_rational(),
                b: e.min.0.to_rational(),
                witness_l: pair(e.max.1, e.max.2),
                witness_b: pair(e.min.1, e.min.2),
            })
        }
        ScanMode::Pruned => {
            let (l, a, b) = pruned_max(f);
            let inv = f.invert();
            let (li, c, d) = pruned_max(&inv);
            Ok(DistortionReport {
                lipschitz: l.to_rational(),
                b: Frac::new(li.den, li.num).to_rational(),
                witness_l: pair(a, b),
                witness_b: pair(inv.forward[c], inv.forward[d]),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusSample {
    #[serde(with = "crate::rational::serde_rational")]
    pub r: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub omega: Rational,
    /// `(x, y)` with `||f(y) - f(x)|| <= r` and `||y - x|| = omega`.
    pub witness: Option<[ScaledPoint; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoUniformityModulus {
    pub samples: Vec<ModulusSample>,
    pub fitted_exponent: Option<f64>,
}

impl CoUniformityModulus {
    /// Builds a modulus from `(r, ω(r))` pairs; the exponent is fitted
    /// over the samples with positive ω.
    pub fn from_samples(samples: Vec<(Rational, Rational)>) -> Self {
        let samples: Vec<ModulusSample> = samples
            .into_iter()
            .map(|(r, omega)| ModulusSample {
                r,
                omega,
                witness: None,
            })
            .collect();
        let fitted_exponent = fit_exponent(&samples);
        Self {
            samples,
            fitted_exponent,
        }
    }

    /// Samples `omega` at each radius, rounding to nearby rationals.
    pub fn synthetic(radii: &[f64], omega: impl Fn(f64) -> f64) -> Self {
        let to_rat = |v: f64| {
            Rational::approximate_float(v).expect("finite value representable as a rational")
        };
        Self::from_samples(radii.iter().map(|&r| (to_rat(r), to_rat(omega(r)))).collect())
    }
}

/// Least-squares slope of `log ω` against `log r`.
fn fit_exponent(samples: &[ModulusSample]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.omega > int(0) && s.r > int(0))
        .map(|s| (to_f64(&s.r).ln(), to_f64(&s.omega).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Empirical co-uniformity modulus
/// `ω(r) = max_x max { ||y - x|| : ||f(y) - f(x)|| <= r }`.
pub fn co_uniformity(f: &BijectionTable, radii: &[Rational]) -> Result<CoUniformityModulus> {
    if radii.iter().any(|r| *r <= int(0)) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("radii must be sorted".into()));
    }
    let src = f.source.numerators();
    let samples = radii
        .iter()
        .map(|&r| {
            let best = (0..f.len())
                .into_par_iter()
                .map(|i| {
                    let ball = Ball::around(&f.target.point(f.forward[i]), r, true);
                    let mut best = (0i64, i, i);
                    for j in f.preimage_of(&Region::Ball(ball)) {
                        let d = src[i].sup_dist(&src[j]);
                        if d > best.0 {
                            best = (d, i, j);
                        }
                    }
                    best
                })
                .reduce_with(|a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                        b
                    } else {
                        a
                    }
                });
            match best {
                Some((d, i, j)) => ModulusSample {
                    r,
                    omega: Rational::new(d, f.source.denom()),
                    witness: Some([f.source.point(i), f.source.point(j)]),
                },
                None => ModulusSample {
                    r,
                    omega: int(0),
                    witness: None,
                },
            }
        })
        .collect::<Vec<_>>();
    let fitted_exponent = fit_exponent(&samples);
    Ok(CoUniformityModulus {
        samples,
        fitted_exponent,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateResult {
    pub pass: bool,
    pub exponent: f64,
    pub ratio_nonincreasing: bool,
}

/// Finite-sample proxy for "ω(r) = o(r^d)": passes iff the fitted exponent
/// is at most `d - 0.1` and `ω(r)/r^d` does not increase over the top
/// octave of the sampled radii.
pub fn order_gate(m: &CoUniformityModulus, d: u32) -> Result<GateResult> {
    let usable: Vec<&ModulusSample> = m
        .samples
        .iter()
        .filter(|s| s.omega > int(0) && s.r > int(0))
        .collect();
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable samples, at least 4 needed",
            usable.len()
        )));
    }
    let rmin = usable.iter().map(|s| s.r).min().unwrap();
    let rmax = usable.iter().map(|s| s.r).max().unwrap();
    if rmax < rmin * int(4) {
        return Err(Error::InsufficientData(
            "samples span less than two octaves of r".into(),
        ));
    }
    let exponent = fit_exponent(&m.samples).expect("enough samples");
    let mut top: Vec<&ModulusSample> = usable
        .into_iter()
        .filter(|s| s.r * int(2) >= rmax)
        .collect();
    top.sort_by_key(|a| a.r);
    let ratio = |s: &ModulusSample| {
        use num_rational::BigRational;
        let r = crate::rational::to_big(&s.r);
        crate::rational::to_big(&s.omega) / num_traits::pow::pow(r, d as usize) as BigRational
    };
    let ratio_nonincreasing = top.windows(2).all(|w| ratio(w[1]) <= ratio(w[0]));
    Ok(GateResult {
        pass: exponent <= d as f64 - 0.1 && ratio_nonincreasing,
        exponent,
        ratio_nonincreasing,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallCertificate {
    pub ball: Ball,
    pub preimage: usize,
    /// Largest `C·r`-separated subset of the preimage found at `C = C_hat`.
    pub separated: usize,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityEstimate {
    pub c_hat: u32,
    /// Some preimage was too large for the exhaustive search within its
    /// node budget and a greedy subset was used instead.
    pub approximate: bool,
    pub certificates: Vec<BallCertificate>,
    /// A ball on which `C_hat - 1` fails, with its oversized separated set.
    pub failing_below: Option<(usize, Vec<ScaledPoint>)>,
}

/// Search-node budget per exhaustive separated-subset call.
pub const SEPARATION_NODE_BUDGET: u64 = 2_000_000;

/// Largest `gap`-separated subset of `pts`, exact unless the budget runs out.
fn separated_subset(pts: &[LatticePoint], denom: i64, gap: Rational, need: usize) -> (Vec<usize>, bool) {
    let greedy = greedy_separated_indices(pts, denom, gap);
    if greedy.len() >= need || pts.len() < need {
        return (greedy, true);
    }
    match exact_separated_indices(pts, denom, gap, Some(SEPARATION_NODE_BUDGET)) {
        Some(best) => (best, true),
        None => (greedy, false),
    }
}

/// Smallest `C` in `[1, search_cap]` such that no preimage of a sampled ball
/// `B(y, r)` contains a `C·r`-separated set of more than `C` points.
///
/// This is the separated-set form of regularity, so `Reg(f) <= C_hat` and
/// `C_hat <= 2·Reg(f)`.
pub fn regularity_constant(
    f: &BijectionTable,
    balls: &[Ball],
    search_cap: u32,
) -> Result<RegularityEstimate> {
    let preimages: Vec<Vec<LatticePoint>> = balls
        .iter()
        .map(|b| {
            f.preimage_of(&Region::Ball(b.clone()))
                .into_iter()
                .map(|i| f.source.numerators()[i])
                .collect()
        })
        .collect();
    let denom = f.source.denom();
    let mut failing_below = None;
    for c in 1..=search_cap {
        let results: Vec<(Vec<usize>, bool)> = balls
            .par_iter()
            .zip(&preimages)
            .map(|(b, pts)| separated_subset(pts, denom, b.radius * int(c as i64), c as usize + 1))
            .collect();
        let bad = results.iter().position(|(s, _)| s.len() > c as usize);
        match bad {
            Some(k) => {
                let pts = &preimages[k];
                failing_below = Some((
                    k,
                    results[k]
                        .0
                        .iter()
                        .map(|&i| pts[i].scaled(denom))
                        .collect(),
                ));
            }
            None => {
                let certificates = balls
                    .iter()
                    .zip(&preimages)
                    .zip(&results)
                    .map(|((b, pts), (s, exact))| BallCertificate {
                        ball: b.clone(),
                        preimage: pts.len(),
                        separated: s.len(),
                        exact: *exact,
                    })
                    .collect::<Vec<_>>();
                return Ok(RegularityEstimate {
                    c_hat: c,
                    approximate: certificates.iter().any(|c| !c.exact),
                    certificates,
                    failing_below,
                });
            }
        }
    }
    Err(Error::CapExceeded { cap: search_cap })
}

/// Closed lattice-centred balls of each radius whose centres are source
/// points with the whole ball inside the source bounding box.
pub fn interior_balls(set: &PointSet, radii: &[Rational]) -> Vec<Ball> {
    let Some([x0, x1, y0, y1]) = set.bounding_box() else {
        return Vec::new();
    };
    let d = set.denom();
    let mut out = Vec::new();
    for &r in radii {
        for p in set.iter() {
            let (x, y) = p.coords();
            let inside = x - r >= Rational::new(x0, d)
                && x + r <= Rational::new(x1, d)
                && y - r >= Rational::new(y0, d)
                && y + r <= Rational::new(y1, d);
            if inside {
                out.push(Ball::around(&p, r, true));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountingBound {
    #[serde(rename = "L_lb", with = "crate::rational::serde_rational")]
    pub l_lb: Rational,
    pub center: Option<ScaledPoint>,
    #[serde(with = "crate::rational::serde_rational")]
    pub radius: Rational,
    pub count: usize,
}

/// Certified lower bound on the Lipschitz constant of any injection of
/// `source` into a lattice of spacing `t`.
///
/// An `L`-Lipschitz injection sends the `N` points of `B(x, r)` into a
/// lattice ball with `(2⌊Lr/t⌋ + 1)²` points, hence
/// `L >= ⌈(⌈√N⌉ - 1)/2⌉ · t / r`.
pub fn counting_lower_bound(
    source: &PointSet,
    t: Rational,
    radii: &[Rational],
) -> Result<CountingBound> {
    if source.is_empty() {
        return Err(Error::EmptyInput("source has no points".into()));
    }
    if t <= int(0) {
        return Err(Error::Domain("lattice spacing must be positive".into()));
    }
    let mut best = CountingBound {
        l_lb: int(0),
        center: None,
        radius: int(0),
        count: 0,
    };
    for &r in radii.iter().filter(|r| **r > int(0)) {
        let found = (0..source.len())
            .into_par_iter()
            .map(|i| {
                let p = source.point(i);
                let n = source.query(&Region::Ball(Ball::around(&p, r, true))).len();
                (n, i)
            })
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        if let Some((n, i)) = found {
            let value = Rational::from_integer(ceil_sqrt(n as i64) / 2) * t / r;
            if value > best.l_lb {
                best = CountingBound {
                    l_lb: value,
                    center: Some(source.point(i)),
                    radius: r,
                    count: n,
                };
            }
        }
    }
    Ok(best)
}

fn ceil_sqrt(n: i64) -> i64 {
    let s = n.sqrt();
    if s * s == n {
        s
    } else {
        s + 1
    }
}

/// Radii `R0 - j·L/l` for `j = 0, 1, ...` while positive.
pub fn nested_family(r0: Rational, lip: Rational, l: i64) -> Vec<Rational> {
    let step = lip / int(l);
    let mut out = Vec::new();
    let mut r = r0;
    while r > int(0) {
        out.push(r);
        r -= step;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EscapeRecord {
    pub j: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub radius: Rational,
    /// No source point maps into this level's ball.
    pub skipped: bool,
    pub x_star: Option<ScaledPoint>,
    pub image: Option<ScaledPoint>,
    #[serde(with = "opt_rational")]
    pub boundary_distance: Option<Rational>,
    pub claim1_ok: bool,
    /// Points of `f⁻¹(Q_{j-1})` in the annulus between `||x_j||` and
    /// `||x_{j-1}||` all land in `Q_{j-1} ∖ Q_j`.
    pub annulus_containment: Option<bool>,
    /// Points of `f⁻¹(Q_0)` in the same annulus that land outside
    /// `Q_{j-1} ∖ Q_j`; informational.
    pub q0_strays: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EscapeDiagnostic {
    pub records: Vec<EscapeRecord>,
    pub claim1_violations: usize,
    pub claim4_violations: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub bound: Rational,
}

mod opt_rational {
    use crate::rational::{fmt_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&fmt_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| crate::rational::parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn norm_num(p: &LatticePoint) -> i64 {
    p.x.abs().max(p.y.abs())
}

/// Boundary-escape diagnostic for a normalized map `f_n`.
///
/// `Q_j` is the open sup-norm ball of radius `radii[j]` around `center`.
/// For each level, `x_star` is a source point of largest norm mapped into
/// `Q_j` (ties go to the lexicographically smallest point). Its image must
/// lie within `L/l` of `∂Q_j`; the argument needs the eight neighbours of
/// `x_star` at offsets `±1/l` to lie in the patch, otherwise the call fails.
pub fn escape_check(
    f: &BijectionTable,
    center: ScaledPoint,
    radii: &[Rational],
    lip: Rational,
    l: i64,
) -> Result<EscapeDiagnostic> {
    if radii.is_empty() || radii.iter().any(|r| *r <= int(0)) {
        return Err(Error::Domain("radii must be positive and nonempty".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("radii must be strictly decreasing".into()));
    }
    let den = f.source.denom();
    if l <= 0 || den % l != 0 {
        return Err(Error::Alignment(format!(
            "source denominator {den} is not a multiple of l = {l}"
        )));
    }
    let step = den / l;
    let [bx0, bx1, by0, by1] = f.source.bounding_box().ok_or(Error::EmptyInput("empty map".into()))?;
    let src = f.source.numerators();
    let bound = lip / int(l);
    let balls: Vec<Ball> = radii.iter().map(|&r| Ball::around(&center, r, false)).collect();
    let in_ball = |k: usize, i: usize| balls[k].contains(&f.target.point(f.forward[i]));

    let mut records: Vec<EscapeRecord> = Vec::new();
    let mut stars: Vec<Option<usize>> = Vec::new();
    for (j, ball) in balls.iter().enumerate() {
        let pre = f.preimage_of(&Region::Ball(ball.clone()));
        // sorted indices are lexicographic, so the first maximiser wins ties
        let star = pre
            .iter()
            .copied()
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if norm_num(&src[b]) >= norm_num(&src[i]) => Some(b),
                _ => Some(i),
            });
        stars.push(star);
        let Some(s) = star else {
            records.push(EscapeRecord {
                j,
                radius: radii[j],
                skipped: true,
                x_star: None,
                image: None,
                boundary_distance: None,
                claim1_ok: true,
                annulus_containment: None,
                q0_strays: 0,
            });
            continue;
        };
        let p = src[s];
        for dx in [-step, 0, step] {
            for dy in [-step, 0, step] {
                let (qx, qy) = (p.x + dx, p.y + dy);
                if qx < bx0 || qx > bx1 || qy < by0 || qy > by1 {
                    return Err(Error::Precondition(format!(
                        "neighbour of x_star {} at level {j} lies outside the patch",
                        p.scaled(den)
                    )));
                }
            }
        }
        let image = f.target.point(f.forward[s]);
        let dist = ball.depth(&image);
        let mut rec = EscapeRecord {
            j,
            radius: radii[j],
            skipped: false,
            x_star: Some(p.scaled(den)),
            image: Some(image),
            boundary_distance: Some(dist),
            claim1_ok: dist <= bound,
            annulus_containment: None,
            q0_strays: 0,
        };
        if j > 0 {
            if let Some(prev) = stars[j - 1] {
                let (inner, outer) = (norm_num(&p), norm_num(&src[prev]));
                let in_ring = |i: usize| {
                    let n = norm_num(&src[i]);
                    inner < n && n <= outer
                };
                let lands_right = |i: usize| in_ball(j - 1, i) && !in_ball(j, i);
                let mut ok = true;
                for i in f.preimage_of(&Region::Ball(balls[j - 1].clone())) {
                    if in_ring(i) && !lands_right(i) {
                        ok = false;
                    }
                }
                rec.q0_strays = f
                    .preimage_of(&Region::Ball(balls[0].clone()))
                    .into_iter()
                    .filter(|&i| in_ring(i) && !lands_right(i))
                    .count();
                rec.annulus_containment = Some(ok);
            }
        }
        records.push(rec);
    }
    Ok(EscapeDiagnostic {
        claim1_violations: records.iter().filter(|r| !r.claim1_ok).count(),
        claim4_violations: records
            .iter()
            .filter(|r| r.annulus_containment == Some(false))
            .count(),
        records,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn block(lo: i64, hi: i64) -> PointSet {
        PointSet::grid(
            1,
            &Region::Rect(crate::geometry::Rect::closed(int(lo), int(hi), int(lo), int(hi))),
        )
    }

    fn swap_map() -> BijectionTable {
        BijectionTable::from_fn(&block(-2, 2), 1, |p| match (p.x, p.y) {
            (0, 0) => LatticePoint::new(1, 0),
            (1, 0) => LatticePoint::new(0, 0),
            _ => p,
        })
        .unwrap()
    }

    /// Oracle: exhaustive pair scan with rational arithmetic.
    fn oracle_l(f: &BijectionTable) -> (Rational, Rational) {
        let pts: Vec<_> = f.pairs().collect();
        let (ds, dt) = (f.source().denom(), f.target().denom());
        let mut hi = None::<Rational>;
        let mut lo = None::<Rational>;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let r = Rational::new(pts[a].1.sup_dist(&pts[b].1), dt)
                    / Rational::new(pts[a].0.sup_dist(&pts[b].0), ds);
                hi = Some(hi.map_or(r, |h| h.max(r)));
                lo = Some(lo.map_or(r, |h| h.min(r)));
            }
        }
        (hi.unwrap(), lo.unwrap())
    }

    #[test]
    fn identity_is_isometric() {
        let f = BijectionTable::identity(&block(0, 4));
        let r = lipschitz_constants(&f).unwrap();
        assert_eq!((r.lipschitz, r.b), (int(1), int(1)));
    }

    #[test]
    fn swap_has_l_two() {
        let f = swap_map();
        let r = lipschitz_constants(&f).unwrap();
        assert_eq!(r.lipschitz, int(2));
        assert_eq!(oracle_l(&f).0, int(2));
        let [p, q] = r.witness_l;
        let ratio = crate::geometry::sup_dist(&f.apply(&p).unwrap(), &f.apply(&q).unwrap())
            / crate::geometry::sup_dist(&p, &q);
        assert_eq!(ratio, int(2));
        let ws: Vec<_> = r.witness_l.iter().map(|p| (p.num_x, p.num_y)).collect();
        assert!(ws.contains(&(1, 0)) || ws.contains(&(0, 0)));
    }

    #[test]
    fn pruned_agrees_with_full() {
        let f = BijectionTable::from_fn(&block(0, 7), 1, |p| {
            if p.y == 3 && p.x < 7 {
                LatticePoint::new(p.x + 1, p.y)
            } else if p.y == 3 {
                LatticePoint::new(0, 3)
            } else {
                p
            }
        })
        .unwrap();
        let a = lipschitz_constants_with(&f, ScanMode::Full).unwrap();
        let b = lipschitz_constants_with(&f, ScanMode::Pruned).unwrap();
        assert_eq!((a.lipschitz, a.b), (b.lipschitz, b.b));
        assert_eq!((a.lipschitz, a.b), oracle_l(&f));
    }

    #[test]
    fn scaling_keeps_ratios() {
        let f = BijectionTable::from_fn(&block(0, 3), 4, |p| p).unwrap();
        let r = lipschitz_constants(&f).unwrap();
        assert_eq!((r.lipschitz, r.b), (rat(1, 4), rat(1, 4)));
        let g = BijectionTable::new(
            4,
            4,
            block(0, 3).numerators().iter().map(|&p| (p, p)).collect(),
        )
        .unwrap();
        assert_eq!(lipschitz_constants(&g).unwrap().lipschitz, int(1));
    }

    #[test]
    fn singleton_is_degenerate() {
        let f = BijectionTable::identity(&block(0, 0));
        assert!(matches!(lipschitz_constants(&f), Err(Error::Degenerate(_))));
    }

    #[test]
    fn non_injective_table_is_rejected() {
        let pairs = vec![
            (LatticePoint::new(0, 0), LatticePoint::new(5, 5)),
            (LatticePoint::new(1, 0), LatticePoint::new(5, 5)),
        ];
        assert!(matches!(BijectionTable::new(1, 1, pairs), Err(Error::Shape(_))));
    }

    #[test]
    fn co_uniformity_examples() {
        let f = BijectionTable::identity(&block(-6, 6));
        let m = co_uniformity(&f, &[int(1), int(2), int(4)]).unwrap();
        let om: Vec<_> = m.samples.iter().map(|s| s.omega).collect();
        assert_eq!(om, vec![int(1), int(2), int(4)]);
        let s = co_uniformity(&swap_map(), &[int(1)]).unwrap();
        assert_eq!(s.samples[0].omega, int(2));
        let m = co_uniformity(&f, &[rat(3, 2)]).unwrap();
        assert_eq!(m.samples[0].omega, int(1));
    }

    #[test]
    fn gate_examples() {
        let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
        let lin = order_gate(&CoUniformityModulus::synthetic(&radii, |r| r), 2).unwrap();
        assert!(lin.pass);
        let mid = order_gate(&CoUniformityModulus::synthetic(&radii, |r| r.powf(1.5)), 2).unwrap();
        assert!(mid.pass);
        assert!((mid.exponent - 1.5).abs() < 1e-6);
        let sq = order_gate(&CoUniformityModulus::synthetic(&radii, |r| r * r), 2).unwrap();
        assert!(!sq.pass);
        let few = CoUniformityModulus::synthetic(&radii[..3], |r| r);
        assert!(matches!(order_gate(&few, 2), Err(Error::InsufficientData(_))));
        let narrow = CoUniformityModulus::synthetic(&[1.0, 1.5, 2.0, 3.0], |r| r);
        assert!(matches!(order_gate(&narrow, 2), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn identity_regularity_is_three() {
        let set = block(-8, 8);
        let f = BijectionTable::identity(&set);
        let balls = interior_balls(&set, &[int(1), int(2), int(4)]);
        let est = regularity_constant(&f, &balls, 50).unwrap();
        assert_eq!(est.c_hat, 3);
        assert!(!est.approximate);
        let (_, witness) = est.failing_below.unwrap();
        assert!(witness.len() > 2);
    }

    #[test]
    fn singleton_preimages_give_one() {
        let set = block(0, 5);
        let f = BijectionTable::identity(&set);
        let balls: Vec<_> = set.iter().map(|p| Ball::around(&p, rat(1, 2), true)).collect();
        assert_eq!(regularity_constant(&f, &balls, 5).unwrap().c_hat, 1);
    }

    #[test]
    fn folded_columns_need_more_than_one() {
        // column pairs {2k, 2k+1} are squeezed into column k, rows interleaved
        let set = block(0, 5);
        let f = BijectionTable::from_fn(&set, 1, |p| LatticePoint::new(p.x / 2, 2 * p.y + p.x % 2)).unwrap();
        let balls = interior_balls(f.target(), &[int(1), int(2)]);
        let balls: Vec<_> = balls
            .into_iter()
            .chain(f.target().iter().map(|p| Ball::around(&p, int(1), true)))
            .collect();
        assert!(regularity_constant(&f, &balls, 20).unwrap().c_hat >= 2);
    }

    #[test]
    fn regularity_cap() {
        let set = block(0, 4);
        let f = BijectionTable::identity(&set);
        let balls = interior_balls(&set, &[int(2)]);
        assert!(matches!(
            regularity_constant(&f, &balls, 2),
            Err(Error::CapExceeded { cap: 2 })
        ));
    }

    #[test]
    fn counting_bound_examples() {
        let full = block(-3, 3);
        let b = counting_lower_bound(&full, int(1), &[int(1), int(2)]).unwrap();
        assert_eq!(b.l_lb, int(1));
        let half = PointSet::grid(
            2,
            &Region::Rect(crate::geometry::Rect::closed(int(0), int(4), int(0), int(4))),
        );
        let b = counting_lower_bound(&half, int(1), &[int(2)]).unwrap();
        assert_eq!((b.count, b.l_lb), (81, int(2)));
        let cross = PointSet::lattice(vec![
            LatticePoint::new(0, 0),
            LatticePoint::new(1, 0),
            LatticePoint::new(-1, 0),
            LatticePoint::new(0, 1),
            LatticePoint::new(0, -1),
        ])
        .unwrap();
        let b = counting_lower_bound(&cross, int(1), &[int(1)]).unwrap();
        assert_eq!((b.count, b.l_lb), (5, int(1)));
    }

    #[test]
    fn ceil_sqrt_values() {
        let got: Vec<_> = [1, 2, 4, 5, 9, 10, 81].iter().map(|&n| ceil_sqrt(n)).collect();
        assert_eq!(got, vec![1, 2, 2, 3, 3, 4, 9]);
    }

    fn normalized_block(l: i64) -> PointSet {
        PointSet::grid(
            l,
            &Region::Rect(crate::geometry::Rect::closed(rat(-1, 2), rat(1, 2), rat(-1, 2), rat(1, 2))),
        )
    }

    #[test]
    fn escape_identity_is_clean() {
        let l = 32;
        let f = BijectionTable::identity(&normalized_block(l));
        let radii = nested_family(rat(1, 4), int(1), l);
        let d = escape_check(&f, ScaledPoint::new(3, -2, l), &radii, int(1), l).unwrap();
        assert_eq!(d.claim1_violations, 0);
        assert_eq!(d.claim4_violations, 0);
        assert!(d.records.iter().all(|r| r.skipped || r.boundary_distance.unwrap() <= rat(1, l)));
    }

    #[test]
    fn escape_skips_empty_levels() {
        let l = 32;
        let f = BijectionTable::identity(&normalized_block(l));
        let radii = vec![rat(1, 4), rat(1, 64)];
        let d = escape_check(&f, ScaledPoint::new(1, 1, 64), &radii, int(1), l).unwrap();
        assert!(d.records[1].skipped);
    }

    #[test]
    fn escape_flags_teleport() {
        let l = 32;
        let set = normalized_block(l);
        let radii = nested_family(rat(1, 4), int(1), l);
        // the deep point (-1/4 - 1/32, 0) swaps images with the centre (0, 0)
        let deep = LatticePoint::new(-9, 0);
        let centre = LatticePoint::new(0, 0);
        let f = BijectionTable::from_fn(&set, l, |p| {
            if p == deep {
                centre
            } else if p == centre {
                deep
            } else {
                p
            }
        })
        .unwrap();
        let d = escape_check(&f, ScaledPoint::new(0, 0, l), &radii, int(1), l).unwrap();
        assert!(d.claim1_violations > 0);
        let first = d.records.iter().find(|r| !r.claim1_ok).unwrap();
        assert_eq!(first.x_star.unwrap(), deep.scaled(l));
    }

    #[test]
    fn escape_needs_interior_argmax() {
        let l = 32;
        let f = BijectionTable::identity(&normalized_block(l));
        let radii = vec![rat(3, 8)];
        let r = escape_check(&f, ScaledPoint::new(1, 1, 4), &radii, int(1), l);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
