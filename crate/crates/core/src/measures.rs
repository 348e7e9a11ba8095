//! Renormalized patches and maps, counting measures, rectangle discrepancy,
//! mass-loss accounting and the symmetric-difference band diagnostic.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Signed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{DeloneSet, Level};
use crate::density::DensitySpec;
use crate::distortion::BijectionTable;
use crate::error::{Error, Result};
use crate::geometry::{sup_dist, Ball, LatticePoint, PointSet, Rect, Region, ScaledPoint};
use crate::rational::{big_to_f64, fmt_rational, int, rat, to_big, Rational};

/// `φ_n(D_ρ ∩ S_n)` as points of `(1/l)·Z² ∩ I²`.
#[derive(Clone, Debug)]
pub struct NormalizedPatch {
    pub level: usize,
    pub l: i64,
    pub points: PointSet,
}

/// Numerators of `φ(p)` for `p` over `k`: `(p/k - a)/l - 1/2` over `k·l`.
fn normalize_numerator(p: LatticePoint, k: i64, lv: &Level) -> LatticePoint {
    let shift = |a: i64| k * a + k * lv.l / 2;
    LatticePoint::new(p.x - shift(lv.anchor[0]), p.y - shift(lv.anchor[1]))
}

pub fn normalize_patch(d: &DeloneSet, n: usize) -> Result<NormalizedPatch> {
    let pts = d.level_points(n)?;
    let lv = &d.schedule().levels[n];
    let moved = pts
        .numerators()
        .iter()
        .map(|&p| normalize_numerator(p, 1, lv))
        .collect();
    Ok(NormalizedPatch {
        level: n,
        l: lv.l,
        points: PointSet::new(lv.l, moved)?,
    })
}

/// `f_n(x) = (f(φ⁻¹ x) − f(φ⁻¹ base)) / l` on the normalized source.
/// `base` is given in normalized coordinates.
pub fn normalize_map(f: &BijectionTable, level: &Level, base: ScaledPoint) -> Result<BijectionTable> {
    let k = f.source().denom();
    let kt = f.target().denom();
    let square = level.square();
    if let Some(p) = f.source().iter().find(|p| !square.contains(p)) {
        return Err(Error::Domain(format!("source point {p} lies outside the square")));
    }
    let pairs: Vec<(LatticePoint, LatticePoint)> = f
        .pairs()
        .map(|(x, u)| (normalize_numerator(x, k, level), u))
        .collect();
    let src_denom = k * level.l;
    let b = base
        .numerators_over(src_denom)
        .and_then(|b| pairs.iter().find(|(x, _)| *x == b))
        .ok_or_else(|| Error::Domain(format!("base {base} is not a point of the patch")))?
        .1;
    let shifted = pairs
        .into_iter()
        .map(|(x, u)| (x, LatticePoint::new(u.x - b.x, u.y - b.y)))
        .collect();
    BijectionTable::new(src_denom, kt * level.l, shifted)
}

/// `A ↦ |carrier ∩ A| / l²`.
#[derive(Clone, Debug)]
pub struct CountingMeasure {
    pub carrier: PointSet,
    pub l: i64,
}

impl CountingMeasure {
    pub fn new(carrier: PointSet, l: i64) -> Self {
        assert!(l > 0, "normalizer must be positive");
        Self { carrier, l }
    }

    /// The grid measure ν: all of `(1/l)·Z²` restricted to `region`.
    pub fn grid(l: i64, region: &Region) -> Self {
        Self::new(PointSet::grid(l, region), l)
    }

    fn normalize(&self, count: usize) -> Rational {
        Rational::new(count as i64, self.l * self.l)
    }
}

pub fn measure(m: &CountingMeasure, region: &Region) -> Rational {
    m.normalize(m.carrier.query(region).len())
}

/// `μ(f⁻¹(region))`, the pushforward measure of a target region.
pub fn pushforward(f: &BijectionTable, m: &CountingMeasure, region: &Region) -> Result<Rational> {
    if f.source() != &m.carrier {
        return Err(Error::Shape("measure carrier differs from the map source".into()));
    }
    Ok(m.normalize(f.target().query(region).len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectFamily {
    pub name: String,
    pub rects: Vec<Rect>,
}

impl RectFamily {
    /// The `4^depth` half-open dyadic squares of side `2^-depth`.
    pub fn dyadic(depth: u32) -> Self {
        Self {
            name: format!("dyadic:{depth}"),
            ..Self::cells(1i64 << depth)
        }
    }

    /// The `m × m` half-open cells of I².
    pub fn cells(m: i64) -> Self {
        let mut rects = Vec::new();
        for j in 0..m {
            for i in 0..m {
                rects.push(unit_cell(i, j, m));
            }
        }
        Self {
            name: format!("cells:{m}"),
            rects,
        }
    }

    /// `dyadic:<depth>`, `cells:<m>`, or `cells` (using `default_m`).
    pub fn parse(spec: &str, default_m: i64) -> Result<Self> {
        let bad = || Error::Config(format!("unknown rectangle family '{spec}'"));
        match spec.split_once(':') {
            None if spec == "cells" => Ok(Self::cells(default_m)),
            Some(("dyadic", d)) => {
                let d: u32 = d.parse().map_err(|_| bad())?;
                if d > 12 {
                    return Err(Error::Config("dyadic depth above 12".into()));
                }
                Ok(Self::dyadic(d))
            }
            Some(("cells", m)) => match m.parse::<i64>() {
                Ok(m) if m > 0 => Ok(Self::cells(m)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

fn unit_cell(i: i64, j: i64, k: i64) -> Rect {
    let h = rat(1, 2);
    Rect::half_open(
        rat(i, k) - h,
        rat(i + 1, k) - h,
        rat(j, k) - h,
        rat(j + 1, k) - h,
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RectRow {
    pub rect_id: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub mu: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub nu: Rational,
    pub integral: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Discrepancy {
    pub family: String,
    pub sup: f64,
    pub argmax: Option<usize>,
    pub rows: Vec<RectRow>,
}

impl Discrepancy {
    /// CSV rows `level,rect_id,mu,nu,integral,abs_error`, without header.
    pub fn csv_rows(&self, level: usize) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{level},{},{},{},{},{}",
                r.rect_id,
                fmt_rational(&r.mu),
                fmt_rational(&r.nu),
                r.integral,
                r.abs_error
            );
        }
        out
    }
}

pub const CSV_HEADER: &str = "level,rect_id,mu,nu,integral,abs_error";

/// `sup_A |μ(A) − ∫_A ρ|` over the family. The grid measure ν is reported
/// alongside at the same normalizer.
pub fn discrepancy(m: &CountingMeasure, rho: &DensitySpec, fam: &RectFamily) -> Result<Discrepancy> {
    let rows = fam
        .rects
        .par_iter()
        .enumerate()
        .map(|(id, r)| {
            let region = Region::Rect(r.clone());
            let mu = measure(m, &region);
            let nu = Rational::new(region.lattice_count(m.l) as i64, m.l * m.l);
            let integral = rho.integrate(r)?;
            let abs_error = if integral.is_rational() {
                big_to_f64(&(to_big(&mu) - &integral.rational).abs())
            } else {
                let exact: BigRational = to_big(&mu) - &integral.rational;
                (big_to_f64(&exact) - integral.residual).abs()
            };
            Ok(RectRow {
                rect_id: id,
                mu,
                nu,
                integral: integral.value,
                abs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = rows
        .iter()
        .enumerate()
        .fold(None, |best: Option<usize>, (i, r)| match best {
            Some(b) if rows[b].abs_error >= r.abs_error => Some(b),
            _ => Some(i),
        });
    Ok(Discrepancy {
        family: fam.name.clone(),
        sup: argmax.map_or(0.0, |i| rows[i].abs_error),
        argmax,
        rows,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MassLossReport {
    pub missing: Vec<ScaledPoint>,
    #[serde(with = "crate::rational::serde_rational")]
    pub normalized_mass: Rational,
    /// Largest distance from a missing point to `∂q`; zero when none.
    #[serde(with = "crate::rational::serde_rational")]
    pub band_width: Rational,
}

/// Grid points of `(1/l)·Z² ∩ q` that receive no preimage under `f`.
///
/// The centre of `q` must lie on `(1/l_m)·Z²` for one of the `admissible`
/// level sides.
pub fn mass_loss(f: &BijectionTable, q: &Ball, l: i64, admissible: &[i64]) -> Result<MassLossReport> {
    let c = q.center_point();
    if !admissible.iter().any(|&lm| lm > 0 && c.numerators_over(lm).is_some()) {
        return Err(Error::Alignment(format!(
            "centre {c} lies on no admissible grid {admissible:?}"
        )));
    }
    let grid = PointSet::grid(l, &Region::Ball(q.clone()));
    let missing: Vec<ScaledPoint> = grid.iter().filter(|p| !f.target().contains(p)).collect();
    let band_width = missing.iter().map(|p| q.depth(p)).max().unwrap_or(int(0));
    Ok(MassLossReport {
        normalized_mass: Rational::new(missing.len() as i64, l * l),
        missing,
        band_width,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymdiffReport {
    pub pass: bool,
    #[serde(with = "crate::rational::serde_rational")]
    pub sup_diff: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub max_band: Rational,
    pub symdiff: usize,
    pub witness: Option<ScaledPoint>,
}

/// Smallest `k >= 1` such that some point at sup-step `k` from `p`
/// satisfies `hit`.
fn ring_distance(p: LatticePoint, limit: i64, hit: impl Fn(&LatticePoint) -> bool) -> i64 {
    for k in 1..=limit {
        for t in -k..=k {
            for q in [
                LatticePoint::new(p.x + t, p.y - k),
                LatticePoint::new(p.x + t, p.y + k),
                LatticePoint::new(p.x - k, p.y + t),
                LatticePoint::new(p.x + k, p.y + t),
            ] {
                if hit(&q) {
                    return k;
                }
            }
        }
    }
    limit
}

/// Discrete check that `image(g) Δ image(h)` stays within `||g − h||∞` of
/// the boundary of g's image region, the union of closed grid cells of side
/// `1/D` centred on the image points. A grid point `k` steps from the other
/// side of that boundary is at distance `(k − ½)/D` from it.
pub fn symdiff_band(g: &BijectionTable, h: &BijectionTable) -> Result<SymdiffReport> {
    if g.source() != h.source() {
        return Err(Error::Shape("maps have different sources".into()));
    }
    let den = g.target().denom();
    if h.target().denom() != den {
        return Err(Error::Shape("maps use different target denominators".into()));
    }
    let mut sup_diff = int(0);
    for i in 0..g.len() {
        let a = g.target().point(g.image_index(i));
        let b = h.target().point(h.image_index(i));
        sup_diff = sup_diff.max(sup_dist(&a, &b));
    }
    let ga: HashSet<LatticePoint> = g.target().numerators().iter().copied().collect();
    let hb: HashSet<LatticePoint> = h.target().numerators().iter().copied().collect();
    let mut delta: Vec<LatticePoint> = ga.symmetric_difference(&hb).copied().collect();
    delta.sort_unstable();
    let limit = match g.target().bounding_box().zip(h.target().bounding_box()) {
        Some(([a0, a1, b0, b1], [c0, c1, d0, d1])) => {
            (a1.max(c1) - a0.min(c0)).max(b1.max(d1) - b0.min(d0)) + 2
        }
        None => 1,
    };
    let mut max_band = int(0);
    let mut witness = None;
    for p in &delta {
        let inside = ga.contains(p);
        let k = ring_distance(*p, limit, |q| ga.contains(q) != inside);
        let band = Rational::new(2 * k - 1, 2 * den);
        if band > sup_diff && witness.is_none() {
            witness = Some(p.scaled(den));
        }
        max_band = max_band.max(band);
    }
    Ok(SymdiffReport {
        pass: witness.is_none(),
        sup_diff,
        max_band,
        symdiff: delta.len(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build, FillPolicy, ScaleSchedule};
    use num_bigint::BigInt;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn unit_closed() -> Region {
        Region::Rect(Rect::closed(rat(-1, 2), rat(1, 2), rat(-1, 2), rat(1, 2)))
    }

    fn built(rho: DensitySpec) -> DeloneSet {
        let s = ScaleSchedule::new(vec![Level::new(32, 2, [0, 0])]);
        let w = Ball::closed((int(16), int(16)), int(17));
        build(&rho, &s, &w, FillPolicy::RowMajor).unwrap()
    }

    #[test]
    fn constant_patch_is_the_grid() {
        let d = built(DensitySpec::constant(big(1, 1)));
        let p = normalize_patch(&d, 0).unwrap();
        assert_eq!(p.points, PointSet::grid(32, &unit_closed()));
        assert!(p.points.contains(&ScaledPoint::new(-1, -1, 2)));
    }

    #[test]
    fn patch_keeps_cardinality() {
        let d = built(DensitySpec::trig(1, big(1, 9)));
        let p = normalize_patch(&d, 0).unwrap();
        assert_eq!(p.points.len(), d.level_points(0).unwrap().len());
    }

    #[test]
    fn unmaterialized_level_is_a_state_error() {
        let s = ScaleSchedule::new(vec![Level::new(32, 2, [0, 0])]);
        let w = Ball::closed((int(16), int(16)), int(8));
        let d = build(&DensitySpec::constant(big(1, 1)), &s, &w, FillPolicy::RowMajor).unwrap();
        assert!(matches!(normalize_patch(&d, 0), Err(Error::State(_))));
    }

    #[test]
    fn normalized_identity_is_a_translation() {
        let d = built(DensitySpec::trig(1, big(1, 9)));
        let lv = &d.schedule().levels[0];
        let pts = d.level_points(0).unwrap();
        let f = BijectionTable::identity(&pts);
        let base = ScaledPoint::new(2, 4, 32);
        let fnm = normalize_map(&f, lv, base).unwrap();
        assert_eq!(fnm.apply(&base).unwrap().coords(), (int(0), int(0)));
        let x = ScaledPoint::new(-16, 10, 32);
        let y = fnm.apply(&x).unwrap();
        assert_eq!(y.coords(), (x.x() - base.x(), x.y() - base.y()));
        assert!(matches!(
            normalize_map(&f, lv, ScaledPoint::new(1, 1, 64)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn measure_examples() {
        let l = 8;
        let nu = CountingMeasure::grid(l, &unit_closed());
        assert_eq!(measure(&nu, &unit_closed()), Rational::new((l + 1) * (l + 1), l * l));
        let empty = Region::Rect(Rect::half_open(int(0), int(0), int(0), int(1)));
        assert_eq!(measure(&nu, &empty), int(0));
        // additivity over the four quadrant cells
        let total: Rational = RectFamily::cells(2)
            .rects
            .into_iter()
            .map(|r| measure(&nu, &Region::Rect(r)))
            .sum();
        let half_open = Region::Rect(Rect::half_open(rat(-1, 2), rat(1, 2), rat(-1, 2), rat(1, 2)));
        assert_eq!(total, measure(&nu, &half_open));
        assert_eq!(total, int(1));
    }

    #[test]
    fn pushforward_examples() {
        let carrier = PointSet::grid(4, &unit_closed());
        let m = CountingMeasure::new(carrier.clone(), 4);
        let id = BijectionTable::identity(&carrier);
        let r = Region::Rect(Rect::closed(rat(-1, 4), rat(1, 2), int(0), rat(1, 2)));
        assert_eq!(pushforward(&id, &m, &r).unwrap(), measure(&m, &r));
        let shift = BijectionTable::from_fn(&carrier, 4, |p| LatticePoint::new(p.x + 1, p.y)).unwrap();
        let back = Region::Rect(Rect::closed(rat(-1, 2), rat(1, 4), int(0), rat(1, 2)));
        assert_eq!(pushforward(&shift, &m, &r).unwrap(), measure(&m, &back));
        let other = CountingMeasure::new(PointSet::grid(8, &unit_closed()), 8);
        assert!(matches!(pushforward(&id, &other, &r), Err(Error::Shape(_))));
    }

    #[test]
    fn constant_density_has_zero_cell_discrepancy() {
        let l = 16;
        let m = CountingMeasure::grid(l, &unit_closed());
        let d = discrepancy(&m, &DensitySpec::constant(big(1, 1)), &RectFamily::cells(4)).unwrap();
        assert!(d.rows.iter().all(|r| r.abs_error == 0.0 && r.mu == r.nu));
        let none = RectFamily {
            name: "none".into(),
            rects: vec![],
        };
        assert_eq!(discrepancy(&m, &DensitySpec::constant(big(1, 1)), &none).unwrap().sup, 0.0);
    }

    #[test]
    fn trig_cell_discrepancy_within_floor_bound() {
        let d = built(DensitySpec::trig(1, big(1, 9)));
        let p = normalize_patch(&d, 0).unwrap();
        let m = CountingMeasure::new(p.points, 32);
        let disc = discrepancy(&m, d.density(), &RectFamily::cells(2)).unwrap();
        assert!(disc.sup <= 4.0 / 1024.0 + 1e-6);
        assert!(disc.sup > 0.0);
    }

    #[test]
    fn families() {
        assert_eq!(RectFamily::dyadic(4).rects.len(), 256);
        assert_eq!(RectFamily::parse("cells", 8).unwrap().rects.len(), 64);
        assert_eq!(RectFamily::parse("dyadic:2", 1).unwrap().name, "dyadic:2");
        assert!(RectFamily::parse("hex:3", 1).is_err());
    }

    #[test]
    fn mass_loss_examples() {
        let grid = PointSet::grid(8, &unit_closed());
        let id = BijectionTable::identity(&grid);
        let q = Ball::closed((rat(1, 8), int(0)), rat(1, 4));
        let r = mass_loss(&id, &q, 8, &[8]).unwrap();
        assert!(r.missing.is_empty());
        assert_eq!(r.normalized_mass, int(0));
        let off = Ball::closed((rat(1, 16), int(0)), rat(1, 4));
        assert!(matches!(mass_loss(&id, &off, 8, &[8]), Err(Error::Alignment(_))));
        // drop the centre point: one missing point at depth 1/4
        let holed = grid.remove_all(&[LatticePoint::new(1, 0)]);
        let f = BijectionTable::identity(&holed);
        let r = mass_loss(&f, &q, 8, &[2, 8]).unwrap();
        assert_eq!(r.normalized_mass, rat(1, 64));
        assert_eq!(r.band_width, rat(1, 4));
    }

    fn block(n: i64) -> PointSet {
        PointSet::grid(
            1,
            &Region::Rect(Rect::closed(int(0), int(n - 1), int(0), int(n - 1))),
        )
    }

    #[test]
    fn symdiff_examples() {
        let src = block(9);
        let g = BijectionTable::identity(&src);
        assert!(symdiff_band(&g, &g).unwrap().pass);
        let h = BijectionTable::from_fn(&src, 1, |p| LatticePoint::new(p.x + 1, p.y)).unwrap();
        let r = symdiff_band(&g, &h).unwrap();
        assert!(r.pass);
        assert_eq!((r.sup_diff, r.max_band), (int(1), rat(1, 2)));
        // shift the right half of the middle row by one step, vacating the centre
        let chain = BijectionTable::from_fn(&src, 1, |p| {
            if p.y == 4 && p.x >= 4 {
                LatticePoint::new(p.x + 1, p.y)
            } else {
                p
            }
        })
        .unwrap();
        let r = symdiff_band(&g, &chain).unwrap();
        assert!(!r.pass);
        assert_eq!(r.witness.unwrap(), ScaledPoint::lattice(4, 4));
    }
}
