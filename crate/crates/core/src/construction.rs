//! Construction of the Delone set D_ρ ⊂ Z² from a density and a scale
//! schedule, together with an independent audit of the result.
//!
//! Each level `n` places a square `S_n = anchor + [0, l]²`, split into
//! `m × m` cells of side `s = l/m`. A cell receives `⌊∫ ρ∘φ_n⌋` points: all
//! of its points with an even coordinate (the 2Z² part) plus odd-odd extras.
//! Outside the squares every integer point is kept.
//!
//! Cells own their lower-left half-open part `[a, a+s) × [b, b+s)`, so cell
//! counts partition the square. The closing top and right edges of `S_n`
//! have an even coordinate and always belong to the set.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{cell_quota, DensitySpec, Homothety};
use crate::error::{Error, Result};
use crate::geometry::{delone_constants, Ball, LatticePoint, PointSet, Rect, Region};
use crate::rational::{int, Rational};

/// Smallest admissible cell side. For `s >= 16`,
/// `(8/9)s² − 1 >= (3/4)s² + 2s`, so every admissible density gives a
/// quota at least as large as the mandatory 2Z² part of the cell.
pub const MIN_CELL_SIDE: i64 = 16;

/// One level of the schedule: square side `l`, subdivision `m`, and the
/// lower-left corner of `S_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub l: i64,
    pub m: i64,
    pub anchor: [i64; 2],
}

impl Level {
    pub fn new(l: i64, m: i64, anchor: [i64; 2]) -> Self {
        Self { l, m, anchor }
    }

    pub fn cell_side(&self) -> i64 {
        self.l / self.m
    }

    pub fn anchor_point(&self) -> LatticePoint {
        LatticePoint::new(self.anchor[0], self.anchor[1])
    }

    /// Closed square `S_n`.
    pub fn square(&self) -> Rect {
        let [ax, ay] = self.anchor;
        Rect::closed(int(ax), int(ax + self.l), int(ay), int(ay + self.l))
    }

    pub fn homothety(&self) -> Homothety {
        Homothety::new(self.anchor_point(), self.l)
    }

    pub fn in_square(&self, p: &LatticePoint) -> bool {
        let [ax, ay] = self.anchor;
        ax <= p.x && p.x <= ax + self.l && ay <= p.y && p.y <= ay + self.l
    }

    pub fn cell(&self, level: usize, ix: i64, iy: i64) -> Cell {
        let s = self.cell_side();
        Cell {
            level,
            index: (iy * self.m + ix) as usize,
            anchor: LatticePoint::new(self.anchor[0] + ix * s, self.anchor[1] + iy * s),
            side: s,
        }
    }

    pub fn cells(&self, level: usize) -> Vec<Cell> {
        let mut out = Vec::with_capacity((self.m * self.m) as usize);
        for iy in 0..self.m {
            for ix in 0..self.m {
                out.push(self.cell(level, ix, iy));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub levels: Vec<Level>,
}

impl ScaleSchedule {
    pub fn new(levels: Vec<Level>) -> Self {
        Self { levels }
    }

    /// Smallest closed ball containing every square of the schedule.
    pub fn covering_window(&self) -> Option<Ball> {
        let mut it = self.levels.iter().map(|lv| {
            let [ax, ay] = lv.anchor;
            [ax, ax + lv.l, ay, ay + lv.l]
        });
        let first = it.next()?;
        let [x0, x1, y0, y1] = it.fold(first, |[a, b, c, d], [e, f, g, h]| {
            [a.min(e), b.max(f), c.min(g), d.max(h)]
        });
        let r = Rational::new((x1 - x0).max(y1 - y0), 2);
        Some(Ball::closed((Rational::new(x0 + x1, 2), Rational::new(y0 + y1, 2)), r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleViolation {
    pub level: usize,
    pub message: String,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level {}: {}", self.level, self.message)
    }
}

/// Checks every schedule invariant and reports all failures.
pub fn validate_schedule(s: &ScaleSchedule) -> std::result::Result<(), Vec<ScheduleViolation>> {
    let mut v = Vec::new();
    let mut bad = |level: usize, message: String| v.push(ScheduleViolation { level, message });
    if s.levels.is_empty() {
        bad(0, "schedule has no levels".into());
    }
    for (n, lv) in s.levels.iter().enumerate() {
        if lv.l <= 0 || lv.l % 2 != 0 {
            bad(n, format!("l = {} is not an even positive integer", lv.l));
        }
        if lv.m <= 0 || lv.m % 2 != 0 {
            bad(n, format!("m = {} is not an even positive integer", lv.m));
        }
        if lv.m > 0 && lv.l % lv.m != 0 {
            bad(n, format!("m ∤ l ({} ∤ {})", lv.m, lv.l));
        } else if lv.m > 0 {
            let side = lv.l / lv.m;
            if side % 2 != 0 {
                bad(n, format!("s = {side} is odd"));
            }
            if side < MIN_CELL_SIDE {
                bad(n, format!("s={side} < {MIN_CELL_SIDE}"));
            }
        }
        if lv.anchor.iter().any(|c| c % 2 != 0) {
            bad(
                n,
                format!("anchor ({}, {}) has an odd coordinate", lv.anchor[0], lv.anchor[1]),
            );
        }
        if n > 0 {
            let prev = &s.levels[n - 1];
            if prev.l > 0 && lv.l % prev.l != 0 {
                bad(n, format!("{} ∤ {}", prev.l, lv.l));
            }
            if lv.l < prev.l {
                bad(n, format!("l decreases ({} < {})", lv.l, prev.l));
            }
            if lv.m < prev.m {
                bad(n, format!("m decreases ({} < {})", lv.m, prev.m));
            }
            if prev.m > 0 && lv.m > 0 && lv.l / lv.m < prev.l / prev.m {
                bad(
                    n,
                    format!("s decreases ({} < {})", lv.l / lv.m, prev.l / prev.m),
                );
            }
        }
        for (k, other) in s.levels[..n].iter().enumerate() {
            let apart = |a: i64, la: i64, b: i64, lb: i64| a + la < b || b + lb < a;
            let disjoint = apart(lv.anchor[0], lv.l, other.anchor[0], other.l)
                || apart(lv.anchor[1], lv.l, other.anchor[1], other.l);
            if !disjoint {
                bad(n, format!("square S_{n} meets square S_{k}"));
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Subdivision cell `T_{n,i}`, owning `[a, a+s) × [b, b+s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub level: usize,
    pub index: usize,
    pub anchor: LatticePoint,
    pub side: i64,
}

impl Cell {
    pub fn rect(&self) -> Rect {
        let (a, s) = (self.anchor, self.side);
        Rect::half_open(int(a.x), int(a.x + s), int(a.y), int(a.y + s))
    }

    pub fn closed_rect(&self) -> Rect {
        let (a, s) = (self.anchor, self.side);
        Rect::closed(int(a.x), int(a.x + s), int(a.y), int(a.y + s))
    }

    pub fn capacity(&self) -> i64 {
        self.side * self.side
    }

    fn check_alignment(&self) -> Result<()> {
        if self.anchor.x % 2 != 0 || self.anchor.y % 2 != 0 || self.side % 2 != 0 || self.side <= 0
        {
            return Err(Error::Alignment(format!(
                "cell at ({}, {}) with side {} is not even-aligned",
                self.anchor.x, self.anchor.y, self.side
            )));
        }
        Ok(())
    }

    /// Odd-odd points of the cell in row-major order (rows bottom to top).
    pub fn odd_points(&self) -> Vec<LatticePoint> {
        let (a, s) = (self.anchor, self.side);
        let mut out = Vec::with_capacity((s * s / 4) as usize);
        for y in (a.y + 1..a.y + s).step_by(2) {
            for x in (a.x + 1..a.x + s).step_by(2) {
                out.push(LatticePoint::new(x, y));
            }
        }
        out
    }
}

/// Points of the half-open cell on `(2Z×Z) ∪ (Z×2Z)`; with an even anchor
/// this already includes the owned boundary, so `|required| = (3/4)s²`.
pub fn required_points(cell: &Cell) -> Result<PointSet> {
    cell.check_alignment()?;
    let (a, s) = (cell.anchor, cell.side);
    let mut pts = Vec::with_capacity((3 * s * s / 4) as usize);
    for x in a.x..a.x + s {
        for y in a.y..a.y + s {
            if x % 2 == 0 || y % 2 == 0 {
                pts.push(LatticePoint::new(x, y));
            }
        }
    }
    Ok(PointSet::from_sorted(1, pts))
}

/// Order in which odd-odd extras are taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    #[default]
    RowMajor,
    Seeded(u64),
}

#[derive(Clone, Debug)]
pub struct CellFill {
    pub cell: Cell,
    pub required: PointSet,
    pub extras: PointSet,
    pub quota: i64,
}

impl CellFill {
    pub fn count(&self) -> usize {
        self.required.len() + self.extras.len()
    }
}

/// Fills a cell with exactly `quota` points respecting the 2Z²-property.
pub fn fill_cell(cell: &Cell, quota: i64, policy: FillPolicy) -> Result<CellFill> {
    let required = required_points(cell)?;
    let need = required.len() as i64;
    if quota < need || quota > cell.capacity() {
        return Err(Error::InfeasibleQuota {
            quota,
            required: need,
            capacity: cell.capacity(),
        });
    }
    let mut odd = cell.odd_points();
    if let FillPolicy::Seeded(seed) = policy {
        let mix = seed
            ^ (cell.level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (cell.index as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        odd.shuffle(&mut ChaCha8Rng::seed_from_u64(mix));
    }
    odd.truncate((quota - need) as usize);
    let extras = PointSet::dedup(1, odd);
    Ok(CellFill {
        cell: *cell,
        required,
        extras,
        quota,
    })
}

/// A finite window of D_ρ.
#[derive(Clone, Debug)]
pub struct DeloneSet {
    density: DensitySpec,
    schedule: ScaleSchedule,
    window: Ball,
    policy: FillPolicy,
    points: PointSet,
    fills: Vec<CellFill>,
}

impl DeloneSet {
    pub fn density(&self) -> &DensitySpec {
        &self.density
    }

    pub fn schedule(&self) -> &ScaleSchedule {
        &self.schedule
    }

    pub fn window(&self) -> &Ball {
        &self.window
    }

    pub fn policy(&self) -> FillPolicy {
        self.policy
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Fills of every cell meeting the window, ordered by level then cell.
    pub fn fills(&self) -> &[CellFill] {
        &self.fills
    }

    /// The closed square of level `n` lies inside the window.
    pub fn level_materialized(&self, n: usize) -> bool {
        self.schedule
            .levels
            .get(n)
            .is_some_and(|lv| lv.square().within(&self.window.as_rect()) && self.window.closed)
    }

    /// `D_ρ ∩ S_n` for a materialized level.
    pub fn level_points(&self, n: usize) -> Result<PointSet> {
        if !self.level_materialized(n) {
            return Err(Error::State(format!("level {n} is not materialized")));
        }
        let sq = Region::Rect(self.schedule.levels[n].square());
        Ok(self.points.subset(&self.points.query(&sq)))
    }
}

fn window_bounds(window: &Ball) -> Option<[i64; 4]> {
    Region::Ball(window.clone()).numerator_bounds(1)
}

fn overlaps(r: &Rect, b: &[i64; 4]) -> bool {
    let [x0, x1, y0, y1] = *b;
    r.x0 <= int(x1) && int(x0) <= r.x1 && r.y0 <= int(y1) && int(y0) <= r.y1
}

/// Materializes `D_ρ ∩ window`.
pub fn build(
    rho: &DensitySpec,
    schedule: &ScaleSchedule,
    window: &Ball,
    policy: FillPolicy,
) -> Result<DeloneSet> {
    validate_schedule(schedule).map_err(Error::Schedule)?;
    rho.certify_range()?;
    let bounds = window_bounds(window);

    let mut cells = Vec::new();
    if let Some(b) = bounds {
        for (n, lv) in schedule.levels.iter().enumerate() {
            if overlaps(&lv.square(), &b) {
                cells.extend(lv.cells(n).into_iter().filter(|c| overlaps(&c.closed_rect(), &b)));
            }
        }
    }
    let fills: Vec<CellFill> = cells
        .par_iter()
        .map(|c| {
            let phi = schedule.levels[c.level].homothety();
            let quota = cell_quota(rho, &phi, &c.rect())?;
            fill_cell(c, quota, policy)
        })
        .collect::<Result<_>>()?;

    let extras: HashSet<LatticePoint> = fills
        .iter()
        .flat_map(|f| f.extras.numerators().iter().copied())
        .collect();
    let active: Vec<&Level> = match bounds {
        Some(b) => schedule
            .levels
            .iter()
            .filter(|lv| overlaps(&lv.square(), &b))
            .collect(),
        None => Vec::new(),
    };
    let mut pts = Vec::new();
    if let Some([x0, x1, y0, y1]) = bounds {
        for x in x0..=x1 {
            for y in y0..=y1 {
                let p = LatticePoint::new(x, y);
                let keep = x % 2 == 0
                    || y % 2 == 0
                    || !active.iter().any(|lv| lv.in_square(&p))
                    || extras.contains(&p);
                if keep {
                    pts.push(p);
                }
            }
        }
    }

    Ok(DeloneSet {
        density: rho.clone(),
        schedule: schedule.clone(),
        window: window.clone(),
        policy,
        points: PointSet::from_sorted(1, pts),
        fills,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CellCount,
    TwoZ2,
    Boundary,
    Background,
    OutsideWindow,
    Separation,
    Covering,
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Option<[i64; 2]>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    pub cells_checked: usize,
    pub points: usize,
    #[serde(with = "opt_rational")]
    pub sigma: Option<Rational>,
    #[serde(with = "opt_rational")]
    pub covering: Option<Rational>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

mod opt_rational {
    use crate::rational::{fmt_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&fmt_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rational(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Audits the set produced by `build`.
pub fn audit(d: &DeloneSet) -> AuditReport {
    audit_points(d, d.points())
}

/// Audits an arbitrary integer point set against the configuration of `d`.
/// Quotas are recomputed from the density rather than read from the fills.
pub fn audit_points(d: &DeloneSet, points: &PointSet) -> AuditReport {
    let mut violations = Vec::new();
    let mut push = |kind, witness: Option<LatticePoint>, detail: String| {
        violations.push(Violation {
            kind,
            witness: witness.map(|p| [p.x, p.y]),
            detail,
        })
    };
    if points.denom() != 1 {
        push(
            ViolationKind::Empty,
            None,
            format!("points have denominator {}, expected 1", points.denom()),
        );
        return AuditReport {
            violations,
            cells_checked: 0,
            points: points.len(),
            sigma: None,
            covering: None,
        };
    }
    let window = Region::Ball(d.window.clone());
    let bounds = window.numerator_bounds(1);
    let wrect = d.window.as_rect();

    for p in points.numerators() {
        if !window.contains(&p.scaled(1)) {
            push(
                ViolationKind::OutsideWindow,
                Some(*p),
                "point lies outside the window".into(),
            );
        }
    }

    let mut cells_checked = 0;
    for fill in &d.fills {
        let c = &fill.cell;
        if !c.closed_rect().within(&wrect) {
            continue;
        }
        cells_checked += 1;
        let lv = &d.schedule.levels[c.level];
        let count = points.query(&Region::Rect(c.rect())).len() as i64;
        match cell_quota(&d.density, &lv.homothety(), &c.rect()) {
            Ok(q) if q == count => {}
            Ok(q) => push(
                ViolationKind::CellCount,
                Some(c.anchor),
                format!(
                    "cell {} of level {} holds {count} points, quota {q}",
                    c.index, c.level
                ),
            ),
            Err(e) => push(
                ViolationKind::CellCount,
                Some(c.anchor),
                format!("quota unavailable: {e}"),
            ),
        }
        let (a, s) = (c.anchor, c.side);
        for t in 0..=s {
            for p in [
                LatticePoint::new(a.x + t, a.y),
                LatticePoint::new(a.x + t, a.y + s),
                LatticePoint::new(a.x, a.y + t),
                LatticePoint::new(a.x + s, a.y + t),
            ] {
                if !points.contains_numerator(&p) && window.contains(&p.scaled(1)) {
                    push(
                        ViolationKind::Boundary,
                        Some(p),
                        format!("boundary point of cell {} of level {} missing", c.index, c.level),
                    );
                }
            }
        }
    }
    // boundary points shared by neighbouring cells are reported once
    let mut seen = HashSet::new();
    violations.retain(|v| v.kind != ViolationKind::Boundary || seen.insert(v.witness));

    if let Some([x0, x1, y0, y1]) = bounds {
        for x in x0..=x1 {
            for y in y0..=y1 {
                let p = LatticePoint::new(x, y);
                if points.contains_numerator(&p) {
                    continue;
                }
                if x % 2 == 0 || y % 2 == 0 {
                    violations.push(Violation {
                        kind: ViolationKind::TwoZ2,
                        witness: Some([x, y]),
                        detail: "point of (2Z×Z) ∪ (Z×2Z) missing".into(),
                    });
                } else if !d.schedule.levels.iter().any(|lv| lv.in_square(&p)) {
                    violations.push(Violation {
                        kind: ViolationKind::Background,
                        witness: Some([x, y]),
                        detail: "lattice point outside every square missing".into(),
                    });
                }
            }
        }
    }

    let (sigma, covering) = match delone_constants(points, &d.window) {
        Ok(c) => {
            if c.sigma.is_some_and(|s| s != int(1)) {
                violations.push(Violation {
                    kind: ViolationKind::Separation,
                    witness: c.sigma_witness.map(|(p, _)| [p.num_x, p.num_y]),
                    detail: format!("separation {} differs from 1", c.sigma.unwrap()),
                });
            }
            if c.covering > int(1) {
                let (t, _) = c.covering_witness;
                violations.push(Violation {
                    kind: ViolationKind::Covering,
                    witness: None,
                    detail: format!("covering radius {} exceeds 1 at {t}", c.covering),
                });
            }
            (c.sigma, Some(c.covering))
        }
        Err(_) => {
            violations.push(Violation {
                kind: ViolationKind::Empty,
                witness: None,
                detail: "window holds no points".into(),
            });
            (None, None)
        }
    };

    AuditReport {
        violations,
        cells_checked,
        points: points.len(),
        sigma,
        covering,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn b(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn cell(x: i64, y: i64, s: i64) -> Cell {
        Cell {
            level: 0,
            index: 0,
            anchor: LatticePoint::new(x, y),
            side: s,
        }
    }

    fn sched(levels: &[(i64, i64, [i64; 2])]) -> ScaleSchedule {
        ScaleSchedule::new(levels.iter().map(|&(l, m, a)| Level::new(l, m, a)).collect())
    }

    #[test]
    fn schedule_examples() {
        assert!(validate_schedule(&sched(&[(32, 2, [0, 0]), (64, 4, [40, 0])])).is_ok());
        let v = validate_schedule(&sched(&[(32, 2, [0, 0]), (48, 4, [40, 0])])).unwrap_err();
        assert!(v.iter().any(|x| x.level == 1 && x.message.contains("32 ∤ 48")));
        let v = validate_schedule(&sched(&[(8, 2, [0, 0]), (16, 2, [20, 0])])).unwrap_err();
        assert!(v.iter().any(|x| x.level == 0 && x.message.contains("s=4 < 16")));
    }

    #[test]
    fn overlapping_squares_are_rejected() {
        let v = validate_schedule(&sched(&[(32, 2, [0, 0]), (64, 4, [32, 0])])).unwrap_err();
        assert!(v.iter().any(|x| x.message.contains("meets")));
    }

    #[test]
    fn required_point_counts() {
        assert_eq!(required_points(&cell(0, 0, 16)).unwrap().len(), 192);
        assert_eq!(required_points(&cell(2, 4, 16)).unwrap().len(), 192);
        let small = required_points(&cell(0, 0, 2)).unwrap();
        assert_eq!(
            small.numerators(),
            &[
                LatticePoint::new(0, 0),
                LatticePoint::new(0, 1),
                LatticePoint::new(1, 0)
            ]
        );
        assert!(matches!(required_points(&cell(1, 0, 16)), Err(Error::Alignment(_))));
    }

    #[test]
    fn fill_extremes() {
        let c = cell(0, 0, 16);
        let full = fill_cell(&c, 256, FillPolicy::RowMajor).unwrap();
        assert_eq!(full.count(), 256);
        let bare = fill_cell(&c, 192, FillPolicy::RowMajor).unwrap();
        assert!(bare.extras.is_empty());
        match fill_cell(&c, 191, FillPolicy::RowMajor) {
            Err(Error::InfeasibleQuota {
                quota, required, ..
            }) => assert_eq!((quota, required), (191, 192)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(fill_cell(&c, 257, FillPolicy::RowMajor).is_err());
    }

    #[test]
    fn fill_is_deterministic() {
        let c = cell(0, 0, 16);
        let a = fill_cell(&c, 227, FillPolicy::Seeded(9)).unwrap();
        let b2 = fill_cell(&c, 227, FillPolicy::Seeded(9)).unwrap();
        assert_eq!(a.extras, b2.extras);
        assert_eq!(a.extras.len(), 35);
        assert!(a
            .extras
            .numerators()
            .iter()
            .all(|p| p.x % 2 != 0 && p.y % 2 != 0));
        let rm = fill_cell(&c, 227, FillPolicy::RowMajor).unwrap();
        assert_eq!(rm.extras.numerators()[0], LatticePoint::new(1, 1));
    }

    #[test]
    fn constant_one_build_is_the_lattice() {
        let s = sched(&[(32, 2, [0, 0])]);
        let w = Ball::closed((int(16), int(16)), int(20));
        let d = build(&DensitySpec::constant(b(1, 1)), &s, &w, FillPolicy::RowMajor).unwrap();
        assert_eq!(d.points(), &PointSet::grid(1, &Region::Ball(w)));
        assert!(audit(&d).is_clean());
    }

    #[test]
    fn trig_build_total_is_sum_of_quotas() {
        let s = sched(&[(32, 2, [0, 0])]);
        let w = Ball::closed((int(16), int(16)), int(16));
        let d = build(&DensitySpec::trig(1, b(1, 9)), &s, &w, FillPolicy::RowMajor).unwrap();
        let total: i64 = d.fills().iter().map(|f| f.quota).sum();
        let half_open = Rect::half_open(int(0), int(32), int(0), int(32));
        let count = d.points().query(&Region::Rect(half_open)).len() as i64;
        assert_eq!(count, total);
        assert!(((8 * 1024 + 8) / 9 - 4..=1024).contains(&total));
        assert!(audit(&d).is_clean());
    }

    #[test]
    fn deleting_a_required_point_is_caught() {
        let s = sched(&[(32, 2, [0, 0])]);
        let w = Ball::closed((int(16), int(16)), int(18));
        let d = build(&DensitySpec::trig(1, b(1, 9)), &s, &w, FillPolicy::RowMajor).unwrap();
        let gone = LatticePoint::new(4, 7);
        let corrupted = d.points().remove_all(&[gone]);
        let r = audit_points(&d, &corrupted);
        assert_eq!(r.count(ViolationKind::TwoZ2), 1);
        let v = r.violations.iter().find(|v| v.kind == ViolationKind::TwoZ2).unwrap();
        assert_eq!(v.witness, Some([4, 7]));
    }

    #[test]
    fn window_away_from_squares_is_pure_lattice() {
        let s = sched(&[(32, 2, [0, 0])]);
        let w = Ball::closed((int(100), int(100)), int(5));
        let d = build(&DensitySpec::trig(1, b(1, 9)), &s, &w, FillPolicy::RowMajor).unwrap();
        assert_eq!(d.points().len(), 121);
        assert!(d.fills().is_empty());
    }
}
