use std::collections::HashMap;

use super::{Ball, LatticePoint, Region, ScaledPoint};
use crate::error::{Error, Result};

/// Finite duplicate-free subset of (1/denom)·Z², sorted lexicographically,
/// with a bucket index keyed by coarse grid cell.
#[derive(Clone, Debug)]
pub struct PointSet {
    denom: i64,
    points: Vec<LatticePoint>,
    index: BucketIndex,
}

#[derive(Clone, Debug, Default)]
struct BucketIndex {
    cell: i64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    // bucket-key bounding box, used to stop ring searches
    extent: Option<[i64; 4]>,
}

impl BucketIndex {
    fn build(points: &[LatticePoint], cell: i64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        let mut extent: Option<[i64; 4]> = None;
        for (i, p) in points.iter().enumerate() {
            let k = (p.x.div_euclid(cell), p.y.div_euclid(cell));
            buckets.entry(k).or_default().push(i as u32);
            extent = Some(match extent {
                None => [k.0, k.0, k.1, k.1],
                Some([a, b, c, d]) => [a.min(k.0), b.max(k.0), c.min(k.1), d.max(k.1)],
            });
        }
        Self {
            cell,
            buckets,
            extent,
        }
    }

    fn key(&self, x: i64, y: i64) -> (i64, i64) {
        (x.div_euclid(self.cell), y.div_euclid(self.cell))
    }
}

/// Spacing estimate for the bucket size: roughly one point per bucket.
fn default_cell(points: &[LatticePoint]) -> i64 {
    if points.len() < 2 {
        return 1;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let area = ((x1 - x0 + 1) as f64) * ((y1 - y0 + 1) as f64);
    ((area / points.len() as f64).sqrt().floor() as i64).max(1)
}

impl PointSet {
    /// Builds a set from numerators over `denom`; duplicates are rejected.
    pub fn new(denom: i64, mut points: Vec<LatticePoint>) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::Shape(format!("denominator {denom} must be positive")));
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Shape(format!(
                "duplicate point ({}, {})",
                w[0].x, w[0].y
            )));
        }
        Ok(Self::from_sorted(denom, points))
    }

    /// Like [`PointSet::new`] but silently merges duplicates.
    pub fn dedup(denom: i64, mut points: Vec<LatticePoint>) -> Self {
        assert!(denom > 0, "denominator must be positive");
        points.sort_unstable();
        points.dedup();
        Self::from_sorted(denom, points)
    }

    pub fn lattice(points: Vec<LatticePoint>) -> Result<Self> {
        Self::new(1, points)
    }

    pub fn empty(denom: i64) -> Self {
        Self::from_sorted(denom, Vec::new())
    }

    /// All grid points of (1/denom)·Z² inside `region`.
    pub fn grid(denom: i64, region: &Region) -> Self {
        let mut pts = Vec::new();
        if let Some([x0, x1, y0, y1]) = region.numerator_bounds(denom) {
            pts.reserve(((x1 - x0 + 1) * (y1 - y0 + 1)) as usize);
            for x in x0..=x1 {
                for y in y0..=y1 {
                    pts.push(LatticePoint::new(x, y));
                }
            }
        }
        Self::from_sorted(denom, pts)
    }

    pub(crate) fn from_sorted(denom: i64, points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        let cell = default_cell(&points);
        let index = BucketIndex::build(&points, cell);
        Self {
            denom,
            points,
            index,
        }
    }

    /// Rebuilds the bucket index with a different cell size (numerator units).
    pub fn with_cell_size(mut self, cell: i64) -> Self {
        self.index = BucketIndex::build(&self.points, cell.max(1));
        self
    }

    pub fn cell_size(&self) -> i64 {
        self.index.cell
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn numerators(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn point(&self, i: usize) -> ScaledPoint {
        self.points[i].scaled(self.denom)
    }

    pub fn iter(&self) -> impl Iterator<Item = ScaledPoint> + '_ {
        self.points.iter().map(move |p| p.scaled(self.denom))
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    pub fn contains_numerator(&self, p: &LatticePoint) -> bool {
        self.index_of(p).is_some()
    }

    pub fn locate(&self, p: &ScaledPoint) -> Option<usize> {
        p.numerators_over(self.denom).and_then(|n| self.index_of(&n))
    }

    pub fn contains(&self, p: &ScaledPoint) -> bool {
        self.locate(p).is_some()
    }

    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let mut pts: Vec<LatticePoint> = indices.iter().map(|&i| self.points[i]).collect();
        pts.sort_unstable();
        pts.dedup();
        Self::from_sorted(self.denom, pts)
    }

    pub fn insert_all(&self, extra: &[LatticePoint]) -> Result<PointSet> {
        let mut pts = self.points.clone();
        pts.extend_from_slice(extra);
        Self::new(self.denom, pts)
    }

    pub fn remove_all(&self, gone: &[LatticePoint]) -> PointSet {
        let pts = self
            .points
            .iter()
            .filter(|p| !gone.contains(p))
            .copied()
            .collect();
        Self::from_sorted(self.denom, pts)
    }

    /// Numerator bounding box `[x0, x1, y0, y1]`.
    pub fn bounding_box(&self) -> Option<[i64; 4]> {
        let first = self.points.first()?;
        let last = self.points.last()?;
        let (mut y0, mut y1) = (i64::MAX, i64::MIN);
        for p in &self.points {
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        Some([first.x, last.x, y0, y1])
    }

    /// Sorted indices of the members inside `region`.
    pub fn query(&self, region: &Region) -> Vec<usize> {
        let Some([x0, x1, y0, y1]) = region.numerator_bounds(self.denom) else {
            return Vec::new();
        };
        self.query_numerators(x0, x1, y0, y1)
    }

    /// Sorted indices of members with numerators in `[x0,x1]×[y0,y1]`.
    pub fn query_numerators(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> Vec<usize> {
        let mut out = Vec::new();
        if x0 > x1 || y0 > y1 || self.points.is_empty() {
            return out;
        }
        let inside = |p: &LatticePoint| x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1;
        let (k0, k1) = (self.index.key(x0, y0), self.index.key(x1, y1));
        let [ex0, ex1, ey0, ey1] = self.index.extent.expect("nonempty set has an extent");
        let (kx0, kx1) = (k0.0.max(ex0), k1.0.min(ex1));
        let (ky0, ky1) = (k0.1.max(ey0), k1.1.min(ey1));
        if kx0 > kx1 || ky0 > ky1 {
            return out;
        }
        let buckets = ((kx1 - kx0 + 1) as u128) * ((ky1 - ky0 + 1) as u128);
        if buckets > self.points.len() as u128 {
            // sorted by x, so a range scan is cheaper here
            let start = self.points.partition_point(|p| p.x < x0);
            for (i, p) in self.points[start..].iter().enumerate() {
                if p.x > x1 {
                    break;
                }
                if inside(p) {
                    out.push(start + i);
                }
            }
            return out;
        }
        for kx in kx0..=kx1 {
            for ky in ky0..=ky1 {
                if let Some(b) = self.index.buckets.get(&(kx, ky)) {
                    out.extend(
                        b.iter()
                            .map(|&i| i as usize)
                            .filter(|&i| inside(&self.points[i])),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest member to a query point given in half-numerator units
    /// (coordinates `qx2 / (2·denom)`). Returns the index and the distance in
    /// half-numerator units; ties go to the smaller index.
    pub fn nearest_half(&self, qx2: i64, qy2: i64) -> Option<(usize, i64)> {
        let [ex0, ex1, ey0, ey1] = self.index.extent?;
        let cell = self.index.cell;
        let (bx, by) = (
            qx2.div_euclid(2).div_euclid(cell),
            qy2.div_euclid(2).div_euclid(cell),
        );
        let max_ring = [bx - ex0, ex1 - bx, by - ey0, ey1 - by]
            .into_iter()
            .map(i64::abs)
            .max()
            .unwrap_or(0)
            + 1;
        let mut best: Option<(usize, i64)> = None;
        for ring in 0..=max_ring {
            let mut visit = |kx: i64, ky: i64| {
                if let Some(b) = self.index.buckets.get(&(kx, ky)) {
                    for &i in b {
                        let p = &self.points[i as usize];
                        let d = (2 * p.x - qx2).abs().max((2 * p.y - qy2).abs());
                        let better = match best {
                            None => true,
                            Some((j, bd)) => d < bd || (d == bd && (i as usize) < j),
                        };
                        if better {
                            best = Some((i as usize, d));
                        }
                    }
                }
            };
            if ring == 0 {
                visit(bx, by);
            } else {
                for kx in (bx - ring)..=(bx + ring) {
                    visit(kx, by - ring);
                    visit(kx, by + ring);
                }
                for ky in (by - ring + 1)..=(by + ring - 1) {
                    visit(bx - ring, ky);
                    visit(bx + ring, ky);
                }
            }
            // unvisited buckets are at least ring·cell + 1/2 away
            if let Some((_, d)) = best {
                if d <= 2 * ring * cell {
                    break;
                }
            }
        }
        best
    }

    /// Closest pair `(i, j, distance)` in numerator units.
    pub fn closest_pair(&self) -> Option<(usize, usize, i64)> {
        if self.points.len() < 2 {
            return None;
        }
        let cell = self.index.cell;
        let mut best: Option<(usize, usize, i64)> = None;
        let pts = &self.points;
        let consider = |best: &mut Option<(usize, usize, i64)>, i: usize, j: usize| {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let d = pts[a].sup_dist(&pts[b]);
            let better = match *best {
                None => true,
                Some((bi, bj, bd)) => d < bd || (d == bd && (a, b) < (bi, bj)),
            };
            if better {
                *best = Some((a, b, d));
            }
        };
        for (i, p) in self.points.iter().enumerate() {
            let (kx, ky) = self.index.key(p.x, p.y);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(b) = self.index.buckets.get(&(kx + dx, ky + dy)) {
                        for &j in b {
                            if (j as usize) > i {
                                consider(&mut best, i, j as usize);
                            }
                        }
                    }
                }
            }
        }
        // pairs in non-adjacent buckets are more than `cell` apart
        if matches!(best, Some((_, _, d)) if d <= cell) {
            return best;
        }
        let n = self.points.len();
        for i in 0..n {
            for j in (i + 1)..n {
                consider(&mut best, i, j);
            }
        }
        best
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.denom == other.denom && self.points == other.points
    }
}

impl Eq for PointSet {}

/// Members of `set` inside the sup-norm ball `b`.
pub fn ball_query(set: &PointSet, b: &Ball) -> PointSet {
    let idx = set.query(&Region::Ball(b.clone()));
    set.subset(&idx)
}
