use rayon::prelude::*;

use super::{Ball, PointSet, Region, ScaledPoint};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Separation and covering radius of a point set over a window.
#[derive(Clone, Debug)]
pub struct DeloneConstants {
    /// Minimum pairwise distance among the points in the window; `None`
    /// stands for +∞ (fewer than two points).
    pub sigma: Option<Rational>,
    /// Largest distance from a point of the window to the set.
    pub covering: Rational,
    pub sigma_witness: Option<(ScaledPoint, ScaledPoint)>,
    /// Test point attaining the covering radius and its nearest member.
    pub covering_witness: (ScaledPoint, ScaledPoint),
}

/// Computes (σ, Σ) over `window`.
///
/// Σ is evaluated on the half-step grid of the set's denominator. For sets
/// in a uniform lattice under the sup-norm the distance-to-set function is
/// piecewise linear with slopes ±1 per coordinate, so its maxima over the
/// window sit on that grid and the value is exact.
pub fn delone_constants(set: &PointSet, window: &Ball) -> Result<DeloneConstants> {
    let region = Region::Ball(window.clone());
    let inside = set.subset(&set.query(&region));
    if inside.is_empty() {
        return Err(Error::EmptyInput("no points inside the window".into()));
    }
    let d = set.denom();

    let (sigma, sigma_witness) = match inside.closest_pair() {
        Some((i, j, dist)) => (
            Some(Rational::new(dist, d)),
            Some((inside.point(i), inside.point(j))),
        ),
        None => (None, None),
    };

    let [x0, x1, y0, y1] = region
        .numerator_bounds(2 * d)
        .expect("window holds at least one member");
    let per_row: Vec<(i64, i64, i64, usize)> = (x0..=x1)
        .into_par_iter()
        .map(|tx| {
            let mut best = (i64::MIN, tx, y0, 0usize);
            for ty in y0..=y1 {
                let (j, dist) = set.nearest_half(tx, ty).expect("set is nonempty");
                if dist > best.0 {
                    best = (dist, tx, ty, j);
                }
            }
            best
        })
        .collect();
    // first maximiser in lexicographic order
    let (dist, tx, ty, j) = per_row
        .into_iter()
        .fold((i64::MIN, 0, 0, 0), |acc, r| if r.0 > acc.0 { r } else { acc });

    Ok(DeloneConstants {
        sigma,
        covering: Rational::new(dist, 2 * d),
        sigma_witness,
        covering_witness: (ScaledPoint::new(tx, ty, 2 * d).reduced(), set.point(j)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sup_dist, LatticePoint};
    use crate::rational::{int, rat};

    fn window(r: i64) -> Ball {
        Ball::closed((int(0), int(0)), int(r))
    }

    #[test]
    fn integer_lattice() {
        let set = PointSet::grid(1, &Region::Ball(window(4)));
        let c = delone_constants(&set, &window(4)).unwrap();
        assert_eq!(c.sigma, Some(int(1)));
        assert_eq!(c.covering, rat(1, 2));
    }

    #[test]
    fn two_z2_union() {
        let mut v = Vec::new();
        for x in -4..=4i64 {
            for y in -4..=4i64 {
                if x % 2 == 0 || y % 2 == 0 {
                    v.push(LatticePoint::new(x, y));
                }
            }
        }
        let set = PointSet::lattice(v).unwrap();
        let c = delone_constants(&set, &window(4)).unwrap();
        assert_eq!(c.sigma, Some(int(1)));
        assert_eq!(c.covering, int(1));
        let (t, near) = c.covering_witness;
        assert!(t.denom == 1 && t.num_x.rem_euclid(2) == 1 && t.num_y.rem_euclid(2) == 1);
        assert_eq!(sup_dist(&t, &near), int(1));
    }

    #[test]
    fn singleton_has_infinite_sigma() {
        let set = PointSet::lattice(vec![LatticePoint::new(0, 0)]).unwrap();
        let c = delone_constants(&set, &window(1)).unwrap();
        assert_eq!(c.sigma, None);
        assert_eq!(c.covering, int(1));
    }

    #[test]
    fn empty_window_is_an_error() {
        let set = PointSet::lattice(vec![LatticePoint::new(10, 10)]).unwrap();
        assert!(matches!(delone_constants(&set, &window(1)), Err(Error::EmptyInput(_))));
    }
}
