//! Regularity estimate via separated subsets of preimages, and the
//! counting lower bound on Lipschitz constants.

use delone::prelude::*;

fn block(r: i64, denom: i64) -> PointSet {
    let s = Rational::new(r, denom);
    PointSet::grid(denom, &Region::Rect(Rect::closed(-s, s, -s, s)))
}

fn main() -> Result<()> {
    let set = block(8, 1);
    let radii = [int(1), int(2), int(4)];
    let balls = interior_balls(&set, &radii);
    let id = BijectionTable::identity(&set);
    let est = regularity_constant(&id, &balls, 16)?;
    println!("identity: C_hat = {} over {} balls (approximate: {})", est.c_hat, balls.len(), est.approximate);

    // swap two neighbours and see how far the estimate moves
    let (a, b) = (LatticePoint::new(0, 0), LatticePoint::new(3, 0));
    let swapped = BijectionTable::from_fn(&set, 1, |p| if p == a { b } else if p == b { a } else { p })?;
    let lip = lipschitz_constants(&swapped)?.lipschitz;
    let est = regularity_constant(&swapped, &balls, 64)?;
    println!("swap (0,0)<->(3,0): L = {lip}, C_hat = {}", est.c_hat);

    let fine = block(4, 2);
    let bound = counting_lower_bound(&fine, int(1), &[int(1), int(2)])?;
    println!(
        "spacing 1/2 block into Z²: L >= {} ({} points within {} of {:?})",
        bound.l_lb, bound.count, bound.radius, bound.center
    );
    Ok(())
}
