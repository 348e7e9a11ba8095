//! Exact minimal-Lipschitz bijection between two small point sets, checked
//! against exhaustive enumeration and compared with the local-search heuristic.

use delone::prelude::*;

fn grid(n: i64, denom: i64) -> PointSet {
    let side = Rational::new(n - 1, denom);
    PointSet::grid(denom, &Region::Rect(Rect::closed(int(0), side, int(0), side)))
}

fn main() -> Result<()> {
    // a 2x3 block onto a 1x6 row: something has to stretch
    let source = PointSet::lattice(
        (0..3).flat_map(|x| (0..2).map(move |y| LatticePoint::new(x, y))).collect(),
    )?;
    let target = PointSet::lattice((0..6).map(|x| LatticePoint::new(x, 0)).collect())?;
    for mode in [MatchMode::Lipschitz, MatchMode::Bilipschitz] {
        let inst = MatchInstance::bijection(source.clone(), target.clone(), mode)?;
        let exact = min_lipschitz(&inst, Method::Exact)?;
        let brute = brute_force_min(&inst)?;
        let heur = min_lipschitz(&inst, Method::Heuristic { seed: 1, iters: 200, restarts: 5 })?;
        println!(
            "{mode:?}: exact {} ({} nodes), brute force {}, heuristic {}",
            exact.l_star, exact.stats.nodes, brute.l_star, heur.l_star
        );
    }

    // half-spacing block into the unit lattice, injectively
    let fine = grid(3, 2);
    let coarse = grid(5, 1);
    let inst = MatchInstance::new(fine, coarse, MatchMode::Lipschitz, true)?;
    let r = min_lipschitz(&inst, Method::Exact)?;
    println!("3x3 block of spacing 1/2 into a 5x5 block of Z²: L* = {}", r.l_star);
    Ok(())
}
