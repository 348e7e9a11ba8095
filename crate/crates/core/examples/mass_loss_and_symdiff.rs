//! Mass conservation under pushforward, mass loss in a ball, and the
//! symmetric-difference band check with a failing chain shift.

use delone::prelude::*;

fn unit(l: i64) -> PointSet {
    let h = rat(1, 2);
    PointSet::grid(l, &Region::Rect(Rect::closed(-h, h, -h, h)))
}

fn main() -> Result<()> {
    let l = 8;
    let carrier = unit(l);
    let mu = CountingMeasure::new(carrier.clone(), l);
    let everything = Region::Rect(Rect::closed(int(-1), int(1), int(-1), int(1)));
    let flip = BijectionTable::from_fn(&carrier, l, |p| LatticePoint::new(-p.y, p.x))?;
    println!(
        "total mass {} -> {} after a quarter turn",
        measure(&mu, &everything),
        pushforward(&flip, &mu, &everything)?
    );

    let q = Ball::closed((int(0), int(0)), rat(1, 4));
    let full = mass_loss(&BijectionTable::identity(&carrier), &q, l, &[l])?;
    let holed = carrier.remove_all(&[LatticePoint::new(1, 1), LatticePoint::new(0, 2)]);
    let part = mass_loss(&BijectionTable::identity(&holed), &q, l, &[l])?;
    println!("mass loss: full grid {}, two holes {} (band {})", full.normalized_mass, part.normalized_mass, part.band_width);

    let block = PointSet::grid(1, &Region::Rect(Rect::closed(int(0), int(8), int(0), int(8))));
    let g = BijectionTable::identity(&block);
    let shift = BijectionTable::from_fn(&block, 1, |p| LatticePoint::new(p.x + 1, p.y))?;
    let chain = BijectionTable::from_fn(&block, 1, |p| {
        if p.y == 4 && p.x >= 4 { LatticePoint::new(p.x + 1, p.y) } else { p }
    })?;
    for (name, h) in [("shift", &shift), ("chain shift", &chain)] {
        let r = symdiff_band(&g, h)?;
        println!("symdiff {name}: pass={} sup diff {} max band {} witness {:?}", r.pass, r.sup_diff, r.max_band, r.witness);
    }
    Ok(())
}
