//! Nested-ball escape check on a built patch: the identity passes, a map
//! that teleports a deep point to the centre does not.

use delone::prelude::*;

fn main() -> Result<()> {
    let rho = DensitySpec::trig(1, big(1, 9));
    let schedule = ScaleSchedule::new(vec![Level::new(32, 2, [0, 0]), Level::new(64, 4, [40, 0])]);
    let window = schedule.covering_window().expect("nonempty schedule");
    let d = build(&rho, &schedule, &window, FillPolicy::RowMajor)?;

    for n in 0..2 {
        let patch = normalize_patch(&d, n)?;
        let l = patch.l;
        let f = BijectionTable::identity(&patch.points);
        let radii = nested_family(rat(1, 4), int(1), l);
        let diag = escape_check(&f, ScaledPoint::new(0, 0, l), &radii, int(1), l)?;
        println!(
            "l={l}: {} levels, claim 1 violations {}, annulus violations {}",
            diag.records.len(),
            diag.claim1_violations,
            diag.claim4_violations
        );
    }

    let patch = normalize_patch(&d, 0)?;
    let l = patch.l;
    let deep = *patch
        .points
        .numerators()
        .iter()
        .find(|p| p.y == 0 && p.x == -9)
        .or_else(|| patch.points.numerators().iter().find(|p| p.y == 0 && p.x < -8))
        .expect("row y=0 is fully present");
    let centre = LatticePoint::new(0, 0);
    let f = BijectionTable::from_fn(&patch.points, l, |p| {
        if p == deep { centre } else if p == centre { deep } else { p }
    })?;
    let diag = escape_check(&f, centre.scaled(l), &nested_family(rat(1, 4), int(1), l), int(1), l)?;
    println!("teleport {:?}: claim 1 violations {}", deep, diag.claim1_violations);
    Ok(())
}
