//! Counting measures of the normalized patches against the density, on the
//! cell-aligned family and on the fixed dyadic grid.

use delone::prelude::*;

fn main() -> Result<()> {
    let rho = DensitySpec::trig(1, big(1, 9));
    let schedule = ScaleSchedule::new(vec![
        Level::new(32, 2, [0, 0]),
        Level::new(64, 4, [40, 0]),
        Level::new(128, 8, [112, 0]),
    ]);
    let window = schedule.covering_window().expect("nonempty schedule");
    let d = build(&rho, &schedule, &window, FillPolicy::Seeded(3))?;
    let dyadic = RectFamily::dyadic(4);
    println!("level      l   cells sup    bound       dyadic:4 sup");
    for (n, lv) in schedule.levels.iter().enumerate() {
        let patch = normalize_patch(&d, n)?;
        let mu = CountingMeasure::new(patch.points, lv.l);
        let cells = discrepancy(&mu, &rho, &RectFamily::cells(lv.m))?;
        let dy = discrepancy(&mu, &rho, &dyadic)?;
        let bound = (lv.m * lv.m) as f64 / (lv.l * lv.l) as f64;
        println!("{n:>5} {:>6}   {:.3e}   {bound:.3e}   {:.3e}", lv.l, cells.sup, dy.sup);
    }
    Ok(())
}
