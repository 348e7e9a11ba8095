//! Build a three-level set for an oscillating density and audit it.
//!
//! ```text
//! cargo run --example build_and_audit
//! ```

use delone::prelude::*;

fn main() -> Result<()> {
    let rho = DensitySpec::trig(1, big(1, 9));
    let schedule = ScaleSchedule::new(vec![
        Level::new(32, 2, [0, 0]),
        Level::new(64, 4, [40, 0]),
        Level::new(128, 8, [112, 0]),
    ]);
    if let Err(problems) = validate_schedule(&schedule) {
        for p in problems {
            eprintln!("{p}");
        }
        return Err(Error::Config("bad schedule".into()));
    }
    let window = schedule.covering_window().expect("nonempty schedule");
    let d = build(&rho, &schedule, &window, FillPolicy::Seeded(7))?;
    println!("{} points in the window", d.points().len());

    for (n, lv) in schedule.levels.iter().enumerate() {
        let quota: i64 = d.fills().iter().filter(|f| f.cell.level == n).map(|f| f.quota).sum();
        println!(
            "level {n}: l={} m={} cell side {} -> {quota} of {} lattice points kept",
            lv.l,
            lv.m,
            lv.cell_side(),
            (lv.l * lv.l)
        );
    }

    let report = audit(&d);
    println!(
        "audit: {} cells, {} violations, sigma={} covering={}",
        report.cells_checked,
        report.violations.len(),
        report.sigma.map_or("-".into(), |s| s.to_string()),
        report.covering.map_or("-".into(), |s| s.to_string())
    );
    Ok(())
}
