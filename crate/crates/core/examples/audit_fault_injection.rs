//! Delete one mandatory point from a built set and let the audit find it.

use delone::io::{parse_points, write_points};
use delone::prelude::*;

fn main() -> Result<()> {
    let rho = DensitySpec::trig(1, big(1, 9));
    let schedule = ScaleSchedule::new(vec![Level::new(32, 2, [0, 0])]);
    let window = schedule.covering_window().expect("nonempty schedule");
    let d = build(&rho, &schedule, &window, FillPolicy::RowMajor)?;
    assert!(audit(&d).is_clean());

    // (4, 7) has an even coordinate, so every valid set contains it
    let damaged = d.points().remove_all(&[LatticePoint::new(4, 7)]);
    let round_trip = parse_points(&write_points(&damaged))?;
    let report = audit_points(&d, &round_trip);
    for v in &report.violations {
        println!("{:?} at {:?}: {}", v.kind, v.witness, v.detail);
    }
    println!(
        "2Z² violations: {}, cell-count violations: {}",
        report.count(ViolationKind::TwoZ2),
        report.count(ViolationKind::CellCount)
    );
    Ok(())
}
