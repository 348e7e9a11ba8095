//! Write an SVG of the first-level square of a built set.
//!
//! ```text
//! cargo run --example plot_patch -- patch.svg
//! ```

use delone::prelude::*;
use delone::svg::points_svg;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "patch.svg".into());
    let rho = DensitySpec::trig(2, big(1, 9));
    let schedule = ScaleSchedule::new(vec![Level::new(64, 4, [0, 0])]);
    let window = schedule.covering_window().expect("nonempty schedule");
    let d = build(&rho, &schedule, &window, FillPolicy::Seeded(11))?;
    let square = d.level_points(0)?;
    std::fs::write(&out, points_svg(&square))?;
    println!("{} points -> {out}", square.len());
    Ok(())
}
