//! Lipschitz constants, co-uniformity modulus and the order gate for a
//! few maps of a block of Z².

use delone::prelude::*;

fn block(r: i64) -> PointSet {
    PointSet::grid(1, &Region::Rect(Rect::closed(int(-r), int(r), int(-r), int(r))))
}

fn profile(name: &str, f: &BijectionTable) -> Result<()> {
    let lip = lipschitz_constants(f)?;
    let radii: Vec<Rational> = [1, 2, 4, 8].into_iter().map(int).collect();
    let modulus = co_uniformity(f, &radii)?;
    let gate = order_gate(&modulus, 2)?;
    println!("{name}: L={} b={}", lip.lipschitz, lip.b);
    for s in &modulus.samples {
        println!("  omega({}) = {}", s.r, s.omega);
    }
    println!("  fitted exponent {:.3}, gate pass={}", gate.exponent, gate.pass);
    Ok(())
}

fn main() -> Result<()> {
    let set = block(12);
    profile("identity", &BijectionTable::identity(&set))?;
    // exchange columns x=2k and x=2k+1
    let swap = BijectionTable::from_fn(&set, 1, |p| {
        let x = if p.x.rem_euclid(2) == 0 && p.x < 12 { p.x + 1 } else if p.x.rem_euclid(2) == 1 { p.x - 1 } else { p.x };
        LatticePoint::new(x, p.y)
    })?;
    profile("column swap", &swap)?;

    for (name, omega) in [("r", 1.0), ("r^1.5", 1.5), ("r^2", 2.0)] {
        let m = CoUniformityModulus::synthetic(&[1.0, 2.0, 4.0, 8.0, 16.0], |r| r.powf(omega));
        println!("synthetic {name}: pass={}", order_gate(&m, 2)?.pass);
    }
    Ok(())
}
