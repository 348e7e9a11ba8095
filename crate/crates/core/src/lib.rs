//! Density-driven Delone sets in Z² and finite-scale diagnostics for maps
//! between them.
//!
//! The crate builds a set `D_ρ` from a density `ρ` on the unit square and an
//! increasing schedule of squares, audits it exactly, and measures maps out
//! of it: Lipschitz constants, minimal-Lipschitz matchings, regularity,
//! co-uniformity, boundary escape and counting-measure convergence.
//!
//! ```
//! use delone::prelude::*;
//!
//! let rho = DensitySpec::trig(1, big(1, 9));
//! let schedule = ScaleSchedule::new(vec![Level::new(32, 2, [0, 0])]);
//! let window = schedule.covering_window().unwrap();
//! let d = build(&rho, &schedule, &window, FillPolicy::RowMajor).unwrap();
//! assert!(audit(&d).is_clean());
//! ```

pub mod cli;
pub mod construction;
pub mod density;
pub mod distortion;
pub mod error;
pub mod geometry;
pub mod io;
pub mod matching;
pub mod measures;
pub mod rational;
pub mod svg;

pub use error::{Error, Result};

/// Common imports for examples and tests.
pub mod prelude {
    pub use crate::construction::{
        audit, audit_points, build, validate_schedule, DeloneSet, FillPolicy, Level,
        ScaleSchedule, ViolationKind,
    };
    pub use crate::density::{cell_quota, DensitySpec, Homothety};
    pub use crate::distortion::{
        co_uniformity, counting_lower_bound, escape_check, interior_balls, lipschitz_constants,
        nested_family, order_gate, regularity_constant, BijectionTable, CoUniformityModulus,
    };
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{Ball, LatticePoint, PointSet, Rect, Region, ScaledPoint};
    pub use crate::matching::{brute_force_min, min_lipschitz, MatchInstance, MatchMode, Method};
    pub use crate::measures::{
        discrepancy, mass_loss, measure, normalize_map, normalize_patch, pushforward,
        symdiff_band, CountingMeasure, RectFamily,
    };
    pub use crate::rational::{big, int, rat, Rational};
}
