//! Shared fixtures for the criterion benches.

use plp_core::lp_transform::band_limited_random;
use plp_core::{DilationGroup, Geometry, GridFunction, PeriodicGrid};

/// `P = diag(1, 2)` on a `[-8, 8)^2` box with `samples` points per axis.
pub fn parabolic_geometry(samples: usize) -> Geometry {
    let group = DilationGroup::diagonal(&[1.0, 2.0]).expect("admissible");
    let grid = PeriodicGrid::new(2, 16.0, samples).expect("valid grid");
    Geometry::new(&grid, &group).expect("geometry")
}

/// Seeded real test function with `rho^*` content in `[0.2, 4]`.
pub fn test_function(geom: &Geometry, seed: u64) -> GridFunction {
    band_limited_random(geom, 0.2, 4.0, seed)
}
