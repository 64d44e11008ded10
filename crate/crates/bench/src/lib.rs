//! Fixtures shared by the benchmarks.

use planar_orbits::density::TestFunction;
use planar_orbits::Vec2;

/// The three test functions used for the convergence runs.
pub fn function_bank() -> Vec<TestFunction> {
    vec![
        TestFunction::hat(0.5, 4.0).expect("valid hat"),
        TestFunction::bump(Vec2::new(3.0, 1.0), 2.5).expect("valid bump"),
        TestFunction::bump(Vec2::new(-2.0, 3.0), 3.0).expect("valid bump"),
    ]
}

pub fn golden_u() -> Vec2 {
    Vec2::new((5f64.sqrt() - 1.0) / 2.0, 1.0)
}
