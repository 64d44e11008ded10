//! Counting and weighted sums over planar orbits of lattices in `SL(2,ℝ)`.

pub mod density;
pub mod diophantine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod selftest;
pub mod sum;
pub mod zsqrt2;

pub use error::{Error, Result};
pub use lattice::{LatticeElement, LatticeKind, LatticeSpec, NormBall};
pub use linalg::{Mat2, MatrixNorm, Vec2};
pub use density::TestFunction;
pub use diophantine::{CfExpansion, CfInput};
pub use experiments::ExperimentConfig;
