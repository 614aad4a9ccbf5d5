//! Pricing engine for European two-asset options under the Kou
//! jump-diffusion model.
//!
//! The engine solves the two-dimensional pricing PIDE by the method of
//! lines: second-order finite differences on a sinh-stretched nonuniform
//! grid for the convection-diffusion-reaction part, a cumulative-sum
//! evaluation of the nonlocal jump integral with cost proportional to the
//! number of grid points, and seven IMEX/ADI operator splitting schemes in
//! time. Greeks, a Monte Carlo cross-check, stability-bound verification
//! and convergence studies sit on top.
//!
//! Core numerics are generic over the working scalar (`f32`/`f64`); the
//! `*64` aliases below fix the default production precision.

// Validation predicates are written as `!(x > bound)` so NaN inputs fail
// closed; indexed loops over banded grids stay as written.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod grid;
pub mod jumpint;
pub mod linsolve;
pub mod mc;
pub mod model;
pub mod pide;
pub mod scalar;
pub mod spatial;
pub mod stability;
pub mod steppers;

pub use model::{KouParams, ParameterSet, SetLabel};
pub use pide::{price_surface, Pide2d};
pub use scalar::{Scalar, StageScalar};
pub use steppers::{fair_steps, run, Scheme, SchemeSpec};

/// Default production scalar.
pub type Real = f64;
/// The model parameters at production precision.
pub type Params64 = model::KouParams<f64>;
/// Two-dimensional grid at production precision.
pub type Grid2d64 = grid::Grid2d<f64>;
/// Grid function at production precision.
pub type GridFunction64 = grid::GridFunction<f64>;
/// Assembled problem at production precision.
pub type Pide64 = pide::Pide2d<f64>;

/// Single-precision variants.
pub type Params32 = model::KouParams<f32>;
pub type Grid2d32 = grid::Grid2d<f32>;
pub type GridFunction32 = grid::GridFunction<f32>;
pub type Pide32 = pide::Pide2d<f32>;
