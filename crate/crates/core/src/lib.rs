//! Yosida-regularized approximation of mild solutions to the stochastic heat
//! equation with a monotone, possibly discontinuous drift on a discretized
//! interval, together with numerical studies of the convergence machinery.
//!
//! All numerical types are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the precision.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod grid_space;
pub mod noise;
pub mod real;
pub mod scalar_monotone;
pub mod semigroup;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid_space::{Grid, GridFunction};
pub use noise::{sample_path, DiffusionSpec, NoiseManifest, NoisePath, TimeGrid};
pub use real::Real;
pub use scalar_monotone::{GraphSpec, MonotoneGraph, MonotoneMap, Section, Term, YosidaView};
pub use semigroup::HeatSemigroup;
pub use solver::{
    extract_g, inclusion_check, qstar, residual_check, solve_mild, solve_regularized, MildSolution,
    SolverConfig,
};

pub type Graph64 = MonotoneGraph<f64>;
pub type Grid64 = Grid<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type HeatSemigroup64 = HeatSemigroup<f64>;
pub type NoisePath64 = NoisePath<f64>;
pub type MildSolution64 = MildSolution<f64>;
pub type SolverConfig64 = SolverConfig<f64>;

pub type Graph32 = MonotoneGraph<f32>;
pub type Grid32 = Grid<f32>;
pub type GridFunction32 = GridFunction<f32>;
pub type HeatSemigroup32 = HeatSemigroup<f32>;
pub type NoisePath32 = NoisePath<f32>;
pub type MildSolution32 = MildSolution<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
