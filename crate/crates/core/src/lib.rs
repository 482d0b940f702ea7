//! Optimal control of the initial velocity of a simply supported
//! Euler-Bernoulli beam
//!
//! ```text
//! u_tt + (k u_xx)_xx = F   on (0, L) x (0, T)
//! u = u_xx = 0             at x = 0, L
//! u(x, 0) = w,  u_t(x, 0) = v
//! ```
//!
//! The control `v` is chosen to minimize
//! `J(v) = ||u(v) - y||² + α ||v||²` over the ball `||v|| <= v_c`, with the
//! gradient supplied by a backward adjoint solve.
//!
//! ```
//! use beam_control::{BeamProblem, Grid, SpaceField, SpaceTimeField};
//! use std::f64::consts::PI;
//!
//! let grid = Grid::new(PI, PI, 100, 100)?;
//! let target = SpaceTimeField::from_fn(&grid, |x, t| x.sin() * t.sin());
//! let problem = BeamProblem::unloaded(grid, SpaceField::constant(&grid, 1.0), target, 0.0, 10.0)?;
//!
//! let v = SpaceField::from_fn(&grid, f64::sin);
//! let u = beam_control::solve_forward(&problem, &v)?;
//! assert!((u.displacement().get(50, 50) - 1.0).abs() < 1e-3);
//! # Ok::<(), beam_control::Error>(())
//! ```
//!
//! Modules, bottom up: [`grid`] (nodes, fields, quadrature), [`operators`]
//! (the discrete bending operator), [`dynamics`] (forward time stepping),
//! [`adjoint`], [`control`] (cost, gradient, projected descent) and
//! [`verify`] (runtime identity checks and convergence studies).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
mod banded;
pub mod config;
pub mod control;
pub mod dynamics;
mod error;
pub mod grid;
pub mod io;
pub mod operators;
pub mod sampling;
pub mod verify;

pub use adjoint::{solve_adjoint, solve_adjoint_difference, AdjointState};
pub use config::{parse_config, FunctionSpec, RunConfig};
pub use control::{
    cost, estimate_lipschitz, evaluate, gradient, hessian_apply, optimize, project_ball,
    OptimizationReport, OptimizerConfig, PowerEstimate, StepRule, Termination,
};
pub use dynamics::{solve_difference, solve_forward, BeamProblem, BeamSolver, EvolutionState};
pub use error::{Error, Result};
pub use grid::{Grid, SpaceField, SpaceTimeField};
pub use operators::{apply_bending, assemble_bending, BendingOperator};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/bending.md")]
    mod bending {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/adjoint.md")]
    mod adjoint {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
