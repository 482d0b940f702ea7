//! Backward-in-time adjoint solves.
//!
//! The adjoint field solves `ψ_tt + (k ψ_xx)_xx = -2 (u - y)` with zero data at
//! the final time `T`. Substituting `τ = T - t` turns it into a forward problem
//! with zero initial data and the time-reversed source, so the same Newmark
//! solver (and the same factorization) serves both directions. The source is
//! reversed by flipping time levels; nothing is interpolated.
//!
//! This is the continuous adjoint discretized with the forward scheme, not the
//! exact transpose of the discrete forward map. Identities that pair the two
//! therefore close to discretization order rather than to round-off.

use crate::dynamics::BeamProblem;
use crate::error::Result;
use crate::grid::{SpaceField, SpaceTimeField};

/// Adjoint field on the grid, with its velocity and its trace at `t = 0`.
#[derive(Debug, Clone)]
pub struct AdjointState {
    psi: SpaceTimeField,
    psi_t: SpaceTimeField,
    trace_at_zero: SpaceField,
}

impl AdjointState {
    pub fn psi(&self) -> &SpaceTimeField {
        &self.psi
    }

    /// `ψ_t` in forward time.
    pub fn psi_t(&self) -> &SpaceTimeField {
        &self.psi_t
    }

    /// `ψ(·, 0)`.
    pub fn trace_at_zero(&self) -> &SpaceField {
        &self.trace_at_zero
    }

    pub fn into_trace(self) -> SpaceField {
        self.trace_at_zero
    }
}

/// Solves the adjoint problem driven by the tracking residual `u - y`.
pub fn solve_adjoint(problem: &BeamProblem, u: &SpaceTimeField) -> Result<AdjointState> {
    u.check_grid(problem.grid())?;
    let residual = u.sub(problem.target())?;
    backward_solve(problem, &residual)
}

/// Solves the adjoint problem driven by a state increment `δu` (no target).
pub fn solve_adjoint_difference(
    problem: &BeamProblem,
    du: &SpaceTimeField,
) -> Result<AdjointState> {
    du.check_grid(problem.grid())?;
    backward_solve(problem, du)
}

/// Backward solve with source `-2 r`, zero final data.
fn backward_solve(problem: &BeamProblem, residual: &SpaceTimeField) -> Result<AdjointState> {
    let grid = problem.grid();
    let zero = SpaceField::zeros(grid);
    if residual.is_zero() {
        return Ok(AdjointState {
            psi: SpaceTimeField::zeros(grid),
            psi_t: SpaceTimeField::zeros(grid),
            trace_at_zero: zero,
        });
    }
    let source = residual.time_reversed().scaled(-2.0);
    let reversed = problem.solver().march(&zero, &zero, Some(&source))?;
    let psi = reversed.displacement().time_reversed();
    // d/dt = -d/dτ
    let psi_t = reversed.velocity().time_reversed().scaled(-1.0);
    let trace_at_zero = psi.level(0);
    Ok(AdjointState {
        psi,
        psi_t,
        trace_at_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn problem(nx: usize, nt: usize, target: impl Fn(f64, f64) -> f64) -> BeamProblem {
        let g = Grid::new(PI, PI, nx, nt).unwrap();
        BeamProblem::unloaded(
            g,
            SpaceField::constant(&g, 1.0),
            SpaceTimeField::from_fn(&g, target),
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn matching_state_gives_zero_adjoint() {
        let p = problem(20, 20, |x, t| x.sin() * t);
        let a = solve_adjoint(&p, &p.target().clone()).unwrap();
        assert_eq!(a.psi().max_abs(), 0.0);
        assert_eq!(a.trace_at_zero().max_abs(), 0.0);
    }

    #[test]
    fn constant_in_time_source_has_closed_form() {
        let p = problem(200, 200, |x, _| x.sin());
        let g = *p.grid();
        let a = solve_adjoint(&p, &SpaceTimeField::zeros(&g)).unwrap();
        let exact = |x: f64, t: f64| 2.0 * (1.0 - (t - PI).cos()) * x.sin();
        let mut err = 0.0f64;
        for i in 0..=200 {
            err = err.max((a.trace_at_zero().values()[i] - exact(g.x(i), 0.0)).abs());
        }
        assert!(err <= 4e-3, "trace error {err}");
        for n in [0, 50, 150, 200] {
            for i in [1, 60, 100] {
                assert!((a.psi().get(n, i) - exact(g.x(i), g.t(n))).abs() <= 4e-3);
            }
        }
        // final conditions
        assert!(a.psi().row(200).iter().all(|&v| v == 0.0));
        assert!(a.psi_t().row(200).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_is_linear_in_the_residual() {
        let p = problem(40, 30, |x, t| x.sin() * (1.0 + t));
        let g = *p.grid();
        let u = SpaceTimeField::from_fn(&g, |x, t| (2.0 * x).sin() * t.cos());
        let a1 = solve_adjoint(&p, &u).unwrap();
        // doubling u - y
        let u2 = u.scaled(2.0).sub(p.target()).unwrap();
        let a2 = solve_adjoint(&p, &u2).unwrap();
        let gap = a2.psi().sub(&a1.psi().scaled(2.0)).unwrap().max_abs();
        assert!(gap <= 1e-10 * a2.psi().max_abs(), "gap {gap}");

        let du = SpaceTimeField::from_fn(&g, |x, t| x * (PI - x) * t * t);
        let d = solve_adjoint_difference(&p, &du).unwrap();
        let a3 = solve_adjoint(&p, &u.add_scaled(1.0, &du).unwrap()).unwrap();
        let gap = a3
            .psi()
            .sub(a1.psi())
            .unwrap()
            .sub(d.psi())
            .unwrap()
            .max_abs();
        assert!(
            gap <= 1e-10 * a3.psi().max_abs().max(a1.psi().max_abs()),
            "gap {gap}"
        );

        let z = solve_adjoint_difference(&p, &SpaceTimeField::zeros(&g)).unwrap();
        assert_eq!(z.psi().max_abs(), 0.0);
    }
}
