//! Forward time integration of `u_tt + (k u_xx)_xx = F` with simply supported ends.
//!
//! Time stepping is Newmark's average-acceleration scheme (β = 1/4, γ = 1/2)
//! with an identity mass matrix on the interior nodes. Each step solves
//!
//! ```text
//! (I + dt²/4 · B) u_{n+1} = u_n + dt·v_n + dt²/4 · (a_n + F_{n+1})
//! ```
//!
//! and then recovers `a_{n+1} = F_{n+1} - B u_{n+1}` and
//! `v_{n+1} = v_n + dt/2 · (a_n + a_{n+1})`. The system matrix depends only on
//! the grid and the stiffness, so its band Cholesky factor is computed once
//! per [`BeamProblem`] and reused by every solve.
//!
//! For an undamped linear system this scheme conserves the discrete energy
//! `½ (|v|² + uᵀ B u)` exactly, and under a load the energy change over one
//! step equals `dt · ⟨(v_n + v_{n+1})/2, (F_n + F_{n+1})/2⟩`.

use crate::banded::BandCholesky;
use crate::error::{Error, Result};
use crate::grid::{trapezoid_space, Grid, SpaceField, SpaceTimeField};
use crate::operators::{assemble_bending, validate_stiffness, BendingOperator};

const NEWMARK_BETA: f64 = 0.25;
const NEWMARK_GAMMA: f64 = 0.5;

/// Support values of the initial displacement above this are rejected.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Grid, bending operator and the factored Newmark system matrix.
#[derive(Debug, Clone)]
pub struct BeamSolver {
    operator: BendingOperator,
    factor: BandCholesky,
}

impl BeamSolver {
    pub fn new(grid: &Grid, stiffness: &SpaceField) -> Result<Self> {
        let operator = assemble_bending(stiffness, grid)?;
        let dt = grid.dt();
        let system = operator.shifted(1.0, NEWMARK_BETA * dt * dt);
        let factor = BandCholesky::factor(&system)?;
        Ok(Self { operator, factor })
    }

    pub fn grid(&self) -> &Grid {
        self.operator.grid()
    }

    pub fn operator(&self) -> &BendingOperator {
        &self.operator
    }

    /// Marches from displacement `w` and velocity `v` under `load`.
    ///
    /// Support values of `v` are ignored: the supports never move. `load`
    /// of `None` means `F ≡ 0`.
    pub fn march(
        &self,
        w: &SpaceField,
        v: &SpaceField,
        load: Option<&SpaceTimeField>,
    ) -> Result<EvolutionState> {
        let grid = *self.grid();
        w.check_grid(&grid)?;
        v.check_grid(&grid)?;
        if let Some(f) = load {
            f.check_grid(&grid)?;
        }
        let levels = grid.time_levels();
        let nodes = grid.space_nodes();
        let n = grid.interior_nodes();
        let dt = grid.dt();
        let interior_load = |level: usize| -> &[f64] {
            match load {
                Some(f) => &f.row(level)[1..nodes - 1],
                None => &[],
            }
        };
        let load_at = |level: usize, i: usize| -> f64 {
            let row = interior_load(level);
            if row.is_empty() {
                0.0
            } else {
                row[i]
            }
        };

        let mut disp = vec![0.0; levels * nodes];
        let mut vel = vec![0.0; levels * nodes];
        let mut acc = vec![0.0; levels * nodes];

        let mut u: Vec<f64> = w.interior().to_vec();
        let mut ut: Vec<f64> = v.interior().to_vec();
        let mut a = vec![0.0; n];
        let mut bu = vec![0.0; n];
        self.operator.mul_interior(&u, &mut bu);
        for i in 0..n {
            a[i] = load_at(0, i) - bu[i];
        }
        store(&mut disp, &mut vel, &mut acc, nodes, 0, &u, &ut, &a);

        let mut rhs = vec![0.0; n];
        for level in 1..levels {
            for i in 0..n {
                rhs[i] = u[i]
                    + dt * ut[i]
                    + dt * dt * ((0.5 - NEWMARK_BETA) * a[i] + NEWMARK_BETA * load_at(level, i));
            }
            self.factor.solve_in_place(&mut rhs);
            std::mem::swap(&mut u, &mut rhs);
            self.operator.mul_interior(&u, &mut bu);
            for i in 0..n {
                let a_next = load_at(level, i) - bu[i];
                ut[i] += dt * (NEWMARK_GAMMA * a_next + (1.0 - NEWMARK_GAMMA) * a[i]);
                a[i] = a_next;
            }
            if u.iter().chain(&ut).any(|x| !x.is_finite()) {
                return Err(Error::Divergence { level });
            }
            store(&mut disp, &mut vel, &mut acc, nodes, level, &u, &ut, &a);
        }

        Ok(EvolutionState {
            displacement: SpaceTimeField::from_parts_unchecked(levels, nodes, disp),
            velocity: SpaceTimeField::from_parts_unchecked(levels, nodes, vel),
            acceleration: SpaceTimeField::from_parts_unchecked(levels, nodes, acc),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn store(
    disp: &mut [f64],
    vel: &mut [f64],
    acc: &mut [f64],
    nodes: usize,
    level: usize,
    u: &[f64],
    ut: &[f64],
    a: &[f64],
) {
    let range = level * nodes + 1..(level + 1) * nodes - 1;
    disp[range.clone()].copy_from_slice(u);
    vel[range.clone()].copy_from_slice(ut);
    acc[range].copy_from_slice(a);
}

/// Problem data for the tracking problem, bound to one grid.
#[derive(Debug, Clone)]
pub struct BeamProblem {
    grid: Grid,
    stiffness: SpaceField,
    initial_displacement: SpaceField,
    load: SpaceTimeField,
    target: SpaceTimeField,
    alpha: f64,
    radius: f64,
    solver: BeamSolver,
}

impl BeamProblem {
    /// Validates the data and factors the time-stepping matrix.
    ///
    /// `alpha` may be zero (useful for verification); the admissible-ball
    /// radius must be positive.
    pub fn new(
        grid: Grid,
        stiffness: SpaceField,
        initial_displacement: SpaceField,
        load: SpaceTimeField,
        target: SpaceTimeField,
        alpha: f64,
        radius: f64,
    ) -> Result<Self> {
        stiffness.check_grid(&grid)?;
        validate_stiffness(&stiffness)?;
        initial_displacement.check_grid(&grid)?;
        let w = initial_displacement.values();
        if w[0].abs() > SUPPORT_TOLERANCE || w[w.len() - 1].abs() > SUPPORT_TOLERANCE {
            return Err(Error::BoundaryViolation(format!(
                "initial displacement must vanish at both supports, found {:e} and {:e}",
                w[0],
                w[w.len() - 1]
            )));
        }
        load.check_grid(&grid)?;
        target.check_grid(&grid)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "regularization weight alpha must be finite and non-negative, got {alpha}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "admissible radius v_c must be finite and positive, got {radius}"
            )));
        }
        let solver = BeamSolver::new(&grid, &stiffness)?;
        Ok(Self {
            grid,
            stiffness,
            initial_displacement,
            load,
            target,
            alpha,
            radius,
            solver,
        })
    }

    /// Zero initial displacement and zero load.
    pub fn unloaded(
        grid: Grid,
        stiffness: SpaceField,
        target: SpaceTimeField,
        alpha: f64,
        radius: f64,
    ) -> Result<Self> {
        Self::new(
            grid,
            stiffness,
            SpaceField::zeros(&grid),
            SpaceTimeField::zeros(&grid),
            target,
            alpha,
            radius,
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stiffness(&self) -> &SpaceField {
        &self.stiffness
    }

    pub fn initial_displacement(&self) -> &SpaceField {
        &self.initial_displacement
    }

    pub fn load(&self) -> &SpaceTimeField {
        &self.load
    }

    pub fn target(&self) -> &SpaceTimeField {
        &self.target
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn solver(&self) -> &BeamSolver {
        &self.solver
    }

    /// Same data with a different target.
    pub fn with_target(&self, target: SpaceTimeField) -> Result<Self> {
        target.check_grid(&self.grid)?;
        Ok(Self {
            target,
            ..self.clone()
        })
    }

    /// Same data with a different regularization weight and radius.
    pub fn with_weights(&self, alpha: f64, radius: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.stiffness.clone(),
            self.initial_displacement.clone(),
            self.load.clone(),
            self.target.clone(),
            alpha,
            radius,
        )
    }
}

/// Sampled trajectory: displacement, velocity and acceleration at every level.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    displacement: SpaceTimeField,
    velocity: SpaceTimeField,
    acceleration: SpaceTimeField,
}

impl EvolutionState {
    pub fn displacement(&self) -> &SpaceTimeField {
        &self.displacement
    }

    pub fn velocity(&self) -> &SpaceTimeField {
        &self.velocity
    }

    pub fn acceleration(&self) -> &SpaceTimeField {
        &self.acceleration
    }

    pub fn into_displacement(self) -> SpaceTimeField {
        self.displacement
    }
}

/// Solves the forward problem with initial velocity `v`.
pub fn solve_forward(problem: &BeamProblem, v: &SpaceField) -> Result<EvolutionState> {
    let load = (!problem.load.is_zero()).then_some(&problem.load);
    problem.solver.march(&problem.initial_displacement, v, load)
}

/// Solves the unloaded problem from rest position with initial velocity `dv`.
///
/// By linearity of the scheme this is the state increment caused by
/// perturbing the initial velocity by `dv`.
pub fn solve_difference(problem: &BeamProblem, dv: &SpaceField) -> Result<EvolutionState> {
    problem
        .solver
        .march(&SpaceField::zeros(&problem.grid), dv, None)
}

/// Discrete energy `½ ∫ (u_t² + k u_xx²) dx` at every time level.
pub fn energy_series(state: &EvolutionState, problem: &BeamProblem) -> Result<Vec<f64>> {
    let grid = problem.grid();
    state.displacement.check_grid(grid)?;
    state.velocity.check_grid(grid)?;
    let k = problem.stiffness.values();
    let op = problem.solver.operator();
    let mut density = vec![0.0; grid.space_nodes()];
    let nodes = grid.space_nodes();
    Ok((0..grid.time_levels())
        .map(|n| {
            let u = state.displacement.row(n);
            let ut = state.velocity.row(n);
            let curv = op.curvature(&u[1..nodes - 1]);
            for i in 0..nodes {
                density[i] = ut[i] * ut[i] + k[i] * curv[i] * curv[i];
            }
            0.5 * trapezoid_space(&density, grid)
        })
        .collect())
}

/// Trapezoid-in-time accumulation of the load work `∫ F u_t dx`.
///
/// Entry `n` approximates `∫₀^{t_n} ∫₀ᴸ F u_t dx dt`; entry 0 is zero.
pub fn work_series(state: &EvolutionState, problem: &BeamProblem) -> Result<Vec<f64>> {
    let grid = problem.grid();
    state.velocity.check_grid(grid)?;
    let nodes = grid.space_nodes();
    let mut power = vec![0.0; nodes];
    let rate: Vec<f64> = (0..grid.time_levels())
        .map(|n| {
            let f = problem.load.row(n);
            let ut = state.velocity.row(n);
            for i in 0..nodes {
                power[i] = f[i] * ut[i];
            }
            trapezoid_space(&power, grid)
        })
        .collect();
    let mut out = Vec::with_capacity(rate.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in rate.windows(2) {
        acc += 0.5 * grid.dt() * (pair[0] + pair[1]);
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_norm_spacetime;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sine_problem(nx: usize, nt: usize) -> BeamProblem {
        let g = Grid::new(PI, PI, nx, nt).unwrap();
        BeamProblem::unloaded(
            g,
            SpaceField::constant(&g, 1.0),
            SpaceTimeField::zeros(&g),
            0.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let p = sine_problem(20, 20);
        let s = solve_forward(&p, &SpaceField::zeros(p.grid())).unwrap();
        assert_eq!(s.displacement().max_abs(), 0.0);
        assert_eq!(s.velocity().max_abs(), 0.0);
        let e = energy_series(&s, &p).unwrap();
        assert!(e.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sine_velocity_gives_standing_wave() {
        let p = sine_problem(200, 200);
        let v = SpaceField::from_fn(p.grid(), f64::sin);
        let s = solve_forward(&p, &v).unwrap();
        assert_abs_diff_eq!(s.displacement().get(100, 100), 1.0, epsilon = 1e-3);
        // initial data is reproduced
        for i in 1..200 {
            assert_eq!(s.velocity().get(0, i), v.values()[i]);
            assert_eq!(s.displacement().get(0, i), 0.0);
        }
        for n in 0..=200 {
            assert_eq!(s.displacement().get(n, 0), 0.0);
            assert_eq!(s.displacement().get(n, 200), 0.0);
        }
    }

    #[test]
    fn energy_of_standing_wave_is_quarter_pi_and_conserved() {
        let p = sine_problem(200, 200);
        let v = SpaceField::from_fn(p.grid(), f64::sin);
        let s = solve_forward(&p, &v).unwrap();
        let e = energy_series(&s, &p).unwrap();
        for &en in &e {
            assert_abs_diff_eq!(en, PI / 4.0, epsilon = 1e-3);
            assert!((en - e[0]).abs() <= 1e-8 * e[0]);
        }
    }

    #[test]
    fn energy_bounded_for_large_time_steps() {
        // dt/dx far beyond any explicit stability limit
        let g = Grid::new(1.0, 5.0, 50, 10).unwrap();
        let w = SpaceField::from_fn(&g, |x| (PI * x).sin() * 0.2);
        let w = SpaceField::new(
            w.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == 0 || i == 50 { 0.0 } else { v })
                .collect(),
        )
        .unwrap();
        let p = BeamProblem::new(
            g,
            SpaceField::from_fn(&g, |x| 1.0 + x),
            w,
            SpaceTimeField::zeros(&g),
            SpaceTimeField::zeros(&g),
            0.0,
            1.0,
        )
        .unwrap();
        let v = SpaceField::from_fn(&g, |x| x * (1.0 - x) * (7.0 * x).cos());
        let e = energy_series(&solve_forward(&p, &v).unwrap(), &p).unwrap();
        let e0 = e[0];
        assert!(e.iter().all(|&x| x <= e0 * (1.0 + 1e-8)));
    }

    #[test]
    fn difference_problem_is_the_state_increment() {
        let g = Grid::new(2.0, 1.5, 40, 30).unwrap();
        let p = BeamProblem::new(
            g,
            SpaceField::from_fn(&g, |x| 1.0 + 0.3 * x),
            SpaceField::from_fn(&g, |x| (PI * x / 2.0).sin() * 0.1),
            SpaceTimeField::from_fn(&g, |x, t| x * (2.0 - x) * t),
            SpaceTimeField::zeros(&g),
            0.0,
            1.0,
        )
        .unwrap();
        let v = SpaceField::from_fn(&g, |x| (x * 3.0).sin());
        let dv = SpaceField::from_fn(&g, |x| x * (2.0 - x));
        let a = solve_forward(&p, &v.add_scaled(1.0, &dv).unwrap()).unwrap();
        let b = solve_forward(&p, &v).unwrap();
        let d = solve_difference(&p, &dv).unwrap();
        let diff = a.displacement().sub(b.displacement()).unwrap();
        let gap = diff.sub(d.displacement()).unwrap().max_abs();
        assert!(gap <= 1e-10 * a.displacement().max_abs(), "gap {gap}");
        let zero = solve_difference(&p, &SpaceField::zeros(&g)).unwrap();
        assert_eq!(zero.displacement().max_abs(), 0.0);
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let length = 1.0;
        let kk = (PI / length).powi(4);
        let err = |n: usize| {
            let g = Grid::new(length, 1.0, n, n).unwrap();
            let load = SpaceTimeField::from_fn(&g, |x, t| {
                let s = (PI * x / length).sin();
                2.0 * s + kk * s * t * t
            });
            let p = BeamProblem::new(
                g,
                SpaceField::constant(&g, 1.0),
                SpaceField::zeros(&g),
                load,
                SpaceTimeField::zeros(&g),
                0.0,
                1.0,
            )
            .unwrap();
            let s = solve_forward(&p, &SpaceField::zeros(&g)).unwrap();
            let exact = SpaceTimeField::from_fn(&g, |x, t| (PI * x / length).sin() * t * t);
            let e = s.displacement().sub(&exact).unwrap();
            l2_norm_spacetime(&e, &g).unwrap()
        };
        let (e1, e2, e3) = (err(25), err(50), err(100));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            assert!((order - 2.0).abs() <= 0.3, "order {order}");
        }
    }

    #[test]
    fn rejects_displaced_supports() {
        let g = Grid::new(1.0, 1.0, 8, 4).unwrap();
        let err = BeamProblem::new(
            g,
            SpaceField::constant(&g, 1.0),
            SpaceField::constant(&g, 0.1),
            SpaceTimeField::zeros(&g),
            SpaceTimeField::zeros(&g),
            0.0,
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BoundaryViolation(_)));
    }
}
