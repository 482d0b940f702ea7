//! Tracking cost, adjoint gradient and projected gradient descent.
//!
//! The cost of an initial velocity `v` is
//!
//! ```text
//! J(v) = ‖u(v) - y‖²  over (0, L) x (0, T)  +  α ‖v‖²  over (0, L)
//! ```
//!
//! and its gradient is `J'(v) = -ψ(·, 0) + 2αv`, where `ψ` solves the adjoint
//! problem driven by `u(v) - y`. The gradient increment caused by `δv` does
//! not depend on `v`: it is `-δψ(·, 0) + 2α δv`, with `δψ` the adjoint of the
//! state increment `δu`. [`hessian_apply`] exposes that linear map, and
//! [`estimate_lipschitz`] runs power iteration on it to estimate the Lipschitz
//! constant of the gradient.
//!
//! [`optimize`] iterates `v ← P(v - β J'(v))` where `P` is the radial
//! projection onto the admissible ball `‖v‖ ≤ v_c`. A step is accepted only if
//! it lowers the cost; otherwise it is shrunk.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adjoint::{solve_adjoint, solve_adjoint_difference};
use crate::dynamics::{solve_difference, solve_forward, BeamProblem, EvolutionState};
use crate::error::{Error, Result};
use crate::grid::{inner_space, l2_norm_space, l2_norm_spacetime, Grid, SpaceField};
use crate::sampling::random_nodal_field;

/// Relative gradient norm below which an iterate counts as stationary.
pub const STATIONARY_THRESHOLD: f64 = 1e-12;

/// Default seed for power-iteration start vectors.
pub const DEFAULT_SEED: u64 = 0x5eed_b3a4;

/// How the step length `β_k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `β = 1 / ℒ̂` from power iteration on the Hessian action.
    InverseLipschitz,
    /// Constant `β`.
    Fixed(f64),
    /// Start every iteration at the given `β` and shrink until the cost drops.
    Backtracking(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub step: StepRule,
    /// Stop once `‖v^{k+1} - v^k‖ ≤ tolerance`.
    pub tolerance: f64,
    pub max_iters: usize,
    pub power_iters: usize,
    /// Relative change of the eigenvalue estimate that ends power iteration.
    pub power_tol: f64,
    /// Step reduction factor on a rejected step, in `(0, 1)`.
    pub shrink: f64,
    /// Rejections allowed within one iteration before giving up.
    pub max_shrinks: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: StepRule::InverseLipschitz,
            tolerance: 1e-6,
            max_iters: 500,
            power_iters: 100,
            power_tol: 1e-10,
            shrink: 0.5,
            max_shrinks: 60,
            seed: DEFAULT_SEED,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self.step {
            StepRule::Fixed(b) | StepRule::Backtracking(b) if !(b.is_finite() && b > 0.0) => {
                return bad(format!("step size must be positive, got {b}"));
            }
            _ => {}
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad(format!("eps must be positive, got {}", self.tolerance));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.power_iters == 0 {
            return bad("power_iters must be at least 1".into());
        }
        if !(self.power_tol.is_finite() && self.power_tol > 0.0) {
            return bad(format!(
                "power_tol must be positive, got {}",
                self.power_tol
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!(
                "shrink factor must lie in (0, 1), got {}",
                self.shrink
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceMet,
    MaxIters,
    StationaryGradient,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ToleranceMet => "tolerance-met",
            Termination::MaxIters => "max-iters",
            Termination::StationaryGradient => "stationary-gradient",
        }
    }
}

/// Result of power iteration on a self-adjoint map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    /// Rayleigh-quotient estimate of the dominant eigenvalue.
    pub value: f64,
    /// `‖A x - λ x‖ / ‖A x‖` at the final iterate.
    pub residual: f64,
    pub iterations: usize,
    /// False when `power_iters` ran out before the estimate settled.
    pub converged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    /// Number of gradient steps taken (1 if the start is already stationary).
    pub iterations: usize,
    /// Cost at `v^0, v^1, ...`.
    pub cost_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    /// Accepted step length of each update.
    pub step_history: Vec<f64>,
    pub final_v: SpaceField,
    pub final_cost: f64,
    pub termination: Termination,
    pub lipschitz: Option<PowerEstimate>,
    /// Trial steps rejected for failing to lower the cost.
    pub rejected_steps: usize,
}

impl OptimizationReport {
    /// CSV with header `iter,cost,grad_norm,step`; the last row has step 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,cost,grad_norm,step\n");
        for (k, (c, g)) in self
            .cost_history
            .iter()
            .zip(&self.grad_norm_history)
            .enumerate()
        {
            let step = self.step_history.get(k).copied().unwrap_or(0.0);
            out.push_str(&format!("{k},{c:e},{g:e},{step:e}\n"));
        }
        out
    }
}

/// Cost together with the forward state it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: f64,
    pub state: EvolutionState,
}

/// Solves forward and evaluates the cost.
pub fn evaluate(problem: &BeamProblem, v: &SpaceField) -> Result<Evaluation> {
    let state = solve_forward(problem, v)?;
    let grid = problem.grid();
    let misfit = state.displacement().sub(problem.target())?;
    let tracking = l2_norm_spacetime(&misfit, grid)?.powi(2);
    let reg = problem.alpha() * l2_norm_space(v, grid)?.powi(2);
    Ok(Evaluation {
        cost: tracking + reg,
        state,
    })
}

pub fn cost(problem: &BeamProblem, v: &SpaceField) -> Result<f64> {
    Ok(evaluate(problem, v)?.cost)
}

/// `J'(v) = -ψ(·, 0) + 2αv`.
pub fn gradient(problem: &BeamProblem, v: &SpaceField) -> Result<SpaceField> {
    let state = solve_forward(problem, v)?;
    gradient_from_state(problem, v, &state)
}

/// Gradient reusing an already computed forward state for `v`.
pub fn gradient_from_state(
    problem: &BeamProblem,
    v: &SpaceField,
    state: &EvolutionState,
) -> Result<SpaceField> {
    let adj = solve_adjoint(problem, state.displacement())?;
    adj.trace_at_zero()
        .scaled(-1.0)
        .add_scaled(2.0 * problem.alpha(), v)
}

/// Gradient increment `-δψ(·, 0) + 2α δv` caused by `δv`.
pub fn hessian_apply(problem: &BeamProblem, dv: &SpaceField) -> Result<SpaceField> {
    let du = solve_difference(problem, dv)?;
    let adj = solve_adjoint_difference(problem, du.displacement())?;
    adj.trace_at_zero()
        .scaled(-1.0)
        .add_scaled(2.0 * problem.alpha(), dv)
}

/// Radial projection onto `{‖v‖ ≤ radius}`.
pub fn project_ball(v: &SpaceField, radius: f64, grid: &Grid) -> Result<SpaceField> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "admissible radius must be positive, got {radius}"
        )));
    }
    let norm = l2_norm_space(v, grid)?;
    if norm <= radius {
        Ok(v.clone())
    } else {
        Ok(v.scaled(radius / norm))
    }
}

/// Power iteration with Rayleigh quotients for a self-adjoint, positive map.
pub fn power_iteration(
    grid: &Grid,
    start: SpaceField,
    max_iters: usize,
    tol: f64,
    seed: u64,
    mut apply: impl FnMut(&SpaceField) -> Result<SpaceField>,
) -> Result<PowerEstimate> {
    let mut x = normalized(start, grid)?;
    let mut lambda = f64::NAN;
    let mut residual = f64::NAN;
    for it in 1..=max_iters {
        let ax = apply(&x)?;
        let next = inner_space(&ax, &x, grid)?;
        let ax_norm = l2_norm_space(&ax, grid)?;
        residual = if ax_norm > 0.0 {
            l2_norm_space(&ax.add_scaled(-next, &x)?, grid)? / ax_norm
        } else {
            0.0
        };
        let settled = (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if settled || ax_norm == 0.0 {
            return Ok(PowerEstimate {
                value: lambda,
                residual,
                iterations: it,
                converged: true,
                seed,
            });
        }
        x = ax.scaled(1.0 / ax_norm);
    }
    Ok(PowerEstimate {
        value: lambda,
        residual,
        iterations: max_iters,
        converged: false,
        seed,
    })
}

fn normalized(v: SpaceField, grid: &Grid) -> Result<SpaceField> {
    let n = l2_norm_space(&v, grid)?;
    if n == 0.0 {
        return Err(Error::InvalidInput(
            "power iteration start vector is zero".into(),
        ));
    }
    Ok(v.scaled(1.0 / n))
}

/// Estimates the Lipschitz constant of `J'` as the dominant eigenvalue of the
/// Hessian action. Deterministic for a given `cfg.seed`.
pub fn estimate_lipschitz(problem: &BeamProblem, cfg: &OptimizerConfig) -> Result<PowerEstimate> {
    if cfg.power_iters == 0 {
        return Err(Error::InvalidConfig(
            "power_iters must be at least 1".into(),
        ));
    }
    let grid = problem.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = random_nodal_field(grid, &mut rng);
    power_iteration(grid, start, cfg.power_iters, cfg.power_tol, cfg.seed, |x| {
        hessian_apply(problem, x)
    })
}

/// Projected gradient descent from `v0`.
pub fn optimize(
    problem: &BeamProblem,
    cfg: &OptimizerConfig,
    v0: &SpaceField,
) -> Result<OptimizationReport> {
    cfg.validate()?;
    let grid = problem.grid();
    v0.check_grid(grid)?;
    let radius = problem.radius();

    let lipschitz = match cfg.step {
        StepRule::InverseLipschitz => Some(estimate_lipschitz(problem, cfg)?),
        _ => None,
    };
    let initial_step = match cfg.step {
        StepRule::InverseLipschitz => {
            let l = lipschitz.map(|e| e.value).unwrap_or(f64::NAN);
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::NumericalFailure(format!(
                    "Lipschitz estimate {l} cannot define a step size"
                )));
            }
            1.0 / l
        }
        StepRule::Fixed(b) | StepRule::Backtracking(b) => b,
    };

    let mut v = project_ball(v0, radius, grid)?;
    let mut eval = evaluate(problem, &v)?;
    let mut g = gradient_from_state(problem, &v, &eval.state)?;

    let mut cost_history = Vec::new();
    let mut grad_norm_history = Vec::new();
    let mut step_history = Vec::new();
    let mut rejected_steps = 0;
    let mut iterations = 0;

    let termination = loop {
        iterations += 1;
        let g_norm = l2_norm_space(&g, grid)?;
        cost_history.push(eval.cost);
        grad_norm_history.push(g_norm);
        if g_norm <= STATIONARY_THRESHOLD * l2_norm_space(&v, grid)?.max(1.0) {
            break Termination::StationaryGradient;
        }

        let mut beta = initial_step;
        let mut shrinks = 0;
        let (accepted, small_step) = loop {
            let candidate = project_ball(&v.add_scaled(-beta, &g)?, radius, grid)?;
            let step_norm = l2_norm_space(&candidate.sub(&v)?, grid)?;
            let cand_eval = evaluate(problem, &candidate)?;
            if step_norm <= cfg.tolerance {
                // within tolerance: keep the candidate only if it does not raise the cost
                let keep = cand_eval.cost <= eval.cost;
                break (keep.then_some((candidate, cand_eval)), true);
            }
            let descent = match cfg.step {
                // sufficient decrease for the projected step, which caps beta near 1/L
                StepRule::Backtracking(_) => {
                    let d = candidate.sub(&v)?;
                    let model = eval.cost
                        + inner_space(&g, &d, grid)?
                        + step_norm * step_norm / (2.0 * beta);
                    cand_eval.cost < eval.cost && cand_eval.cost <= model
                }
                _ => cand_eval.cost < eval.cost,
            };
            if descent {
                break (Some((candidate, cand_eval)), false);
            }
            rejected_steps += 1;
            shrinks += 1;
            if shrinks > cfg.max_shrinks {
                return Err(Error::StepFailure {
                    iterate: iterations,
                    shrinks,
                });
            }
            beta *= cfg.shrink;
        };

        step_history.push(beta);
        if let Some((next_v, next_eval)) = accepted {
            g = gradient_from_state(problem, &next_v, &next_eval.state)?;
            v = next_v;
            eval = next_eval;
        }

        let done = if small_step {
            Some(Termination::ToleranceMet)
        } else if iterations >= cfg.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if let Some(t) = done {
            cost_history.push(eval.cost);
            grad_norm_history.push(l2_norm_space(&g, grid)?);
            break t;
        }
    };

    Ok(OptimizationReport {
        iterations,
        cost_history,
        grad_norm_history,
        step_history,
        final_cost: eval.cost,
        final_v: v,
        termination,
        lipschitz,
        rejected_steps,
    })
}
