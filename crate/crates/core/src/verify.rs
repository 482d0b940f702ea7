//! Executable checks of the identities the solver pipeline must satisfy.
//!
//! Each check returns a [`CheckRecord`] holding the measured quantity, the
//! tolerance it was held to and the grid sizes involved. Checks are pure and
//! deterministic for a given seed, so a [`VerificationReport`] can be
//! regenerated bit for bit.
//!
//! Tolerances come in two flavours. Identities the time stepper satisfies
//! exactly (energy conservation without load, the regularization-only
//! gradient) are held near round-off. Identities pairing the forward solve
//! with the adjoint solve only close to discretization order, because the
//! adjoint is the discretized continuous adjoint; those are held to the
//! relative gaps below and additionally checked for second-order decay.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adjoint::solve_adjoint;
use crate::control::{cost, gradient, optimize, project_ball, OptimizerConfig};
use crate::dynamics::{energy_series, solve_difference, solve_forward, work_series, BeamProblem};
use crate::error::{Error, Result};
use crate::grid::{
    inner_space, inner_spacetime, l2_norm_space, l2_norm_spacetime, Grid, SpaceField,
    SpaceTimeField,
};
use crate::sampling::random_sine_field;

/// Energy drift allowed without load.
pub const ENERGY_CONSERVATION_TOL: f64 = 1e-8;
/// Gap allowed between energy change and accumulated work under load.
pub const ENERGY_WORK_TOL: f64 = 5e-3;
/// Relative gap allowed in the forward/adjoint pairing identity.
pub const ADJOINT_IDENTITY_TOL: f64 = 5e-3;
/// Relative mismatch allowed between the adjoint gradient and finite differences.
pub const GRADIENT_FD_TOL: f64 = 1e-3;
/// Scale of the variational-inequality tolerance.
pub const VARIATIONAL_TOL: f64 = 1e-6;
/// Target observed order and its half-width.
pub const EXPECTED_ORDER: f64 = 2.0;
pub const ORDER_BAND: f64 = 0.3;
/// Number of sine modes in random admissible samples.
pub const SAMPLE_MODES: usize = 8;

/// Outcome of a single check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// `(Nx, Nt)` of every grid the check ran on.
    pub grids: Vec<(usize, usize)>,
    pub detail: String,
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let grids: Vec<String> = self
            .grids
            .iter()
            .map(|(nx, nt)| format!("{nx}x{nt}"))
            .collect();
        write!(
            f,
            "[{}] {:<28} measured={:.3e} tol={:.1e} grids={} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            grids.join(","),
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        let failed = self.records.iter().filter(|r| !r.passed).count();
        write!(
            f,
            "{} checks, {} failed: {}",
            self.records.len(),
            failed,
            if failed == 0 { "PASS" } else { "FAIL" }
        )
    }
}

fn grid_dims(g: &Grid) -> (usize, usize) {
    (g.nx(), g.nt())
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Energy change versus accumulated load work, over every time level.
///
/// The measured value is the largest gap relative to the largest of the
/// initial energy, the energy change and the work. Without load the check
/// is held to [`ENERGY_CONSERVATION_TOL`], otherwise to [`ENERGY_WORK_TOL`].
pub fn check_energy_identity(problem: &BeamProblem, v: &SpaceField) -> Result<CheckRecord> {
    let state = solve_forward(problem, v)?;
    let energy = energy_series(&state, problem)?;
    let work = work_series(&state, problem)?;
    let e0 = energy[0];
    let mut gap = 0.0f64;
    let mut scale = e0.abs();
    for (e, w) in energy.iter().zip(&work) {
        gap = gap.max((e - e0 - w).abs());
        scale = scale.max((e - e0).abs()).max(w.abs());
    }
    let measured = if scale == 0.0 { 0.0 } else { gap / scale };
    let unloaded = problem.load().is_zero();
    let tolerance = if unloaded {
        ENERGY_CONSERVATION_TOL
    } else {
        ENERGY_WORK_TOL
    };
    Ok(CheckRecord {
        name: "energy-identity".into(),
        measured,
        tolerance,
        passed: measured <= tolerance,
        grids: vec![grid_dims(problem.grid())],
        detail: format!(
            "E(0)={e0:.6e} {}",
            if unloaded { "unloaded" } else { "loaded" }
        ),
    })
}

/// Forward/adjoint pairing: `2⟨u - y, δu⟩` against `-⟨ψ(·, 0), δv⟩`.
pub fn check_adjoint_identity(
    problem: &BeamProblem,
    v: &SpaceField,
    dv: &SpaceField,
) -> Result<CheckRecord> {
    let gap = adjoint_identity_gap(problem, v, dv)?;
    Ok(CheckRecord {
        name: "adjoint-identity".into(),
        measured: gap.relative,
        tolerance: ADJOINT_IDENTITY_TOL,
        passed: gap.relative <= ADJOINT_IDENTITY_TOL,
        grids: vec![grid_dims(problem.grid())],
        detail: format!("lhs={:.6e} rhs={:.6e}", gap.state_side, gap.adjoint_side),
    })
}

/// Both sides of the pairing identity and their relative gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityGap {
    /// `2⟨u - y, δu⟩` over space and time.
    pub state_side: f64,
    /// `-⟨ψ(·, 0), δv⟩` over space.
    pub adjoint_side: f64,
    pub relative: f64,
}

pub fn adjoint_identity_gap(
    problem: &BeamProblem,
    v: &SpaceField,
    dv: &SpaceField,
) -> Result<IdentityGap> {
    let grid = problem.grid();
    let state = solve_forward(problem, v)?;
    let residual = state.displacement().sub(problem.target())?;
    let adjoint = solve_adjoint(problem, state.displacement())?;
    let du = solve_difference(problem, dv)?;
    let state_side = 2.0 * inner_spacetime(&residual, du.displacement(), grid)?;
    let adjoint_side = -inner_space(adjoint.trace_at_zero(), dv, grid)?;
    Ok(IdentityGap {
        state_side,
        adjoint_side,
        relative: relative_gap(state_side, adjoint_side),
    })
}

/// `⟨J'(v), dv⟩` against central differences of the cost for each step in `steps`.
///
/// Records the best mismatch over the steps; the step that achieved it is in
/// the detail string.
pub fn check_gradient_fd(
    problem: &BeamProblem,
    v: &SpaceField,
    dv: &SpaceField,
    steps: &[f64],
) -> Result<CheckRecord> {
    if steps.is_empty() {
        return Err(Error::InvalidInput(
            "finite-difference step list is empty".into(),
        ));
    }
    let grid = problem.grid();
    let pairing = inner_space(&gradient(problem, v)?, dv, grid)?;
    let mut best = (f64::INFINITY, steps[0], f64::NAN);
    for &h in steps {
        let plus = cost(problem, &v.add_scaled(h, dv)?)?;
        let minus = cost(problem, &v.add_scaled(-h, dv)?)?;
        let fd = (plus - minus) / (2.0 * h);
        let mismatch = relative_gap(pairing, fd);
        if mismatch < best.0 {
            best = (mismatch, h, fd);
        }
    }
    Ok(CheckRecord {
        name: "gradient-fd".into(),
        measured: best.0,
        tolerance: GRADIENT_FD_TOL,
        passed: best.0 <= GRADIENT_FD_TOL,
        grids: vec![grid_dims(grid)],
        detail: format!("h={:e} adjoint={:.6e} fd={:.6e}", best.1, pairing, best.2),
    })
}

/// First-order optimality over random admissible samples.
///
/// Passes when `min ⟨J'(v*), v - v*⟩ ≥ -tol · (1 + ‖J'(v*)‖)`. Samples are
/// eight-mode sine series with coefficients up to the admissible radius,
/// projected into the ball.
pub fn check_variational_inequality(
    problem: &BeamProblem,
    v_star: &SpaceField,
    samples: usize,
    seed: u64,
) -> Result<CheckRecord> {
    let grid = problem.grid();
    let radius = problem.radius();
    let norm = l2_norm_space(v_star, grid)?;
    if norm > radius * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "candidate optimum has norm {norm} outside the admissible radius {radius}"
        )));
    }
    let g = gradient(problem, v_star)?;
    let g_norm = l2_norm_space(&g, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let raw = random_sine_field(grid, &mut rng, SAMPLE_MODES, radius, 0.0);
        let v = project_ball(&raw, radius, grid)?;
        worst = worst.min(inner_space(&g, &v.sub(v_star)?, grid)?);
    }
    if samples == 0 {
        worst = 0.0;
    }
    let bound = -VARIATIONAL_TOL * (1.0 + g_norm);
    Ok(CheckRecord {
        name: "variational-inequality".into(),
        measured: worst,
        tolerance: bound,
        passed: worst >= bound,
        grids: vec![grid_dims(grid)],
        detail: format!("samples={samples} |J'|={g_norm:.3e} |v*|={norm:.6e}"),
    })
}

/// Reference problems with known error behaviour under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyCase {
    /// Standing wave `sin x sin t`; relative space-time L² error of `u`.
    SineForward,
    /// Manufactured `sin(πx) t²` with matching load; relative space-time L² error.
    MmsForward,
    /// Static target `sin x`; relative max error of `ψ(·, 0)` against `4 sin x`.
    SineAdjoint,
    /// Relative gap of the forward/adjoint pairing identity.
    PairingGap,
    /// All data zero; every error vanishes.
    ZeroData,
}

impl StudyCase {
    pub const ALL: [StudyCase; 4] = [
        StudyCase::SineForward,
        StudyCase::MmsForward,
        StudyCase::SineAdjoint,
        StudyCase::PairingGap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StudyCase::SineForward => "sine-forward",
            StudyCase::MmsForward => "mms-forward",
            StudyCase::SineAdjoint => "sine-adjoint",
            StudyCase::PairingGap => "pairing-gap",
            StudyCase::ZeroData => "zero-data",
        }
    }

    /// Error measure of this case on an `nx x nt` grid.
    pub fn error(&self, nx: usize, nt: usize) -> Result<f64> {
        use std::f64::consts::PI;
        match self {
            StudyCase::SineForward => {
                let g = Grid::new(PI, PI, nx, nt)?;
                let p = BeamProblem::unloaded(
                    g,
                    SpaceField::constant(&g, 1.0),
                    SpaceTimeField::zeros(&g),
                    0.0,
                    1.0,
                )?;
                let s = solve_forward(&p, &SpaceField::from_fn(&g, f64::sin))?;
                let exact = SpaceTimeField::from_fn(&g, |x, t| x.sin() * t.sin());
                Ok(l2_norm_spacetime(&s.displacement().sub(&exact)?, &g)?
                    / l2_norm_spacetime(&exact, &g)?)
            }
            StudyCase::MmsForward => {
                let g = Grid::new(1.0, 1.0, nx, nt)?;
                let kk = PI.powi(4);
                let load = SpaceTimeField::from_fn(&g, |x, t| {
                    let s = (PI * x).sin();
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
                )?;
                let s = solve_forward(&p, &SpaceField::zeros(&g))?;
                let exact = SpaceTimeField::from_fn(&g, |x, t| (PI * x).sin() * t * t);
                Ok(l2_norm_spacetime(&s.displacement().sub(&exact)?, &g)?
                    / l2_norm_spacetime(&exact, &g)?)
            }
            StudyCase::SineAdjoint => {
                let g = Grid::new(PI, PI, nx, nt)?;
                let p = BeamProblem::unloaded(
                    g,
                    SpaceField::constant(&g, 1.0),
                    SpaceTimeField::from_fn(&g, |x, _| x.sin()),
                    0.0,
                    1.0,
                )?;
                let a = solve_adjoint(&p, &SpaceTimeField::zeros(&g))?;
                let err = a
                    .trace_at_zero()
                    .values()
                    .iter()
                    .zip(g.xs())
                    .map(|(psi, x)| (psi - 4.0 * x.sin()).abs())
                    .fold(0.0, f64::max);
                Ok(err / 4.0)
            }
            StudyCase::PairingGap => {
                let (p, v, dv) = pairing_reference(nx, nt)?;
                Ok(adjoint_identity_gap(&p, &v, &dv)?.relative)
            }
            StudyCase::ZeroData => {
                let g = Grid::new(1.0, 1.0, nx, nt)?;
                let p = BeamProblem::unloaded(
                    g,
                    SpaceField::constant(&g, 1.0),
                    SpaceTimeField::zeros(&g),
                    0.0,
                    1.0,
                )?;
                Ok(solve_forward(&p, &SpaceField::zeros(&g))?
                    .displacement()
                    .max_abs())
            }
        }
    }
}

/// Fixed smooth problem and direction pair for the pairing-identity study.
pub fn pairing_reference(nx: usize, nt: usize) -> Result<(BeamProblem, SpaceField, SpaceField)> {
    use std::f64::consts::PI;
    let g = Grid::new(PI, PI, nx, nt)?;
    let p = BeamProblem::new(
        g,
        SpaceField::from_fn(&g, |x| 1.0 + 0.25 * x.cos()),
        SpaceField::from_fn(&g, |x| 0.1 * (2.0 * x).sin()),
        SpaceTimeField::from_fn(&g, |x, t| 0.5 * x.sin() * t.cos()),
        SpaceTimeField::from_fn(&g, |x, t| {
            x.sin() * (0.7 * t).sin() + 0.3 * (2.0 * x).sin() * t
        }),
        0.0,
        10.0,
    )?;
    let v = SpaceField::from_fn(&g, |x| x.sin() - 0.4 * (3.0 * x).sin());
    let dv = SpaceField::from_fn(&g, |x| 0.5 * x.sin() + 0.25 * (2.0 * x).sin());
    Ok((p, v, dv))
}

impl FromStr for StudyCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine-forward" => Ok(StudyCase::SineForward),
            "mms-forward" => Ok(StudyCase::MmsForward),
            "sine-adjoint" => Ok(StudyCase::SineAdjoint),
            "pairing-gap" => Ok(StudyCase::PairingGap),
            "zero-data" => Ok(StudyCase::ZeroData),
            other => Err(Error::InvalidInput(format!(
                "unknown convergence case '{other}'"
            ))),
        }
    }
}

/// Default refinement levels for convergence studies.
pub const DEFAULT_LEVELS: [(usize, usize); 3] = [(50, 50), (100, 100), (200, 200)];

/// Observed orders `log2(e_i / e_{i+1})` between consecutive levels.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Runs `case` on each level and checks every observed order lies in `2.0 ± 0.3`.
///
/// Levels should double in both directions. When every error is exactly
/// zero the order is reported as exact and the check passes.
pub fn convergence_study(case: StudyCase, levels: &[(usize, usize)]) -> Result<CheckRecord> {
    if levels.len() < 2 {
        return Err(Error::InvalidInput(
            "a convergence study needs at least two levels".into(),
        ));
    }
    let errors = levels
        .iter()
        .map(|&(nx, nt)| case.error(nx, nt))
        .collect::<Result<Vec<_>>>()?;
    let name = format!("order:{}", case.as_str());
    if errors.iter().all(|&e| e == 0.0) {
        return Ok(CheckRecord {
            name,
            measured: 0.0,
            tolerance: ORDER_BAND,
            passed: true,
            grids: levels.to_vec(),
            detail: "exact (all errors zero)".into(),
        });
    }
    let orders = observed_orders(&errors);
    let deviation = orders
        .iter()
        .map(|o| {
            if o.is_finite() {
                (o - EXPECTED_ORDER).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    let errs: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    let ords: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
    Ok(CheckRecord {
        name,
        measured: deviation,
        tolerance: ORDER_BAND,
        passed: deviation <= ORDER_BAND,
        grids: levels.to_vec(),
        detail: format!("errors=[{}] orders=[{}]", errs.join(","), ords.join(",")),
    })
}

/// Which checks a suite run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Energy,
    Adjoint,
    Gradient,
    Vi,
    Order,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "energy" => Ok(Suite::Energy),
            "adjoint" => Ok(Suite::Adjoint),
            "gradient" => Ok(Suite::Gradient),
            "vi" => Ok(Suite::Vi),
            "order" => Ok(Suite::Order),
            other => Err(Error::InvalidInput(format!("unknown suite '{other}'"))),
        }
    }
}

/// Knobs for [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    pub seed: u64,
    /// Random `(v, dv)` pairs for the identity and gradient checks.
    pub pairs: usize,
    pub vi_samples: usize,
    pub fd_steps: Vec<f64>,
    pub levels: Vec<(usize, usize)>,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            seed: 2024,
            pairs: 3,
            vi_samples: 100,
            fd_steps: vec![1e-3, 1e-4],
            levels: DEFAULT_LEVELS.to_vec(),
        }
    }
}

/// Smooth random probe: four sine modes with `1/m²` decay.
pub fn random_probe(grid: &Grid, rng: &mut ChaCha8Rng) -> SpaceField {
    random_sine_field(grid, rng, 4, 1.0, 2.0)
}

/// Runs the requested checks on `problem`.
///
/// The energy check uses `v0`; identity and gradient checks draw seeded
/// probe pairs; the optimality check first runs [`optimize`] from `v0`.
pub fn run_suite(
    problem: &BeamProblem,
    v0: &SpaceField,
    optimizer: &OptimizerConfig,
    suite: Suite,
    settings: &SuiteSettings,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let grid = problem.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    if wants(Suite::Energy) {
        report.push(check_energy_identity(problem, v0)?);
    }
    if wants(Suite::Adjoint) {
        for _ in 0..settings.pairs {
            let v = random_probe(grid, &mut rng);
            let dv = random_probe(grid, &mut rng);
            report.push(check_adjoint_identity(problem, &v, &dv)?);
        }
    }
    if wants(Suite::Gradient) {
        for _ in 0..settings.pairs {
            let v = random_probe(grid, &mut rng);
            let dv = random_probe(grid, &mut rng);
            report.push(check_gradient_fd(problem, &v, &dv, &settings.fd_steps)?);
        }
    }
    if wants(Suite::Vi) {
        let result = optimize(problem, optimizer, v0)?;
        let mut record = check_variational_inequality(
            problem,
            &result.final_v,
            settings.vi_samples,
            settings.seed,
        )?;
        record.detail = format!(
            "{} iters={} termination={}",
            record.detail,
            result.iterations,
            result.termination.as_str()
        );
        report.push(record);
    }
    if wants(Suite::Order) {
        for case in StudyCase::ALL {
            report.push(convergence_study(case, &settings.levels)?);
        }
    }
    Ok(report)
}
