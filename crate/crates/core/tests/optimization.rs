use std::f64::consts::PI;

use beam_control::grid::l2_norm_space;
use beam_control::verify::check_variational_inequality;
use beam_control::*;

fn inverse_crime(n: usize, alpha: f64, radius: f64) -> (BeamProblem, SpaceField) {
    let g = Grid::new(PI, PI, n, n).unwrap();
    let k = SpaceField::constant(&g, 1.0);
    let base = BeamProblem::unloaded(g, k, SpaceTimeField::zeros(&g), alpha, radius).unwrap();
    let v_true = SpaceField::from_fn(&g, f64::sin);
    let y = solve_forward(&base, &v_true).unwrap().into_displacement();
    (base.with_target(y).unwrap(), v_true)
}

#[test]
fn recovers_the_generating_velocity() {
    let (p, v_true) = inverse_crime(100, 1e-6, 10.0);
    let g = *p.grid();
    let r = optimize(&p, &OptimizerConfig::default(), &SpaceField::zeros(&g)).unwrap();
    assert!(r.final_cost <= 1e-4 * r.cost_history[0]);
    let err = l2_norm_space(&r.final_v.sub(&v_true).unwrap(), &g).unwrap()
        / l2_norm_space(&v_true, &g).unwrap();
    assert!(err <= 0.1, "relative error {err}");
    assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r.rejected_steps, 0);
    assert!(r.iterations <= 500);
    let vi = check_variational_inequality(&p, &r.final_v, 100, 1).unwrap();
    assert!(vi.passed, "{vi}");
}

#[test]
fn active_constraint_lands_on_the_sphere() {
    let (p, _) = inverse_crime(100, 1e-6, 0.5);
    let g = *p.grid();
    let r = optimize(&p, &OptimizerConfig::default(), &SpaceField::zeros(&g)).unwrap();
    let norm = l2_norm_space(&r.final_v, &g).unwrap();
    assert!((norm - 0.5).abs() <= 1e-6, "norm {norm}");
    assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
    let vi = check_variational_inequality(&p, &r.final_v, 100, 2).unwrap();
    assert!(vi.passed, "{vi}");
}

#[test]
fn loaded_problem_with_displacement_descends() {
    let g = Grid::new(1.0, 1.0, 40, 40).unwrap();
    let p = BeamProblem::new(
        g,
        SpaceField::from_fn(&g, |x| 1.0 + x * (1.0 - x)),
        SpaceField::from_fn(&g, |x| 0.01 * (PI * x).sin()),
        SpaceTimeField::from_fn(&g, |x, t| (PI * x).sin() * t),
        SpaceTimeField::from_fn(&g, |x, t| 0.1 * (2.0 * PI * x).sin() * t),
        1e-3,
        1.0,
    )
    .unwrap();
    let r = optimize(&p, &OptimizerConfig::default(), &SpaceField::zeros(&g)).unwrap();
    assert!(r.final_cost < r.cost_history[0]);
    assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(r.step_history.len(), r.iterations);
    assert_eq!(r.cost_history.len(), r.grad_norm_history.len());
}

#[test]
fn optimizer_is_deterministic() {
    let (p, _) = inverse_crime(40, 1e-3, 10.0);
    let g = *p.grid();
    let v0 = SpaceField::from_fn(&g, |x| 0.3 * (2.0 * x).sin());
    let a = optimize(&p, &OptimizerConfig::default(), &v0).unwrap();
    let b = optimize(&p, &OptimizerConfig::default(), &v0).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.final_v, b.final_v);
}

#[test]
fn report_csv_has_one_row_per_recorded_iterate() {
    let (p, _) = inverse_crime(30, 1e-3, 10.0);
    let g = *p.grid();
    let r = optimize(&p, &OptimizerConfig::default(), &SpaceField::zeros(&g)).unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,cost,grad_norm,step"));
    assert_eq!(lines.count(), r.cost_history.len());
}
