use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use beam_control::io::{read_space_field, read_spacetime_field, write_space_field};
use beam_control::{Grid, SpaceField};

fn beamctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamctl"))
        .args(args)
        .output()
        .expect("beamctl runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    text
}

const SMALL: &str = "\
L = 3.141592653589793
T = 3.141592653589793
Nx = 40
Nt = 40
alpha = 0.01
v_c = 10
k = const value=1
w = zero
F = zero
y = sine_xt m=1 amp=1 omega=1
v0 = sine m=1 amp=1
";

#[test]
fn forward_matches_the_standing_wave() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let run = beamctl(&[
        "forward",
        "--config",
        s(&configs().join("sine.cfg")),
        "--out",
        s(&out),
    ]);
    assert!(run.status.success());
    let g = Grid::new(PI, PI, 200, 200).unwrap();
    let u = read_spacetime_field(&out, &g).unwrap();
    let mut worst = 0.0f64;
    for n in 0..=200 {
        for i in 0..=200 {
            worst = worst.max((u.get(n, i) - g.x(i).sin() * g.t(n).sin()).abs());
        }
    }
    assert!(worst <= 1e-3, "max error {worst}");
}

#[test]
fn adjoint_writes_field_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let u = dir.path().join("u.csv");
    let psi = dir.path().join("psi.csv");
    assert!(beamctl(&["forward", "--config", s(&cfg), "--out", s(&u)])
        .status
        .success());
    let run = beamctl(&[
        "adjoint",
        "--config",
        s(&cfg),
        "--u",
        s(&u),
        "--out",
        s(&psi),
    ]);
    assert!(run.status.success());
    let g = Grid::new(PI, PI, 40, 40).unwrap();
    read_spacetime_field(&psi, &g).unwrap();
    read_space_field(&dir.path().join("psi_trace.csv"), &g).unwrap();

    let trace = dir.path().join("elsewhere.csv");
    let run = beamctl(&[
        "adjoint",
        "--config",
        s(&cfg),
        "--u",
        s(&u),
        "--out",
        s(&psi),
        "--trace",
        s(&trace),
    ]);
    assert!(run.status.success());
    assert!(trace.exists());
}

#[test]
fn gradient_of_the_regularization_only_case() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(PI, PI, 40, 40).unwrap();
    let u = dir.path().join("u.csv");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    assert!(beamctl(&["forward", "--config", s(&cfg), "--out", s(&u)])
        .status
        .success());
    // target = state of v0, so J'(v0) = 2 alpha v0
    fs::write(
        &cfg,
        SMALL.replace("y = sine_xt m=1 amp=1 omega=1", "y = file path=u.csv"),
    )
    .unwrap();
    let v = dir.path().join("v.csv");
    let v0 = SpaceField::from_fn(&g, f64::sin);
    write_space_field(&v, &v0, &g).unwrap();
    let out = dir.path().join("g.csv");
    let run = beamctl(&[
        "gradient",
        "--config",
        s(&cfg),
        "--v",
        s(&v),
        "--out",
        s(&out),
    ]);
    assert!(run.status.success());
    let grad = read_space_field(&out, &g).unwrap();
    let gap = grad.sub(&v0.scaled(0.02)).unwrap().max_abs();
    assert!(gap <= 1e-10, "gap {gap}");
}

#[test]
fn optimize_report_is_non_increasing() {
    let dir = tempfile::tempdir().unwrap();
    let vout = dir.path().join("v.csv");
    let report = dir.path().join("report.csv");
    let run = beamctl(&[
        "optimize",
        "--config",
        s(&configs().join("inverse.cfg")),
        "--vout",
        s(&vout),
        "--report",
        s(&report),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,cost,grad_norm,step"));
    let costs: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(costs.len() >= 2);
    assert!(costs.windows(2).all(|w| w[1] <= w[0]), "{costs:?}");
    let g = Grid::new(PI, PI, 100, 100).unwrap();
    read_space_field(&vout, &g).unwrap();
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let vout = dir.path().join(format!("v{k}.csv"));
        let report = dir.path().join(format!("r{k}.csv"));
        let run = beamctl(&[
            "optimize",
            "--config",
            s(&cfg),
            "--vout",
            s(&vout),
            "--report",
            s(&report),
        ]);
        assert!(run.status.success());
        reports.push((fs::read(&vout).unwrap(), fs::read(&report).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn lipschitz_prints_estimate_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let run = beamctl(&["lipschitz", "--config", s(&cfg)]);
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with("lipschitz="), "{text}");
    assert!(text.contains("residual="));
}

#[test]
fn verify_single_suites() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL.replace("= 40", "= 100")).unwrap();
    for suite in ["energy", "adjoint", "gradient", "vi"] {
        let run = beamctl(&["verify", "--config", s(&cfg), "--suite", suite]);
        assert!(
            run.status.success(),
            "{suite}: {}",
            String::from_utf8_lossy(&run.stdout)
        );
        let text = String::from_utf8(run.stdout).unwrap();
        assert!(text.trim_end().ends_with("PASS"), "{text}");
    }
}

#[test]
fn verification_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    // too coarse in time for the pairing identity to hold to tolerance
    fs::write(&cfg, SMALL.replace("Nt = 40", "Nt = 3")).unwrap();
    let run = beamctl(&["verify", "--config", s(&cfg), "--suite", "adjoint"]);
    assert_eq!(run.status.code(), Some(3));
    assert!(stderr_line(&run).contains("verification failed"));
}

#[test]
fn bad_config_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        SMALL.replace("k = const value=1", "k = const value=-1"),
    )
    .unwrap();
    let run = beamctl(&["lipschitz", "--config", s(&cfg)]);
    assert_eq!(run.status.code(), Some(1));
    let line = stderr_line(&run);
    assert!(
        line.contains("line 7") && line.contains("positive"),
        "{line}"
    );
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(beamctl(&["forward"]).status.code(), Some(1));
    assert_eq!(beamctl(&["transmogrify"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let run = beamctl(&["verify", "--config", s(&cfg), "--suite", "everything"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(beamctl(&["--help"]).status.success());
}

#[test]
fn mismatched_field_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let other = Grid::new(PI, PI, 20, 40).unwrap();
    let v = dir.path().join("v.csv");
    write_space_field(&v, &SpaceField::zeros(&other), &other).unwrap();
    let out = dir.path().join("g.csv");
    let run = beamctl(&[
        "gradient",
        "--config",
        s(&cfg),
        "--v",
        s(&v),
        "--out",
        s(&out),
    ]);
    assert_eq!(run.status.code(), Some(1));
    stderr_line(&run);
}

#[test]
fn step_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let text = format!("{SMALL}step = backtracking\nbeta = 1e300\nmax_shrinks = 2\n");
    fs::write(&cfg, text).unwrap();
    let run = beamctl(&[
        "optimize",
        "--config",
        s(&cfg),
        "--vout",
        s(&dir.path().join("v.csv")),
        "--report",
        s(&dir.path().join("r.csv")),
    ]);
    assert_eq!(
        run.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stderr_line(&run).contains("step failure"));
}
