//! `beamctl`: drive the beam control toolkit from a config file.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beam_control::io::read_spacetime_field;
use beam_control::io::{read_space_field, write_space_field, write_spacetime_field};
use beam_control::verify::{run_suite, Suite};
use beam_control::{
    estimate_lipschitz, gradient, optimize, solve_adjoint, solve_forward, Error, RunConfig,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "beamctl",
    version,
    about = "Initial-velocity control of a simply supported beam"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state equation with `v0` from the config and write u.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the adjoint for a given state and write ψ and ψ(·, 0).
    Adjoint {
        #[arg(long)]
        config: PathBuf,
        /// State u as a space-time CSV.
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write ψ(·, 0); defaults to `<out stem>_trace.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write the cost gradient at a given control.
    Gradient {
        #[arg(long)]
        config: PathBuf,
        /// Control v as a space CSV.
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run projected gradient descent from `v0`.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Final control.
        #[arg(long)]
        vout: PathBuf,
        /// Per-iteration history: iter,cost,grad_norm,step.
        #[arg(long)]
        report: PathBuf,
    },
    /// Print the Lipschitz estimate of the gradient.
    Lipschitz {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run runtime verification checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "all", value_parser = ["all", "energy", "adjoint", "gradient", "vi", "order"])]
        suite: String,
    },
}

enum Failure {
    Run(Error),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(e)) => {
            eprintln!("beamctl: {}", single_line(&e.to_string()));
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("beamctl: verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn default_trace_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "adjoint".into());
    out.with_file_name(format!("{stem}_trace.csv"))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Forward { config, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let state = solve_forward(&problem, &cfg.initial_velocity()?)?;
            write_spacetime_field(&out, state.displacement(), problem.grid())?;
        }
        Command::Adjoint {
            config,
            u,
            out,
            trace,
        } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let grid = *problem.grid();
            let state = read_spacetime_field(&u, &grid)?;
            let adjoint = solve_adjoint(&problem, &state)?;
            write_spacetime_field(&out, adjoint.psi(), &grid)?;
            let trace = trace.unwrap_or_else(|| default_trace_path(&out));
            write_space_field(&trace, adjoint.trace_at_zero(), &grid)?;
        }
        Command::Gradient { config, v, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let grid = *problem.grid();
            let v = read_space_field(&v, &grid)?;
            write_space_field(&out, &gradient(&problem, &v)?, &grid)?;
        }
        Command::Optimize {
            config,
            vout,
            report,
        } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let result = optimize(&problem, &cfg.optimizer, &cfg.initial_velocity()?)?;
            write_space_field(&vout, &result.final_v, problem.grid())?;
            write_text(&report, &result.to_csv())?;
            println!(
                "iterations={} final_cost={:e} termination={} rejected_steps={}",
                result.iterations,
                result.final_cost,
                result.termination.as_str(),
                result.rejected_steps
            );
        }
        Command::Lipschitz { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let est = estimate_lipschitz(&problem, &cfg.optimizer)?;
            println!(
                "lipschitz={:e} residual={:e} iterations={} converged={} seed={}",
                est.value, est.residual, est.iterations, est.converged, est.seed
            );
        }
        Command::Verify { config, suite } => {
            let cfg = RunConfig::from_path(&config)?;
            let problem = cfg.build_problem()?;
            let suite: Suite = suite.parse()?;
            let report = run_suite(
                &problem,
                &cfg.initial_velocity()?,
                &cfg.optimizer,
                suite,
                &cfg.suite,
            )?;
            println!("{report}");
            if !report.passed() {
                let failed: Vec<&str> = report
                    .records
                    .iter()
                    .filter(|r| !r.passed)
                    .map(|r| r.name.as_str())
                    .collect();
                return Err(Failure::Verification(failed.join(", ")));
            }
        }
    }
    Ok(())
}
