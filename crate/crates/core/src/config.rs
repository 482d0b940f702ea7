//! Run configuration: a flat `key = value` file plus function presets.
//!
//! ```text
//! # standing wave on (0, π)
//! L = 3.141592653589793
//! T = 3.141592653589793
//! Nx = 200
//! Nt = 200
//! alpha = 0
//! v_c = 10
//! k = const value=1
//! w = zero
//! F = zero
//! y = sine_xt m=1 amp=1 omega=1
//! v0 = sine m=1 amp=1
//! ```
//!
//! Function presets, one per value:
//!
//! | preset | meaning |
//! |---|---|
//! | `zero` | `0` |
//! | `const value=c` | `c` |
//! | `sine m=j amp=a` | `a sin(jπx/L)` |
//! | `sine_xt m=j amp=a omega=ω` | `a sin(jπx/L) sin(ωt)` |
//! | `poly c0=a c1=b c2=c` | `a + b x + c x²` |
//! | `file path=p` | CSV field, `p` relative to the config file |

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::control::{OptimizerConfig, StepRule};
use crate::dynamics::BeamProblem;
use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceField, SpaceTimeField};
use crate::io::{read_space_field, read_spacetime_field};
use crate::verify::SuiteSettings;

/// A function of `x` (and possibly `t`) given by preset name and parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Zero,
    Const { value: f64 },
    Sine { m: i64, amp: f64 },
    SineXt { m: i64, amp: f64, omega: f64 },
    Poly { c0: f64, c1: f64, c2: f64 },
    File { path: PathBuf },
}

/// Error from parsing a preset, with a 1-based column inside the preset text.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub column: usize,
    pub message: String,
}

impl FunctionSpec {
    /// Parses one preset such as `sine m=2 amp=0.5`.
    pub fn parse(text: &str) -> std::result::Result<Self, SpecError> {
        let tokens = tokenize(text);
        let Some(&(name_col, name)) = tokens.first() else {
            return Err(SpecError {
                column: 1,
                message: "empty function preset".into(),
            });
        };
        let mut params: HashMap<&str, (usize, &str)> = HashMap::new();
        for &(col, tok) in &tokens[1..] {
            let Some((k, v)) = tok.split_once('=') else {
                return Err(SpecError {
                    column: col,
                    message: format!("expected name=value, found '{tok}'"),
                });
            };
            if params.insert(k, (col + k.len() + 1, v)).is_some() {
                return Err(SpecError {
                    column: col,
                    message: format!("parameter '{k}' given twice"),
                });
            }
        }
        let allowed: &[&str] = match name {
            "zero" => &[],
            "const" => &["value"],
            "sine" => &["m", "amp"],
            "sine_xt" => &["m", "amp", "omega"],
            "poly" => &["c0", "c1", "c2"],
            "file" => &["path"],
            other => {
                return Err(SpecError {
                    column: name_col,
                    message: format!(
                    "unknown preset '{other}' (expected zero, const, sine, sine_xt, poly or file)"
                ),
                })
            }
        };
        if let Some((k, (col, _))) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(SpecError {
                column: col - k.len() - 1,
                message: format!("preset '{name}' has no parameter '{k}'"),
            });
        }
        let end = text.trim_end().chars().count() + 1;
        let real = |key: &str| -> std::result::Result<f64, SpecError> {
            let &(col, v) = params.get(key).ok_or_else(|| SpecError {
                column: end,
                message: format!("preset '{name}' is missing parameter '{key}'"),
            })?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SpecError {
                    column: col,
                    message: format!("parameter '{key}' must be a finite number, found '{v}'"),
                })
        };
        let int = |key: &str| -> std::result::Result<i64, SpecError> {
            let &(col, v) = params.get(key).ok_or_else(|| SpecError {
                column: end,
                message: format!("preset '{name}' is missing parameter '{key}'"),
            })?;
            v.parse::<i64>().map_err(|_| SpecError {
                column: col,
                message: format!("parameter '{key}' must be an integer, found '{v}'"),
            })
        };
        Ok(match name {
            "zero" => FunctionSpec::Zero,
            "const" => FunctionSpec::Const {
                value: real("value")?,
            },
            "sine" => FunctionSpec::Sine {
                m: int("m")?,
                amp: real("amp")?,
            },
            "sine_xt" => FunctionSpec::SineXt {
                m: int("m")?,
                amp: real("amp")?,
                omega: real("omega")?,
            },
            "poly" => FunctionSpec::Poly {
                c0: real("c0")?,
                c1: real("c1")?,
                c2: real("c2")?,
            },
            _ => {
                let &(col, p) = params.get("path").ok_or_else(|| SpecError {
                    column: end,
                    message: "preset 'file' is missing parameter 'path'".into(),
                })?;
                if p.is_empty() {
                    return Err(SpecError {
                        column: col,
                        message: "empty file path".into(),
                    });
                }
                FunctionSpec::File { path: p.into() }
            }
        })
    }

    /// True if the preset depends on `t`.
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, FunctionSpec::SineXt { .. })
    }

    fn eval(&self, x: f64, t: f64, length: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            FunctionSpec::Zero | FunctionSpec::File { .. } => 0.0,
            FunctionSpec::Const { value } => value,
            FunctionSpec::Sine { m, amp } => amp * (m as f64 * PI * x / length).sin(),
            FunctionSpec::SineXt { m, amp, omega } => {
                amp * (m as f64 * PI * x / length).sin() * (omega * t).sin()
            }
            FunctionSpec::Poly { c0, c1, c2 } => c0 + c1 * x + c2 * x * x,
        }
    }

    /// Samples the preset as a function of `x`; `base` resolves file paths.
    pub fn sample_space(&self, grid: &Grid, base: &Path) -> Result<SpaceField> {
        match self {
            FunctionSpec::File { path } => read_space_field(&base.join(path), grid),
            FunctionSpec::SineXt { .. } => Err(Error::InvalidInput(
                "preset 'sine_xt' depends on t and cannot describe a function of x alone".into(),
            )),
            spec => Ok(SpaceField::from_fn(grid, |x| {
                spec.eval(x, 0.0, grid.length())
            })),
        }
    }

    /// Samples the preset as a function of `(x, t)`; `base` resolves file paths.
    pub fn sample_spacetime(&self, grid: &Grid, base: &Path) -> Result<SpaceTimeField> {
        match self {
            FunctionSpec::File { path } => read_spacetime_field(&base.join(path), grid),
            spec => Ok(SpaceTimeField::from_fn(grid, |x, t| {
                spec.eval(x, t, grid.length())
            })),
        }
    }
}

fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut col = 0;
    for (byte, ch) in text.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push((c, &text[b..byte]));
            }
        } else if start.is_none() {
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        out.push((c, &text[b..]));
    }
    out
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length: f64,
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
    pub alpha: f64,
    pub radius: f64,
    pub stiffness: FunctionSpec,
    pub displacement: FunctionSpec,
    pub load: FunctionSpec,
    pub target: FunctionSpec,
    pub initial_velocity: FunctionSpec,
    pub optimizer: OptimizerConfig,
    pub suite: SuiteSettings,
    /// Directory that relative `file` paths resolve against.
    pub base_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "L",
    "T",
    "Nx",
    "Nt",
    "alpha",
    "v_c",
    "k",
    "w",
    "F",
    "y",
    "v0",
    "step",
    "beta",
    "eps",
    "max_iters",
    "power_iters",
    "power_tol",
    "shrink",
    "max_shrinks",
    "seed",
    "vi_samples",
    "pairs",
];

const REQUIRED: &[&str] = &["L", "T", "Nx", "Nt", "alpha", "v_c", "k", "w", "F", "y"];

struct Entry<'a> {
    line: usize,
    value_col: usize,
    value: &'a str,
}

/// Parses configuration text; `base_dir` resolves relative file presets.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(Error::Parse {
                line,
                column: content.len() - content.trim_start().len() + 1,
                message: "expected 'key = value'".into(),
            });
        };
        let key = content[..eq].trim();
        let key_col = content[..eq].len() - content[..eq].trim_start().len() + 1;
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                column: key_col,
                message: "missing key before '='".into(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line,
                column: key_col,
                message: format!("unknown key '{key}'"),
            });
        }
        let rest = &content[eq + 1..];
        let value = rest.trim();
        let value_col = content[..eq + 1].chars().count() + rest.chars().count()
            - rest.trim_start().chars().count()
            + 1;
        if value.is_empty() {
            return Err(Error::Parse {
                line,
                column: value_col,
                message: format!("key '{key}' has no value"),
            });
        }
        if let Some(prev) = entries.insert(
            key,
            Entry {
                line,
                value_col,
                value,
            },
        ) {
            return Err(Error::Parse {
                line,
                column: key_col,
                message: format!("key '{key}' already set on line {}", prev.line),
            });
        }
    }
    for key in REQUIRED {
        if !entries.contains_key(key) {
            return Err(Error::InvalidConfig(format!(
                "missing required key '{key}'"
            )));
        }
    }

    let bad = |key: &str, msg: String| -> Error {
        let e = &entries[key];
        Error::Parse {
            line: e.line,
            column: e.value_col,
            message: format!("{key}: {msg}"),
        }
    };
    let real = |key: &str| -> Result<Option<f64>> {
        entries
            .get(key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        bad(
                            key,
                            format!("expected a finite number, found '{}'", e.value),
                        )
                    })
            })
            .transpose()
    };
    let count = |key: &str| -> Result<Option<usize>> {
        entries
            .get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    bad(
                        key,
                        format!("expected a non-negative integer, found '{}'", e.value),
                    )
                })
            })
            .transpose()
    };
    let spec = |key: &str| -> Result<Option<FunctionSpec>> {
        entries
            .get(key)
            .map(|e| {
                FunctionSpec::parse(e.value).map_err(|se| Error::Parse {
                    line: e.line,
                    column: e.value_col + se.column - 1,
                    message: format!("{key}: {}", se.message),
                })
            })
            .transpose()
    };

    let length = real("L")?.unwrap_or_default();
    let horizon = real("T")?.unwrap_or_default();
    let nx = count("Nx")?.unwrap_or_default();
    let nt = count("Nt")?.unwrap_or_default();
    let grid = Grid::new(length, horizon, nx, nt).map_err(|e| {
        let key = if !(length > 0.0) {
            "L"
        } else if !(horizon > 0.0) {
            "T"
        } else if nx < crate::grid::MIN_SPACE_INTERVALS {
            "Nx"
        } else {
            "Nt"
        };
        bad(key, e.to_string())
    })?;
    let alpha = real("alpha")?.unwrap_or_default();
    if alpha < 0.0 {
        return Err(bad(
            "alpha",
            "regularization weight must be non-negative".into(),
        ));
    }
    let radius = real("v_c")?.unwrap_or_default();
    if !(radius > 0.0) {
        return Err(bad("v_c", "admissible radius must be positive".into()));
    }

    let stiffness = spec("k")?.expect("required");
    if !matches!(stiffness, FunctionSpec::File { .. }) {
        if stiffness.is_time_dependent() {
            return Err(bad("k", "stiffness cannot depend on t".into()));
        }
        let sampled = stiffness.sample_space(&grid, base_dir)?;
        if let Some((i, v)) = sampled
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0))
        {
            return Err(bad(
                "k",
                format!(
                    "stiffness k must be positive everywhere, but k = {v} at x = {}",
                    grid.x(i)
                ),
            ));
        }
    }
    let displacement = spec("w")?.expect("required");
    let initial_velocity = spec("v0")?.unwrap_or(FunctionSpec::Zero);
    for (key, s) in [("w", &displacement), ("v0", &initial_velocity)] {
        if s.is_time_dependent() {
            return Err(bad(key, "a function of x alone is required here".into()));
        }
    }
    let load = spec("F")?.expect("required");
    let target = spec("y")?.expect("required");

    let mut optimizer = OptimizerConfig::default();
    let beta = real("beta")?;
    if let Some(e) = entries.get("step") {
        optimizer.step = match e.value {
            "inverse-lipschitz" => StepRule::InverseLipschitz,
            "fixed" => StepRule::Fixed(
                beta.ok_or_else(|| bad("step", "step = fixed requires 'beta'".into()))?,
            ),
            "backtracking" => StepRule::Backtracking(beta.unwrap_or(1.0)),
            other => {
                return Err(bad(
                    "step",
                    format!("expected inverse-lipschitz, fixed or backtracking, found '{other}'"),
                ))
            }
        };
    }
    if let Some(v) = real("eps")? {
        optimizer.tolerance = v;
    }
    if let Some(v) = count("max_iters")? {
        optimizer.max_iters = v;
    }
    if let Some(v) = count("power_iters")? {
        optimizer.power_iters = v;
    }
    if let Some(v) = real("power_tol")? {
        optimizer.power_tol = v;
    }
    if let Some(v) = real("shrink")? {
        optimizer.shrink = v;
    }
    if let Some(v) = count("max_shrinks")? {
        optimizer.max_shrinks = v;
    }
    let mut suite = SuiteSettings::default();
    if let Some(e) = entries.get("seed") {
        let seed = e.value.parse::<u64>().map_err(|_| {
            bad(
                "seed",
                format!("expected an unsigned integer, found '{}'", e.value),
            )
        })?;
        optimizer.seed = seed;
        suite.seed = seed;
    }
    if let Some(v) = count("vi_samples")? {
        suite.vi_samples = v;
    }
    if let Some(v) = count("pairs")? {
        suite.pairs = v;
    }
    if let Err(Error::InvalidConfig(msg)) = optimizer.validate() {
        let key = [
            "beta",
            "eps",
            "max_iters",
            "power_iters",
            "power_tol",
            "shrink",
        ]
        .into_iter()
        .find(|k| msg.contains(k) && entries.contains_key(k))
        .or_else(|| entries.contains_key("step").then_some("step"));
        return Err(match key {
            Some(k) => bad(k, msg),
            None => Error::InvalidConfig(msg),
        });
    }

    Ok(RunConfig {
        length,
        horizon,
        nx,
        nt,
        alpha,
        radius,
        stiffness,
        displacement,
        load,
        target,
        initial_velocity,
        optimizer,
        suite,
        base_dir: base_dir.to_path_buf(),
    })
}

impl RunConfig {
    /// Reads and parses a config file; relative paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        parse_config(&text, base)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.length, self.horizon, self.nx, self.nt).expect("validated at parse time")
    }

    /// Samples every preset and assembles the problem.
    pub fn build_problem(&self) -> Result<BeamProblem> {
        let grid = self.grid();
        let base = &self.base_dir;
        BeamProblem::new(
            grid,
            self.stiffness.sample_space(&grid, base)?,
            self.displacement.sample_space(&grid, base)?,
            self.load.sample_spacetime(&grid, base)?,
            self.target.sample_spacetime(&grid, base)?,
            self.alpha,
            self.radius,
        )
    }

    pub fn initial_velocity(&self) -> Result<SpaceField> {
        self.initial_velocity
            .sample_space(&self.grid(), &self.base_dir)
    }
}
