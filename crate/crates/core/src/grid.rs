//! Uniform space-time grids, sampled fields and trapezoid quadrature.
//!
//! A [`Grid`] covers the rectangle `(0, L) x (0, T)` with `Nx` spatial and
//! `Nt` temporal intervals. Fields keep their boundary nodes even where the
//! boundary conditions pin them to zero, so node `i` is always `x_i = i * dx`
//! and time level `n` is always `t_n = n * dt`.
//!
//! Every integral is the composite trapezoid rule: weight one half on the two
//! end nodes, one elsewhere, scaled by the spacing. Inner products and norms
//! are built from that single rule, which keeps discrete integration by parts
//! consistent with the symmetric bending operator.

use crate::error::{check_len, Error, Result};

/// Smallest admissible number of spatial intervals.
pub const MIN_SPACE_INTERVALS: usize = 4;
/// Smallest admissible number of time intervals.
pub const MIN_TIME_INTERVALS: usize = 2;

/// Uniform discretization of `(0, L) x (0, T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    horizon: f64,
    nx: usize,
    nt: usize,
    dx: f64,
    dt: f64,
}

impl Grid {
    pub fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "beam length must be positive and finite, got {length}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "time horizon must be positive and finite, got {horizon}"
            )));
        }
        if nx < MIN_SPACE_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_SPACE_INTERVALS} spatial intervals, got {nx}"
            )));
        }
        if nt < MIN_TIME_INTERVALS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_TIME_INTERVALS} time intervals, got {nt}"
            )));
        }
        Ok(Self {
            length,
            horizon,
            nx,
            nt,
            dx: length / nx as f64,
            dt: horizon / nt as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of spatial intervals.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of time intervals.
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of spatial nodes, `Nx + 1`.
    pub fn space_nodes(&self) -> usize {
        self.nx + 1
    }

    /// Number of time levels, `Nt + 1`.
    pub fn time_levels(&self) -> usize {
        self.nt + 1
    }

    /// Number of interior spatial nodes, `Nx - 1`.
    pub fn interior_nodes(&self) -> usize {
        self.nx - 1
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.nx).map(move |i| self.x(i))
    }

    pub fn ts(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.nt).map(move |n| self.t(n))
    }

    /// Trapezoid weight of spatial node `i`, including the factor `dx`.
    pub fn space_weight(&self, i: usize) -> f64 {
        trapezoid_weight(i, self.nx) * self.dx
    }

    /// Trapezoid weight of time level `n`, including the factor `dt`.
    pub fn time_weight(&self, n: usize) -> f64 {
        trapezoid_weight(n, self.nt) * self.dt
    }

    /// Same length and horizon, different resolution.
    pub fn refined(&self, nx: usize, nt: usize) -> Result<Self> {
        Self::new(self.length, self.horizon, nx, nt)
    }
}

fn trapezoid_weight(i: usize, last: usize) -> f64 {
    if i == 0 || i == last {
        0.5
    } else {
        1.0
    }
}

/// A function of `x` sampled at the `Nx + 1` grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceField {
    values: Vec<f64>,
}

impl SpaceField {
    /// Wraps nodal values, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "space field entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.space_nodes()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            values: vec![value; grid.space_nodes()],
        }
    }

    /// Samples `f(x_i)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.xs().map(f).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Errors unless the field has exactly `Nx + 1` nodes.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        check_len("space field", grid.space_nodes(), self.values.len())
    }

    /// Values at the interior nodes `1..Nx`.
    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &SpaceField) -> Result<Self> {
        check_len("space field", self.len(), other.len())?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SpaceField) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn from_values_unchecked(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// A function of `(x, t)` sampled on the full grid; row `n` is time level `t_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    levels: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            levels: grid.time_levels(),
            nodes: grid.space_nodes(),
            values: vec![0.0; grid.time_levels() * grid.space_nodes()],
        }
    }

    /// Builds a field from row-major values (`levels` rows of `nodes` entries).
    pub fn from_rows(levels: usize, nodes: usize, values: Vec<f64>) -> Result<Self> {
        check_len("space-time field", levels * nodes, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "space-time field entry (level {}, node {}) is not finite",
                k / nodes,
                k % nodes
            )));
        }
        Ok(Self {
            levels,
            nodes,
            values,
        })
    }

    /// Samples `f(x_i, t_n)` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.time_levels() * grid.space_nodes());
        for t in grid.ts() {
            values.extend(grid.xs().map(|x| f(x, t)));
        }
        Self {
            levels: grid.time_levels(),
            nodes: grid.space_nodes(),
            values,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.nodes..(n + 1) * self.nodes]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        let nodes = self.nodes;
        &mut self.values[n * nodes..(n + 1) * nodes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.nodes)
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.nodes + i]
    }

    /// The spatial slice at time level `n`.
    pub fn level(&self, n: usize) -> SpaceField {
        SpaceField::from_values_unchecked(self.row(n).to_vec())
    }

    /// Errors unless the dimensions are `(Nt + 1) x (Nx + 1)`.
    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        check_len("space-time field levels", grid.time_levels(), self.levels)?;
        check_len("space-time field nodes", grid.space_nodes(), self.nodes)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            levels: self.levels,
            nodes: self.nodes,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &SpaceTimeField) -> Result<Self> {
        check_len("space-time field levels", self.levels, other.levels)?;
        check_len("space-time field nodes", self.nodes, other.nodes)?;
        Ok(Self {
            levels: self.levels,
            nodes: self.nodes,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    /// Rows in reverse order: level `n` of the result is level `Nt - n` of `self`.
    pub fn time_reversed(&self) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.values.chunks_exact(self.nodes).rev() {
            values.extend_from_slice(row);
        }
        Self {
            levels: self.levels,
            nodes: self.nodes,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn from_parts_unchecked(levels: usize, nodes: usize, values: Vec<f64>) -> Self {
        Self {
            levels,
            nodes,
            values,
        }
    }
}

/// Trapezoid sum of nodal values over `(0, L)`; `values` must have `Nx + 1` entries.
pub(crate) fn trapezoid_space(values: &[f64], grid: &Grid) -> f64 {
    let last = values.len() - 1;
    let inner: f64 = values[1..last].iter().sum();
    (inner + 0.5 * (values[0] + values[last])) * grid.dx()
}

/// Trapezoid approximation of `∫₀ᴸ f dx`.
pub fn integrate_space(f: &SpaceField, grid: &Grid) -> Result<f64> {
    f.check_grid(grid)?;
    Ok(trapezoid_space(f.values(), grid))
}

/// Trapezoid-weighted `⟨f, h⟩` on `(0, L)`.
pub fn inner_space(f: &SpaceField, h: &SpaceField, grid: &Grid) -> Result<f64> {
    f.check_grid(grid)?;
    h.check_grid(grid)?;
    Ok(weighted_dot(f.values(), h.values(), grid))
}

pub(crate) fn weighted_dot(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    let last = a.len() - 1;
    let inner: f64 = a[1..last].iter().zip(&b[1..last]).map(|(x, y)| x * y).sum();
    (inner + 0.5 * (a[0] * b[0] + a[last] * b[last])) * grid.dx()
}

pub fn l2_norm_space(f: &SpaceField, grid: &Grid) -> Result<f64> {
    Ok(inner_space(f, f, grid)?.max(0.0).sqrt())
}

/// Tensor-product trapezoid approximation of `∬ f dx dt`.
pub fn integrate_spacetime(f: &SpaceTimeField, grid: &Grid) -> Result<f64> {
    f.check_grid(grid)?;
    Ok(f.rows()
        .enumerate()
        .map(|(n, row)| grid.time_weight(n) * trapezoid_space(row, grid))
        .sum())
}

/// Tensor-product trapezoid `⟨f, h⟩` on `(0, L) x (0, T)`.
pub fn inner_spacetime(f: &SpaceTimeField, h: &SpaceTimeField, grid: &Grid) -> Result<f64> {
    f.check_grid(grid)?;
    h.check_grid(grid)?;
    Ok(f.rows()
        .zip(h.rows())
        .enumerate()
        .map(|(n, (a, b))| grid.time_weight(n) * weighted_dot(a, b, grid))
        .sum())
}

pub fn l2_norm_spacetime(f: &SpaceTimeField, grid: &Grid) -> Result<f64> {
    Ok(inner_spacetime(f, f, grid)?.max(0.0).sqrt())
}
