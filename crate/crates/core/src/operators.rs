//! The discrete bending operator `u ↦ (k u_xx)_xx` under simply supported ends.
//!
//! The operator acts on the `Nx - 1` interior node values. Curvature is the
//! centred second difference with the odd ghost closure `u_{-1} = -u_1`
//! (and its mirror at `x = L`), which makes the curvature vanish at both
//! supports. Writing that map as `D₂`, the operator is assembled in the
//! factored form
//!
//! ```text
//! B = D₂ᵀ · diag(k) · D₂
//! ```
//!
//! with `k` sampled at interior nodes and the `1/dx⁴` scaling folded in.
//! The factored form is symmetric positive definite for any positive `k`,
//! which is what the discrete integration-by-parts identities rely on.
//! For constant `k` the interior rows reduce to the familiar
//! `[1, -4, 6, -4, 1] / dx⁴` stencil, with `5 / dx⁴` on the two corner
//! diagonals.

use crate::banded::SymmetricBand;
use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceField};

/// Boundary entries larger than this violate the simply supported contract.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Pentadiagonal `B = D₂ᵀ diag(k) D₂` on interior nodes.
#[derive(Debug, Clone)]
pub struct BendingOperator {
    grid: Grid,
    stiffness: SpaceField,
    matrix: SymmetricBand,
}

/// Assembles the bending operator for stiffness `k` on `grid`.
pub fn assemble_bending(k: &SpaceField, grid: &Grid) -> Result<BendingOperator> {
    k.check_grid(grid)?;
    validate_stiffness(k)?;
    let n = grid.interior_nodes();
    let scale = grid.dx().powi(4).recip();
    let mut matrix = SymmetricBand::zeros(n, 2);
    // Each interior curvature row m touches unknowns m-1, m, m+1 with [1, -2, 1].
    let stencil = [1.0, -2.0, 1.0];
    for m in 0..n {
        let km = k.values()[m + 1] * scale;
        for (a, &ca) in stencil.iter().enumerate() {
            let Some(i) = (m + a).checked_sub(1).filter(|&i| i < n) else {
                continue;
            };
            for (b, &cb) in stencil.iter().enumerate().skip(a) {
                let Some(j) = (m + b).checked_sub(1).filter(|&j| j < n) else {
                    continue;
                };
                let v = ca * km * cb;
                // `add` mirrors off-diagonal entries, so only visit each pair once.
                matrix.add(i, j, v);
            }
        }
    }
    Ok(BendingOperator {
        grid: *grid,
        stiffness: k.clone(),
        matrix,
    })
}

/// Errors if any nodal stiffness is NaN or not strictly positive.
pub fn validate_stiffness(k: &SpaceField) -> Result<()> {
    for (index, &value) in k.values().iter().enumerate() {
        if value.is_nan() {
            return Err(Error::InvalidInput(format!("stiffness k[{index}] is NaN")));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidStiffness { index, value });
        }
    }
    Ok(())
}

/// Applies `B` to a field that vanishes at both supports.
pub fn apply_bending(op: &BendingOperator, f: &SpaceField) -> Result<SpaceField> {
    f.check_grid(&op.grid)?;
    check_supports(f)?;
    let mut out = vec![0.0; f.len()];
    let last = out.len() - 1;
    op.mul_interior(f.interior(), &mut out[1..last]);
    Ok(SpaceField::from_values_unchecked(out))
}

fn check_supports(f: &SpaceField) -> Result<()> {
    let v = f.values();
    let (a, b) = (v[0], v[v.len() - 1]);
    if a.abs() > BOUNDARY_TOLERANCE || b.abs() > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryViolation(format!(
            "field must vanish at both supports, found {a:e} and {b:e}"
        )));
    }
    Ok(())
}

impl BendingOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stiffness(&self) -> &SpaceField {
        &self.stiffness
    }

    /// Entry `(i, j)` of the interior matrix (0-based interior indices).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `out = B x` on interior values.
    pub fn mul_interior(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec(x, out);
    }

    /// Interior `shift * I + scale * B`, the Newmark system matrix.
    pub(crate) fn shifted(&self, shift: f64, scale: f64) -> SymmetricBand {
        self.matrix.shifted(shift, scale)
    }

    /// Nodal curvature `D₂ u` from interior values; zero at both supports.
    pub fn curvature(&self, interior: &[f64]) -> Vec<f64> {
        curvature(interior, self.grid.dx())
    }
}

/// Second difference of interior values with zero supports and odd ghost nodes.
pub(crate) fn curvature(interior: &[f64], dx: f64) -> Vec<f64> {
    let n = interior.len();
    let inv = dx.powi(2).recip();
    let mut out = vec![0.0; n + 2];
    for m in 0..n {
        let left = if m > 0 { interior[m - 1] } else { 0.0 };
        let right = if m + 1 < n { interior[m + 1] } else { 0.0 };
        out[m + 1] = (left - 2.0 * interior[m] + right) * inv;
    }
    out
}
