//! Seeded random fields for probes, start vectors and admissible samples.

use rand::Rng;

use crate::grid::{Grid, SpaceField};

/// `Σ_{m=1}^{modes} amplitude · c_m / m^decay · sin(mπx/L)` with `c_m ~ U(-1, 1)`.
///
/// Every mode vanishes at both supports, so the result is compatible with
/// the boundary conditions.
pub fn random_sine_field<R: Rng + ?Sized>(
    grid: &Grid,
    rng: &mut R,
    modes: usize,
    amplitude: f64,
    decay: f64,
) -> SpaceField {
    let coeffs: Vec<f64> = (1..=modes)
        .map(|m| amplitude * rng.gen_range(-1.0..=1.0) / (m as f64).powf(decay))
        .collect();
    sine_series(grid, &coeffs)
}

/// `Σ c_m sin(mπx/L)` for `m = 1, 2, ...`, exactly zero at the supports.
pub fn sine_series(grid: &Grid, coeffs: &[f64]) -> SpaceField {
    let k = std::f64::consts::PI / grid.length();
    let last = grid.nx();
    let values = (0..=last)
        .map(|i| {
            if i == 0 || i == last {
                return 0.0;
            }
            let x = grid.x(i);
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * k * x).sin())
                .sum()
        })
        .collect();
    SpaceField::from_values_unchecked(values)
}

/// Independent `U(-1, 1)` values at every node, supports included.
pub fn random_nodal_field<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> SpaceField {
    SpaceField::from_values_unchecked(
        (0..grid.space_nodes())
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect(),
    )
}
