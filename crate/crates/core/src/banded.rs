//! Symmetric band matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Lower half of a symmetric band matrix: `bands[d][i]` holds entry `(i + d, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; n.saturating_sub(d)])
            .collect();
        Self { n, bands }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        let d = hi - lo;
        if d > self.bandwidth() {
            0.0
        } else {
            self.bands[d][lo]
        }
    }

    /// Adds `value` to entry `(i, j)` and, by symmetry, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        self.bands[hi - lo][lo] += value;
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (o, (d, xi)) in out.iter_mut().zip(self.bands[0].iter().zip(x)) {
            *o = d * xi;
        }
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                out[i] += a * x[i + d];
                out[i + d] += a * x[i];
            }
        }
    }

    /// `I * shift + scale * A`, same band structure.
    pub fn shifted(&self, shift: f64, scale: f64) -> Self {
        let mut out = self.clone();
        for band in &mut out.bands {
            band.iter_mut().for_each(|v| *v *= scale);
        }
        out.bands[0].iter_mut().for_each(|v| *v += shift);
        out
    }
}

/// Band Cholesky factor `A = L Lᵀ` of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    p: usize,
    // row-major, l[i * (p + 1) + k] = L(i, i - p + k), k = p is the diagonal
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SymmetricBand) -> Result<Self> {
        let n = a.dim();
        let p = a.bandwidth();
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                let k0 = j.saturating_sub(p).max(j0);
                let mut sum = a.get(i, j);
                for k in k0..j {
                    sum -= l[i * w + (k + p - i)] * l[j * w + (k + p - j)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::NumericalFailure(format!(
                            "band Cholesky: non-positive pivot {sum:e} at row {i}"
                        )));
                    }
                    l[i * w + p] = sum.sqrt();
                } else {
                    l[i * w + (j + p - i)] = sum / l[j * w + p];
                }
            }
        }
        Ok(Self { n, p, l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            let lo = i.saturating_sub(p);
            for (k, bk) in b.iter().enumerate().take(i).skip(lo) {
                s -= self.l[i * w + (k + p - i)] * bk;
            }
            b[i] = s / self.l[i * w + p];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            let hi = (i + p + 1).min(n);
            for (k, bk) in b.iter().enumerate().take(hi).skip(i + 1) {
                s -= self.l[k * w + (i + p - k)] * bk;
            }
            b[i] = s / self.l[i * w + p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pentadiagonal(n: usize) -> SymmetricBand {
        let mut a = SymmetricBand::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 7.0 + i as f64 * 0.1);
            if i + 1 < n {
                a.add(i + 1, i, -2.0);
            }
            if i + 2 < n {
                a.add(i + 2, i, 0.5);
            }
        }
        a
    }

    #[test]
    fn factor_solves_known_system() {
        let a = pentadiagonal(9);
        let x: Vec<f64> = (0..9).map(|i| (i as f64).sin() + 1.0).collect();
        let mut b = vec![0.0; 9];
        a.mul_vec(&x, &mut b);
        let chol = BandCholesky::factor(&a).unwrap();
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-13);
        }
    }

    #[test]
    fn tridiagonal_and_tiny_systems() {
        let mut a = SymmetricBand::zeros(2, 1);
        a.add(0, 0, 4.0);
        a.add(1, 1, 4.0);
        a.add(0, 1, 1.0);
        let chol = BandCholesky::factor(&a).unwrap();
        let mut b = vec![6.0, 9.0];
        chol.solve_in_place(&mut b);
        assert_abs_diff_eq!(b[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = SymmetricBand::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(
            BandCholesky::factor(&a),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn shifted_adds_identity() {
        let a = pentadiagonal(5);
        let s = a.shifted(1.0, 2.0);
        assert_abs_diff_eq!(s.get(2, 2), 1.0 + 2.0 * a.get(2, 2));
        assert_abs_diff_eq!(s.get(3, 1), 2.0 * a.get(1, 3));
        assert_eq!(s.get(4, 0), 0.0);
    }
}
