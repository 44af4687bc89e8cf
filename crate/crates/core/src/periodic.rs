//! Spectral operations on real samples of a 2π-periodic function.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned transforms for an equispaced grid `x_j = 2πj/nx` on `[0, 2π)`.
#[derive(Clone)]
pub struct PeriodicGrid {
    nx: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("nx", &self.nx)
            .finish()
    }
}

impl PeriodicGrid {
    pub fn new(nx: usize) -> Self {
        assert!(nx >= 2, "periodic grid needs at least two points");
        let mut planner = FftPlanner::new();
        Self {
            nx,
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
        }
    }

    pub fn len(&self) -> usize {
        self.nx
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nx as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nx).map(|j| j as f64 * self.spacing()).collect()
    }

    /// Signed wavenumber of FFT bin `j`; the Nyquist bin maps to `nx/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.nx as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    fn is_nyquist(&self, j: usize) -> bool {
        self.nx.is_multiple_of(2) && j == self.nx / 2
    }

    fn spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.nx, "sample count does not match grid");
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn synthesize_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.nx as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies the Fourier multiplier `m(k)` to real samples.
    pub fn apply_multiplier(
        &self,
        values: &[f64],
        multiplier: impl Fn(i64) -> Complex64,
    ) -> Vec<f64> {
        let mut buf = self.spectrum(values);
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= multiplier(self.wavenumber(j));
        }
        self.synthesize_real(buf)
    }

    /// First derivative. The Nyquist mode is dropped so the result stays real.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let mut buf = self.spectrum(values);
        for (j, c) in buf.iter_mut().enumerate() {
            if self.is_nyquist(j) {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, self.wavenumber(j) as f64);
            }
        }
        self.synthesize_real(buf)
    }

    pub fn second_derivative(&self, values: &[f64]) -> Vec<f64> {
        let mut buf = self.spectrum(values);
        for (j, c) in buf.iter_mut().enumerate() {
            let k = self.wavenumber(j) as f64;
            *c *= -k * k;
        }
        self.synthesize_real(buf)
    }

    /// Zeroes every mode with `|k| > nx/3` (the 2/3 rule).
    pub fn dealias(&self, values: &[f64]) -> Vec<f64> {
        let cutoff = self.nx as i64 / 3;
        self.apply_multiplier(values, |k| {
            if k.abs() > cutoff {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Real amplitude of `cos(kx)` in the samples: `(2/nx) Σ v_j cos(k x_j)`.
    pub fn cosine_amplitude(&self, values: &[f64], k: i64) -> f64 {
        let h = self.spacing();
        let sum: f64 = values
            .iter()
            .enumerate()
            .map(|(j, v)| v * (k as f64 * j as f64 * h).cos())
            .sum();
        2.0 * sum / self.nx as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let grid = PeriodicGrid::new(32);
        let x = grid.points();
        let f: Vec<f64> = x
            .iter()
            .map(|&x| (3.0 * x).sin() + 0.5 * (x).cos())
            .collect();
        let df = grid.derivative(&f);
        let d2f = grid.second_derivative(&f);
        for (j, &x) in x.iter().enumerate() {
            assert_abs_diff_eq!(
                df[j],
                3.0 * (3.0 * x).cos() - 0.5 * x.sin(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                d2f[j],
                -9.0 * (3.0 * x).sin() - 0.5 * x.cos(),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn dealias_removes_high_modes_only() {
        let grid = PeriodicGrid::new(48);
        let x = grid.points();
        let low: Vec<f64> = x.iter().map(|&x| (5.0 * x).cos()).collect();
        let high: Vec<f64> = x.iter().map(|&x| (20.0 * x).cos()).collect();
        let mixed: Vec<f64> = low.iter().zip(&high).map(|(a, b)| a + b).collect();
        let filtered = grid.dealias(&mixed);
        for (a, b) in filtered.iter().zip(&low) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn cosine_amplitude_picks_the_mode() {
        let grid = PeriodicGrid::new(16);
        let v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| 0.3 * (2.0 * x).cos() + (x).sin())
            .collect();
        assert_abs_diff_eq!(grid.cosine_amplitude(&v, 2), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(grid.cosine_amplitude(&v, 1), 0.0, epsilon = 1e-14);
    }
}
