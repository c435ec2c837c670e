//! FFT helpers on a periodic grid.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::field::SpatialGrid;
use crate::linalg::C64;

/// Forward/inverse FFT pair together with the grid wavenumbers.
#[derive(Clone)]
pub struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n_points();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            wavenumbers: grid.wavenumbers(),
        }
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the `1/n` normalisation.
    pub fn inverse(&self, data: &mut [C64]) {
        self.inverse.process(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn second_derivative(&self, values: &[C64]) -> Vec<C64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        for (z, &xi) in buf.iter_mut().zip(&self.wavenumbers) {
            *z *= -xi * xi;
        }
        self.inverse(&mut buf);
        buf
    }

    /// Trigonometric interpolation of `values` at `x_m + offset`.
    pub fn shifted(&self, values: &[C64], offset: f64) -> Vec<C64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        let n = buf.len();
        for (m, (z, &xi)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            if n % 2 == 0 && m == n / 2 {
                // Nyquist mode: keep the real-valued cosine interpolant.
                *z *= (xi * offset).cos();
            } else {
                *z *= C64::from_polar(1.0, xi * offset);
            }
        }
        self.inverse(&mut buf);
        buf
    }
}
