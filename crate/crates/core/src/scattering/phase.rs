use num_complex::Complex64;

use crate::error::{Error, Result};

/// `theta(k) = (x/t) k + 2 k^2`.
pub fn theta_phase(x: f64, t: f64, k: Complex64) -> Result<Complex64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("theta needs t != 0, got {t}")));
    }
    Ok(k * (x / t) + k * k * 2.0)
}

/// Stationary point `k0 = -x / (4t)` of `theta`.
pub fn stationary_point(x: f64, t: f64) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidInput(format!("stationary point needs t != 0, got {t}")));
    }
    Ok(-x / (4.0 * t))
}
