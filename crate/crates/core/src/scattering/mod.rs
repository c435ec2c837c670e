//! Direct scattering: Jost solutions, the scattering matrix, discrete spectrum
//! and norming constants.

mod jost;
mod phase;
mod spectrum;

pub use jost::{analytic_block, solve_jost, solve_jost_with, Block, JostSolution, JostSolver, Side};
pub use phase::{stationary_point, theta_phase};
pub use spectrum::{
    find_discrete_spectrum, norming_constants, residue_by_derivative, SearchBox, SpectrumOptions,
};

use crate::error::{Error, Result};
use crate::field::MatrixPotential;
use crate::linalg::{det2, inv2, lower, upper, Mat2, C64, I};

/// Blocks of the scattering matrix at a real spectral parameter.
#[derive(Debug, Clone, Copy)]
pub struct ScatteringData {
    pub k: f64,
    pub a: Mat2,
    pub b: Mat2,
    /// `gamma = b a^{-1}`.
    pub gamma: Mat2,
    pub det_a: C64,
    /// `max |a^dagger a + b^dagger b - I|`.
    pub unitarity_error: f64,
}

/// Scattering computations sharing one interpolated potential.
#[derive(Debug, Clone)]
pub struct Scatterer {
    solver: JostSolver,
    center: usize,
}

impl Scatterer {
    pub fn new(potential: &MatrixPotential) -> Self {
        let center = potential.grid.nearest(0.0);
        Self { solver: JostSolver::new(potential), center }
    }

    pub fn solver(&self) -> &JostSolver {
        &self.solver
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// `S(k) = lim e^{ikx sigma4} mu_-(x) e^{-ikx sigma4}`, read off at the right end of the grid.
    pub fn scattering(&self, k: f64) -> Result<ScatteringData> {
        if !k.is_finite() {
            return Err(Error::InvalidInput(format!("k = {k} is not finite")));
        }
        let grid = self.solver.grid();
        let last = grid.n_points() - 1;
        let kc = C64::new(k, 0.0);
        let left = self.solver.block_at(kc, Block::Left, Side::Minus, last);
        let x_end = grid.x(last);
        let a = upper(&left);
        let b = lower(&left) * (-I * 2.0 * k * x_end).exp();
        let gram = a.adjoint() * a + b.adjoint() * b - Mat2::identity();
        let unitarity_error = gram.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if unitarity_error > 1e-6 {
            return Err(Error::JostAccuracy { k: format!("{k}"), what: "|a'a + b'b - I|", value: unitarity_error });
        }
        let inv = inv2(&a);
        let inv_norm = inv.map(|m| crate::linalg::frob(&m)).unwrap_or(f64::INFINITY);
        if !(inv_norm <= 1e8) {
            return Err(Error::SpectralSingularity { k, norm: inv_norm });
        }
        let inv = inv.expect("finite inverse");
        Ok(ScatteringData { k, a, b, gamma: b * inv, det_a: det2(&a), unitarity_error })
    }

    /// Scattering data on a list of real points.
    pub fn sweep(&self, ks: &[f64]) -> Result<Vec<ScatteringData>> {
        ks.iter().map(|&k| self.scattering(k)).collect()
    }

    /// `det a(k) = det[mu_-L(x), mu_+R(x)]` at grid node `node`, for `Im k >= 0`.
    pub fn det_a_at(&self, k: C64, node: usize) -> Result<C64> {
        if k.im < 0.0 {
            return Err(Error::InvalidInput(format!("det a needs Im k >= 0, got {k}")));
        }
        self.solver.check_depth(k)?;
        let left = self.solver.block_at(k, Block::Left, Side::Minus, node);
        let right = self.solver.block_at(k, Block::Right, Side::Plus, node);
        Ok(crate::linalg::join_columns(&left, &right).determinant())
    }

    pub fn det_a(&self, k: C64) -> Result<C64> {
        self.det_a_at(k, self.center)
    }

    /// The 2x2 block `a(k) = mu_+L(conj k)^dagger mu_-L(k)` for `Im k >= 0`.
    pub fn a_matrix(&self, k: C64) -> Result<Mat2> {
        if k.im < 0.0 {
            return Err(Error::InvalidInput(format!("a(k) is analytic for Im k >= 0, got {k}")));
        }
        self.solver.check_depth(k)?;
        let minus = self.solver.block_at(k, Block::Left, Side::Minus, self.center);
        let plus = self.solver.block_at(k.conj(), Block::Left, Side::Plus, self.center);
        Ok(plus.adjoint() * minus)
    }
}

pub fn scattering_matrix(potential: &MatrixPotential, k: f64) -> Result<ScatteringData> {
    Scatterer::new(potential).scattering(k)
}

pub fn det_a(potential: &MatrixPotential, k: C64) -> Result<C64> {
    Scatterer::new(potential).det_a(k)
}
