//! Grids, spinor fields and the symmetric matrix potential.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::Trajectory;
use crate::linalg::{Mat2, C64, I};
use crate::spectral::Spectral;

/// Default tolerance for the boundary-decay check on input fields.
pub const DEFAULT_DECAY_TOL: f64 = 1e-6;

/// Uniform periodic grid `x_m = x_min + m * spacing`, `m = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points = {n_points} must be a power of two >= 8"
            )));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn x(&self, m: usize) -> f64 {
        self.x_min + m as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|m| self.x(m)).collect()
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let m = ((x - self.x_min) / self.spacing()).round();
        m.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let base = 2.0 * std::f64::consts::PI / self.length();
        (0..n)
            .map(|m| if m < n / 2 { m } else { m - n })
            .map(|m| m as f64 * base)
            .collect()
    }

    /// Number of nodes in each boundary layer used for decay checks.
    pub fn boundary_layer(&self) -> usize {
        ((self.n_points as f64 * 0.05).ceil() as usize).max(1)
    }
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self { x_min: -40.0, x_max: 40.0, n_points: 2048 }
    }
}

/// The three spinor components `(q1, q0, q-1)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: SpatialGrid,
    pub q1: Vec<C64>,
    pub q0: Vec<C64>,
    pub qm1: Vec<C64>,
}

impl SpinorField {
    /// Builds a field and checks that it decays on the outer 5% of the grid.
    pub fn new(grid: SpatialGrid, q1: Vec<C64>, q0: Vec<C64>, qm1: Vec<C64>) -> Result<Self> {
        Self::with_decay_tol(grid, q1, q0, qm1, DEFAULT_DECAY_TOL)
    }

    pub fn with_decay_tol(
        grid: SpatialGrid,
        q1: Vec<C64>,
        q0: Vec<C64>,
        qm1: Vec<C64>,
        tol: f64,
    ) -> Result<Self> {
        let field = Self::from_parts(grid, q1, q0, qm1)?;
        let max = field.boundary_max();
        if max > tol {
            return Err(Error::BoundaryDecay { max, tol });
        }
        Ok(field)
    }

    /// Builds a field checking only shapes and finiteness.
    pub fn from_parts(grid: SpatialGrid, q1: Vec<C64>, q0: Vec<C64>, qm1: Vec<C64>) -> Result<Self> {
        let n = grid.n_points();
        if q1.len() != n || q0.len() != n || qm1.len() != n {
            return Err(Error::InvalidInput(format!(
                "component lengths ({}, {}, {}) do not match n_points = {n}",
                q1.len(),
                q0.len(),
                qm1.len()
            )));
        }
        if q1.iter().chain(&q0).chain(&qm1).any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(Self { grid, q1, q0, qm1 })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n_points()];
        Self { grid, q1: z.clone(), q0: z.clone(), qm1: z }
    }

    /// Samples `f(x) -> (q1, q0, q-1)` on the grid nodes.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> [C64; 3]) -> Result<Self> {
        let mut q1 = Vec::with_capacity(grid.n_points());
        let mut q0 = Vec::with_capacity(grid.n_points());
        let mut qm1 = Vec::with_capacity(grid.n_points());
        for x in grid.nodes() {
            let [a, b, c] = f(x);
            q1.push(a);
            q0.push(b);
            qm1.push(c);
        }
        Self::new(grid, q1, q0, qm1)
    }

    pub fn components(&self) -> [&[C64]; 3] {
        [&self.q1, &self.q0, &self.qm1]
    }

    /// Largest component modulus on the outer 5% of nodes.
    pub fn boundary_max(&self) -> f64 {
        let n = self.grid.n_points();
        let layer = self.grid.boundary_layer();
        let mut max = 0.0f64;
        for comp in self.components() {
            for z in comp[..layer].iter().chain(&comp[n - layer..]) {
                max = max.max(z.norm());
            }
        }
        max
    }

    pub fn matrix_at(&self, m: usize) -> Mat2 {
        Mat2::new(self.q1[m], self.q0[m], self.q0[m], self.qm1[m])
    }

    pub fn max_abs(&self) -> f64 {
        self.q1
            .iter()
            .chain(&self.q0)
            .chain(&self.qm1)
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Translates the field by a whole number of nodes (periodically).
    pub fn shifted_by_nodes(&self, shift: isize) -> Self {
        let n = self.grid.n_points() as isize;
        let roll = |v: &[C64]| -> Vec<C64> {
            (0..n).map(|m| v[((m - shift).rem_euclid(n)) as usize]).collect()
        };
        Self { grid: self.grid, q1: roll(&self.q1), q0: roll(&self.q0), qm1: roll(&self.qm1) }
    }

    /// Sup over nodes of the Frobenius distance between the matrix potentials.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        (0..self.grid.n_points())
            .map(|m| crate::linalg::frob(&(self.matrix_at(m) - other.matrix_at(m))))
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "Re q1", "Im q1", "Re q0", "Im q0", "Re qm1", "Im qm1"])?;
        for m in 0..self.grid.n_points() {
            let row = [
                self.grid.x(m),
                self.q1[m].re,
                self.q1[m].im,
                self.q0[m].re,
                self.q0[m].im,
                self.qm1[m].re,
                self.qm1[m].im,
            ];
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a field written by [`SpinorField::write_csv`]; the grid is inferred from `x`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let (mut q1, mut q0, mut qm1) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 7 {
                return Err(Error::InvalidInput(format!("expected 7 columns, found {}", rec.len())));
            }
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad number: {e}")))?;
            xs.push(v[0]);
            q1.push(C64::new(v[1], v[2]));
            q0.push(C64::new(v[3], v[4]));
            qm1.push(C64::new(v[5], v[6]));
        }
        if xs.len() < 8 {
            return Err(Error::InvalidInput("too few rows".into()));
        }
        let dx = xs[1] - xs[0];
        let grid = SpatialGrid::new(xs[0], xs[0] + dx * xs.len() as f64, xs.len())?;
        Self::from_parts(grid, q1, q0, qm1)
    }
}

/// Symmetric 2x2 matrix potential `Q = [[q1, q0], [q0, q-1]]` at every node.
#[derive(Debug, Clone)]
pub struct MatrixPotential {
    pub grid: SpatialGrid,
    pub values: Vec<Mat2>,
}

impl MatrixPotential {
    pub fn to_field(&self) -> SpinorField {
        SpinorField {
            grid: self.grid,
            q1: self.values.iter().map(|q| q[(0, 0)]).collect(),
            q0: self.values.iter().map(|q| q[(0, 1)]).collect(),
            qm1: self.values.iter().map(|q| q[(1, 1)]).collect(),
        }
    }
}

/// Packs the spinor components into the symmetric matrix potential.
pub fn assemble_q(field: &SpinorField) -> MatrixPotential {
    MatrixPotential {
        grid: field.grid,
        values: (0..field.grid.n_points()).map(|m| field.matrix_at(m)).collect(),
    }
}

/// `integral of |q1|^2 + 2|q0|^2 + |q-1|^2` by the periodic trapezoid rule.
pub fn total_power(field: &SpinorField) -> f64 {
    let sum: f64 = (0..field.grid.n_points())
        .map(|m| field.q1[m].norm_sqr() + 2.0 * field.q0[m].norm_sqr() + field.qm1[m].norm_sqr())
        .sum();
    sum * field.grid.spacing()
}

/// `Q Q^dagger Q` evaluated entrywise.
pub fn cubic_term(q: &Mat2) -> Mat2 {
    q * q.adjoint() * q
}

/// Sup-norm of `i Q_t + Q_xx + 2 Q Q^dagger Q` at snapshot `index`, over interior nodes.
///
/// The time derivative is a central difference between neighbouring snapshots,
/// the space derivative is spectral.
pub fn pde_residual(traj: &Trajectory, index: usize) -> Result<f64> {
    let nt = traj.times.len();
    if index == 0 || index + 1 >= nt {
        return Err(Error::InvalidInput(format!(
            "index {index} needs neighbours on both sides (trajectory has {nt} snapshots)"
        )));
    }
    let dt_back = traj.times[index] - traj.times[index - 1];
    let dt_fwd = traj.times[index + 1] - traj.times[index];
    if dt_back <= 0.0 || (dt_fwd - dt_back).abs() > 1e-9 * dt_back.abs().max(1e-300) {
        return Err(Error::InvalidInput(format!(
            "non-uniform time step around index {index}: {dt_back} vs {dt_fwd}"
        )));
    }
    let grid = traj.grid;
    let spectral = Spectral::new(&grid);
    let prev = &traj.snapshots[index - 1];
    let here = &traj.snapshots[index];
    let next = &traj.snapshots[index + 1];
    let qxx: Vec<Vec<C64>> = here.components().iter().map(|c| spectral.second_derivative(c)).collect();
    let layer = grid.boundary_layer();
    let mut sup = 0.0f64;
    for m in layer..grid.n_points() - layer {
        let q = here.matrix_at(m);
        let q_t = (next.matrix_at(m) - prev.matrix_at(m)) / C64::new(2.0 * dt_back, 0.0);
        let q_xx = Mat2::new(qxx[0][m], qxx[1][m], qxx[1][m], qxx[2][m]);
        let res = q_t * I + q_xx + cubic_term(&q) * C64::new(2.0, 0.0);
        sup = sup.max(res.iter().fold(0.0, |a, z| a.max(z.norm())));
    }
    Ok(sup)
}
