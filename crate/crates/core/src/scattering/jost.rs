//! Jost solutions of `mu_x = -ik [sigma4, mu] + U mu`.
//!
//! Each half-column block is marched with a Lawson (integrating factor) RK4
//! scheme: the `-ik [sigma4, .]` part is applied exactly, the potential part by
//! RK4 with the potential Fourier-interpolated inside each cell. Cells are split
//! into substeps when `|Re k|` makes the interaction-picture coefficient oscillate
//! quickly on the grid scale.

use crate::error::{Error, Result};
use crate::field::{MatrixPotential, SpatialGrid};
use crate::linalg::{join_columns, lower, stack, upper, Mat2, Mat4, Mat4x2, C64, I};
use crate::spectral::Spectral;

/// Which end the Jost solution is normalised at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `mu -> I` as `x -> -inf`.
    Minus,
    /// `mu -> I` as `x -> +inf`.
    Plus,
}

/// Left (first two) or right (last two) columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Left,
    Right,
}

impl Block {
    fn identity(self) -> Mat4x2 {
        match self {
            Block::Left => stack(&Mat2::identity(), &Mat2::zeros()),
            Block::Right => stack(&Mat2::zeros(), &Mat2::identity()),
        }
    }

    /// Diagonal rates of the `-ik [sigma4, .]` part on (upper, lower) rows.
    fn rates(self, k: C64) -> (C64, C64) {
        match self {
            Block::Left => (C64::new(0.0, 0.0), I * k * 2.0),
            Block::Right => (-I * k * 2.0, C64::new(0.0, 0.0)),
        }
    }
}

/// The half-column block that is analytic (bounded) for the given side and `Im k`.
pub fn analytic_block(side: Side, k: C64) -> Block {
    match (side, k.im > 0.0) {
        (Side::Minus, true) | (Side::Plus, false) => Block::Left,
        (Side::Minus, false) | (Side::Plus, true) => Block::Right,
    }
}

/// Largest `2 |Im k| |x|` allowed before exponential weights leave f64 range.
const MAX_EXPONENT: f64 = 700.0;

/// Sub-cell sampling resolution: the potential is stored at `x_m + j dx / FINE`.
const FINE: usize = 16;
/// Largest phase `2 |Re k| h` of the oscillatory coefficient per substep.
const MAX_TURN: f64 = 0.1;

/// Precomputed potential samples for repeated Jost marches.
#[derive(Debug, Clone)]
pub struct JostSolver {
    grid: SpatialGrid,
    /// `samples[j][m] = Q(x_m + j dx / FINE)`.
    samples: Vec<Vec<Mat2>>,
}

impl JostSolver {
    pub fn new(potential: &MatrixPotential) -> Self {
        let grid = potential.grid;
        let spectral = Spectral::new(&grid);
        let field = potential.to_field();
        let dx = grid.spacing();
        let mut samples = vec![potential.values.clone()];
        for j in 1..FINE {
            let off = j as f64 * dx / FINE as f64;
            let s1 = spectral.shifted(&field.q1, off);
            let s0 = spectral.shifted(&field.q0, off);
            let sm = spectral.shifted(&field.qm1, off);
            samples.push((0..grid.n_points()).map(|m| Mat2::new(s1[m], s0[m], s0[m], sm[m])).collect());
        }
        Self { grid, samples }
    }

    /// Potential at `x_m + j dx / FINE`, `j <= FINE`.
    fn q(&self, m: usize, j: usize) -> &Mat2 {
        if j == FINE {
            &self.samples[0][m + 1]
        } else {
            &self.samples[j][m]
        }
    }

    fn substeps(&self, k: C64) -> usize {
        let turn = 2.0 * k.re.abs() * self.grid.spacing();
        let mut s = 2;
        while s < FINE / 2 && turn / (s as f64) > MAX_TURN {
            s *= 2;
        }
        s
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn check_depth(&self, k: C64) -> Result<()> {
        let half_width = self.grid.x_min().abs().max(self.grid.x_max().abs());
        if 2.0 * k.im.abs() * half_width > MAX_EXPONENT {
            return Err(Error::TooDeep { im: k.im, half_width });
        }
        Ok(())
    }

    fn rhs(q: &Mat2, y: &Mat4x2) -> Mat4x2 {
        let (u, d) = (upper(y), lower(y));
        stack(&(q * d), &(-(q.adjoint() * u)))
    }

    fn scale(y: &Mat4x2, fu: C64, fd: C64) -> Mat4x2 {
        let mut out = *y;
        for c in 0..2 {
            out[(0, c)] *= fu;
            out[(1, c)] *= fu;
            out[(2, c)] *= fd;
            out[(3, c)] *= fd;
        }
        out
    }

    /// One Lawson-RK4 step of size `h` between potential samples `q_a`, `q_m`, `q_b`.
    #[allow(clippy::too_many_arguments)]
    fn step(y: &Mat4x2, h: f64, rates: (C64, C64), q_a: &Mat2, q_m: &Mat2, q_b: &Mat2) -> Mat4x2 {
        let (eu_h, ed_h) = ((rates.0 * h).exp(), (rates.1 * h).exp());
        let (eu_2, ed_2) = ((rates.0 * (0.5 * h)).exp(), (rates.1 * (0.5 * h)).exp());
        let hc = C64::new(h, 0.0);
        let k1 = Self::rhs(q_a, y);
        let a = Self::scale(&(y + k1 * (hc * 0.5)), eu_2, ed_2);
        let k2 = Self::rhs(q_m, &a);
        let b = Self::scale(y, eu_2, ed_2) + k2 * (hc * 0.5);
        let k3 = Self::rhs(q_m, &b);
        let c = Self::scale(y, eu_h, ed_h) + Self::scale(&k3, eu_2, ed_2) * hc;
        let k4 = Self::rhs(q_b, &c);
        let incr = Self::scale(&k1, eu_h, ed_h) + Self::scale(&(k2 + k3), eu_2, ed_2) * C64::new(2.0, 0.0) + k4;
        Self::scale(y, eu_h, ed_h) + incr * (hc / 6.0)
    }

    /// Marches one block from its normalising end to node `stop` (inclusive),
    /// calling `visit(m, value)` at every node passed, and returns the value at `stop`.
    pub fn march(
        &self,
        k: C64,
        block: Block,
        side: Side,
        stop: usize,
        mut visit: impl FnMut(usize, &Mat4x2),
    ) -> Mat4x2 {
        let n = self.grid.n_points();
        let subs = self.substeps(k);
        let stride = FINE / subs;
        let h = self.grid.spacing() / subs as f64;
        let rates = block.rates(k);
        let mut y = block.identity();
        match side {
            Side::Minus => {
                visit(0, &y);
                for m in 0..stop.min(n - 1) {
                    for i in 0..subs {
                        let j = i * stride;
                        y = Self::step(&y, h, rates, self.q(m, j), self.q(m, j + stride / 2), self.q(m, j + stride));
                    }
                    visit(m + 1, &y);
                }
            }
            Side::Plus => {
                visit(n - 1, &y);
                let mut m = n - 1;
                while m > stop {
                    for i in (0..subs).rev() {
                        let j = i * stride;
                        y = Self::step(&y, -h, rates, self.q(m - 1, j + stride), self.q(m - 1, j + stride / 2), self.q(m - 1, j));
                    }
                    m -= 1;
                    visit(m, &y);
                }
            }
        }
        y
    }

    /// Value of one block at a single node.
    pub fn block_at(&self, k: C64, block: Block, side: Side, node: usize) -> Mat4x2 {
        self.march(k, block, side, node, |_, _| {})
    }

    /// Values of one block at every node.
    pub fn block_profile(&self, k: C64, block: Block, side: Side) -> Vec<Mat4x2> {
        let n = self.grid.n_points();
        let mut out = vec![Mat4x2::zeros(); n];
        let stop = match side {
            Side::Minus => n - 1,
            Side::Plus => 0,
        };
        self.march(k, block, side, stop, |m, y| out[m] = *y);
        out
    }
}

/// Jost solution sampled at every node; for `Im k != 0` only the analytic block is present.
#[derive(Debug, Clone)]
pub struct JostSolution {
    pub k: C64,
    pub side: Side,
    pub left: Option<Vec<Mat4x2>>,
    pub right: Option<Vec<Mat4x2>>,
}

impl JostSolution {
    /// Full 4x4 matrix at node `m` (real `k` only).
    pub fn full(&self, m: usize) -> Option<Mat4> {
        Some(join_columns(&self.left.as_ref()?[m], &self.right.as_ref()?[m]))
    }
}

/// Computes the Jost solution normalised at the given side.
///
/// For real `k` both blocks are returned and `det mu = 1`, `mu^dagger mu = I`
/// are checked at the far end of the march.
pub fn solve_jost(potential: &MatrixPotential, k: C64, side: Side) -> Result<JostSolution> {
    let solver = JostSolver::new(potential);
    solve_jost_with(&solver, k, side)
}

pub fn solve_jost_with(solver: &JostSolver, k: C64, side: Side) -> Result<JostSolution> {
    if !k.is_finite() {
        return Err(Error::InvalidInput(format!("spectral parameter {k} is not finite")));
    }
    solver.check_depth(k)?;
    if k.im == 0.0 {
        let left = solver.block_profile(k, Block::Left, side);
        let right = solver.block_profile(k, Block::Right, side);
        let far = match side {
            Side::Minus => left.len() - 1,
            Side::Plus => 0,
        };
        let mu = join_columns(&left[far], &right[far]);
        let det_err = (mu.determinant() - C64::new(1.0, 0.0)).norm();
        if det_err > 1e-8 {
            return Err(Error::JostAccuracy { k: format!("{k}"), what: "|det mu - 1|", value: det_err });
        }
        let unit = mu.adjoint() * mu - Mat4::identity();
        let unit_err = unit.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if unit_err > 1e-7 {
            return Err(Error::JostAccuracy { k: format!("{k}"), what: "|mu^dagger mu - I|", value: unit_err });
        }
        return Ok(JostSolution { k, side, left: Some(left), right: Some(right) });
    }
    let block = analytic_block(side, k);
    let profile = solver.block_profile(k, block, side);
    Ok(match block {
        Block::Left => JostSolution { k, side, left: Some(profile), right: None },
        Block::Right => JostSolution { k, side, left: None, right: Some(profile) },
    })
}
