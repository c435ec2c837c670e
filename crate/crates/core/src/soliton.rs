//! Reflectionless (pure soliton) solutions and the space-time cone filter.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpatialGrid, SpinorField};
use crate::linalg::{det2, singular_values, Mat2, C64, I};

/// Largest `|Re 2i theta|` at which the dense determinant is still reported.
const FAR: f64 = 45.0;
/// Largest admissible log-modulus of `exp(2 i theta)` kept in the dense system.
const OVERFLOW: f64 = 340.0;

/// A discrete eigenvalue in the upper half plane with its symmetric norming constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub k: C64,
    pub f: Mat2,
}

/// Discrete scattering data `{(k_j, f_j)}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolitonData {
    pub poles: Vec<Pole>,
}

impl SolitonData {
    pub fn new(poles: Vec<Pole>) -> Result<Self> {
        for (j, p) in poles.iter().enumerate() {
            if !(p.k.im > 0.0) || !p.k.is_finite() {
                return Err(Error::InvalidInput(format!("pole {j} at {} is not in the upper half plane", p.k)));
            }
            let scale = p.f.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
            if (p.f[(0, 1)] - p.f[(1, 0)]).norm() > 1e-12 * scale {
                return Err(Error::InvalidInput(format!("norming constant {j} is not symmetric")));
            }
            for q in &poles[..j] {
                if (q.k - p.k).norm() < 1e-12 {
                    return Err(Error::PoleCollision(format!("{}", p.k)));
                }
            }
        }
        Ok(Self { poles })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }
}

/// `Prod_j (k - k_j) / (k - conj(k_j))`.
pub fn blaschke(poles: &[C64], k: C64) -> Result<C64> {
    let mut out = C64::new(1.0, 0.0);
    for &kj in poles {
        let den = k - kj.conj();
        if den.norm() < 1e-14 * (1.0 + kj.norm()) {
            return Err(Error::PoleCollision(format!("{kj}")));
        }
        out *= (k - kj) / den;
    }
    Ok(out)
}

/// `2 i (k x + 2 k^2 t)`, the exponent of `exp(2 i t theta(k))`.
pub fn phase_exponent(k: C64, x: f64, t: f64) -> C64 {
    I * 2.0 * (k * x + k * k * 2.0 * t)
}

/// The matrices `A` (2N x 2N) and `H` (2N x 2) of the reflectionless system.
///
/// `A_jl = -i h_j^dagger / (conj(k_j) - k_l)` and `H = -2i (h_1, ..., h_N)^dagger`
/// with `h_j = exp(2 i theta(k_j)) f_j`.
pub fn build_system(data: &SolitonData, x: f64, t: f64) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let hs = weights(data, x, t)?;
    Ok(system_from_weights(&data.poles, &hs))
}

fn weights(data: &SolitonData, x: f64, t: f64) -> Result<Vec<Mat2>> {
    data.poles
        .iter()
        .map(|p| {
            let e = phase_exponent(p.k, x, t);
            if e.re.abs() > OVERFLOW {
                return Err(Error::Overflow(e.re));
            }
            Ok(p.f * e.exp())
        })
        .collect()
}

fn system_from_weights(poles: &[Pole], hs: &[Mat2]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = poles.len();
    let mut a = DMatrix::<C64>::zeros(2 * n, 2 * n);
    let mut h = DMatrix::<C64>::zeros(2 * n, 2);
    for j in 0..n {
        let hj_dag = hs[j].adjoint();
        for l in 0..n {
            let coef = -I / (poles[j].k.conj() - poles[l].k);
            a.view_mut((2 * j, 2 * l), (2, 2)).copy_from(&(hj_dag * coef));
        }
        h.view_mut((2 * j, 0), (2, 2)).copy_from(&(hj_dag * (-2.0 * I)));
    }
    (a, h)
}

/// Value of the reflectionless potential at one point.
#[derive(Debug, Clone, Copy)]
pub struct SolitonValue {
    pub q: Mat2,
    /// `det(I + A conj(A))` of the dense system, when its weights are representable.
    pub det: Option<C64>,
    /// 1-norm condition estimate of the solved system.
    pub condition: f64,
    pub ill_conditioned: bool,
    /// `|q_12 - q_21|` before symmetrisation.
    pub asymmetry: f64,
}

/// Reflectionless data recast as kernel vectors of the analytic Riemann-Hilbert matrix.
///
/// Each pole contributes one kernel vector per unit of rank of `f_j`, written as
/// `n(x, t) = diag(exp(-i theta) I, exp(i theta) I) (c, d)` with `theta = k x + 2 k^2 t`.
/// The potential is `q = -2i U M^{-1} D^dagger` where `U`, `D` hold the upper and
/// lower halves of the vectors and `M_jl = n_j^dagger n_l / (k_l - conj k_j)`.
/// Every vector may be rescaled freely, so no weight ever overflows.
#[derive(Debug, Clone)]
pub struct Dressing {
    ks: Vec<C64>,
    cs: Vec<[C64; 2]>,
    ds: Vec<[C64; 2]>,
}

fn mat_vec(m: &Mat2, v: &[C64; 2]) -> [C64; 2] {
    [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
}

/// `I - P + P (k - kp) / (k - conj kp)`.
fn potapov(p: &Mat2, kp: C64, k: C64) -> Mat2 {
    Mat2::identity() + p * ((k - kp) / (k - kp.conj()) - 1.0)
}

impl Dressing {
    pub fn new(data: &SolitonData) -> Result<Self> {
        let n = data.len();
        // Projectors of the Blaschke-Potapov product a(k) = b_1(k) ... b_N(k).
        let mut projectors: Vec<Mat2> = Vec::with_capacity(n);
        for (p, pole) in data.poles.iter().enumerate() {
            if is_full_rank(&pole.f) {
                projectors.push(Mat2::identity());
                continue;
            }
            let row = if pole.f.row(0).norm() >= pole.f.row(1).norm() { 0 } else { 1 };
            let mut v = Mat2::zeros();
            v[(0, 0)] = pole.f[(row, 0)];
            v[(0, 1)] = pole.f[(row, 1)];
            for q in 0..p {
                v = v * potapov(&projectors[q], data.poles[q].k, pole.k);
            }
            let norm = (v[(0, 0)].norm_sqr() + v[(0, 1)].norm_sqr()).sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!("norming constant at {} vanishes", pole.k)));
            }
            let u = [v[(0, 0)].conj() / norm, v[(0, 1)].conj() / norm];
            let mut proj = Mat2::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    proj[(a, b)] = u[a] * u[b].conj();
                }
            }
            projectors.push(proj);
        }
        let mut out = Self { ks: Vec::new(), cs: Vec::new(), ds: Vec::new() };
        for (p, pole) in data.poles.iter().enumerate() {
            let kp = pole.k;
            // a'(k_p) by the product rule.
            let mut deriv = Mat2::zeros();
            for q in 0..n {
                let mut term = Mat2::identity();
                for (r, proj) in projectors.iter().enumerate() {
                    let kr = data.poles[r].k;
                    let factor = if r == q {
                        proj * ((kr - kr.conj()) / ((kp - kr.conj()) * (kp - kr.conj())))
                    } else {
                        potapov(proj, kr, kp)
                    };
                    term *= factor;
                }
                deriv += term;
            }
            let kernel: Vec<[C64; 2]> = if is_full_rank(&pole.f) {
                vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]
            } else {
                let mut right = Mat2::identity();
                for r in p + 1..n {
                    right *= potapov(&projectors[r], data.poles[r].k, kp);
                }
                let inv = right.try_inverse().ok_or(Error::PoleCollision(format!("{kp}")))?;
                let proj = &projectors[p];
                let u = if proj.column(0).norm() >= proj.column(1).norm() { [proj[(0, 0)], proj[(1, 0)]] } else { [proj[(0, 1)], proj[(1, 1)]] };
                vec![mat_vec(&inv, &u)]
            };
            for c in kernel {
                let d = mat_vec(&(-pole.f * deriv), &c);
                out.ks.push(kp);
                out.cs.push(c);
                out.ds.push(d);
            }
        }
        Ok(out)
    }

    /// Number of kernel vectors, i.e. the summed rank of the norming constants.
    pub fn rank(&self) -> usize {
        self.ks.len()
    }

    pub fn evaluate(&self, x: f64, t: f64) -> Result<(Mat2, f64)> {
        let r = self.rank();
        if r == 0 {
            return Ok((Mat2::zeros(), 1.0));
        }
        let mut up = Vec::with_capacity(r);
        let mut down = Vec::with_capacity(r);
        for j in 0..r {
            let e = I * (self.ks[j] * x + self.ks[j] * self.ks[j] * 2.0 * t);
            let nc = (self.cs[j][0].norm_sqr() + self.cs[j][1].norm_sqr()).sqrt();
            let nd = (self.ds[j][0].norm_sqr() + self.ds[j][1].norm_sqr()).sqrt();
            let lc = -e.re + nc.ln();
            let ld = e.re + nd.ln();
            let shift = lc.max(ld);
            let fu = (-e - shift).exp();
            let fd = (e - shift).exp();
            up.push([self.cs[j][0] * fu, self.cs[j][1] * fu]);
            down.push([self.ds[j][0] * fd, self.ds[j][1] * fd]);
        }
        let mut gram = DMatrix::<C64>::zeros(r, r);
        for j in 0..r {
            for l in 0..r {
                let inner = up[j][0].conj() * up[l][0]
                    + up[j][1].conj() * up[l][1]
                    + down[j][0].conj() * down[l][0]
                    + down[j][1].conj() * down[l][1];
                gram[(j, l)] = inner / (self.ks[l] - self.ks[j].conj());
            }
        }
        let mut rhs = DMatrix::<C64>::zeros(r, 2);
        for l in 0..r {
            rhs[(l, 0)] = down[l][0].conj();
            rhs[(l, 1)] = down[l][1].conj();
        }
        let lu = gram.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::SingularSystem)?;
        let condition = norm1(&gram) * norm1(&inv);
        let z = inv * rhs;
        let mut q = Mat2::zeros();
        for j in 0..r {
            for a in 0..2 {
                for b in 0..2 {
                    q[(a, b)] += up[j][a] * z[(j, b)];
                }
            }
        }
        q *= -2.0 * I;
        if !q.iter().all(|z| z.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok((q, condition))
    }
}

/// Evaluates the reflectionless potential at `(x, t)`.
pub fn solve_soliton(data: &SolitonData, x: f64, t: f64) -> Result<SolitonValue> {
    if data.len() > 32 {
        return Err(Error::InvalidInput(format!("at most 32 poles supported, got {}", data.len())));
    }
    evaluate_with(&Dressing::new(data)?, data, x, t)
}

fn evaluate_with(dressing: &Dressing, data: &SolitonData, x: f64, t: f64) -> Result<SolitonValue> {
    let (mut q, condition) = dressing.evaluate(x, t)?;
    let representable = data.poles.iter().all(|p| phase_exponent(p.k, x, t).re.abs() <= FAR);
    let det = if representable { Some(system_determinant(data, x, t)?) } else { None };
    let asymmetry = (q[(0, 1)] - q[(1, 0)]).norm();
    let off = (q[(0, 1)] + q[(1, 0)]) * 0.5;
    q[(0, 1)] = off;
    q[(1, 0)] = off;
    Ok(SolitonValue { q, det, condition, ill_conditioned: condition > 1e12, asymmetry })
}

/// Evaluates `alpha (I + A conj(A))^{-1} H` directly from the block system.
pub fn solve_block_system(data: &SolitonData, x: f64, t: f64) -> Result<Mat2> {
    let (a, h) = build_system(data, x, t)?;
    let n2 = a.nrows();
    let m = DMatrix::<C64>::identity(n2, n2) + &a * a.map(|z| z.conj());
    let sol = m.lu().solve(&h).ok_or(Error::SingularSystem)?;
    let mut q = Mat2::zeros();
    for j in 0..data.len() {
        q += sol.fixed_view::<2, 2>(2 * j, 0);
    }
    Ok(q)
}

fn norm1(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Samples the reflectionless potential on a grid at time `t`.
pub fn soliton_field(data: &SolitonData, grid: &SpatialGrid, t: f64) -> Result<SpinorField> {
    let n = grid.n_points();
    let (mut q1, mut q0, mut qm1) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let dressing = Dressing::new(data)?;
    for x in grid.nodes() {
        let q = dressing.evaluate(x, t)?.0;
        q1.push(q[(0, 0)]);
        q0.push(q[(0, 1)]);
        qm1.push(q[(1, 1)]);
    }
    SpinorField::from_parts(*grid, q1, q0, qm1)
}

/// `det(I + A conj(A))` straight from the dense system, without any pole reduction.
pub fn system_determinant(data: &SolitonData, x: f64, t: f64) -> Result<C64> {
    let (a, _) = build_system(data, x, t)?;
    let n2 = a.nrows();
    let m = DMatrix::<C64>::identity(n2, n2) + &a * a.map(|z| z.conj());
    Ok(m.determinant())
}

/// Space-time cone `x = x0 + v t` with `x0 in [x1, x2]`, `v in [v1, v2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl ConeSpec {
    pub fn new(x1: f64, x2: f64, v1: f64, v2: f64) -> Result<Self> {
        if !(x1 <= x2) || !(v1 < v2) {
            return Err(Error::InvalidInput(format!(
                "cone needs x1 <= x2 and v1 < v2 (got [{x1}, {x2}], [{v1}, {v2}])"
            )));
        }
        Ok(Self { x1, x2, v1, v2 })
    }

    /// The spectral interval `[-v2/4, -v1/4]`.
    pub fn interval(&self) -> (f64, f64) {
        (-self.v2 / 4.0, -self.v1 / 4.0)
    }

    /// Spatial extent of the cone at time `t`.
    pub fn x_range(&self, t: f64) -> (f64, f64) {
        let a = [self.x1 + self.v1 * t, self.x1 + self.v2 * t, self.x2 + self.v1 * t, self.x2 + self.v2 * t];
        let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        let (lo, hi) = self.x_range(t);
        x >= lo && x <= hi
    }
}

/// Classification of the poles relative to a cone.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDecomposition {
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
    /// Poles to the left of the interval.
    pub delta_minus: Vec<usize>,
    /// Poles to the right of the interval.
    pub delta_plus: Vec<usize>,
    /// `min over outside poles of Im k_j * dist(Re k_j, I)`; infinite if none.
    pub mu_rate: f64,
}

pub fn decompose(data: &SolitonData, cone: &ConeSpec) -> ConeDecomposition {
    let (lo, hi) = cone.interval();
    let mut d = ConeDecomposition {
        inside: vec![],
        outside: vec![],
        delta_minus: vec![],
        delta_plus: vec![],
        mu_rate: f64::INFINITY,
    };
    for (j, p) in data.poles.iter().enumerate() {
        let re = p.k.re;
        if re < lo {
            d.delta_minus.push(j);
        } else if re > hi {
            d.delta_plus.push(j);
        } else {
            d.inside.push(j);
            continue;
        }
        d.outside.push(j);
        let dist = if re < lo { lo - re } else { re - hi };
        d.mu_rate = d.mu_rate.min(p.k.im * dist);
    }
    d
}

/// Keeps the poles inside the cone, each norming constant scaled by the squared
/// Blaschke factor of the poles to the left of the cone.
pub fn cone_filter(data: &SolitonData, cone: &ConeSpec) -> Result<(SolitonData, ConeDecomposition)> {
    let d = decompose(data, cone);
    let left: Vec<C64> = d.delta_minus.iter().map(|&j| data.poles[j].k).collect();
    let mut poles = Vec::with_capacity(d.inside.len());
    for &j in &d.inside {
        let p = data.poles[j];
        let b = blaschke(&left, p.k)?;
        poles.push(Pole { k: p.k, f: p.f * (b * b) });
    }
    Ok((SolitonData { poles }, d))
}

/// Rank-one symmetric norming constant `c u u^T`.
pub fn rank_one(c: C64, u: [C64; 2]) -> Mat2 {
    Mat2::new(u[0] * u[0], u[0] * u[1], u[1] * u[0], u[1] * u[1]) * c
}

/// Whether the norming constant is numerically invertible.
pub fn is_full_rank(f: &Mat2) -> bool {
    let (lo, hi) = singular_values(f);
    hi > 0.0 && lo > 1e-6 * hi && det2(f).norm() > 0.0
}
