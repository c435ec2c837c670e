//! Long-time dispersive term: `nu`, `chi`, `delta^0`, the amplitude `g`, and the
//! soliton-plus-radiation prediction.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det2, frob, mat2, Mat2, C64, I};
use crate::pcf::gamma_complex;
use crate::scattering::ScatteringData;
use crate::soliton::{solve_soliton, SolitonData};

/// `|gamma|` below which the reflection counts as zero.
pub const ZERO_REFLECTION: f64 = 1e-12;
/// `|det gamma|` at or below which a nonzero reflection is degenerate.
pub const DEGENERATE_DET: f64 = 1e-8;
/// Largest `|gamma|` tolerated at the ends of the sampled window.
pub const EDGE_TOL: f64 = 1e-4;

/// Reflection coefficient sampled on an increasing real grid.
///
/// Between nodes `gamma` is a cubic Hermite interpolant; outside the window it
/// is taken to vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSamples {
    pub k: Vec<f64>,
    pub gamma: Vec<Mat2>,
}

impl ReflectionSamples {
    pub fn new(k: Vec<f64>, gamma: Vec<Mat2>) -> Result<Self> {
        if k.len() != gamma.len() || k.len() < 4 {
            return Err(Error::InvalidInput("need at least 4 reflection samples of matching length".into()));
        }
        if k.windows(2).any(|w| !(w[1] > w[0])) || k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("reflection grid must be finite and increasing".into()));
        }
        if gamma.iter().any(|g| !g.iter().all(|z| z.is_finite())) {
            return Err(Error::InvalidInput("non-finite reflection sample".into()));
        }
        Ok(Self { k, gamma })
    }

    pub fn from_scattering(data: &[ScatteringData]) -> Result<Self> {
        Self::new(data.iter().map(|d| d.k).collect(), data.iter().map(|d| d.gamma).collect())
    }

    /// Samples an analytic reflection coefficient on `n` uniform points of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> Mat2) -> Result<Self> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        let k: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        let gamma = k.iter().map(|&v| f(v)).collect();
        Self::new(k, gamma)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.k[0], self.k[self.k.len() - 1])
    }

    /// Largest `|gamma|` (Frobenius) over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.gamma.iter().map(frob).fold(0.0, f64::max)
    }

    fn slope(&self, i: usize) -> Mat2 {
        let n = self.k.len();
        let (l, r) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        (self.gamma[r] - self.gamma[l]) / C64::new(self.k[r] - self.k[l], 0.0)
    }

    pub fn gamma_at(&self, k: f64) -> Mat2 {
        let (lo, hi) = self.range();
        if !(k >= lo && k <= hi) {
            return Mat2::zeros();
        }
        let i = match self.k.partition_point(|&v| v <= k) {
            0 => 0,
            p => (p - 1).min(self.k.len() - 2),
        };
        let h = self.k[i + 1] - self.k[i];
        let s = (k - self.k[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let re = |v: f64| C64::new(v, 0.0);
        self.gamma[i] * re(h00)
            + self.slope(i) * re(h10 * h)
            + self.gamma[i + 1] * re(h01)
            + self.slope(i + 1) * re(h11 * h)
    }

    /// `log(1 + |gamma|^2 + |det gamma|^2)` at `k`.
    pub fn log_weight(&self, k: f64) -> f64 {
        log_weight(&self.gamma_at(k))
    }

    /// Fails when the window is not wide enough for the tail to be dropped.
    pub fn check_edges(&self, need_right: bool) -> Result<()> {
        let left = frob(&self.gamma[0]);
        if left > EDGE_TOL {
            return Err(Error::ReflectionTail(left));
        }
        let right = frob(&self.gamma[self.gamma.len() - 1]);
        if need_right && right > EDGE_TOL {
            return Err(Error::ReflectionTail(right));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "k", "re_g11", "im_g11", "re_g12", "im_g12", "re_g21", "im_g21", "re_g22", "im_g22",
        ])?;
        for (k, g) in self.k.iter().zip(&self.gamma) {
            let mut row = vec![format!("{k:.17e}")];
            for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                row.push(format!("{:.17e}", g[(r, c)].re));
                row.push(format!("{:.17e}", g[(r, c)].im));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let (mut ks, mut gs) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 9 {
                return Err(Error::InvalidInput(format!("expected 9 columns, got {}", v.len())));
            }
            ks.push(v[0]);
            gs.push(mat2(C64::new(v[1], v[2]), C64::new(v[3], v[4]), C64::new(v[5], v[6]), C64::new(v[7], v[8])));
        }
        Self::new(ks, gs)
    }
}

/// `log(1 + |gamma|^2 + |det gamma|^2)` with `|gamma|^2 = tr(gamma^dagger gamma)`.
pub fn log_weight(gamma: &Mat2) -> f64 {
    let n2 = gamma.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (n2 + det2(gamma).norm_sqr()).ln_1p()
}

/// `nu = -log(1 + |gamma|^2 + |det gamma|^2) / (2 pi)`.
pub fn compute_nu(gamma_k0: &Mat2) -> f64 {
    -log_weight(gamma_k0) / (2.0 * PI)
}

/// `chi(k0)` with the accumulated quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiEstimate {
    pub chi: C64,
    pub error: f64,
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];
const GL3: [(f64, f64); 3] = [(0.0, 8.0 / 9.0), (-0.774_596_669_241_483_4, 5.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];
const MAX_CELL: f64 = 0.05;

/// Composite Gauss-Legendre quadrature over cells bounded by `breaks` (sorted,
/// inside `[a, b]`), with cells wider than `MAX_CELL` subdivided. Returns
/// `(value, error estimate)`; the estimate is the 5-point vs 3-point difference.
pub fn cell_quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> (f64, f64) {
    if !(b > a) {
        return (0.0, 0.0);
    }
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&v| v > a && v < b));
    pts.push(b);
    let (mut total, mut err) = (0.0, 0.0);
    for w in pts.windows(2) {
        let pieces = ((w[1] - w[0]) / MAX_CELL).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / pieces as f64;
        for p in 0..pieces {
            let mid = w[0] + h * (p as f64 + 0.5);
            let half = 0.5 * h;
            let fine: f64 = GL5.iter().map(|(x, wt)| wt * f(mid + half * x)).sum::<f64>() * half;
            let coarse: f64 = GL3.iter().map(|(x, wt)| wt * f(mid + half * x)).sum::<f64>() * half;
            total += fine;
            err += (fine - coarse).abs();
        }
    }
    (total, err)
}

/// `chi(k0) = (1 / 2 pi i) [ int_{k0-1}^{k0} log(L(s)/L(k0)) ds/(s-k0) + int_{-inf}^{k0-1} log L(s) ds/(s-k0) ]`.
pub fn compute_chi(samples: &ReflectionSamples, k0: f64) -> Result<ChiEstimate> {
    let (lo, hi) = samples.range();
    samples.check_edges(k0 > hi)?;
    let w0 = samples.log_weight(k0);
    let near = |s: f64| (samples.log_weight(s) - w0) / (s - k0);
    let (i1, e1) = cell_quadrature(near, k0 - 1.0, k0, &samples.k);
    let (i2, e2) = cell_quadrature(|s| samples.log_weight(s) / (s - k0), lo, k0 - 1.0, &samples.k);
    Ok(ChiEstimate { chi: C64::new(i1 + i2, 0.0) / (2.0 * PI * I), error: (e1 + e2) / (2.0 * PI) })
}

/// `delta^0 = exp(2 i t k0^2) (8t)^{-i nu / 2} exp(chi)` with the principal logarithm.
pub fn compute_delta0(t: f64, k0: f64, nu: f64, chi: C64) -> Result<C64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    Ok((I * 2.0 * t * k0 * k0 - I * (nu / 2.0) * (8.0 * t).ln() + chi).exp())
}

/// Phase data of the local model at `k0 = -x / (4t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticParams {
    pub k0: f64,
    pub t: f64,
    pub nu: f64,
    pub chi: C64,
    pub delta0: C64,
    pub gamma_at_k0: Mat2,
    /// `prod_{Re k_j < k0} (k0 - conj k_j)/(k0 - k_j) exp(chi)`; diagnostic only.
    pub t0: C64,
}

pub fn asymptotic_params(samples: &ReflectionSamples, poles: &[C64], x: f64, t: f64) -> Result<AsymptoticParams> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let k0 = -x / (4.0 * t);
    let gamma_at_k0 = samples.gamma_at(k0);
    let nu = compute_nu(&gamma_at_k0);
    let chi = compute_chi(samples, k0)?.chi;
    let delta0 = compute_delta0(t, k0, nu, chi)?;
    let mut t0 = chi.exp();
    for &kj in poles.iter().filter(|kj| kj.re < k0) {
        t0 *= (k0 - kj.conj()) / (k0 - kj);
    }
    Ok(AsymptoticParams { k0, t, nu, chi, delta0, gamma_at_k0, t0 })
}

/// The `t^{-1/2}` amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingTerm {
    pub g: Mat2,
}

fn cofactor(gamma: &Mat2) -> Mat2 {
    mat2(-gamma[(1, 1)], gamma[(0, 1)], gamma[(1, 0)], -gamma[(0, 0)])
}

fn check_reflection(gamma: &Mat2) -> Result<bool> {
    if frob(gamma) < ZERO_REFLECTION {
        return Ok(false);
    }
    let det = det2(gamma).norm();
    if det <= DEGENERATE_DET {
        return Err(Error::DegenerateReflection(det));
    }
    Ok(true)
}

/// `sqrt(pi) (delta^0)^2 exp(-pi nu / 2) exp(-3 pi i / 4) / (Gamma(-i nu) det(-gamma))`.
fn prefactor(gamma: &Mat2, nu: f64, delta0: C64) -> Result<C64> {
    let gamma_fn = gamma_complex(C64::new(0.0, -nu))?;
    Ok(PI.sqrt() * delta0 * delta0 * (-PI * nu / 2.0).exp() * (-I * 3.0 * PI / 4.0).exp()
        / (gamma_fn * det2(&(-gamma))))
}

/// `g = prefactor * [[-gamma_22, gamma_12], [gamma_21, -gamma_11]]`; zero when `gamma(k0) = 0`.
pub fn leading_term_g(params: &AsymptoticParams) -> Result<LeadingTerm> {
    let gamma = params.gamma_at_k0;
    if !check_reflection(&gamma)? {
        return Ok(LeadingTerm { g: Mat2::zeros() });
    }
    let pre = prefactor(&gamma, params.nu, params.delta0)?;
    Ok(LeadingTerm { g: cofactor(&gamma) * pre })
}

/// The amplitude assembled through `beta_12` and `(M_1^0)_12`, compared with `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beta12Check {
    pub g: Mat2,
    pub g_alt: Mat2,
    /// `|g_alt - g| / |g|`.
    pub discrepancy: f64,
    /// `| |g_alt| - |g| | / |g|`.
    pub modulus_discrepancy: f64,
}

pub fn beta12_crosscheck(gamma_k0: &Mat2, nu: f64, delta0: C64) -> Result<Beta12Check> {
    if !check_reflection(gamma_k0)? {
        return Ok(Beta12Check { g: Mat2::zeros(), g_alt: Mat2::zeros(), discrepancy: 0.0, modulus_discrepancy: 0.0 });
    }
    let g = cofactor(gamma_k0) * prefactor(gamma_k0, nu, delta0)?;
    let gm = gamma_k0;
    let shape = mat2(-gm[(1, 1)], gm[(1, 0)].conj(), gm[(0, 1)].conj(), -gm[(0, 0)].conj());
    let gamma_shifted = gamma_complex(C64::new(1.0, -nu))?;
    let beta = shape * (nu * (2.0 * PI).sqrt() * (-PI * nu / 2.0).exp() * (I * 3.0 * PI / 4.0).exp()
        / (gamma_shifted * det2(&(-gm))));
    let m1 = beta * (-I * delta0 * delta0);
    let g_alt = m1 * (I / SQRT_2);
    let norm = frob(&g);
    Ok(Beta12Check {
        g,
        g_alt,
        discrepancy: frob(&(g_alt - g)) / norm,
        modulus_discrepancy: (frob(&g_alt) - norm).abs() / norm,
    })
}

/// `q_sol(x, t; modulated data) + t^{-1/2} g(x, t)`.
pub fn predict(x: f64, t: f64, solitons: &SolitonData, samples: &ReflectionSamples) -> Result<Mat2> {
    let poles: Vec<C64> = solitons.poles.iter().map(|p| p.k).collect();
    let params = asymptotic_params(samples, &poles, x, t)?;
    let g = leading_term_g(&params)?.g;
    let q = if solitons.is_empty() { Mat2::zeros() } else { solve_soliton(solitons, x, t)?.q };
    if g == Mat2::zeros() {
        return Ok(q);
    }
    Ok(q + g / C64::new(t.sqrt(), 0.0))
}
