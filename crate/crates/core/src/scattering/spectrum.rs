//! Zeros of `det a(k)` in the upper half plane and their norming constants.

use crate::error::{Error, Result};
use crate::field::MatrixPotential;
use crate::linalg::{frob, inv2, Mat2, Mat4x2, C64, I};

use super::{Block, Scatterer, Side};

/// Axis-aligned rectangle in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { re_min: -4.0, re_max: 4.0, im_min: 1e-3, im_max: 4.0 }
    }
}

impl SearchBox {
    fn center(&self) -> C64 {
        C64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn contains(&self, k: C64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    fn split(&self, ratio: f64) -> [SearchBox; 4] {
        let xm = self.re_min + ratio * (self.re_max - self.re_min);
        let ym = self.im_min + (1.0 - ratio) * (self.im_max - self.im_min);
        [
            SearchBox { re_max: xm, im_max: ym, ..*self },
            SearchBox { re_min: xm, im_max: ym, ..*self },
            SearchBox { re_max: xm, im_min: ym, ..*self },
            SearchBox { re_min: xm, im_min: ym, ..*self },
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub search: SearchBox,
    pub max_levels: usize,
    pub newton_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { search: SearchBox::default(), max_levels: 12, newton_tol: 1e-10 }
    }
}

/// Zeros closer than this are a roundoff-split multiple zero.
const CLUSTER_TOL: f64 = 1e-3;

struct Ambiguous;

struct Finder<'a> {
    sc: &'a Scatterer,
    opts: SpectrumOptions,
}

impl Finder<'_> {
    fn eval(&self, k: C64) -> Result<C64> {
        self.sc.det_a(k)
    }

    /// Phase increment along a segment, refined until each piece turns by less than pi/4.
    fn segment(&self, za: C64, fa: C64, zb: C64, fb: C64, depth: usize) -> Result<std::result::Result<f64, Ambiguous>> {
        let d = (fb / fa).arg();
        if d.abs() < std::f64::consts::FRAC_PI_4 && depth > 0 {
            return Ok(Ok(d));
        }
        if depth >= 14 {
            return Ok(Err(Ambiguous));
        }
        let zm = 0.5 * (za + zb);
        let fm = self.eval(zm)?;
        if fm.norm() < 1e-9 {
            return Ok(Err(Ambiguous));
        }
        let left = match self.segment(za, fa, zm, fm, depth + 1)? {
            Ok(v) => v,
            Err(a) => return Ok(Err(a)),
        };
        let right = match self.segment(zm, fm, zb, fb, depth + 1)? {
            Ok(v) => v,
            Err(a) => return Ok(Err(a)),
        };
        Ok(Ok(left + right))
    }

    fn winding(&self, b: &SearchBox) -> Result<std::result::Result<i64, Ambiguous>> {
        let corners = [
            C64::new(b.re_min, b.im_min),
            C64::new(b.re_max, b.im_min),
            C64::new(b.re_max, b.im_max),
            C64::new(b.re_min, b.im_max),
        ];
        let mut total = 0.0;
        for e in 0..4 {
            let (za, zb) = (corners[e], corners[(e + 1) % 4]);
            let pieces = 8;
            let mut z_prev = za;
            let mut f_prev = self.eval(za)?;
            if f_prev.norm() < 1e-9 {
                return Ok(Err(Ambiguous));
            }
            for p in 1..=pieces {
                let z = za + (zb - za) * (p as f64 / pieces as f64);
                let f = self.eval(z)?;
                if f.norm() < 1e-9 {
                    return Ok(Err(Ambiguous));
                }
                match self.segment(z_prev, f_prev, z, f, 1)? {
                    Ok(d) => total += d,
                    Err(a) => return Ok(Err(a)),
                }
                z_prev = z;
                f_prev = f;
            }
        }
        let w = total / (2.0 * std::f64::consts::PI);
        if (w - w.round()).abs() > 0.05 {
            return Ok(Err(Ambiguous));
        }
        Ok(Ok(w.round() as i64))
    }

    fn newton(&self, start: C64) -> Result<Option<C64>> {
        let h = 1e-6;
        let mut k = start;
        for _ in 0..60 {
            let f = self.eval(k)?;
            if f.norm() < self.opts.newton_tol {
                return Ok(Some(k));
            }
            let df = (self.eval(k + h)? - self.eval(k - h)?) / (2.0 * h);
            if df.norm() == 0.0 || !df.is_finite() {
                return Ok(None);
            }
            let mut step = f / df;
            if step.norm() > 0.5 {
                step *= 0.5 / step.norm();
            }
            k -= step;
            if k.im <= 0.0 || !k.is_finite() {
                return Ok(None);
            }
        }
        Ok(None)
    }

    fn search(&self, b: SearchBox, w: i64, level: usize, out: &mut Vec<C64>) -> Result<()> {
        if w == 0 {
            return Ok(());
        }
        if w < 0 {
            return Err(Error::AmbiguousWinding(level));
        }
        if w == 1 {
            if let Some(k) = self.newton(b.center())? {
                if b.contains(k) {
                    out.push(k);
                    return Ok(());
                }
            }
        }
        if level >= self.opts.max_levels {
            return Err(if w > 1 {
                Error::NonSimpleZero(format!("{}", b.center()))
            } else {
                Error::AmbiguousWinding(level)
            });
        }
        for ratio in [0.5, 0.46, 0.54, 0.42, 0.58, 0.37] {
            let children = b.split(ratio);
            let mut ws = [0i64; 4];
            let mut ok = true;
            for (c, slot) in children.iter().zip(ws.iter_mut()) {
                match self.winding(c)? {
                    Ok(v) => *slot = v,
                    Err(Ambiguous) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && ws.iter().sum::<i64>() == w {
                for (c, cw) in children.iter().zip(ws) {
                    self.search(*c, cw, level + 1, out)?;
                }
                return Ok(());
            }
        }
        Err(Error::AmbiguousWinding(level))
    }
}

/// Locates the zeros of `det a` inside the search box by the argument principle
/// followed by Newton refinement; each zero must be simple.
pub fn find_discrete_spectrum(potential: &MatrixPotential, opts: &SpectrumOptions) -> Result<Vec<C64>> {
    let sc = Scatterer::new(potential);
    find_with(&sc, opts)
}

pub(crate) fn find_with(sc: &Scatterer, opts: &SpectrumOptions) -> Result<Vec<C64>> {
    if !(opts.search.im_min > 0.0) || opts.search.re_min >= opts.search.re_max || opts.search.im_min >= opts.search.im_max {
        return Err(Error::InvalidInput("search box must be a non-empty rectangle in Im k > 0".into()));
    }
    let finder = Finder { sc, opts: *opts };
    let mut b = opts.search;
    let mut w = None;
    for nudge in 0..6 {
        match finder.winding(&b)? {
            Ok(v) => {
                w = Some(v);
                break;
            }
            Err(Ambiguous) => {
                let s = 1e-3 * (nudge + 1) as f64;
                b = SearchBox { re_min: b.re_min - s, re_max: b.re_max + s, im_min: b.im_min, im_max: b.im_max + s };
            }
        }
    }
    let w = w.ok_or(Error::AmbiguousWinding(0))?;
    let mut out = Vec::new();
    finder.search(b, w, 0, &mut out)?;
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for (i, a) in out.iter().enumerate() {
        if let Some(b) = out[i + 1..].iter().find(|b| (*b - a).norm() < CLUSTER_TOL) {
            return Err(Error::NonSimpleZero(format!("zeros {a} and {b} coalesce")));
        }
    }
    Ok(out)
}

/// `Res mu_-L a^{-1}` at a simple zero of `det a`, via `adj a / (det a)'`, at node `node`.
pub fn residue_by_derivative(sc: &Scatterer, k: C64, node: usize) -> Result<Mat4x2> {
    let h = 1e-5;
    let d = |h: f64| -> Result<C64> { Ok((sc.det_a(k + h)? - sc.det_a(k - h)?) / (2.0 * h)) };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    let deriv = (d2 * 4.0 - d1) / 3.0;
    let a = sc.a_matrix(k)?;
    let adj = Mat2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]);
    let mu = sc.solver().block_at(k, Block::Left, Side::Minus, node);
    Ok(mu * adj / deriv)
}

/// Norming constants `f_j` from `Res_{k_j} mu_-L a^{-1} = e^{2 i k_j x} mu_+R(x; k_j) f_j`.
///
/// The residue is a trapezoid contour integral on a small circle, and `f_j` is a
/// least-squares fit over grid nodes near the origin.
pub fn norming_constants(potential: &MatrixPotential, poles: &[C64]) -> Result<Vec<Mat2>> {
    let sc = Scatterer::new(potential);
    norming_with(&sc, poles)
}

pub(crate) fn norming_with(sc: &Scatterer, poles: &[C64]) -> Result<Vec<Mat2>> {
    let grid = *sc.solver().grid();
    let mut out = Vec::with_capacity(poles.len());
    for (j, &kj) in poles.iter().enumerate() {
        let fail = |reason: String| Error::NormingFit { k: format!("{kj}"), reason };
        if !(kj.im > 0.0) {
            return Err(fail("pole not in the upper half plane".into()));
        }
        sc.solver().check_depth(kj)?;
        let d0 = sc.det_a(kj)?;
        if d0.norm() > 1e-6 {
            return Err(fail(format!("|det a(k)| = {:.3e}; not a zero", d0.norm())));
        }
        let sep = poles
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != j)
            .map(|(_, kl)| (kl - kj).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.5 * kj.im).min(0.3 * sep).min(0.25);

        let half = (3.0 / kj.im).min(0.25 * grid.length());
        let lo = grid.nearest(-half);
        let hi = grid.nearest(half);
        let count = 32usize;
        let nodes: Vec<usize> = (0..count)
            .map(|i| lo + (hi - lo) * i / (count - 1))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if nodes.len() < 16 {
            return Err(fail("fewer than 16 fit nodes in the window".into()));
        }
        let max_node = *nodes.last().expect("non-empty");
        let min_node = nodes[0];

        let n_circle = 64;
        let mut residue = vec![Mat4x2::zeros(); nodes.len()];
        for p in 0..n_circle {
            let phase = C64::from_polar(radius, 2.0 * std::f64::consts::PI * p as f64 / n_circle as f64);
            let z = kj + phase;
            let a = sc.a_matrix(z)?;
            let ainv = inv2(&a).ok_or_else(|| fail("a(k) singular on the contour".into()))?;
            let weight = phase / n_circle as f64;
            let mut slot = 0;
            sc.solver().march(z, Block::Left, Side::Minus, max_node, |m, y| {
                if slot < nodes.len() && nodes[slot] == m {
                    residue[slot] += y * ainv * weight;
                    slot += 1;
                }
            });
        }

        let mut plus = vec![Mat4x2::zeros(); nodes.len()];
        {
            let mut slot = nodes.len();
            sc.solver().march(kj, Block::Right, Side::Plus, min_node, |m, y| {
                if slot > 0 && nodes[slot - 1] == m {
                    slot -= 1;
                    plus[slot] = *y;
                }
            });
        }

        let mut gram = Mat2::zeros();
        let mut rhs = Mat2::zeros();
        let basis: Vec<Mat4x2> = nodes
            .iter()
            .zip(&plus)
            .map(|(&m, mu)| mu * (I * kj * 2.0 * grid.x(m)).exp())
            .collect();
        for (bm, rm) in basis.iter().zip(&residue) {
            gram += bm.adjoint() * bm;
            rhs += bm.adjoint() * rm;
        }
        let f = inv2(&gram).ok_or_else(|| fail("singular least-squares system".into()))? * rhs;
        let (mut num, mut den) = (0.0, 0.0);
        for (bm, rm) in basis.iter().zip(&residue) {
            num += (bm * f - rm).norm_squared();
            den += rm.norm_squared();
        }
        if den == 0.0 {
            return Err(fail("vanishing residue".into()));
        }
        let rel = (num / den).sqrt();
        if rel > 1e-4 {
            return Err(fail(format!("relative least-squares residual {rel:.3e}")));
        }
        let sym = (f + f.transpose()) * C64::new(0.5, 0.0);
        let asym = frob(&(f - sym));
        if asym > 1e-6 * frob(&f).max(1.0) {
            return Err(fail(format!("asymmetry {asym:.3e} before symmetrisation")));
        }
        out.push(sym);
    }
    Ok(out)
}
