//! Double-double complex arithmetic for the Weber power series.
//!
//! `twofloat` supplies the arithmetic; the elementary functions here are
//! written on top of it because the series needs about 30 correct digits.

use num_complex::Complex;
use twofloat::consts::{FRAC_PI_2, LN_2, PI};
use twofloat::TwoFloat;

use crate::linalg::C64;

pub type Dd = TwoFloat;
pub type Cdd = Complex<TwoFloat>;

pub fn dd(x: f64) -> Dd {
    Dd::from(x)
}

pub fn cdd(z: C64) -> Cdd {
    Cdd::new(dd(z.re), dd(z.im))
}

pub fn to_c64(z: Cdd) -> C64 {
    C64::new(f64::from(z.re), f64::from(z.im))
}

pub fn abs(z: &Cdd) -> f64 {
    f64::from(z.re).hypot(f64::from(z.im))
}

/// `1 / x` by one Newton step; `TwoFloat`'s own quotient is only f64-accurate.
pub fn recip(x: Dd) -> Dd {
    let y = dd(1.0 / x.hi());
    y + y * (dd(1.0) - x * y)
}

pub fn cdiv(a: Cdd, b: Cdd) -> Cdd {
    let inv = recip(b.re * b.re + b.im * b.im);
    let num = a * b.conj();
    Cdd::new(num.re * inv, num.im * inv)
}

pub fn cdiv_f64(a: Cdd, b: f64) -> Cdd {
    Cdd::new(a.re / b, a.im / b)
}

pub fn exp(x: Dd) -> Dd {
    let hi = x.hi();
    if hi > 709.0 {
        return Dd::INFINITY;
    }
    if hi < -745.0 {
        return dd(0.0);
    }
    let k = (hi / std::f64::consts::LN_2).round();
    let r = (x - LN_2 * k) * (1.0 / 1024.0);
    // Squarings act on exp(r) - 1 so roundoff is not amplified.
    let mut term = r;
    let mut s = r;
    for n in 2..16 {
        term = term * r / (n as f64);
        s += term;
    }
    for _ in 0..10 {
        s = s * (s + 2.0);
    }
    (s + 1.0) * 2f64.powi(k as i32)
}

pub fn ln(x: Dd) -> Dd {
    let mut y = dd(x.hi().ln());
    for _ in 0..2 {
        y = y + x * exp(-y) - 1.0;
    }
    y
}

pub fn sin_cos(x: Dd) -> (Dd, Dd) {
    let k = (x.hi() / std::f64::consts::FRAC_PI_2).round();
    let r = x - FRAC_PI_2 * k;
    let r2 = r * r;
    let (mut s, mut c) = (r, dd(1.0));
    let (mut ts, mut tc) = (r, dd(1.0));
    for n in 1..16 {
        let m = (2 * n) as f64;
        ts = -ts * r2 / (m * (m + 1.0));
        tc = -tc * r2 / ((m - 1.0) * m);
        s += ts;
        c += tc;
    }
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub fn cexp(z: Cdd) -> Cdd {
    let m = exp(z.re);
    let (s, c) = sin_cos(z.im);
    Cdd::new(m * c, m * s)
}

pub fn cln(z: Cdd) -> Cdd {
    let modulus = ln(z.re * z.re + z.im * z.im) * 0.5;
    let theta0 = f64::from(z.im).atan2(f64::from(z.re));
    let (s, c) = sin_cos(dd(theta0));
    let theta = dd(theta0) + (z.im * c - z.re * s) * recip(z.re * c + z.im * s);
    Cdd::new(modulus, theta)
}

/// `B_{2k}` as `(numerator, denominator)` for `k = 1..=15`.
const BERNOULLI: [(f64, f64); 15] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
    (-23749461029.0, 870.0),
    (8615841276005.0, 14322.0),
];

/// Stirling series for `ln Gamma(w)`, accurate when `Re w >= 30`.
fn ln_gamma_large(w: Cdd) -> Cdd {
    let half_ln_2pi = ln(PI * 2.0) * 0.5;
    let lw = cln(w);
    let mut out = (w - dd(0.5)) * lw - w + half_ln_2pi;
    let inv = cdiv(Cdd::new(dd(1.0), dd(0.0)), w);
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, &(num, den)) in BERNOULLI.iter().enumerate() {
        let m = 2.0 * (k + 1) as f64;
        let coef = dd(num) / (den * m * (m - 1.0));
        out += pow * coef;
        pow *= inv2;
    }
    out
}

/// `1 / Gamma(z)`, exactly zero at the poles of `Gamma`.
pub fn rgamma(z: Cdd) -> Cdd {
    let re = f64::from(z.re);
    let is_pole = z.im == dd(0.0) && z.re <= dd(0.0) && z.re.lo() == 0.0 && re.fract() == 0.0;
    if is_pole {
        return Cdd::new(dd(0.0), dd(0.0));
    }
    let shift = (30.0 - re).ceil().max(0.0) as usize;
    let mut prod = Cdd::new(dd(1.0), dd(0.0));
    for j in 0..shift {
        prod *= z + dd(j as f64);
    }
    prod * cexp(-ln_gamma_large(z + dd(shift as f64)))
}

/// `2^s` for complex `s`.
pub fn pow2(s: Cdd) -> Cdd {
    cexp(s * LN_2)
}

pub fn sqrt_pi() -> Dd {
    PI.sqrt()
}
