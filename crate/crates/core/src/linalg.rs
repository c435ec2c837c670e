//! Small complex matrix aliases and helpers.

use nalgebra::{Matrix2, Matrix4, Matrix4x2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Mat4x2 = Matrix4x2<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

pub fn frob(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs<const R: usize, const C: usize>(
    m: &nalgebra::SMatrix<C64, R, C>,
) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Entrywise complex conjugate without transposing.
pub fn conj(m: &Mat2) -> Mat2 {
    m.map(|z| z.conj())
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d == C64::new(0.0, 0.0) || !d.is_finite() {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d)
}

/// Smallest and largest singular values of a 2x2 matrix.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let g = m.adjoint() * m;
    let tr = (g[(0, 0)].re + g[(1, 1)].re) * 0.5;
    let dt = det2(m).norm_sqr();
    let disc = (tr * tr - dt).max(0.0).sqrt();
    let hi = (tr + disc).max(0.0);
    let lo = if hi > 0.0 { dt / hi } else { 0.0 };
    (lo.max(0.0).sqrt(), hi.sqrt())
}

/// Splits a 4x4 matrix into its 2x2 blocks `(upper-left, upper-right, lower-left, lower-right)`.
pub fn blocks(m: &Mat4) -> (Mat2, Mat2, Mat2, Mat2) {
    (
        m.fixed_view::<2, 2>(0, 0).into_owned(),
        m.fixed_view::<2, 2>(0, 2).into_owned(),
        m.fixed_view::<2, 2>(2, 0).into_owned(),
        m.fixed_view::<2, 2>(2, 2).into_owned(),
    )
}

pub fn stack(upper: &Mat2, lower: &Mat2) -> Mat4x2 {
    let mut out = Mat4x2::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(upper);
    out.fixed_view_mut::<2, 2>(2, 0).copy_from(lower);
    out
}

pub fn upper(m: &Mat4x2) -> Mat2 {
    m.fixed_view::<2, 2>(0, 0).into_owned()
}

pub fn lower(m: &Mat4x2) -> Mat2 {
    m.fixed_view::<2, 2>(2, 0).into_owned()
}

pub fn join_columns(left: &Mat4x2, right: &Mat4x2) -> Mat4 {
    let mut out = Mat4::zeros();
    out.fixed_view_mut::<4, 2>(0, 0).copy_from(left);
    out.fixed_view_mut::<4, 2>(0, 2).copy_from(right);
    out
}

/// `exp(i * phi * h)` for a Hermitian 2x2 matrix `h`.
pub fn exp_i_hermitian(h: &Mat2, phi: f64) -> Mat2 {
    let mean = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let half_diff = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = h[(0, 1)];
    let r = (half_diff * half_diff + off.norm_sqr()).sqrt();
    let traceless = Mat2::new(
        C64::new(half_diff, 0.0),
        off,
        off.conj(),
        C64::new(-half_diff, 0.0),
    );
    let (cos, sinc) = if r * phi.abs() < 1e-8 {
        (1.0 - 0.5 * (r * phi).powi(2), phi * (1.0 - (r * phi).powi(2) / 6.0))
    } else {
        ((r * phi).cos(), (r * phi).sin() / r)
    };
    let phase = C64::from_polar(1.0, phi * mean);
    (Mat2::identity() * C64::new(cos, 0.0) + traceless * C64::new(0.0, sinc)) * phase
}
