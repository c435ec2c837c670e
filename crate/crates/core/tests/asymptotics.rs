use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spingp_core::asymptotics::{
    asymptotic_params, beta12_crosscheck, compute_chi, compute_delta0, compute_nu, leading_term_g, predict,
    AsymptoticParams, ReflectionSamples,
};
use spingp_core::linalg::Mat2;
use spingp_core::soliton::{solve_soliton, Pole, SolitonData};
use spingp_core::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn diag(a: C64, b: C64) -> Mat2 {
    Mat2::new(a, c(0.0, 0.0), c(0.0, 0.0), b)
}

fn max_entry(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn params(gamma: Mat2, delta0: C64) -> AsymptoticParams {
    AsymptoticParams { k0: 0.0, t: 1.0, nu: compute_nu(&gamma), chi: c(0.0, 0.0), delta0, gamma_at_k0: gamma, t0: c(1.0, 0.0) }
}

fn gaussian_reflection(amp: f64) -> ReflectionSamples {
    ReflectionSamples::from_fn(-10.0, 10.0, 4001, |k| Mat2::identity() * c(amp * (-k * k).exp(), 0.0)).unwrap()
}

#[test]
fn nu_of_zero_reflection() {
    assert_eq!(compute_nu(&Mat2::zeros()), 0.0);
}

#[test]
fn nu_of_rank_one_projector() {
    let nu = compute_nu(&diag(c(1.0, 0.0), c(0.0, 0.0)));
    assert!((nu - (-(2.0f64).ln() / (2.0 * PI))).abs() < 1e-15);
    assert!((nu + 0.110318).abs() < 1e-6);
}

#[test]
fn nu_of_identity() {
    assert!((compute_nu(&Mat2::identity()) + (4.0f64).ln() / (2.0 * PI)).abs() < 1e-15);
}

#[test]
fn chi_of_zero_reflection() {
    let s = ReflectionSamples::from_fn(-10.0, 10.0, 101, |_| Mat2::zeros()).unwrap();
    assert_eq!(compute_chi(&s, 0.3).unwrap().chi, c(0.0, 0.0));
}

#[test]
fn chi_near_integral_vanishes_for_flat_reflection() {
    let flat = diag(c(0.2, 0.1), c(-0.1, 0.3));
    let k0 = 0.0;
    let (a, b) = (k0 - 1.2, k0 + 0.2);
    let envelope = |k: f64| {
        let d = if k < a { a - k } else if k > b { k - b } else { 0.0 };
        (-4.0 * d * d).exp()
    };
    let s = ReflectionSamples::from_fn(-10.0, 10.0, 20001, |k| flat * c(envelope(k), 0.0)).unwrap();
    let full = compute_chi(&s, k0).unwrap().chi;
    let n = 2_000_000;
    let (lo, hi) = (-10.0, k0 - 1.0);
    let h = (hi - lo) / n as f64;
    let f = |x: f64| s.log_weight(x) / (x - k0);
    let far: f64 = h * ((1..n).map(|i| f(lo + h * i as f64)).sum::<f64>() + 0.5 * (f(lo) + f(hi)));
    let want = c(far, 0.0) / c(0.0, 2.0 * PI);
    assert!((full - want).norm() < 1e-8, "{full} vs {want}");
}

/// Trapezoid rule on `n` intervals of the closed-form weight.
fn brute_chi(amp: f64, k0: f64, n: usize) -> C64 {
    let w = |s: f64| 2.0 * (1.0 + amp * amp * (-2.0 * s * s).exp()).ln();
    let dw = |s: f64| {
        let e = amp * amp * (-2.0 * s * s).exp();
        2.0 * (-4.0 * s * e) / (1.0 + e)
    };
    let trap = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    };
    let w0 = w(k0);
    let near = |s: f64| if s == k0 { dw(k0) } else { (w(s) - w0) / (s - k0) };
    let far = |s: f64| w(s) / (s - k0);
    let total = trap(&near, k0 - 1.0, k0) + trap(&far, -10.0, k0 - 1.0);
    c(total, 0.0) / (c(0.0, 2.0 * PI))
}

#[test]
fn chi_matches_brute_force_trapezoid() {
    let amp = 0.3;
    let s = gaussian_reflection(amp);
    for k0 in [-0.6, 0.0, 0.45] {
        let got = compute_chi(&s, k0).unwrap().chi;
        let want = brute_chi(amp, k0, 1_000_000);
        assert!((got - want).norm() < 1e-6, "k0 {k0}: {got} vs {want}");
    }
}

#[test]
fn chi_rejects_truncated_tail() {
    let s = ReflectionSamples::from_fn(-2.0, 2.0, 101, |k| Mat2::identity() * c(0.3 * (-k * k).exp(), 0.0)).unwrap();
    assert!(matches!(compute_chi(&s, 0.0), Err(Error::ReflectionTail(_))));
}

#[test]
fn delta0_trivial_values() {
    assert_eq!(compute_delta0(1.0, 0.0, 0.0, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    let d = compute_delta0(PI, 1.0, 0.0, c(0.0, 0.0)).unwrap();
    assert!((d - C64::from_polar(1.0, 2.0 * PI)).norm() < 1e-14);
    assert!((d.norm() - 1.0).abs() < 1e-15);
    assert!(compute_delta0(0.0, 0.0, 0.0, c(0.0, 0.0)).is_err());
}

#[test]
fn delta0_modulus_is_time_independent() {
    let chi = c(0.13, 2.7);
    let mods: Vec<f64> = [1.0, 10.0, 100.0].iter().map(|&t| compute_delta0(t, 0.4, -0.05, chi).unwrap().norm()).collect();
    for m in &mods {
        assert!((m - chi.re.exp()).abs() < 1e-14);
    }
}

#[test]
fn zero_reflection_gives_zero_amplitude() {
    assert_eq!(leading_term_g(&params(Mat2::zeros(), c(1.0, 0.0))).unwrap().g, Mat2::zeros());
}

#[test]
fn rank_deficient_reflection_is_degenerate() {
    let out = leading_term_g(&params(diag(c(1.0, 0.0), c(0.0, 0.0)), c(1.0, 0.0)));
    assert!(matches!(out, Err(Error::DegenerateReflection(_))));
    let out = beta12_crosscheck(&diag(c(1.0, 0.0), c(0.0, 0.0)), -0.1, c(1.0, 0.0));
    assert!(matches!(out, Err(Error::DegenerateReflection(_))));
}

#[test]
fn amplitude_is_linear_for_small_reflection() {
    let delta0 = C64::from_polar(1.0, 0.7);
    let norm = |cc: f64| leading_term_g(&params(Mat2::identity() * c(cc, 0.0), delta0)).unwrap().g.norm();
    for cc in [1e-2, 5e-3] {
        let ratio = norm(2.0 * cc) / norm(cc);
        assert!((ratio - 2.0).abs() < 1e-2, "c {cc}: ratio {ratio}");
    }
}

#[test]
fn amplitude_is_scalar_times_cofactor() {
    let gamma = Mat2::new(c(0.3, 0.1), c(-0.2, 0.05), c(-0.2, 0.05), c(0.1, -0.25));
    let g = leading_term_g(&params(gamma, C64::from_polar(1.2, -0.4))).unwrap().g;
    let cof = Mat2::new(-gamma[(1, 1)], gamma[(0, 1)], gamma[(1, 0)], -gamma[(0, 0)]);
    let s = g * cof.try_inverse().unwrap();
    let scalar = Mat2::identity() * s[(0, 0)];
    assert!(max_entry(&(s - scalar)) < 1e-12 * s[(0, 0)].norm());
}

#[test]
fn beta12_of_zero_reflection() {
    let b = beta12_crosscheck(&Mat2::zeros(), 0.0, c(1.0, 0.0)).unwrap();
    assert_eq!(b.g, Mat2::zeros());
    assert_eq!(b.g_alt, Mat2::zeros());
    assert_eq!(b.discrepancy, 0.0);
}

#[test]
fn beta12_moduli_agree() {
    for gamma in [diag(c(0.3, 0.0), c(0.2, 0.0)), Mat2::new(c(0.3, 0.1), c(0.0, 0.2), c(0.0, 0.2), c(-0.1, 0.15))] {
        let nu = compute_nu(&gamma);
        let b = beta12_crosscheck(&gamma, nu, C64::from_polar(1.1, 0.9)).unwrap();
        assert!(b.modulus_discrepancy < 1e-10, "{:e}", b.modulus_discrepancy);
    }
}

#[test]
fn beta12_agrees_entrywise_for_real_symmetric() {
    let gamma = Mat2::new(c(0.3, 0.0), c(-0.15, 0.0), c(-0.15, 0.0), c(0.2, 0.0));
    let nu = compute_nu(&gamma);
    let b = beta12_crosscheck(&gamma, nu, C64::from_polar(1.0, 0.3)).unwrap();
    assert!(b.discrepancy < 1e-10, "{:e}", b.discrepancy);
}

#[test]
fn prediction_without_reflection_is_the_soliton() {
    let data = SolitonData::new(vec![Pole { k: c(0.2, 0.8), f: Mat2::new(c(0.36, 0.0), c(0.48, 0.0), c(0.48, 0.0), c(0.64, 0.0)) }]).unwrap();
    let s = ReflectionSamples::from_fn(-10.0, 10.0, 101, |_| Mat2::zeros()).unwrap();
    for (x, t) in [(0.0, 1.0), (-3.0, 2.0), (1.0, 0.5)] {
        assert_eq!(predict(x, t, &data, &s).unwrap(), solve_soliton(&data, x, t).unwrap().q);
    }
}

#[test]
fn prediction_without_solitons_is_the_dispersive_term() {
    let s = gaussian_reflection(0.05);
    let empty = SolitonData::new(vec![]).unwrap();
    for (x, t) in [(0.0, 20.0), (-20.0, 20.0), (40.0, 40.0)] {
        let p = asymptotic_params(&s, &[], x, t).unwrap();
        let g = leading_term_g(&p).unwrap().g;
        let want = g / c(t.sqrt(), 0.0);
        assert!(max_entry(&(predict(x, t, &empty, &s).unwrap() - want)) == 0.0);
    }
}

#[test]
fn samples_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gamma.csv");
    let s = gaussian_reflection(0.3);
    s.write_csv(&path).unwrap();
    assert_eq!(ReflectionSamples::read_csv(&path).unwrap(), s);
}

proptest! {
    #[test]
    fn nu_is_nonpositive(re in prop::array::uniform8(-2.0f64..2.0)) {
        let g = Mat2::new(c(re[0], re[1]), c(re[2], re[3]), c(re[4], re[5]), c(re[6], re[7]));
        prop_assert!(compute_nu(&g) <= 0.0);
    }

    #[test]
    fn delta0_modulus_is_exp_re_chi(
        t in 0.1f64..500.0, k0 in -3.0f64..3.0, nu in -1.0f64..0.0, cr in -1.0f64..1.0, ci in -10.0f64..10.0,
    ) {
        let d = compute_delta0(t, k0, nu, c(cr, ci)).unwrap();
        prop_assert!((d.norm() - cr.exp()).abs() < 1e-12 * cr.exp());
    }
}
