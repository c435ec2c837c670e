use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spingp_core::field::{assemble_q, MatrixPotential, SpatialGrid, SpinorField};
use spingp_core::harness::{gaussian_corpus, identity_stats, KGrid};
use spingp_core::linalg::{Mat2, Mat4};
use spingp_core::scattering::{
    det_a, find_discrete_spectrum, norming_constants, scattering_matrix, solve_jost, stationary_point, theta_phase,
    Scatterer, SearchBox, Side, SpectrumOptions,
};
use spingp_core::soliton::{soliton_field, Pole, SolitonData};
use spingp_core::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid() -> SpatialGrid {
    SpatialGrid::new(-40.0, 40.0, 2048).unwrap()
}

fn corpus_potential(i: usize) -> MatrixPotential {
    let ic = &gaussian_corpus()[i];
    assemble_q(&SpinorField::from_fn(grid(), |x| ic.value(x)).unwrap())
}

fn soliton_potential(poles: Vec<Pole>) -> MatrixPotential {
    assemble_q(&soliton_field(&SolitonData::new(poles).unwrap(), &grid(), 0.0).unwrap())
}

fn e11() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
}

fn rank_one() -> Mat2 {
    Mat2::new(c(0.36, 0.0), c(0.48, 0.0), c(0.48, 0.0), c(0.64, 0.0))
}

fn max_entry<const R: usize, const K: usize>(m: &nalgebra::SMatrix<C64, R, K>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn identity_grid() -> Vec<f64> {
    KGrid { min: -8.0, max: 8.0, n: 401 }.points()
}

#[test]
fn zero_potential_jost_is_identity() {
    let zero = assemble_q(&SpinorField::zeros(grid()));
    for side in [Side::Minus, Side::Plus] {
        let sol = solve_jost(&zero, c(0.7, 0.0), side).unwrap();
        for m in [0, 700, 2047] {
            assert_eq!(sol.full(m).unwrap(), Mat4::identity());
        }
    }
}

#[test]
fn jost_determinant_is_one_on_corpus() {
    for i in 0..3 {
        let pot = corpus_potential(i);
        for k in [-3.0, -0.4, 0.0, 1.3] {
            let sol = solve_jost(&pot, c(k, 0.0), Side::Minus).unwrap();
            for m in 0..grid().n_points() {
                let d = sol.full(m).unwrap().determinant();
                assert!((d - 1.0).norm() < 1e-8, "datum {i} k {k} node {m}: {d}");
            }
        }
    }
}

#[test]
fn jost_is_unitary_on_real_axis() {
    let pot = corpus_potential(2);
    for side in [Side::Minus, Side::Plus] {
        for k in [-2.0, 0.25, 1.5] {
            let sol = solve_jost(&pot, c(k, 0.0), side).unwrap();
            for m in (0..grid().n_points()).step_by(31) {
                let mu = sol.full(m).unwrap();
                assert!(max_entry(&(mu.adjoint() * mu - Mat4::identity())) < 1e-7);
            }
        }
    }
}

#[test]
fn zero_potential_scattering_is_trivial() {
    let zero = assemble_q(&SpinorField::zeros(grid()));
    let s = scattering_matrix(&zero, 1.1).unwrap();
    assert_eq!(s.a, Mat2::identity());
    assert_eq!(s.b, Mat2::zeros());
    assert_eq!(s.gamma, Mat2::zeros());
}

#[test]
fn corpus_unitarity_and_symmetry() {
    for i in 0..3 {
        let data = Scatterer::new(&corpus_potential(i)).sweep(&identity_grid()).unwrap();
        let stats = identity_stats(&data);
        assert!(stats.unitarity < 1e-6, "datum {i}: {:e}", stats.unitarity);
        assert!(stats.symmetry < 1e-6, "datum {i}: {:e}", stats.symmetry);
    }
}

#[test]
fn reflection_is_normal_for_fixed_polarization() {
    for i in 0..2 {
        let data = Scatterer::new(&corpus_potential(i)).sweep(&identity_grid()).unwrap();
        let n = identity_stats(&data).normality;
        assert!(n < 1e-6, "datum {i}: {n:e}");
    }
}

#[test]
fn reflection_is_normal_for_mixed_polarization() {
    let data = Scatterer::new(&corpus_potential(2)).sweep(&identity_grid()).unwrap();
    let n = identity_stats(&data).normality;
    assert!(n < 1e-6, "normality defect {n:e}");
}

#[test]
fn soliton_is_reflectionless() {
    let pot = soliton_potential(vec![Pole { k: c(0.0, 1.0), f: e11() }]);
    let sc = Scatterer::new(&pot);
    let sup = KGrid { min: -6.0, max: 6.0, n: 241 }
        .points()
        .iter()
        .map(|&k| max_entry(&sc.scattering(k).unwrap().gamma))
        .fold(0.0, f64::max);
    assert!(sup < 1e-3, "{sup:e}");
}

#[test]
fn zero_potential_det_a_is_one() {
    let zero = assemble_q(&SpinorField::zeros(grid()));
    for k in [c(0.0, 0.5), c(-1.0, 1.5), c(2.0, 0.0)] {
        assert!((det_a(&zero, k).unwrap() - 1.0).norm() < 1e-14);
    }
}

#[test]
fn det_a_vanishes_at_soliton_pole() {
    let pot = soliton_potential(vec![Pole { k: c(0.0, 1.0), f: e11() }]);
    assert!(det_a(&pot, c(0.0, 1.0)).unwrap().norm() < 1e-4);
}

#[test]
fn det_a_routes_agree_on_real_axis() {
    for i in 0..3 {
        let pot = corpus_potential(i);
        for k in [-2.5, -0.3, 0.8, 3.0] {
            let s = scattering_matrix(&pot, k).unwrap();
            let d = det_a(&pot, c(k, 0.0)).unwrap();
            assert!((d - s.det_a).norm() < 1e-6, "datum {i} k {k}");
        }
    }
}

#[test]
fn deep_spectral_parameter_rejected() {
    let pot = corpus_potential(0);
    assert!(matches!(det_a(&pot, c(0.0, 10.0)), Err(Error::TooDeep { .. })));
}

#[test]
fn zero_potential_has_empty_spectrum() {
    let zero = assemble_q(&SpinorField::zeros(grid()));
    assert!(find_discrete_spectrum(&zero, &SpectrumOptions::default()).unwrap().is_empty());
}

#[test]
fn gaussian_corpus_has_no_eigenvalues() {
    let pot = corpus_potential(0);
    assert!(find_discrete_spectrum(&pot, &SpectrumOptions::default()).unwrap().is_empty());
}

#[test]
fn one_soliton_pole_recovered() {
    let k1 = c(0.5, 1.0);
    let pot = soliton_potential(vec![Pole { k: k1, f: rank_one() }]);
    let poles = find_discrete_spectrum(&pot, &SpectrumOptions::default()).unwrap();
    assert_eq!(poles.len(), 1);
    assert!((poles[0] - k1).norm() < 1e-4, "{}", poles[0]);
}

#[test]
fn two_soliton_poles_recovered() {
    let (k1, k2) = (c(-1.0, 1.0), c(1.0, 0.5));
    let pot = soliton_potential(vec![Pole { k: k1, f: rank_one() }, Pole { k: k2, f: e11() }]);
    let poles = find_discrete_spectrum(&pot, &SpectrumOptions::default()).unwrap();
    assert_eq!(poles.len(), 2);
    assert!((poles[0] - k1).norm() < 1e-4);
    assert!((poles[1] - k2).norm() < 1e-4);
}

#[test]
fn full_rank_pole_is_not_simple() {
    let pot = soliton_potential(vec![Pole { k: c(0.0, 1.0), f: Mat2::identity() }]);
    let opts = SpectrumOptions { search: SearchBox { re_min: -2.0, re_max: 2.0, im_min: 0.1, im_max: 2.0 }, ..Default::default() };
    let out = find_discrete_spectrum(&pot, &opts);
    assert!(matches!(out, Err(Error::NonSimpleZero(_))), "{out:?}");
}

#[test]
fn rank_one_norming_constant_recovered() {
    let k1 = c(0.0, 1.0);
    let pot = soliton_potential(vec![Pole { k: k1, f: e11() }]);
    let f = norming_constants(&pot, &[k1]).unwrap();
    assert!(max_entry(&(f[0] - e11())) < 1e-3, "{}", f[0]);
}

#[test]
fn rank_two_norming_constant_recovered() {
    let k1 = c(0.0, 1.0);
    let pot = soliton_potential(vec![Pole { k: k1, f: Mat2::identity() }]);
    let f = norming_constants(&pot, &[k1]).unwrap()[0];
    assert!(max_entry(&(f - f.transpose())) < 1e-10);
    let sym = (f + f.adjoint()) * c(0.5, 0.0);
    let eig = nalgebra::Matrix2::from_fn(|i, j| sym[(i, j)]).symmetric_eigenvalues();
    for e in eig.iter() {
        assert!((e - 1.0).abs() < 1e-3, "eigenvalues {eig}");
    }
}

#[test]
fn spurious_pole_rejected() {
    let pot = soliton_potential(vec![Pole { k: c(0.0, 1.0), f: e11() }]);
    assert!(norming_constants(&pot, &[c(0.0, 1.0), c(0.5, 0.5)]).is_err());
}

#[test]
fn stationary_point_at_origin() {
    assert_eq!(stationary_point(0.0, 3.0).unwrap(), 0.0);
    assert!(theta_phase(1.0, 0.0, c(1.0, 0.0)).is_err());
}

proptest! {
    #[test]
    fn real_k_phase_is_oscillatory(k in -10.0f64..10.0, x in -50.0f64..50.0, t in 0.01f64..100.0) {
        let th = theta_phase(x, t, c(k, 0.0)).unwrap();
        prop_assert!((c(0.0, 2.0 * t) * th).re.abs() < 1e-12 * (1.0 + t * k * k + x.abs() * k.abs()));
    }

    #[test]
    fn phase_real_part_identity(
        kr in -5.0f64..5.0, ki in -3.0f64..3.0, x in -50.0f64..50.0, t in 0.01f64..100.0,
    ) {
        let k = c(kr, ki);
        let direct = (c(0.0, 2.0 * t) * theta_phase(x, t, k).unwrap()).re;
        let k0 = stationary_point(x, t).unwrap();
        let formula = -8.0 * t * ki * (kr - k0);
        prop_assert!((direct - formula).abs() <= 1e-12 * (1.0 + direct.abs().max(formula.abs())));
    }
}
