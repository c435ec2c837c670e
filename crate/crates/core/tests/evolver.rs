use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spingp_core::evolver::{evolve, evolve_with, exact_nonlinear_step, EvolveOptions, SplitStep, Trajectory};
use spingp_core::field::{total_power, SpatialGrid, SpinorField};
use spingp_core::harness::gaussian_corpus;
use spingp_core::linalg::Mat2;
use spingp_core::soliton::{soliton_field, Pole, SolitonData};
use spingp_core::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid() -> SpatialGrid {
    SpatialGrid::new(-40.0, 40.0, 2048).unwrap()
}

fn gaussian(amplitude: f64) -> SpinorField {
    let z = c(0.0, 0.0);
    SpinorField::from_fn(grid(), |x| [z, c(amplitude * (-x * x).exp(), 0.0), z]).unwrap()
}

fn max_entry(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

#[test]
fn nonlinear_step_of_zero_is_zero() {
    assert_eq!(exact_nonlinear_step(&Mat2::zeros(), 0.1), Mat2::zeros());
}

#[test]
fn nonlinear_step_diagonal_is_phase_rotation() {
    let dt = 0.37;
    let q = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    let out = exact_nonlinear_step(&q, dt);
    let want = Mat2::new(C64::from_polar(1.0, 2.0 * dt), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    assert!(max_entry(&(out - want)) < 1e-15);
}

#[test]
fn nonlinear_step_preserves_q_qdagger() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let mut z = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let q = Mat2::new(z(), z(), z(), z());
        let dt = 1e-2;
        let out = exact_nonlinear_step(&q, dt);
        let defect = out * out.adjoint() - q * q.adjoint();
        assert!(defect.norm() < 1e-12, "{}", defect.norm());
    }
}

#[test]
fn nonlinear_step_solves_the_ode() {
    let q = Mat2::new(c(0.4, 0.1), c(-0.2, 0.3), c(-0.2, 0.3), c(0.1, -0.5));
    let (t, h) = (0.3, 1e-5);
    let deriv = (exact_nonlinear_step(&q, t + h) - exact_nonlinear_step(&q, t - h)) / c(2.0 * h, 0.0);
    let at = exact_nonlinear_step(&q, t);
    let res = deriv * c(0.0, 1.0) + at * at.adjoint() * at * c(2.0, 0.0);
    assert!(max_entry(&res) < 1e-8);
}

#[test]
fn zero_datum_stays_zero() {
    let traj = evolve(&SpinorField::zeros(grid()), 1.0, 1e-3, 100).unwrap();
    assert!(traj.snapshots.iter().all(|s| s.max_abs() == 0.0));
    assert_eq!(traj.times.len(), 11);
}

#[test]
fn one_soliton_evolution_matches_closed_form() {
    let f = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    let data = SolitonData::new(vec![Pole { k: c(0.0, 1.0), f }]).unwrap();
    let g = grid();
    let traj = evolve(&soliton_field(&data, &g, 0.0).unwrap(), 5.0, 2.5e-4, 4000).unwrap();
    let exact = soliton_field(&data, &g, 5.0).unwrap();
    let err = traj.last().sup_distance(&exact);
    assert!(err < 1e-4, "sup error {err:e}");
}

#[test]
fn gaussian_power_is_conserved() {
    let traj = evolve(&gaussian(0.3), 50.0, 1e-3, 5000).unwrap();
    assert!(traj.max_power_drift() < 1e-9, "{:e}", traj.max_power_drift());
}

#[test]
fn strang_splitting_is_second_order() {
    for ic in gaussian_corpus() {
        let q0 = SpinorField::from_fn(grid(), |x| ic.value(x)).unwrap();
        let run = |dt: f64| evolve(&q0, 2.0, dt, 1_000_000).unwrap().last().clone();
        let (a, b, c) = (run(1e-2), run(5e-3), run(2.5e-3));
        let ratio = a.sup_distance(&b) / b.sup_distance(&c);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn snapshots_stay_symmetric() {
    let ic = &gaussian_corpus()[2];
    let q0 = SpinorField::from_fn(grid(), |x| ic.value(x)).unwrap();
    let traj = evolve(&q0, 1.0, 1e-3, 250).unwrap();
    for s in &traj.snapshots {
        for m in 0..s.grid.n_points() {
            let q = s.matrix_at(m);
            assert!(max_entry(&(q - q.transpose())) <= 1e-12);
        }
    }
}

#[test]
fn reversed_steps_recover_the_datum() {
    let ic = &gaussian_corpus()[1];
    let q0 = SpinorField::from_fn(grid(), |x| ic.value(x)).unwrap();
    let mut f = q0.clone();
    SplitStep::new(&q0.grid, 1e-3, false).advance(&mut f, 2000);
    SplitStep::new(&q0.grid, -1e-3, false).advance(&mut f, 2000);
    assert!(f.sup_distance(&q0) < 1e-6);
}

#[test]
fn step_guards() {
    let q0 = gaussian(0.3);
    assert!(matches!(evolve(&q0, 1.0, 1.0, 1), Err(Error::InvalidInput(_))));
    assert!(evolve(&q0, 1.0, 0.0, 1).is_err());
    assert!(evolve(&q0, 1.0, 3e-3, 1).is_err());
    assert!(evolve(&q0, 1.0, 1e-3, 0).is_err());
}

#[test]
fn blow_up_guard_trips() {
    let opts = EvolveOptions { blowup_threshold: 0.1, ..EvolveOptions::default() };
    assert!(matches!(evolve_with(&gaussian(0.3), 0.1, &opts), Err(Error::BlowUp { .. })));
}

#[test]
fn drift_guard_trips_when_dealiasing_removes_power() {
    let g = SpatialGrid::new(-10.0, 10.0, 256).unwrap();
    let z = c(0.0, 0.0);
    let q0 = SpinorField::from_fn(g, |x| [z, C64::from_polar((-x * x).exp(), 38.0 * x), z]).unwrap();
    let opts = EvolveOptions { dealias: true, drift_tol: 1e-6, ..EvolveOptions::default() };
    assert!(matches!(evolve_with(&q0, 0.1, &opts), Err(Error::PowerDrift { .. })));
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let traj = evolve(&gaussian(0.3), 0.5, 1e-3, 100).unwrap();
    traj.write_outputs(dir.path(), 0.0).unwrap();
    let back = Trajectory::read_outputs(dir.path()).unwrap();
    assert_eq!(back.times, traj.times);
    assert_eq!(back.power, traj.power);
    assert_eq!(back.snapshots.last().unwrap().q0, traj.last().q0);
    assert_eq!(total_power(back.last()), total_power(traj.last()));
}

proptest! {
    #[test]
    fn nonlinear_step_preserves_symmetry(
        a in (-2.0f64..2.0, -2.0f64..2.0),
        b in (-2.0f64..2.0, -2.0f64..2.0),
        d in (-2.0f64..2.0, -2.0f64..2.0),
        dt in -0.05f64..0.05,
    ) {
        let q = Mat2::new(c(a.0, a.1), c(b.0, b.1), c(b.0, b.1), c(d.0, d.1));
        let out = exact_nonlinear_step(&q, dt);
        prop_assert!(max_entry(&(out - out.transpose())) < 1e-13);
    }
}
