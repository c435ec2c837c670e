use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spingp_core::harness::{
    decay_fit, run_evolve, run_pipeline, run_predict, run_scatter, Check, ExperimentConfig, Relation, Report,
    Scenario,
};
use spingp_core::Error;

const TIMES: [f64; 7] = [20.0, 30.0, 40.0, 60.0, 80.0, 120.0, 160.0];

fn power_law(c: f64, p: f64) -> Vec<f64> {
    TIMES.iter().map(|t| c * t.powf(p)).collect()
}

#[test]
fn fit_recovers_three_quarter_power() {
    let fit = decay_fit(&TIMES, &power_law(0.3, -0.75)).unwrap();
    assert!((fit.slope + 0.75).abs() < 1e-10);
    assert!((fit.intercept - 0.3f64.ln()).abs() < 1e-10);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn fit_recovers_half_power() {
    let fit = decay_fit(&TIMES, &power_law(2.0, -0.5)).unwrap();
    assert!((fit.slope + 0.5).abs() < 1e-10);
}

#[test]
fn fit_is_robust_to_five_percent_noise() {
    let noise = Normal::new(0.0, 0.05).unwrap();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let errors: Vec<f64> = power_law(0.1, -0.75).iter().map(|e| e * (1.0 + noise.sample(&mut rng))).collect();
        let fit = decay_fit(&TIMES, &errors).unwrap();
        assert!((-0.85..=-0.65).contains(&fit.slope), "seed {seed}: slope {}", fit.slope);
        assert!(fit.r_squared > 0.95, "seed {seed}: r^2 {}", fit.r_squared);
    }
}

#[test]
fn fit_rejects_bad_input() {
    let mut errors = power_law(1.0, -0.75);
    errors[3] = 0.0;
    assert!(decay_fit(&TIMES, &errors).is_err());
    errors[3] = -1.0;
    assert!(decay_fit(&TIMES, &errors).is_err());
    assert!(decay_fit(&TIMES[..4], &power_law(1.0, -0.75)[..4]).is_err());
    let mut times = TIMES;
    times.swap(1, 2);
    assert!(decay_fit(&times, &power_law(1.0, -0.75)).is_err());
}

#[test]
fn checks_and_report_groups() {
    assert!(Check::new("a", 1.0, Relation::Below, 2.0).passed);
    assert!(!Check::new("a", 2.0, Relation::Below, 2.0).passed);
    assert!(Check::new("a", 2.0, Relation::AtMost, 2.0).passed);
    assert!(!Check::new("a", f64::NAN, Relation::AtLeast, 0.0).passed);
    let mut rep = Report::new("pipeline", Some(Scenario::Solitonless), 3);
    rep.check("x.one", 1.0, Relation::Below, 2.0);
    rep.check("x.two", 3.0, Relation::Below, 2.0);
    rep.check("xy", 0.0, Relation::Below, 2.0);
    assert_eq!(rep.group("x").count(), 2);
    assert!(!rep.passed());
    let dir = tempfile::tempdir().unwrap();
    rep.write(dir.path().join("r.json")).unwrap();
    assert_eq!(Report::read(dir.path().join("r.json")).unwrap(), rep);
}

fn shipped(name: &str) -> ExperimentConfig {
    let text = match name {
        "solitonless" => include_str!("../../../configs/solitonless.json"),
        "one_soliton" => include_str!("../../../configs/one_soliton.json"),
        "two_soliton" => include_str!("../../../configs/two_soliton.json"),
        _ => include_str!("../../../configs/mixed.json"),
    };
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn shipped_configs_validate() {
    for name in ["solitonless", "one_soliton", "two_soliton", "mixed"] {
        shipped(name).validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn config_guards() {
    let base = small_solitonless(Path::new("unused"));
    base.validate().unwrap();
    let bad = [
        ExperimentConfig { dt: 1.0, ..base.clone() },
        ExperimentConfig { t_end: 10.005, ..base.clone() },
        ExperimentConfig { sample_times: vec![2.0, 4.0, 6.0, 8.0, 9.5], ..base.clone() },
        ExperimentConfig { sample_times: vec![2.0, 4.0, 6.0, 8.0], ..base.clone() },
        ExperimentConfig { n_points: 1000, ..base.clone() },
        ExperimentConfig { initial_condition: None, ..base.clone() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
    }
    let mut one = shipped("one_soliton");
    one.solitons[0].f12 = [0.0, 0.0];
    assert!(one.validate().is_err());
    let mut mixed = shipped("mixed");
    mixed.cone = None;
    assert!(mixed.validate().is_err());
}

#[test]
fn unknown_keys_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"scenario": "solitonless", "dtt": 0.1}"#).is_err());
}

#[test]
fn invalid_step_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = ExperimentConfig { dt: 1.0, ..small_solitonless(&out) };
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
    assert!(!out.exists());
}

fn small_solitonless(out: &Path) -> ExperimentConfig {
    let text = r#"{
        "scenario": "solitonless",
        "domain": [-128.0, 128.0],
        "n_points": 1024,
        "dt": 0.01,
        "t_end": 10.0,
        "store_every": 100,
        "sample_times": [2.0, 4.0, 6.0, 8.0, 10.0],
        "initial_condition": { "family": "gaussian", "q0": { "amplitude": 0.2 } },
        "seed": 1
    }"#;
    ExperimentConfig { output_dir: out.to_path_buf(), ..ExperimentConfig::from_json(text).unwrap() }
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn solitonless_pipeline_is_structured_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let rep = run_pipeline(&small_solitonless(&a)).unwrap();
    run_pipeline(&small_solitonless(&b)).unwrap();

    assert!(rep.decay_fit.is_some());
    assert!(rep.get("dispersive_decay.slope").is_some());
    assert_eq!(Report::read(a.join("report.json")).unwrap().checks, rep.checks);
    let snapshots = (0..=10).map(|i| format!("trajectory/snapshot_{i:05}.csv"));
    for file in ["gamma.csv", "spectrum.json", "errors.csv", "predictions.csv"].map(String::from).into_iter().chain(snapshots) {
        assert!(read(&a, &file) == read(&b, &file), "{file} differs between runs");
    }
}

#[test]
fn split_commands_match_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (whole, split) = (dir.path().join("whole"), dir.path().join("split"));
    let rep = run_pipeline(&small_solitonless(&whole)).unwrap();
    let cfg = small_solitonless(&split);
    assert!(run_scatter(&cfg).unwrap().passed());
    assert!(run_evolve(&cfg).unwrap().passed());
    let pred = run_predict(&cfg).unwrap();
    assert_eq!(pred.decay_fit, rep.decay_fit);
    assert!(split.join("predict_report.json").exists());
    assert!(read(&whole, "errors.csv") == read(&split, "errors.csv"));
}

#[test]
fn failing_stage_is_named_and_outputs_kept() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_solitonless(dir.path());
    cfg.k_grid.min = -0.5;
    cfg.k_grid.max = 0.5;
    cfg.k_grid.n = 101;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "predict", .. }), "{err}");
    let rep = Report::read(dir.path().join("report.json")).unwrap();
    assert_eq!(rep.failed_stage.as_deref(), Some("predict"));
    assert!(rep.error.is_some());
    assert!(dir.path().join("gamma.csv").exists());
    assert!(dir.path().join("trajectory/manifest.json").exists());
}

#[test]
fn one_soliton_round_trip_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { t_end: 0.5, store_every: 1000, output_dir: dir.path().to_path_buf(), ..shipped("one_soliton") };
    let rep = run_pipeline(&cfg).unwrap();
    let pole = rep.get("ist_round_trip.pole").unwrap();
    assert!(pole.value < 1e-3, "{}", pole.value);
    assert!(rep.passed(), "{:#?}", rep.checks);
}
