use dpdenoise_core::experiment::{
    run_model, run_model_observed, run_sweep, sweep_summary, write_sweep_csv, Model, SweepConfig, SWEEP_CSV_HEADER,
};
use dpdenoise_core::grid::{add_gaussian_noise, NoiseSpec};
use dpdenoise_core::metrics::d_tv_image;
use dpdenoise_core::solver::{IterationRecord, SolverConfig};
use dpdenoise_core::synth::{make_double_gradient, make_saw};
use dpdenoise_core::weight::{WeightFamily, WeightSpec};

fn dp_spec() -> WeightSpec {
    WeightSpec::new(WeightFamily::W1 { a: 500.0, b: 5000.0 }, 0.0).unwrap()
}

#[test]
fn adaptive_double_phase_staircases_less_than_rof_at_high_noise() {
    let clean = make_saw(1024, 5).unwrap();
    let noisy = add_gaussian_noise(&clean, NoiseSpec::new(0.1, 3).unwrap()).unwrap();
    let cfg = SolverConfig::default();
    let d = |m: &Model| d_tv_image(&run_model(&noisy, 0.24, m, &cfg).unwrap().result, &clean).unwrap();
    let (dp, rof) = (d(&Model::DpAdaptive(dp_spec())), d(&Model::Rof));
    assert!(dp < rof, "dp {dp} rof {rof}");
}

#[test]
fn observer_sees_every_final_stage_iteration() {
    let clean = make_saw(256, 3).unwrap();
    let noisy = add_gaussian_noise(&clean, NoiseSpec::new(0.05, 1).unwrap()).unwrap();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut sink = |r: &IterationRecord| records.push(*r);
    let run = run_model_observed(&noisy, 0.24, &Model::DpAdaptive(dp_spec()), &SolverConfig::default(), Some(&mut sink)).unwrap();
    assert_eq!(records.len(), run.stage.iterations);
    assert!(run.pre_stage.is_some());
    assert!(records.windows(2).all(|w| w[1].iter == w[0].iter + 1));
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let clean = make_double_gradient(24).unwrap();
    let cfg = SweepConfig {
        models: vec![Model::Rof, Model::Huber { alpha: 0.01 }, Model::DpNoisy(dp_spec())],
        lambdas: vec![0.05, 0.1],
        sigmas: vec![0.0, 0.05],
        seed: 42,
        solver: SolverConfig::default(),
    };
    let render = || {
        let mut buf = Vec::new();
        write_sweep_csv(&run_sweep(&clean, &cfg).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let first = render();
    assert_eq!(first, render());
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], SWEEP_CSV_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    assert!(lines[1].starts_with("rof,0.05,0,") && lines[2].starts_with("rof,0.05,0.05,"));
    assert!(lines[12].starts_with("dp-noisy,0.1,0.05,"));

    let rows = run_sweep(&clean, &cfg).unwrap();
    let summary = sweep_summary(&rows);
    assert!(!summary.is_empty());
}

#[test]
fn sweep_rejects_empty_ranges() {
    let clean = make_double_gradient(16).unwrap();
    let cfg = SweepConfig {
        models: vec![Model::Rof],
        lambdas: vec![],
        sigmas: vec![0.0],
        seed: 0,
        solver: SolverConfig::default(),
    };
    assert!(run_sweep(&clean, &cfg).is_err());
}
